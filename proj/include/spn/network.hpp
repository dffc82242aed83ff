#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spn/error.hpp"
#include "spn/leaf_family.hpp"

namespace spn {

/// Dense index into a network's node store.
struct NodeId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const NodeId&) const = default;
  constexpr std::size_t index() const { return value; }
};

enum class NodeKind : std::uint8_t { sum, product, leaf };

struct SumNode {
  std::vector<NodeId> children;
  std::vector<double> weights;
};

struct ProductNode {
  std::vector<NodeId> children;
};

struct LeafNode {
  LeafRegistry::Handle family;
  std::vector<double> params;
  std::size_t scope_var = 0;
};

using Node = std::variant<SumNode, ProductNode, LeafNode>;

/// Sorted set of variable (column) indices.
using Scope = std::vector<std::size_t>;

inline NodeKind kind_of(const Node& n) { return static_cast<NodeKind>(n.index()); }

inline std::span<const NodeId> children_of(const Node& n) {
  if (const auto* s = std::get_if<SumNode>(&n)) return s->children;
  if (const auto* p = std::get_if<ProductNode>(&n)) return p->children;
  return {};
}

inline bool operator==(const SumNode& a, const SumNode& b) {
  return a.children == b.children && a.weights == b.weights;
}
inline bool operator==(const ProductNode& a, const ProductNode& b) { return a.children == b.children; }
inline bool operator==(const LeafNode& a, const LeafNode& b) {
  return a.scope_var == b.scope_var && a.params == b.params && a.family && b.family &&
         a.family->name == b.family->name;
}

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::sum: return "sum";
    case NodeKind::product: return "product";
    case NodeKind::leaf: return "leaf";
  }
  return "?";
}

class NetworkBuilder;

/// A finalized, immutable sum-product network.
///
/// Node ids are contiguous and every child id is smaller than its parent's,
/// so a single forward pass over `nodes()` is a bottom-up traversal. The root
/// is always the last node.
class Network {
 public:
  std::size_t size() const { return nodes_.size(); }
  NodeId root() const { return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)}; }
  const Node& node(NodeId id) const { return nodes_.at(id.index()); }
  std::span<const Node> nodes() const { return nodes_; }
  const Scope& scope(NodeId id) const { return scopes_.at(id.index()); }

  /// Number of data columns a query must have: highest variable index + 1.
  std::size_t num_variables() const { return scopes_.back().empty() ? 0 : scopes_.back().back() + 1; }

  /// Copy with new per-node parameters: weights for sums, the flat parameter
  /// vector for leaves, ignored for products. Structure is kept as is.
  Network with_parameters(std::span<const std::vector<double>> per_node) const;

  friend bool operator==(const Network& a, const Network& b) { return a.nodes_ == b.nodes_; }

 private:
  friend class NetworkBuilder;

  explicit Network(std::vector<Node> nodes);

  std::vector<Node> nodes_;
  std::vector<Scope> scopes_;
};

/// Handle to a node under construction.
struct NodeHandle {
  std::size_t index = 0;
  constexpr auto operator<=>(const NodeHandle&) const = default;
};

/// Mutable construction buffer for networks.
///
/// `make_*` enforce construction rules (arity, nonnegative weights, valid
/// leaf params). `add_node` and `add_child` skip the arity rules so parsers
/// and learners can emit singleton sums and products; those are collapsed
/// by `finalize`.
class NetworkBuilder {
 public:
  explicit NetworkBuilder(const LeafRegistry& registry = default_registry()) : registry_(&registry) {}

  /// Seeds the buffer with a finalized network; its root is handle size()-1.
  explicit NetworkBuilder(const Network& net, const LeafRegistry& registry = default_registry())
      : registry_(&registry), nodes_(net.nodes().begin(), net.nodes().end()) {}

  NodeHandle make_sum(std::span<const NodeHandle> children, std::span<const double> weights);
  NodeHandle make_sum(std::initializer_list<NodeHandle> children, std::initializer_list<double> weights) {
    return make_sum(std::span(children.begin(), children.size()), std::span(weights.begin(), weights.size()));
  }

  NodeHandle make_product(std::span<const NodeHandle> children);
  NodeHandle make_product(std::initializer_list<NodeHandle> children) {
    return make_product(std::span(children.begin(), children.size()));
  }

  NodeHandle make_leaf(std::string_view family, std::vector<double> params, std::size_t scope_var);
  NodeHandle make_leaf(LeafRegistry::Handle family, std::vector<double> params, std::size_t scope_var);

  NodeHandle add_node(Node node) {
    nodes_.push_back(std::move(node));
    return NodeHandle{nodes_.size() - 1};
  }

  /// Appends an edge; `weight` is used only when the parent is a sum.
  void add_child(NodeHandle parent, NodeHandle child, double weight = 1.0);

  std::size_t size() const { return nodes_.size(); }
  const LeafRegistry& registry() const { return *registry_; }

  /// Assigns children-before-parent ids, collapses single-child sums and
  /// products, splices product children of products into their parent,
  /// normalizes sum weights and computes scopes.
  Network finalize(NodeHandle root) const;

 private:
  const LeafRegistry* registry_;
  std::vector<Node> nodes_;
};

namespace detail {

inline std::string node_label(std::size_t i) { return "node " + std::to_string(i); }

inline NodeId as_id(std::size_t i) { return NodeId{static_cast<std::uint32_t>(i)}; }

template <class Fn>
void for_each_child_index(const Node& n, Fn&& fn) {
  for (NodeId c : children_of(n)) fn(c.index());
}

/// Checks sum weights: nonnegative, finite, summing to 1 within 1e-6.
inline std::vector<double> checked_weights(std::span<const double> w, const std::string& where) {
  double total = 0.0;
  for (double x : w) {
    if (!(std::isfinite(x) && x >= 0.0))
      throw model_error(where + ": sum weight " + format_real(x) + " must be finite and nonnegative");
    total += x;
  }
  if (!(std::abs(total - 1.0) <= 1e-6))
    throw model_error(where + ": sum weights add up to " + format_real(total) + ", expected 1");
  return renormalized(w);
}

inline std::vector<double> checked_leaf_params(const LeafFamily& f, std::span<const double> p,
                                              const std::string& where) {
  if (p.size() < f.scalar_count() || (p.size() != f.scalar_count() && f.scalar_count() == f.schema.size()))
    throw model_error(where + ": wrong number of parameters for " + f.name);
  const auto bad = f.validate(p);
  if (!bad.empty()) throw model_error(where + ": invalid " + f.name + " parameters: " + bad.front());
  return f.normalize ? f.normalize(p) : std::vector<double>(p.begin(), p.end());
}

inline Scope merge_scopes(const Scope& a, const Scope& b) {
  Scope out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace detail

inline Network::Network(std::vector<Node> nodes) : nodes_(std::move(nodes)) {
  scopes_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (const auto* leaf = std::get_if<LeafNode>(&nodes_[i])) {
      scopes_[i] = {leaf->scope_var};
      continue;
    }
    Scope s;
    for (NodeId c : children_of(nodes_[i])) s = detail::merge_scopes(s, scopes_[c.index()]);
    scopes_[i] = std::move(s);
  }
}

inline Network Network::with_parameters(std::span<const std::vector<double>> per_node) const {
  if (per_node.size() != nodes_.size()) throw model_error("parameter list does not match network size");
  Network out = *this;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const std::string where = detail::node_label(i);
    if (auto* s = std::get_if<SumNode>(&out.nodes_[i])) {
      if (per_node[i].size() != s->children.size()) throw model_error(where + ": weight count mismatch");
      s->weights = detail::checked_weights(per_node[i], where);
    } else if (auto* leaf = std::get_if<LeafNode>(&out.nodes_[i])) {
      leaf->params = detail::checked_leaf_params(*leaf->family, per_node[i], where);
    }
  }
  return out;
}

inline NodeHandle NetworkBuilder::make_sum(std::span<const NodeHandle> children, std::span<const double> weights) {
  if (children.size() != weights.size())
    throw construction_error("sum node: " + std::to_string(children.size()) + " children but " +
                             std::to_string(weights.size()) + " weights");
  if (children.size() < 2) throw construction_error("sum node needs at least 2 children");
  SumNode s;
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (children[i].index >= nodes_.size()) throw construction_error("sum node: unknown child handle");
    if (!(std::isfinite(weights[i]) && weights[i] >= 0.0))
      throw construction_error("sum node: weight " + format_real(weights[i]) + " is negative or not finite");
    s.children.push_back(detail::as_id(children[i].index));
    s.weights.push_back(weights[i]);
  }
  return add_node(std::move(s));
}

inline NodeHandle NetworkBuilder::make_product(std::span<const NodeHandle> children) {
  if (children.size() < 2) throw construction_error("product node needs at least 2 children");
  ProductNode p;
  for (NodeHandle c : children) {
    if (c.index >= nodes_.size()) throw construction_error("product node: unknown child handle");
    p.children.push_back(detail::as_id(c.index));
  }
  return add_node(std::move(p));
}

inline NodeHandle NetworkBuilder::make_leaf(std::string_view family, std::vector<double> params,
                                            std::size_t scope_var) {
  return make_leaf(registry_->at(family), std::move(params), scope_var);
}

inline NodeHandle NetworkBuilder::make_leaf(LeafRegistry::Handle family, std::vector<double> params,
                                            std::size_t scope_var) {
  if (!family) throw construction_error("leaf without family");
  try {
    params = detail::checked_leaf_params(*family, params, "leaf");
  } catch (const model_error& e) {
    throw construction_error(e.what());
  }
  return add_node(LeafNode{std::move(family), std::move(params), scope_var});
}

inline void NetworkBuilder::add_child(NodeHandle parent, NodeHandle child, double weight) {
  if (parent.index >= nodes_.size() || child.index >= nodes_.size())
    throw construction_error("add_child: unknown handle");
  auto& n = nodes_[parent.index];
  if (auto* s = std::get_if<SumNode>(&n)) {
    s->children.push_back(detail::as_id(child.index));
    s->weights.push_back(weight);
  } else if (auto* p = std::get_if<ProductNode>(&n)) {
    p->children.push_back(detail::as_id(child.index));
  } else {
    throw construction_error("add_child: leaves have no children");
  }
}

inline Network NetworkBuilder::finalize(NodeHandle root) const {
  const std::size_t n = nodes_.size();
  if (n == 0) throw model_error("empty network");
  if (root.index >= n) throw model_error("root handle out of range");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    for (NodeId c : children_of(node))
      if (c.index() >= n) throw model_error(detail::node_label(i) + ": child " + std::to_string(c.index()) + " does not exist");
    if (kind_of(node) != NodeKind::leaf && children_of(node).empty())
      throw model_error(detail::node_label(i) + ": " + to_string(kind_of(node)) + " node without children");
    if (const auto* s = std::get_if<SumNode>(&node); s && s->weights.size() != s->children.size())
      throw model_error(detail::node_label(i) + ": weight count differs from child count");
  }

  // Post-order DFS over the raw graph with cycle detection.
  enum class Mark : std::uint8_t { white, gray, black };
  std::vector<Mark> mark(n, Mark::white);
  std::vector<std::size_t> post;
  post.reserve(n);
  {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root.index, 0}};
    mark[root.index] = Mark::gray;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto kids = children_of(nodes_[v]);
      if (next < kids.size()) {
        const std::size_t c = kids[next++].index();
        if (mark[c] == Mark::gray)
          throw model_error("cycle detected: " + detail::node_label(v) + " reaches ancestor " + detail::node_label(c));
        if (mark[c] == Mark::white) {
          mark[c] = Mark::gray;
          stack.emplace_back(c, 0);
        }
      } else {
        mark[v] = Mark::black;
        post.push_back(v);
        stack.pop_back();
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (mark[i] == Mark::white) throw model_error(detail::node_label(i) + " is unreachable from the root");

  // Simplify in post-order: rep[i] is the node standing in for raw node i.
  std::vector<std::size_t> rep(n);
  std::vector<Node> simple(n);
  for (std::size_t v : post) {
    const std::string where = detail::node_label(v);
    const Node& node = nodes_[v];
    if (const auto* leaf = std::get_if<LeafNode>(&node)) {
      if (!leaf->family) throw model_error(where + ": leaf without family");
      simple[v] = LeafNode{leaf->family, detail::checked_leaf_params(*leaf->family, leaf->params, where),
                           leaf->scope_var};
      rep[v] = v;
    } else if (const auto* s = std::get_if<SumNode>(&node)) {
      auto w = detail::checked_weights(s->weights, where);
      if (s->children.size() == 1) {
        rep[v] = rep[s->children[0].index()];
        continue;
      }
      SumNode out;
      for (NodeId c : s->children) out.children.push_back(detail::as_id(rep[c.index()]));
      out.weights = std::move(w);
      simple[v] = std::move(out);
      rep[v] = v;
    } else {
      const auto& p = std::get<ProductNode>(node);
      if (p.children.size() == 1) {
        rep[v] = rep[p.children[0].index()];
        continue;
      }
      ProductNode out;
      for (NodeId c : p.children) {
        const std::size_t r = rep[c.index()];
        if (const auto* inner = std::get_if<ProductNode>(&simple[r]))
          out.children.insert(out.children.end(), inner->children.begin(), inner->children.end());
        else
          out.children.push_back(detail::as_id(r));
      }
      simple[v] = std::move(out);
      rep[v] = v;
    }
  }

  // Relabel the simplified graph in post-order from the new root.
  const std::size_t new_root = rep[root.index];
  std::vector<std::int64_t> new_id(n, -1);
  std::vector<std::size_t> order;
  {
    std::vector<std::pair<std::size_t, std::size_t>> stack{{new_root, 0}};
    std::vector<bool> seen(n, false);
    seen[new_root] = true;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto kids = children_of(simple[v]);
      if (next < kids.size()) {
        const std::size_t c = kids[next++].index();
        if (!seen[c]) {
          seen[c] = true;
          stack.emplace_back(c, 0);
        }
      } else {
        new_id[v] = static_cast<std::int64_t>(order.size());
        order.push_back(v);
        stack.pop_back();
      }
    }
  }

  std::vector<Node> final_nodes;
  final_nodes.reserve(order.size());
  for (std::size_t v : order) {
    Node node = simple[v];
    const auto remap = [&](std::vector<NodeId>& kids) {
      for (NodeId& c : kids) c = detail::as_id(static_cast<std::size_t>(new_id[c.index()]));
    };
    if (auto* s = std::get_if<SumNode>(&node)) remap(s->children);
    if (auto* p = std::get_if<ProductNode>(&node)) remap(p->children);
    final_nodes.push_back(std::move(node));
  }
  return Network(std::move(final_nodes));
}

/// Re-runs finalization on an already finalized network.
inline Network refinalize(const Network& net, const LeafRegistry& registry = default_registry()) {
  NetworkBuilder b(net, registry);
  return b.finalize(NodeHandle{net.size() - 1});
}

}  // namespace spn
