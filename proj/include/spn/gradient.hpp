#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spn/data.hpp"
#include "spn/inference.hpp"
#include "spn/network.hpp"
#include "spn/validate.hpp"

namespace spn {

/// Flat layout of a network's optimizable parameters in unconstrained form:
/// softmax logits for sum weights, each leaf family's own reparameterization
/// (categorical logits, Gaussian mean and log-std, Pareto log-shape). Leaves
/// of non-differentiable families own no slots.
class ParameterLayout {
 public:
  explicit ParameterLayout(const Network& net) : offsets_(net.size() + 1, 0) {
    for (std::size_t i = 0; i < net.size(); ++i) {
      std::size_t n = 0;
      const Node& node = net.nodes()[i];
      if (const auto* s = std::get_if<SumNode>(&node))
        n = s->children.size();
      else if (const auto* leaf = std::get_if<LeafNode>(&node); leaf && leaf->family->differentiable())
        n = leaf->family->to_unconstrained(leaf->params).size();
      offsets_[i + 1] = offsets_[i] + n;
    }
  }

  std::size_t size() const { return offsets_.back(); }
  std::size_t offset(NodeId id) const { return offsets_[id.index()]; }
  std::size_t count(NodeId id) const { return offsets_[id.index() + 1] - offsets_[id.index()]; }

 private:
  std::vector<std::size_t> offsets_;
};

struct GradientVector {
  std::vector<double> values;      // d(mean log-likelihood) / d(unconstrained parameter)
  double mean_log_likelihood = 0;  // over the rows that were used
  std::size_t used_rows = 0;
  std::size_t excluded_rows = 0;   // rows with -inf log-likelihood
};

inline std::vector<double> unconstrained_parameters(const Network& net) {
  const ParameterLayout layout(net);
  std::vector<double> theta(layout.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const NodeId id = detail::as_id(i);
    const std::size_t off = layout.offset(id);
    const Node& node = net.nodes()[i];
    if (const auto* s = std::get_if<SumNode>(&node)) {
      for (std::size_t k = 0; k < s->weights.size(); ++k) theta[off + k] = std::log(s->weights[k]);
    } else if (const auto* leaf = std::get_if<LeafNode>(&node); leaf && layout.count(id) > 0) {
      const auto u = leaf->family->to_unconstrained(leaf->params);
      std::copy(u.begin(), u.end(), theta.begin() + static_cast<std::ptrdiff_t>(off));
    }
  }
  return theta;
}

/// Same structure as `net` with parameters mapped back from unconstrained form.
inline Network from_unconstrained_parameters(const Network& net, std::span<const double> theta) {
  const ParameterLayout layout(net);
  if (theta.size() != layout.size()) throw model_error("parameter vector has the wrong length");
  std::vector<std::vector<double>> per_node(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    const NodeId id = detail::as_id(i);
    const auto slot = theta.subspan(layout.offset(id), layout.count(id));
    const Node& node = net.nodes()[i];
    if (std::holds_alternative<SumNode>(node))
      per_node[i] = detail::softmax(slot);
    else if (const auto* leaf = std::get_if<LeafNode>(&node))
      per_node[i] = layout.count(id) > 0 ? leaf->family->from_unconstrained(slot) : leaf->params;
  }
  return net.with_parameters(per_node);
}

/// Exact gradient of the mean log-likelihood with respect to the
/// unconstrained parameters: one forward pass and one reverse sweep in
/// descending id order per row. Rows whose log-likelihood is -inf are
/// skipped and counted.
inline GradientVector backprop_log_gradients(const Network& net, const DataMatrix& data) {
  detail::check_columns(net, data.cols());
  const ParameterLayout layout(net);
  GradientVector g;
  g.values.assign(layout.size(), 0.0);
  std::vector<double> v(net.size());
  std::vector<double> adj(net.size());
  std::vector<double> leaf_grad;
  double ll_total = 0.0;

  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto row = data.row(r);
    detail::forward_pass(net, row, r, v, false);
    if (!std::isfinite(v.back())) {
      ++g.excluded_rows;
      continue;
    }
    ++g.used_rows;
    ll_total += v.back();
    std::fill(adj.begin(), adj.end(), 0.0);
    adj.back() = 1.0;
    for (std::size_t i = net.size(); i-- > 0;) {
      const double a = adj[i];
      if (a == 0.0) continue;
      const NodeId id = detail::as_id(i);
      const Node& node = net.nodes()[i];
      if (const auto* s = std::get_if<SumNode>(&node)) {
        const std::size_t off = layout.offset(id);
        for (std::size_t k = 0; k < s->children.size(); ++k) {
          const double resp = s->weights[k] * std::exp(v[s->children[k].index()] - v[i]);
          adj[s->children[k].index()] += a * resp;
          g.values[off + k] += a * (resp - s->weights[k]);
        }
      } else if (const auto* p = std::get_if<ProductNode>(&node)) {
        for (NodeId c : p->children) adj[c.index()] += a;
      } else {
        const auto& leaf = std::get<LeafNode>(node);
        const double x = row[leaf.scope_var];
        const std::size_t n = layout.count(id);
        if (n == 0 || is_missing(x)) continue;
        leaf_grad.assign(n, 0.0);
        leaf.family->log_density_gradient(leaf.params, x, leaf_grad);
        const std::size_t off = layout.offset(id);
        for (std::size_t j = 0; j < n; ++j) g.values[off + j] += a * leaf_grad[j];
      }
    }
  }
  if (g.used_rows > 0) {
    const double n = static_cast<double>(g.used_rows);
    for (double& x : g.values) x /= n;
    g.mean_log_likelihood = ll_total / n;
  } else {
    g.mean_log_likelihood = -std::numeric_limits<double>::infinity();
  }
  return g;
}

/// Mean log-likelihood over rows with finite likelihood.
inline double mean_log_likelihood(const Network& net, const DataMatrix& data) {
  const auto ll = log_likelihood(net, data);
  double total = 0.0;
  std::size_t used = 0;
  for (double x : ll)
    if (std::isfinite(x)) {
      total += x;
      ++used;
    }
  return used ? total / static_cast<double>(used) : -std::numeric_limits<double>::infinity();
}

struct OptimizeOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.05;

  void check() const {
    if (!(learning_rate > 0.0)) throw model_error("learning rate must be positive");
  }
};

struct OptimizeResult {
  Network network;                // best-seen parameters
  double initial_log_likelihood;  // mean train log-likelihood before any step
  double best_log_likelihood;
  std::size_t best_epoch = 0;     // 0 means the input parameters were never improved on
  std::size_t excluded_rows = 0;
};

/// Full-batch gradient ascent on the mean log-likelihood in unconstrained
/// space. Returns the best parameters seen, so the result never scores below
/// the input on the training data.
inline OptimizeResult optimize_parameters(const Network& net, const DataMatrix& data,
                                          const OptimizeOptions& options = {}) {
  options.check();
  auto grad = backprop_log_gradients(net, data);
  OptimizeResult result{net, grad.mean_log_likelihood, grad.mean_log_likelihood, 0, grad.excluded_rows};
  auto theta = unconstrained_parameters(net);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += options.learning_rate * grad.values[j];
    if (!std::all_of(theta.begin(), theta.end(), [](double t) { return std::isfinite(t); })) break;
    // a step that overflows a parameter (e.g. an infinite stdev) ends the run
    std::optional<Network> stepped;
    try {
      stepped = from_unconstrained_parameters(net, theta);
    } catch (const spn_error&) {
      break;
    }
    Network current = std::move(*stepped);
    grad = backprop_log_gradients(current, data);
    if (!std::isfinite(grad.mean_log_likelihood)) break;
    if (grad.mean_log_likelihood > result.best_log_likelihood) {
      result.best_log_likelihood = grad.mean_log_likelihood;
      result.best_epoch = epoch;
      result.network = std::move(current);
    }
  }
  return result;
}

}  // namespace spn
