#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "spn/spn.hpp"

namespace spn::testing {

// The three-variable network from the library's introductory example, as a
// single expression (products of three factors written flat).
inline const char* const kExampleDsl = R"(# three binary variables
0.4 * Categorical(p=[0.2, 0.8], scope=0) *
      (0.3 * Categorical(p=[0.3, 0.7], scope=1) * Categorical(p=[0.4, 0.6], scope=2)
     + 0.7 * Categorical(p=[0.5, 0.5], scope=1) * Categorical(p=[0.6, 0.4], scope=2))
+ 0.6 * Categorical(p=[0.2, 0.8], scope=0) * Categorical(p=[0.3, 0.7], scope=1) *
        Categorical(p=[0.4, 0.6], scope=2)
)";

/// The example network built through the builder API (flat three-way product).
inline Network example_network() {
  NetworkBuilder b;
  const auto a0 = b.make_leaf("Categorical", {0.2, 0.8}, 0);
  const auto p0 = b.make_product({b.make_leaf("Categorical", {0.3, 0.7}, 1), b.make_leaf("Categorical", {0.4, 0.6}, 2)});
  const auto p1 = b.make_product({b.make_leaf("Categorical", {0.5, 0.5}, 1), b.make_leaf("Categorical", {0.6, 0.4}, 2)});
  const auto s1 = b.make_sum({p0, p1}, {0.3, 0.7});
  const auto left = b.make_product({a0, s1});
  const auto right = b.make_product({b.make_leaf("Categorical", {0.2, 0.8}, 0), b.make_leaf("Categorical", {0.3, 0.7}, 1),
                                     b.make_leaf("Categorical", {0.4, 0.6}, 2)});
  return b.finalize(b.make_sum({left, right}, {0.4, 0.6}));
}

/// Nested form of the same network: the right branch is a product inside a product.
/// Returns the builder so callers can inspect the pre-collapse node count.
inline std::pair<NetworkBuilder, NodeHandle> example_nested_builder() {
  NetworkBuilder b;
  const auto p0 = b.make_product({b.make_leaf("Categorical", {0.3, 0.7}, 1), b.make_leaf("Categorical", {0.4, 0.6}, 2)});
  const auto p1 = b.make_product({b.make_leaf("Categorical", {0.5, 0.5}, 1), b.make_leaf("Categorical", {0.6, 0.4}, 2)});
  const auto s1 = b.make_sum({p0, p1}, {0.3, 0.7});
  const auto p2 = b.make_product({b.make_leaf("Categorical", {0.2, 0.8}, 0), s1});
  const auto p3 = b.make_product({b.make_leaf("Categorical", {0.2, 0.8}, 0), b.make_leaf("Categorical", {0.3, 0.7}, 1)});
  const auto p4 = b.make_product({p3, b.make_leaf("Categorical", {0.4, 0.6}, 2)});
  const auto root = b.make_sum({p2, p4}, {0.4, 0.6});
  return {std::move(b), root};
}

/// Closed-form joint of the example network, written out by hand.
inline double example_joint(int a, int b, int c) {
  const double pa[] = {0.2, 0.8};
  const double left = 0.4 * pa[a] * (0.3 * std::array{0.3, 0.7}[b] * std::array{0.4, 0.6}[c] +
                                     0.7 * std::array{0.5, 0.5}[b] * std::array{0.6, 0.4}[c]);
  const double right = 0.6 * pa[a] * std::array{0.3, 0.7}[b] * std::array{0.4, 0.6}[c];
  return left + right;
}

/// Independent probability-space evaluator: plain recursion from the root,
/// products multiply, sums take weighted sums, missing leaves give 1.
inline double brute_probability(const Network& net, NodeId id, std::span<const double> row) {
  const Node& node = net.node(id);
  if (const auto* s = std::get_if<SumNode>(&node)) {
    double acc = 0.0;
    for (std::size_t k = 0; k < s->children.size(); ++k) acc += s->weights[k] * brute_probability(net, s->children[k], row);
    return acc;
  }
  if (const auto* p = std::get_if<ProductNode>(&node)) {
    double acc = 1.0;
    for (NodeId c : p->children) acc *= brute_probability(net, c, row);
    return acc;
  }
  const auto& leaf = std::get<LeafNode>(node);
  const double x = row[leaf.scope_var];
  if (std::isnan(x)) return 1.0;
  if (leaf.family->name == "Categorical") return leaf.params.at(static_cast<std::size_t>(x));
  if (leaf.family->name == "Gaussian") {
    const double m = leaf.params[0], s = leaf.params[1];
    return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
  }
  if (leaf.family->name == "Pareto") return x >= 1.0 ? leaf.params[0] * std::pow(x, -(leaf.params[0] + 1.0)) : 0.0;
  return std::exp(leaf.family->log_density(leaf.params, x));
}

inline double brute_probability(const Network& net, std::span<const double> row) {
  return brute_probability(net, net.root(), row);
}

/// Calls fn for every complete assignment of variables with the given cardinalities.
inline void for_each_assignment(const std::vector<std::size_t>& card, const std::function<void(const std::vector<double>&)>& fn) {
  std::vector<double> row(card.size(), 0.0);
  while (true) {
    fn(row);
    std::size_t i = 0;
    while (i < card.size()) {
      row[i] += 1.0;
      if (row[i] < static_cast<double>(card[i])) break;
      row[i] = 0.0;
      ++i;
    }
    if (i == card.size()) return;
  }
}

/// The synthetic classification data: two isotropic unit-variance clusters
/// at (5, 5) labeled 0 and (15, 15) labeled 1, `per_class` rows each.
inline DataMatrix two_cluster_data(std::size_t per_class, std::uint64_t seed, bool with_label = true) {
  RandomSource rng(seed);
  DataMatrix out;
  for (int label = 0; label < 2; ++label)
    for (std::size_t i = 0; i < per_class; ++i) {
      const double mean = label == 0 ? 5.0 : 15.0;
      std::vector<double> row{rng.normal(mean, 1.0), rng.normal(mean, 1.0)};
      if (with_label) row.push_back(label);
      out.append_row(row);
    }
  return out;
}

inline Context classifier_context() {
  return Context({{"Gaussian", {}}, {"Gaussian", {}}, {"Categorical", {2, std::nullopt}}});
}

/// Mixed Categorical/Gaussian context used by random-network tests.
inline Context mixed_context(std::size_t n) {
  std::vector<ColumnInfo> cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 2 == 0)
      cols.push_back({"Categorical", {2 + i % 3, std::nullopt}});
    else
      cols.push_back({"Gaussian", {std::nullopt, std::pair{-2.0, 2.0}}});
  }
  return Context(std::move(cols));
}

}  // namespace spn::testing
