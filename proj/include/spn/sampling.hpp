#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spn/data.hpp"
#include "spn/inference.hpp"
#include "spn/network.hpp"
#include "spn/random.hpp"

namespace spn {

inline double leaf_sample(const LeafFamily& family, ParamView params, RandomSource& rng) {
  return family.sample(params, rng);
}

inline double leaf_sample(std::string_view family, ParamView params, RandomSource& rng,
                          const LeafRegistry& registry = default_registry()) {
  const auto f = registry.find(family);
  if (!f) throw model_error("unknown leaf family '" + std::string(family) + "'");
  return f->sample(params, rng);
}

/// Fills the missing cells of `tmpl` with draws from the network conditioned
/// on the observed cells of the same row.
///
/// Bottom-up pass with missing cells marginalized, then top-down: a sum picks
/// child k with probability w_k * exp(child_k - sum), i.e. the posterior of
/// the latent branch given the evidence; products visit all children; leaves
/// over a missing cell draw from their distribution. With an all-missing row
/// this is plain ancestral sampling. Rows are processed in order from a
/// single stream.
inline DataMatrix sample(const Network& net, const DataMatrix& tmpl, RandomSource& rng) {
  detail::check_columns(net, tmpl.cols());
  DataMatrix out = tmpl;
  std::vector<double> values(net.size());
  std::vector<NodeId> stack;
  for (std::size_t r = 0; r < tmpl.rows(); ++r) {
    const auto row = tmpl.row(r);
    detail::forward_pass(net, row, r, values, false);
    if (!std::isfinite(values.back()))
      throw data_error("row " + std::to_string(r) + ": evidence has zero probability under the network");
    stack.assign(1, net.root());
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      const Node& node = net.node(id);
      if (const auto* s = std::get_if<SumNode>(&node)) {
        const double parent = values[id.index()];
        const double u = rng.uniform();
        double cum = 0.0;
        std::size_t pick = s->children.size();
        std::size_t last_positive = 0;
        for (std::size_t k = 0; k < s->children.size(); ++k) {
          const double p = s->weights[k] * std::exp(values[s->children[k].index()] - parent);
          if (!(p > 0.0)) continue;
          last_positive = k;
          cum += p;
          if (u < cum) {
            pick = k;
            break;
          }
        }
        stack.push_back(s->children[pick < s->children.size() ? pick : last_positive]);
      } else if (const auto* p = std::get_if<ProductNode>(&node)) {
        stack.insert(stack.end(), p->children.begin(), p->children.end());
      } else {
        const auto& leaf = std::get<LeafNode>(node);
        if (is_missing(row[leaf.scope_var])) out(r, leaf.scope_var) = leaf.family->sample(leaf.params, rng);
      }
    }
  }
  return out;
}

}  // namespace spn
