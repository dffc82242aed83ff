#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "spn/context.hpp"
#include "spn/network.hpp"
#include "spn/random.hpp"

namespace spn {

namespace detail {

inline NodeHandle random_leaf(NetworkBuilder& b, const Context& ctx, std::size_t var, RandomSource& rng) {
  auto fam = b.registry().at(ctx[var].family);
  if (!fam->random_params)
    throw model_error("leaf family '" + fam->name + "' cannot generate random parameters");
  return b.make_leaf(fam, fam->random_params(ctx[var].domain, rng), var);
}

inline std::vector<double> random_convex_weights(std::size_t n, RandomSource& rng) {
  // Normalized unit exponentials: a uniform draw from the simplex.
  std::vector<double> w(n);
  for (double& x : w) x = -std::log1p(-rng.uniform()) + 1e-12;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return renormalized(w);
}

inline NodeHandle random_region(NetworkBuilder& b, const Context& ctx, const std::vector<std::size_t>& vars,
                                std::size_t depth, std::size_t fanout, RandomSource& rng) {
  if (depth == 0) {
    if (vars.size() == 1) return random_leaf(b, ctx, vars[0], rng);
    std::vector<NodeHandle> leaves;
    for (std::size_t v : vars) leaves.push_back(random_leaf(b, ctx, v, rng));
    return b.make_product(leaves);
  }
  std::vector<NodeHandle> kids;
  for (std::size_t k = 0; k < fanout; ++k) {
    if (vars.size() == 1) {
      kids.push_back(random_region(b, ctx, vars, depth - 1, fanout, rng));
      continue;
    }
    // Random partition into 2..|vars| nonempty blocks.
    std::vector<std::size_t> shuffled = vars;
    for (std::size_t i = shuffled.size(); i > 1; --i) std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    const std::size_t blocks = 2 + rng.below(shuffled.size() - 1);
    std::vector<std::vector<std::size_t>> parts(blocks);
    for (std::size_t i = 0; i < shuffled.size(); ++i)
      parts[i < blocks ? i : rng.below(blocks)].push_back(shuffled[i]);
    std::vector<NodeHandle> factors;
    for (auto& part : parts) {
      std::sort(part.begin(), part.end());
      factors.push_back(random_region(b, ctx, part, depth - 1, fanout, rng));
    }
    kids.push_back(b.make_product(factors));
  }
  const auto w = random_convex_weights(fanout, rng);
  return b.make_sum(kids, w);
}

}  // namespace detail

/// Random valid network over every context column.
///
/// Each of the `depth` layers is a sum with `fanout` children; below a sum,
/// each child is a product splitting the current scope uniformly at random
/// into at least two blocks (a single variable skips the product). Leaves get
/// family defaults from `LeafFamily::random_params`.
inline Network generate_random_structure(const Context& ctx, std::size_t depth, std::size_t fanout,
                                         std::uint64_t seed, const LeafRegistry& registry = default_registry()) {
  if (ctx.size() == 0) throw model_error("random structure: empty context");
  if (depth < 1) throw model_error("random structure: depth must be at least 1");
  if (fanout < 2) throw model_error("random structure: fanout must be at least 2");
  ctx.check(registry);
  RandomSource rng(seed);
  NetworkBuilder b(registry);
  std::vector<std::size_t> vars(ctx.size());
  std::iota(vars.begin(), vars.end(), 0);
  const NodeHandle root = detail::random_region(b, ctx, vars, depth, fanout, rng);
  return b.finalize(root);
}

}  // namespace spn
