#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "spn/context.hpp"
#include "spn/data.hpp"
#include "spn/network.hpp"
#include "spn/random.hpp"

namespace spn {

struct LearnHyperparams {
  std::size_t min_instances = 200;
  double dependence_threshold = 0.3;
  std::size_t cluster_count = 2;
  std::uint64_t seed = 0;
  double laplace_alpha = 1.0;
  double std_floor = 1e-6;

  void check() const {
    if (min_instances < 1) throw model_error("min_instances must be at least 1");
    if (!(dependence_threshold >= 0.0 && dependence_threshold <= 1.0))
      throw model_error("dependence threshold must lie in [0, 1]");
    if (cluster_count < 2) throw model_error("cluster count must be at least 2");
    if (!(laplace_alpha >= 0.0)) throw model_error("laplace alpha must be nonnegative");
    if (!(std_floor > 0.0)) throw model_error("std floor must be positive");
  }
};

/// Maximum-likelihood parameters for one leaf from the observed values.
inline std::vector<double> fit_leaf_mle(const LeafFamily& family, std::span<const double> values,
                                        const ColumnDomain& domain, const LearnHyperparams& hp) {
  if (values.empty()) throw data_error(family.name + " fit: no values");
  return family.mle(values, domain, FitOptions{hp.laplace_alpha, hp.std_floor});
}

namespace detail {

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

inline std::vector<double> column_values(const DataMatrix& data, std::span<const std::size_t> rows, std::size_t col) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (std::size_t r : rows) v.push_back(data(r, col));
  return v;
}

inline bool column_is_discrete(const Context& ctx, std::size_t col, const LeafRegistry& registry) {
  return registry.at(ctx[col].family)->discrete;
}

/// Feature matrix for k-means: z-scored continuous columns, one-hot discrete ones.
inline std::vector<std::vector<double>> cluster_features(const DataMatrix& data, std::span<const std::size_t> rows,
                                                         std::span<const std::size_t> cols, const Context& ctx,
                                                         const LeafRegistry& registry) {
  std::vector<std::vector<double>> feats(rows.size());
  for (std::size_t c : cols) {
    const auto vals = column_values(data, rows, c);
    if (column_is_discrete(ctx, c, registry)) {
      std::size_t k = ctx[c].domain.cardinality.value_or(0);
      for (double v : vals) k = std::max(k, static_cast<std::size_t>(v) + 1);
      for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) feats[i].push_back(static_cast<std::size_t>(vals[i]) == j ? 1.0 : 0.0);
    } else {
      const double n = static_cast<double>(vals.size());
      const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / n);
      for (std::size_t i = 0; i < rows.size(); ++i) feats[i].push_back(sd > 0.0 ? (vals[i] - mean) / sd : 0.0);
    }
  }
  return feats;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

struct KMeansRun {
  std::vector<std::size_t> assignment;
  double inertia = std::numeric_limits<double>::infinity();
};

inline KMeansRun kmeans_once(const std::vector<std::vector<double>>& x, std::size_t k, RandomSource& rng) {
  const std::size_t n = x.size();
  // k-means++ seeding.
  std::vector<std::vector<double>> centers{x[rng.below(n)]};
  std::vector<double> d2(n);
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) d2[i] = std::min(d2[i], squared_distance(x[i], c));
      total += d2[i];
    }
    if (!(total > 0.0)) {
      centers.push_back(x[rng.below(n)]);
      continue;
    }
    const double u = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      cum += d2[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    centers.push_back(x[pick]);
  }

  KMeansRun run;
  run.assignment.assign(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = iter == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = squared_distance(x[i], centers[0]);
      for (std::size_t j = 1; j < k; ++j) {
        const double d = squared_distance(x[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best = j;
        }
      }
      if (run.assignment[i] != best) changed = true;
      run.assignment[i] = best;
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(x[0].size(), 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[run.assignment[i]];
      for (std::size_t d = 0; d < x[i].size(); ++d) sums[run.assignment[i]][d] += x[i][d];
    }
    for (std::size_t j = 0; j < k; ++j)
      if (counts[j] > 0)
        for (std::size_t d = 0; d < sums[j].size(); ++d) centers[j][d] = sums[j][d] / static_cast<double>(counts[j]);
  }
  run.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) run.inertia += squared_distance(x[i], centers[run.assignment[i]]);
  return run;
}

}  // namespace detail

/// k-means row clustering over the selected columns (3 seeded k-means++
/// restarts, at most 100 Lloyd iterations each, lowest inertia wins).
/// Returns a cluster index per entry of `rows`; some clusters may be empty.
inline std::vector<std::size_t> row_cluster(const DataMatrix& data, std::span<const std::size_t> rows,
                                            std::span<const std::size_t> cols, const Context& ctx, std::size_t k,
                                            std::uint64_t seed, const LeafRegistry& registry = default_registry()) {
  if (rows.empty()) return {};
  if (k < 2) throw model_error("row_cluster: k must be at least 2");
  const auto feats = detail::cluster_features(data, rows, cols, ctx, registry);
  detail::KMeansRun best;
  for (std::uint64_t restart = 0; restart < 3; ++restart) {
    RandomSource rng(mix_seed(seed, restart));
    auto run = detail::kmeans_once(feats, std::min(k, rows.size()), rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best.assignment;
}

inline std::vector<std::size_t> row_cluster(const DataMatrix& data, const Context& ctx, std::size_t k,
                                            std::uint64_t seed, const LeafRegistry& registry = default_registry()) {
  const auto rows = detail::all_indices(data.rows());
  const auto cols = detail::all_indices(data.cols());
  return row_cluster(data, rows, cols, ctx, k, seed, registry);
}

/// Dependence score in [0, 1] between two columns over the given rows:
/// normalized mutual information for two discrete columns, |Pearson r| for
/// two continuous ones, the correlation ratio for a mixed pair.
inline double dependence_score(const DataMatrix& data, std::span<const std::size_t> rows, std::size_t a,
                               std::size_t b, const Context& ctx, const LeafRegistry& registry = default_registry()) {
  const bool da = detail::column_is_discrete(ctx, a, registry);
  const bool db = detail::column_is_discrete(ctx, b, registry);
  const auto xa = detail::column_values(data, rows, a);
  const auto xb = detail::column_values(data, rows, b);
  const double n = static_cast<double>(rows.size());
  if (rows.empty()) return 0.0;

  if (da && db) {
    std::map<std::pair<double, double>, double> joint;
    std::map<double, double> ma, mb;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      joint[{xa[i], xb[i]}] += 1.0;
      ma[xa[i]] += 1.0;
      mb[xb[i]] += 1.0;
    }
    const auto entropy = [n](const std::map<double, double>& m) {
      double h = 0.0;
      for (const auto& [v, c] : m) h -= c / n * std::log(c / n);
      return h;
    };
    const double ha = entropy(ma), hb = entropy(mb);
    if (ha <= 0.0 || hb <= 0.0) return 0.0;
    double mi = 0.0;
    for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (ma[key.first] * mb[key.second]));
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
  }

  if (!da && !db) {
    const double mean_a = std::accumulate(xa.begin(), xa.end(), 0.0) / n;
    const double mean_b = std::accumulate(xb.begin(), xb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      sab += (xa[i] - mean_a) * (xb[i] - mean_b);
      saa += (xa[i] - mean_a) * (xa[i] - mean_a);
      sbb += (xb[i] - mean_b) * (xb[i] - mean_b);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(std::abs(sab) / std::sqrt(saa * sbb), 0.0, 1.0);
  }

  // Correlation ratio of the continuous column grouped by the discrete one.
  const auto& group = da ? xa : xb;
  const auto& y = da ? xb : xa;
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  std::map<double, std::pair<double, double>> stats;  // group -> (count, sum)
  double ss_total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& [c, s] = stats[group[i]];
    c += 1.0;
    s += y[i];
    ss_total += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_total <= 0.0) return 0.0;
  double ss_between = 0.0;
  for (const auto& [g, cs] : stats) {
    const double gm = cs.second / cs.first;
    ss_between += cs.first * (gm - mean) * (gm - mean);
  }
  return std::clamp(std::sqrt(ss_between / ss_total), 0.0, 1.0);
}

/// Connected components of the graph linking column pairs whose dependence
/// score exceeds `threshold`. Groups are sorted, ordered by first column.
inline std::vector<std::vector<std::size_t>> column_partition(const DataMatrix& data, std::span<const std::size_t> rows,
                                                              std::span<const std::size_t> cols, const Context& ctx,
                                                              double threshold,
                                                              const LeafRegistry& registry = default_registry()) {
  std::vector<std::size_t> parent(cols.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < cols.size(); ++i)
    for (std::size_t j = i + 1; j < cols.size(); ++j) {
      if (find(i) == find(j)) continue;
      if (dependence_score(data, rows, cols[i], cols[j], ctx, registry) > threshold) parent[find(j)] = find(i);
    }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cols.size(); ++i) groups[find(i)].push_back(cols[i]);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [root, g] : groups) {
    std::sort(g.begin(), g.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return out;
}

inline std::vector<std::vector<std::size_t>> column_partition(const DataMatrix& data, const Context& ctx,
                                                              double threshold,
                                                              const LeafRegistry& registry = default_registry()) {
  const auto rows = detail::all_indices(data.rows());
  const auto cols = detail::all_indices(data.cols());
  return column_partition(data, rows, cols, ctx, threshold, registry);
}

namespace detail {

class StructureLearner {
 public:
  StructureLearner(const DataMatrix& data, const Context& ctx, const LearnHyperparams& hp,
                   const LeafRegistry& registry, NetworkBuilder& builder)
      : data_(data), ctx_(ctx), hp_(hp), registry_(registry), b_(builder) {}

  NodeHandle learn(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    if (cols.size() == 1) return leaf(rows, cols[0]);
    if (rows.size() < hp_.min_instances) return naive_factorization(rows, cols);

    const auto groups = column_partition(data_, rows, cols, ctx_, hp_.dependence_threshold, registry_);
    if (groups.size() > 1) {
      std::vector<NodeHandle> kids;
      for (const auto& g : groups) kids.push_back(learn(rows, g));
      return b_.make_product(kids);
    }

    const auto assignment = row_cluster(data_, rows, cols, ctx_, hp_.cluster_count, mix_seed(hp_.seed, calls_++),
                                        registry_);
    std::vector<std::vector<std::size_t>> clusters(hp_.cluster_count);
    for (std::size_t i = 0; i < rows.size(); ++i) clusters[assignment[i]].push_back(rows[i]);
    std::erase_if(clusters, [](const auto& c) { return c.empty(); });
    if (clusters.size() < 2) return naive_factorization(rows, cols);

    std::vector<NodeHandle> kids;
    std::vector<double> weights;
    for (const auto& c : clusters) {
      kids.push_back(learn(c, cols));
      weights.push_back(static_cast<double>(c.size()) / static_cast<double>(rows.size()));
    }
    return b_.make_sum(kids, renormalized(weights));
  }

  NodeHandle leaf(const std::vector<std::size_t>& rows, std::size_t col) {
    const auto fam = registry_.at(ctx_[col].family);
    const auto values = column_values(data_, rows, col);
    return b_.make_leaf(fam, fit_leaf_mle(*fam, values, ctx_[col].domain, hp_), col);
  }

  NodeHandle naive_factorization(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    if (cols.size() == 1) return leaf(rows, cols[0]);
    std::vector<NodeHandle> kids;
    for (std::size_t c : cols) kids.push_back(leaf(rows, c));
    return b_.make_product(kids);
  }

 private:
  const DataMatrix& data_;
  const Context& ctx_;
  const LearnHyperparams& hp_;
  const LeafRegistry& registry_;
  NetworkBuilder& b_;
  std::uint64_t calls_ = 0;
};

inline void check_training_data(const DataMatrix& data, const Context& ctx) {
  if (data.empty() || data.cols() == 0) throw data_error("training data is empty");
  if (ctx.size() != data.cols())
    throw data_error("context has " + std::to_string(ctx.size()) + " columns but data has " +
                     std::to_string(data.cols()));
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c)
      if (!std::isfinite(data(r, c)))
        throw data_error("row " + std::to_string(r) + ", column " + std::to_string(c) +
                         ": training data must be complete and finite");
}

}  // namespace detail

/// Recursive structure learning: a single column becomes a fitted leaf; a
/// slice with fewer than `min_instances` rows becomes a product of leaves;
/// otherwise independent column groups become a product node, and failing
/// that, k-means row clusters become a sum node weighted by cluster size.
inline Network learn_structure(const DataMatrix& data, const Context& ctx, const LearnHyperparams& hp = {},
                               const LeafRegistry& registry = default_registry()) {
  hp.check();
  ctx.check(registry);
  detail::check_training_data(data, ctx);
  NetworkBuilder b(registry);
  detail::StructureLearner learner(data, ctx, hp, registry, b);
  const auto root = learner.learn(detail::all_indices(data.rows()), detail::all_indices(data.cols()));
  return b.finalize(root);
}

/// Root sum with one structure-learned child per label value present in the
/// data, weighted by label frequency. Each child models every column,
/// including the (constant) label column.
inline Network learn_classifier(const DataMatrix& data, const Context& ctx, std::size_t label_column,
                                const LearnHyperparams& hp = {}, const LeafRegistry& registry = default_registry()) {
  hp.check();
  ctx.check(registry);
  detail::check_training_data(data, ctx);
  if (label_column >= data.cols()) throw model_error("label column out of range");
  if (!detail::column_is_discrete(ctx, label_column, registry))
    throw model_error("label column " + std::to_string(label_column) + " must be categorical");

  std::map<double, std::vector<std::size_t>> partitions;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const double label = data(r, label_column);
    if (!(label >= 0.0 && label == std::floor(label)))
      throw data_error("row " + std::to_string(r) + ": label " + format_real(label) + " is not a category index");
    partitions[label].push_back(r);
  }

  NetworkBuilder b(registry);
  detail::StructureLearner learner(data, ctx, hp, registry, b);
  const auto cols = detail::all_indices(data.cols());
  SumNode root;
  std::vector<NodeHandle> kids;
  std::vector<double> weights;
  for (const auto& [label, rows] : partitions) {
    kids.push_back(learner.learn(rows, cols));
    weights.push_back(static_cast<double>(rows.size()) / static_cast<double>(data.rows()));
  }
  weights = detail::renormalized(weights);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    root.children.push_back(detail::as_id(kids[i].index));
    root.weights.push_back(weights[i]);
  }
  return b.finalize(b.add_node(std::move(root)));
}

}  // namespace spn
