#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "spn/data.hpp"
#include "spn/network.hpp"

namespace spn {

/// Numerically stable log(sum(exp(terms))).
inline double log_sum_exp(std::span<const double> terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc);
}

namespace detail {

inline void check_columns(const Network& net, std::size_t cols) {
  if (cols != net.num_variables())
    throw data_error("data has " + std::to_string(cols) + " columns but the network expects " +
                     std::to_string(net.num_variables()));
}

/// Log value of a leaf: 0 for a missing cell, the log density otherwise.
/// Values outside the family's domain are reported as data errors.
inline double leaf_log_value(const LeafNode& leaf, std::span<const double> row, std::size_t row_index) {
  const double x = row[leaf.scope_var];
  if (is_missing(x)) return 0.0;
  if (!std::isfinite(x) || !leaf.family->accepts(leaf.params, x))
    throw data_error("row " + std::to_string(row_index) + ", column " + std::to_string(leaf.scope_var) +
                     ": value " + format_real(x) + " is outside the domain of " + leaf.family->name);
  return leaf.family->log_density(leaf.params, x);
}

inline void forward_pass(const Network& net, std::span<const double> row, std::size_t row_index,
                         std::span<double> out, bool max_circuit) {
  std::vector<double> terms;
  const auto nodes = net.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& node = nodes[i];
    if (const auto* s = std::get_if<SumNode>(&node)) {
      // every child fully marginalized: the weights sum to one, so the value is log 1
      if (!max_circuit && std::all_of(s->children.begin(), s->children.end(), [&](NodeId c) { return out[c.index()] == 0.0; })) {
        out[i] = 0.0;
        continue;
      }
      terms.resize(s->children.size());
      for (std::size_t k = 0; k < terms.size(); ++k)
        terms[k] = std::log(s->weights[k]) + out[s->children[k].index()];
      out[i] = max_circuit ? *std::max_element(terms.begin(), terms.end()) : log_sum_exp(terms);
    } else if (const auto* p = std::get_if<ProductNode>(&node)) {
      double acc = 0.0;
      for (NodeId c : p->children) acc += out[c.index()];
      out[i] = acc;
    } else {
      const auto& leaf = std::get<LeafNode>(node);
      if (max_circuit && is_missing(row[leaf.scope_var]))
        out[i] = leaf.family->log_density(leaf.params, leaf.family->mode(leaf.params));
      else
        out[i] = leaf_log_value(leaf, row, row_index);
    }
  }
}

}  // namespace detail

/// Bottom-up log values (natural log) of every node for one or many rows.
class LogValueTable {
 public:
  LogValueTable(std::size_t rows, std::size_t nodes) : rows_(rows), nodes_(nodes), values_(rows * nodes) {}

  std::size_t rows() const { return rows_; }
  std::size_t nodes() const { return nodes_; }
  double at(std::size_t row, NodeId node) const { return values_[row * nodes_ + node.index()]; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * nodes_, nodes_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * nodes_, nodes_}; }

 private:
  std::size_t rows_;
  std::size_t nodes_;
  std::vector<double> values_;
};

/// Per-node log values for a single row; missing cells are marginalized.
inline std::vector<double> node_log_values(const Network& net, std::span<const double> row,
                                           std::size_t row_index = 0) {
  detail::check_columns(net, row.size());
  std::vector<double> out(net.size());
  detail::forward_pass(net, row, row_index, out, false);
  return out;
}

inline LogValueTable log_value_table(const Network& net, const DataMatrix& data) {
  detail::check_columns(net, data.cols());
  LogValueTable table(data.rows(), net.size());
  for (std::size_t r = 0; r < data.rows(); ++r) detail::forward_pass(net, data.row(r), r, table.row(r), false);
  return table;
}

/// Joint or marginal log-likelihood per row, depending on which cells are missing.
inline std::vector<double> log_likelihood(const Network& net, const DataMatrix& data) {
  detail::check_columns(net, data.cols());
  std::vector<double> out(data.rows());
  std::vector<double> scratch(net.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    detail::forward_pass(net, data.row(r), r, scratch, false);
    out[r] = scratch.back();
  }
  return out;
}

/// Node values of the max circuit: sums become weighted maxima and missing
/// leaves contribute their density at the mode.
inline std::vector<double> max_log_values(const Network& net, std::span<const double> row,
                                          std::size_t row_index = 0) {
  detail::check_columns(net, row.size());
  std::vector<double> out(net.size());
  detail::forward_pass(net, row, row_index, out, true);
  return out;
}

/// Approximate most probable explanation.
///
/// Bottom-up max pass, then a top-down walk that follows the argmax child at
/// every sum (ties go to the smallest child id) and every child of a product.
/// Missing cells reached through a leaf receive that leaf's mode; observed
/// cells are never touched.
inline DataMatrix mpe(const Network& net, const DataMatrix& data) {
  detail::check_columns(net, data.cols());
  DataMatrix out = data;
  std::vector<double> values(net.size());
  std::vector<NodeId> stack;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    const auto row = data.row(r);
    detail::forward_pass(net, row, r, values, true);
    stack.assign(1, net.root());
    while (!stack.empty()) {
      const NodeId id = stack.back();
      stack.pop_back();
      const Node& node = net.node(id);
      if (const auto* s = std::get_if<SumNode>(&node)) {
        std::size_t best = 0;
        double best_value = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < s->children.size(); ++k) {
          const double v = std::log(s->weights[k]) + values[s->children[k].index()];
          if (v > best_value || (v == best_value && s->children[k] < s->children[best])) {
            best = k;
            best_value = v;
          }
        }
        stack.push_back(s->children[best]);
      } else if (const auto* p = std::get_if<ProductNode>(&node)) {
        stack.insert(stack.end(), p->children.begin(), p->children.end());
      } else {
        const auto& leaf = std::get<LeafNode>(node);
        if (is_missing(row[leaf.scope_var])) out(r, leaf.scope_var) = leaf.family->mode(leaf.params);
      }
    }
  }
  return out;
}

}  // namespace spn
