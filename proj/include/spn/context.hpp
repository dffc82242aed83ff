#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"

#include "spn/data.hpp"
#include "spn/error.hpp"
#include "spn/leaf_family.hpp"

namespace spn {

struct ColumnInfo {
  std::string family;
  ColumnDomain domain;
};

/// Statistical type and domain of every data column.
class Context {
 public:
  Context() = default;
  explicit Context(std::vector<ColumnInfo> columns) : columns_(std::move(columns)) {}

  std::size_t size() const { return columns_.size(); }
  const ColumnInfo& operator[](std::size_t i) const { return columns_.at(i); }
  ColumnInfo& operator[](std::size_t i) { return columns_.at(i); }
  const std::vector<ColumnInfo>& columns() const { return columns_; }

  /// Fills in missing domains from observed data: ranges for numeric columns
  /// and max-value-plus-one cardinalities for discrete ones.
  void add_domains(const DataMatrix& data, const LeafRegistry& registry = default_registry()) {
    if (data.cols() != columns_.size()) throw data_error("context has " + std::to_string(columns_.size()) +
                                                         " columns but data has " + std::to_string(data.cols()));
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      auto& col = columns_[c];
      const bool discrete = registry.at(col.family)->discrete;
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t r = 0; r < data.rows(); ++r) {
        const double v = data(r, c);
        if (is_missing(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (lo > hi) continue;
      if (discrete && !col.domain.cardinality)
        col.domain.cardinality = std::max<std::size_t>(2, static_cast<std::size_t>(hi) + 1);
      if (!discrete && !col.domain.range) col.domain.range = std::pair{lo, hi};
    }
  }

  /// Throws model_error on unknown families or malformed domains.
  void check(const LeafRegistry& registry = default_registry()) const {
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const auto& col = columns_[c];
      const std::string where = "context column " + std::to_string(c);
      if (!registry.find(col.family)) throw model_error(where + ": unknown family '" + col.family + "'");
      if (col.domain.cardinality && *col.domain.cardinality < 2)
        throw model_error(where + ": categorical cardinality must be at least 2");
      if (col.domain.range && !(col.domain.range->first <= col.domain.range->second))
        throw model_error(where + ": range lower bound exceeds upper bound");
    }
  }

 private:
  std::vector<ColumnInfo> columns_;
};

/// Parses `[{"family": "Gaussian", "range": [lo, hi]}, {"family": "Categorical", "cardinality": 2}, ...]`.
/// Domains are optional and can be filled from data with add_domains.
inline Context context_from_json(const std::string& text, const LeafRegistry& registry = default_registry()) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw model_error(std::string("context: ") + e.what());
  }
  if (!doc.is_array()) throw model_error("context: expected a JSON array of column records");
  std::vector<ColumnInfo> cols;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    const std::string where = "context[" + std::to_string(i) + "]";
    if (!item.is_object() || !item.contains("family") || !item["family"].is_string())
      throw model_error(where + ".family: missing or not a string");
    ColumnInfo col;
    col.family = item["family"].get<std::string>();
    if (auto f = registry.find(col.family)) col.family = f->name;
    if (item.contains("cardinality")) {
      if (!item["cardinality"].is_number_unsigned()) throw model_error(where + ".cardinality: expected a positive integer");
      col.domain.cardinality = item["cardinality"].get<std::size_t>();
    }
    if (item.contains("range")) {
      const auto& r = item["range"];
      if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number())
        throw model_error(where + ".range: expected [lo, hi]");
      col.domain.range = std::pair{r[0].get<double>(), r[1].get<double>()};
    }
    cols.push_back(std::move(col));
  }
  Context ctx(std::move(cols));
  ctx.check(registry);
  return ctx;
}

}  // namespace spn
