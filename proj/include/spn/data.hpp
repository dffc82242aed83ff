#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "spn/error.hpp"

namespace spn {

/// Marker for an unobserved cell. Any NaN counts as missing.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

/// Row-major rows x columns matrix of reals with NaN as the missing marker.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(std::size_t rows, std::size_t cols, double fill = kMissing)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw data_error("data matrix: value count does not match shape");
  }

  DataMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows.size() ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
      if (r.size() != cols_) throw data_error("data matrix: ragged initializer");
      values_.insert(values_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> r) {
    if (rows_ == 0 && values_.empty()) cols_ = r.size();
    if (r.size() != cols_) throw data_error("data matrix: appended row has the wrong width");
    values_.insert(values_.end(), r.begin(), r.end());
    ++rows_;
  }

  std::span<const double> values() const { return values_; }

  bool has_missing() const {
    for (double v : values_)
      if (is_missing(v)) return true;
    return false;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace spn
