#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spn/error.hpp"
#include "spn/format.hpp"
#include "spn/random.hpp"

namespace spn {

using ParamView = std::span<const double>;

/// One named entry of a family's parameter record. At most one entry per
/// family may be a vector; its length is whatever remains after the scalars.
struct ParamSpec {
  std::string name;
  bool is_vector = false;
};

/// Domain metadata for one variable: a category count or a numeric range.
struct ColumnDomain {
  std::optional<std::size_t> cardinality;
  std::optional<std::pair<double, double>> range;
};

struct FitOptions {
  double laplace_alpha = 1.0;
  double std_floor = 1e-6;
};

/// A pluggable univariate distribution.
///
/// The first block of handlers is mandatory. The optional block enables
/// extra capabilities: domain checks on observed data, parameter counting,
/// gradient-based optimization (all three gradient handlers or none),
/// random structure generation and C code emission.
struct LeafFamily {
  std::string name;
  std::vector<ParamSpec> schema;
  bool discrete = false;

  std::function<double(ParamView, double)> log_density;
  std::function<double(ParamView, RandomSource&)> sample;
  std::function<double(ParamView)> mode;
  std::function<std::vector<double>(std::span<const double>, const ColumnDomain&,
                                    const FitOptions&)>
      mle;
  std::function<std::vector<std::string>(ParamView)> validate;

  std::function<bool(ParamView, double)> in_domain;
  std::function<std::vector<double>(ParamView)> normalize;
  std::function<std::size_t(ParamView)> free_parameters;
  std::function<std::vector<double>(ParamView)> to_unconstrained;
  std::function<std::vector<double>(std::span<const double>)> from_unconstrained;
  std::function<void(ParamView, double, std::span<double>)> log_density_gradient;
  std::function<std::vector<double>(const ColumnDomain&, RandomSource&)> random_params;
  std::function<std::string(ParamView, const std::string&)> emit_c;

  bool differentiable() const {
    return to_unconstrained && from_unconstrained && log_density_gradient;
  }

  std::size_t count_free_parameters(ParamView p) const {
    return free_parameters ? free_parameters(p) : p.size();
  }

  bool accepts(ParamView p, double x) const {
    return in_domain ? in_domain(p, x) : std::isfinite(x);
  }

  std::size_t scalar_count() const {
    return static_cast<std::size_t>(
        std::count_if(schema.begin(), schema.end(), [](const ParamSpec& s) { return !s.is_vector; }));
  }

  /// Splits a flat parameter vector into one view per schema entry.
  std::vector<ParamView> split(ParamView p) const {
    std::vector<ParamView> out;
    const std::size_t vec_len = p.size() >= scalar_count() ? p.size() - scalar_count() : 0;
    std::size_t at = 0;
    for (const auto& s : schema) {
      const std::size_t n = s.is_vector ? vec_len : 1;
      out.push_back(p.subspan(std::min(at, p.size()), std::min(n, p.size() - std::min(at, p.size()))));
      at += n;
    }
    return out;
  }
};

namespace detail {

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

/// Divides by the sum unless it is already 1 up to accumulated rounding,
/// which keeps repeated normalization a no-op.
inline std::vector<double> renormalized(std::span<const double> w) {
  double total = 0.0;
  for (double x : w) total += x;
  std::vector<double> out(w.begin(), w.end());
  if (std::abs(total - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(w.size()))
    return out;
  for (double& x : out) x /= total;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double m = kNegInf;
  for (double v : logits) m = std::max(m, v);
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace detail

// Built-in families

inline LeafFamily categorical_family() {
  LeafFamily f;
  f.name = "Categorical";
  f.schema = {{"p", true}};
  f.discrete = true;

  f.in_domain = [](ParamView p, double x) {
    return std::isfinite(x) && x >= 0.0 && x == std::floor(x) && x < static_cast<double>(p.size());
  };
  f.log_density = [](ParamView p, double x) {
    if (!(x >= 0.0 && x == std::floor(x) && x < static_cast<double>(p.size()))) return detail::kNegInf;
    return std::log(p[static_cast<std::size_t>(x)]);
  };
  f.sample = [](ParamView p, RandomSource& rng) {
    const double u = rng.uniform();
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] <= 0.0) continue;
      last_positive = i;
      cum += p[i];
      if (u < cum) return static_cast<double>(i);
    }
    return static_cast<double>(last_positive);
  };
  f.mode = [](ParamView p) {
    return static_cast<double>(std::max_element(p.begin(), p.end()) - p.begin());
  };
  f.mle = [](std::span<const double> values, const ColumnDomain& domain, const FitOptions& opt) {
    if (values.empty()) throw data_error("Categorical fit: empty column");
    std::size_t k = domain.cardinality.value_or(0);
    for (double v : values) {
      if (!(v >= 0.0 && v == std::floor(v)))
        throw data_error("Categorical fit: value " + format_real(v) + " is not a category index");
      k = std::max(k, static_cast<std::size_t>(v) + 1);
    }
    if (domain.cardinality && k > *domain.cardinality)
      throw data_error("Categorical fit: value outside cardinality " + std::to_string(*domain.cardinality));
    std::vector<double> counts(k, opt.laplace_alpha);
    for (double v : values) counts[static_cast<std::size_t>(v)] += 1.0;
    const double denom = static_cast<double>(values.size()) + opt.laplace_alpha * static_cast<double>(k);
    for (double& c : counts) c /= denom;
    return counts;
  };
  f.validate = [](ParamView p) {
    std::vector<std::string> bad;
    if (p.empty()) bad.push_back("p must have at least one entry");
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) bad.push_back("probability " + format_real(v) + " outside [0, 1]");
      total += v;
    }
    if (!p.empty() && !(std::abs(total - 1.0) <= 1e-6))
      bad.push_back("probabilities sum to " + format_real(total));
    return bad;
  };
  f.normalize = [](ParamView p) { return detail::renormalized(p); };
  f.free_parameters = [](ParamView p) { return p.empty() ? std::size_t{0} : p.size() - 1; };
  f.to_unconstrained = [](ParamView p) {
    std::vector<double> logits(p.size());
    std::transform(p.begin(), p.end(), logits.begin(), [](double v) { return std::log(v); });
    return logits;
  };
  f.from_unconstrained = [](std::span<const double> u) { return detail::softmax(u); };
  f.log_density_gradient = [](ParamView p, double x, std::span<double> g) {
    const auto obs = static_cast<std::size_t>(x);
    for (std::size_t j = 0; j < p.size(); ++j) g[j] = (j == obs ? 1.0 : 0.0) - p[j];
  };
  f.random_params = [](const ColumnDomain& d, RandomSource&) {
    const std::size_t k = d.cardinality.value_or(2);
    return std::vector<double>(k, 1.0 / static_cast<double>(k));
  };
  f.emit_c = [](ParamView p, const std::string& x) {
    std::string expr;
    for (std::size_t i = 0; i < p.size(); ++i)
      expr += "(" + x + " == " + format_real(static_cast<double>(i)) + ") ? " +
              format_c_literal(std::log(p[i])) + " : ";
    return "(" + expr + "(-INFINITY))";
  };
  return f;
}

inline LeafFamily gaussian_family() {
  LeafFamily f;
  f.name = "Gaussian";
  f.schema = {{"mean", false}, {"stdev", false}};

  f.log_density = [](ParamView p, double x) {
    const double z = (x - p[0]) / p[1];
    return -0.5 * z * z - (std::log(p[1]) + detail::kHalfLog2Pi);
  };
  f.sample = [](ParamView p, RandomSource& rng) { return rng.normal(p[0], p[1]); };
  f.mode = [](ParamView p) { return p[0]; };
  f.mle = [](std::span<const double> values, const ColumnDomain&, const FitOptions& opt) {
    if (values.empty()) throw data_error("Gaussian fit: empty column");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    return std::vector<double>{mean, std::max(std::sqrt(var), opt.std_floor)};
  };
  f.validate = [](ParamView p) {
    std::vector<std::string> bad;
    if (p.size() != 2) {
      bad.push_back("expected mean and stdev");
      return bad;
    }
    if (!std::isfinite(p[0])) bad.push_back("mean must be finite");
    if (!(std::isfinite(p[1]) && p[1] >= 1e-6)) bad.push_back("stdev " + format_real(p[1]) + " below floor 1e-6");
    return bad;
  };
  f.free_parameters = [](ParamView) { return std::size_t{2}; };
  f.to_unconstrained = [](ParamView p) { return std::vector<double>{p[0], std::log(p[1])}; };
  f.from_unconstrained = [](std::span<const double> u) {
    return std::vector<double>{u[0], std::max(std::exp(u[1]), 1e-6)};
  };
  f.log_density_gradient = [](ParamView p, double x, std::span<double> g) {
    const double z = (x - p[0]) / p[1];
    g[0] = z / p[1];
    g[1] = z * z - 1.0;
  };
  f.random_params = [](const ColumnDomain& d, RandomSource& rng) {
    const auto [lo, hi] = d.range.value_or(std::pair{0.0, 1.0});
    return std::vector<double>{rng.uniform(lo, hi), 1.0};
  };
  f.emit_c = [](ParamView p, const std::string& x) {
    const std::string z = "((" + x + " - " + format_c_literal(p[0]) + ") / " + format_c_literal(p[1]) + ")";
    return "(-0.5 * " + z + " * " + z + " - " + format_c_literal(std::log(p[1]) + detail::kHalfLog2Pi) + ")";
  };
  return f;
}

/// Pareto with scale fixed at 1: density a * x^-(a+1) on x >= 1.
inline LeafFamily pareto_family() {
  LeafFamily f;
  f.name = "Pareto";
  f.schema = {{"a", false}};

  f.log_density = [](ParamView p, double x) {
    if (!(x >= 1.0)) return detail::kNegInf;
    return std::log(p[0]) - (p[0] + 1.0) * std::log(x);
  };
  f.sample = [](ParamView p, RandomSource& rng) { return std::pow(1.0 - rng.uniform(), -1.0 / p[0]); };
  f.mode = [](ParamView) { return 1.0; };
  f.mle = [](std::span<const double> values, const ColumnDomain&, const FitOptions&) {
    if (values.empty()) throw data_error("Pareto fit: empty column");
    double log_sum = 0.0;
    for (double v : values) {
      if (!(v >= 1.0)) throw data_error("Pareto fit: value " + format_real(v) + " below support x >= 1");
      log_sum += std::log(v);
    }
    if (log_sum <= 0.0) throw data_error("Pareto fit: all values equal 1, shape is unbounded");
    return std::vector<double>{static_cast<double>(values.size()) / log_sum};
  };
  f.validate = [](ParamView p) {
    std::vector<std::string> bad;
    if (p.size() != 1)
      bad.push_back("expected shape a");
    else if (!(std::isfinite(p[0]) && p[0] > 0.0))
      bad.push_back("shape a = " + format_real(p[0]) + " must be > 0");
    return bad;
  };
  f.free_parameters = [](ParamView) { return std::size_t{1}; };
  f.to_unconstrained = [](ParamView p) { return std::vector<double>{std::log(p[0])}; };
  f.from_unconstrained = [](std::span<const double> u) { return std::vector<double>{std::exp(u[0])}; };
  f.log_density_gradient = [](ParamView p, double x, std::span<double> g) {
    g[0] = x >= 1.0 ? 1.0 - p[0] * std::log(x) : 0.0;
  };
  f.random_params = [](const ColumnDomain&, RandomSource& rng) {
    return std::vector<double>{rng.uniform(1.5, 3.5)};
  };
  f.emit_c = [](ParamView p, const std::string& x) {
    return "((" + x + " >= 1.0) ? " + format_c_literal(std::log(p[0])) + " - " +
           format_c_literal(p[0] + 1.0) + " * log(" + x + ") : (-INFINITY))";
  };
  return f;
}

/// Name-indexed set of leaf families. Lookup ignores ASCII case.
class LeafRegistry {
 public:
  using Handle = std::shared_ptr<const LeafFamily>;

  LeafRegistry() = default;

  static LeafRegistry with_builtins() {
    LeafRegistry r;
    r.register_family(categorical_family());
    r.register_family(gaussian_family());
    r.register_family(pareto_family());
    return r;
  }

  Handle register_family(LeafFamily family) {
    if (family.name.empty()) throw construction_error("leaf family needs a name");
    if (find(family.name))
      throw construction_error("leaf family '" + family.name + "' is already registered");
    const std::pair<const char*, bool> handlers[] = {
        {"log_density", static_cast<bool>(family.log_density)},
        {"sample", static_cast<bool>(family.sample)},
        {"mode", static_cast<bool>(family.mode)},
        {"mle", static_cast<bool>(family.mle)},
        {"validate", static_cast<bool>(family.validate)},
    };
    for (const auto& [what, present] : handlers)
      if (!present)
        throw construction_error("leaf family '" + family.name + "' is missing the " + what + " handler");
    if (family.schema.empty()) throw construction_error("leaf family '" + family.name + "' has no parameters");
    if (family.schema.size() - family.scalar_count() > 1)
      throw construction_error("leaf family '" + family.name + "' declares more than one vector parameter");
    const bool any_grad = family.to_unconstrained || family.from_unconstrained || family.log_density_gradient;
    if (any_grad && !family.differentiable())
      throw construction_error("leaf family '" + family.name + "' has an incomplete gradient handler set");
    families_.push_back(std::make_shared<const LeafFamily>(std::move(family)));
    return families_.back();
  }

  Handle find(std::string_view name) const {
    for (const auto& f : families_)
      if (detail::iequals(f->name, name)) return f;
    return nullptr;
  }

  Handle at(std::string_view name) const {
    if (auto f = find(name)) return f;
    throw construction_error("unknown leaf family '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& f : families_) out.push_back(f->name);
    return out;
  }

 private:
  std::vector<Handle> families_;
};

/// Process-wide registry holding the built-ins. Register custom families
/// at startup, before any concurrent use.
inline LeafRegistry& default_registry() {
  static LeafRegistry registry = LeafRegistry::with_builtins();
  return registry;
}

}  // namespace spn
