#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spn/network.hpp"

namespace spn {

enum class ViolationKind { completeness, decomposability, weight_normalization, param_invalid, structural };

inline const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::completeness: return "completeness";
    case ViolationKind::decomposability: return "decomposability";
    case ViolationKind::weight_normalization: return "weight-normalization";
    case ViolationKind::param_invalid: return "param-invalid";
    case ViolationKind::structural: return "structural";
  }
  return "?";
}

struct Violation {
  NodeId node;
  ViolationKind kind;
  std::string message;
};

struct ValidityReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks completeness (sum children share one scope), decomposability
/// (product children have pairwise disjoint scopes), sum weight
/// normalization, leaf parameters and id ordering. Linear in network size
/// apart from scope comparisons.
inline ValidityReport validate(const Network& net) {
  ValidityReport report;
  const auto add = [&](std::size_t i, ViolationKind k, std::string msg) {
    report.violations.push_back({detail::as_id(i), k, std::move(msg)});
  };

  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& node = net.nodes()[i];
    const NodeId id = detail::as_id(i);
    const auto kids = children_of(node);

    if (kind_of(node) != NodeKind::leaf && kids.size() < 2)
      add(i, ViolationKind::structural, std::string(to_string(kind_of(node))) + " node has fewer than 2 children");
    for (NodeId c : kids)
      if (!(c < id)) add(i, ViolationKind::structural, "child " + std::to_string(c.value) + " does not precede its parent");

    if (const auto* s = std::get_if<SumNode>(&node)) {
      double total = 0.0;
      bool negative = false;
      for (double w : s->weights) {
        negative |= !(w >= 0.0 && std::isfinite(w));
        total += w;
      }
      if (negative || s->weights.size() != kids.size() || !(std::abs(total - 1.0) <= 1e-6))
        add(i, ViolationKind::weight_normalization, "sum weights add up to " + format_real(total));
      for (NodeId c : kids)
        if (net.scope(c) != net.scope(kids.front())) {
          add(i, ViolationKind::completeness, "sum children have different scopes");
          break;
        }
    } else if (kind_of(node) == NodeKind::product) {
      std::size_t total = 0;
      for (NodeId c : kids) total += net.scope(c).size();
      if (total != net.scope(id).size())
        add(i, ViolationKind::decomposability, "product children have overlapping scopes");
    } else {
      const auto& leaf = std::get<LeafNode>(node);
      for (const auto& msg : leaf.family->validate(leaf.params)) add(i, ViolationKind::param_invalid, msg);
    }
  }
  return report;
}

}  // namespace spn
