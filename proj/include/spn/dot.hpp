#pragma once

#include <string>

#include "spn/format.hpp"
#include "spn/network.hpp"

namespace spn {

/// Graphviz DOT rendering. Sums are labeled "+", products "×", leaves
/// "Family(var)"; sum edges carry their weight rounded to 3 decimals.
inline std::string to_dot(const Network& net) {
  std::string out = "digraph spn {\n  node [shape=circle];\n";
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& node = net.nodes()[i];
    std::string label;
    std::string shape;
    switch (kind_of(node)) {
      case NodeKind::sum: label = "+"; break;
      case NodeKind::product: label = "×"; break;
      case NodeKind::leaf: {
        const auto& leaf = std::get<LeafNode>(node);
        label = leaf.family->name + "(" + std::to_string(leaf.scope_var) + ")";
        shape = ", shape=box";
        break;
      }
    }
    out += "  n" + std::to_string(i) + " [label=\"" + label + "\"" + shape + "];\n";
  }
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& node = net.nodes()[i];
    const auto kids = children_of(node);
    const auto* s = std::get_if<SumNode>(&node);
    for (std::size_t k = 0; k < kids.size(); ++k) {
      out += "  n" + std::to_string(i) + " -> n" + std::to_string(kids[k].value);
      if (s) out += " [label=\"" + format_fixed(s->weights[k], 3) + "\"]";
      out += ";\n";
    }
  }
  return out + "}\n";
}

}  // namespace spn
