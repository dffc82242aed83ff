#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "spn/network.hpp"

namespace spn {

struct StructureStats {
  std::size_t sum_nodes = 0;
  std::size_t product_nodes = 0;
  std::size_t leaf_nodes = 0;
  std::size_t edges = 0;
  std::size_t depth = 0;            // edges on the longest root-to-leaf path
  std::size_t free_parameters = 0;  // sum weights minus one per sum, plus leaf parameters

  std::size_t nodes() const { return sum_nodes + product_nodes + leaf_nodes; }
};

inline StructureStats structure_stats(const Network& net) {
  StructureStats st;
  std::vector<std::size_t> height(net.size(), 0);
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& node = net.nodes()[i];
    const auto kids = children_of(node);
    st.edges += kids.size();
    for (NodeId c : kids) height[i] = std::max(height[i], height[c.index()] + 1);
    switch (kind_of(node)) {
      case NodeKind::sum:
        ++st.sum_nodes;
        st.free_parameters += kids.size() - 1;
        break;
      case NodeKind::product:
        ++st.product_nodes;
        break;
      case NodeKind::leaf: {
        const auto& leaf = std::get<LeafNode>(node);
        ++st.leaf_nodes;
        st.free_parameters += leaf.family->count_free_parameters(leaf.params);
        break;
      }
    }
  }
  st.depth = height.back();
  return st;
}

}  // namespace spn
