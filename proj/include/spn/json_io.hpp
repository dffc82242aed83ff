#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "spn/error.hpp"
#include "spn/network.hpp"

namespace spn {

/// JSON document:
///   {"version": "1.0", "root": <id>, "nodes": [
///      {"id": 0, "kind": "leaf", "family": "Categorical", "scope": 0, "params": {"p": [0.2, 0.8]}},
///      {"id": 3, "kind": "sum", "children": [0, 1], "weights": [0.4, 0.6]},
///      {"id": 4, "kind": "product", "children": [2, 3]}, ...]}
/// Ids are contiguous, children precede parents and the root is the last id.
inline std::string to_json(const Network& net, int indent = 2) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& node = net.nodes()[i];
    nlohmann::json j;
    j["id"] = i;
    j["kind"] = to_string(kind_of(node));
    const auto ids = [](std::span<const NodeId> kids) {
      std::vector<std::uint32_t> v;
      for (NodeId c : kids) v.push_back(c.value);
      return v;
    };
    if (const auto* s = std::get_if<SumNode>(&node)) {
      j["children"] = ids(s->children);
      j["weights"] = s->weights;
    } else if (const auto* p = std::get_if<ProductNode>(&node)) {
      j["children"] = ids(p->children);
    } else {
      const auto& leaf = std::get<LeafNode>(node);
      j["family"] = leaf.family->name;
      j["scope"] = leaf.scope_var;
      nlohmann::json params = nlohmann::json::object();
      const auto parts = leaf.family->split(leaf.params);
      for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& spec = leaf.family->schema[k];
        if (spec.is_vector)
          params[spec.name] = std::vector<double>(parts[k].begin(), parts[k].end());
        else
          params[spec.name] = parts[k][0];
      }
      j["params"] = std::move(params);
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json doc;
  doc["version"] = "1.0";
  doc["root"] = net.root().value;
  doc["nodes"] = std::move(nodes);
  return doc.dump(indent) + "\n";
}

namespace detail {

inline const nlohmann::json& require(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw model_error(path + "." + key + ": missing field");
  return obj[key];
}

inline void forbid(const nlohmann::json& obj, const char* key, const std::string& path, const std::string& kind) {
  if (obj.contains(key)) throw model_error(path + "." + key + ": not allowed on a " + kind + " node");
}

inline double json_number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw model_error(path + ": expected a number");
  return v.get<double>();
}

inline std::size_t json_index(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_unsigned()) throw model_error(path + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace detail

/// Parses, checks and finalizes a JSON network document. Diagnostics name
/// the offending field, e.g. "nodes[3].weights[1]".
inline Network from_json(const std::string& text, const LeafRegistry& registry = default_registry()) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw model_error(std::string("json: ") + e.what());
  }
  if (!doc.is_object()) throw model_error("$: expected an object");
  const auto& version = detail::require(doc, "version", "$");
  if (!version.is_string() || version.get<std::string>() != "1.0")
    throw model_error("$.version: unsupported version, expected \"1.0\"");
  const auto& nodes = detail::require(doc, "nodes", "$");
  if (!nodes.is_array() || nodes.empty()) throw model_error("$.nodes: expected a nonempty array");
  const std::size_t root = detail::json_index(detail::require(doc, "root", "$"), "$.root");
  if (root != nodes.size() - 1) throw model_error("$.root: must be the last node id " + std::to_string(nodes.size() - 1));

  NetworkBuilder b(registry);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    if (!n.is_object()) throw model_error(path + ": expected an object");
    if (detail::json_index(detail::require(n, "id", path), path + ".id") != i)
      throw model_error(path + ".id: ids must be contiguous and listed in order");
    const auto& kind = detail::require(n, "kind", path);
    const std::string k = kind.is_string() ? kind.get<std::string>() : "";

    const auto read_children = [&]() {
      const auto& kids = detail::require(n, "children", path);
      if (!kids.is_array() || kids.empty()) throw model_error(path + ".children: expected a nonempty array");
      std::vector<NodeId> out;
      for (std::size_t c = 0; c < kids.size(); ++c) {
        const std::string cpath = path + ".children[" + std::to_string(c) + "]";
        const std::size_t id = detail::json_index(kids[c], cpath);
        if (id >= i) throw model_error(cpath + ": child id " + std::to_string(id) + " must be smaller than parent id " + std::to_string(i));
        out.push_back(detail::as_id(id));
      }
      return out;
    };

    if (k == "sum") {
      for (const char* f : {"family", "scope", "params"}) detail::forbid(n, f, path, k);
      SumNode s;
      s.children = read_children();
      const auto& w = detail::require(n, "weights", path);
      if (!w.is_array() || w.size() != s.children.size())
        throw model_error(path + ".weights: expected one weight per child");
      for (std::size_t c = 0; c < w.size(); ++c)
        s.weights.push_back(detail::json_number(w[c], path + ".weights[" + std::to_string(c) + "]"));
      detail::checked_weights(s.weights, path + ".weights");
      b.add_node(std::move(s));
    } else if (k == "product") {
      for (const char* f : {"weights", "family", "scope", "params"}) detail::forbid(n, f, path, k);
      b.add_node(ProductNode{read_children()});
    } else if (k == "leaf") {
      for (const char* f : {"children", "weights"}) detail::forbid(n, f, path, k);
      const auto& fam_name = detail::require(n, "family", path);
      if (!fam_name.is_string()) throw model_error(path + ".family: expected a string");
      const auto family = registry.find(fam_name.get<std::string>());
      if (!family) throw model_error(path + ".family: unknown leaf family '" + fam_name.get<std::string>() + "'");
      const std::size_t scope = detail::json_index(detail::require(n, "scope", path), path + ".scope");
      const auto& params = detail::require(n, "params", path);
      if (!params.is_object()) throw model_error(path + ".params: expected an object");
      std::vector<double> flat;
      for (const auto& spec : family->schema) {
        const std::string ppath = path + ".params." + spec.name;
        const auto& v = detail::require(params, spec.name.c_str(), path + ".params");
        if (spec.is_vector) {
          if (!v.is_array() || v.empty()) throw model_error(ppath + ": expected a nonempty array");
          for (std::size_t c = 0; c < v.size(); ++c) flat.push_back(detail::json_number(v[c], ppath + "[" + std::to_string(c) + "]"));
        } else {
          flat.push_back(detail::json_number(v, ppath));
        }
      }
      for (const auto& [key, value] : params.items()) {
        bool known = false;
        for (const auto& spec : family->schema) known |= spec.name == key;
        if (!known) throw model_error(path + ".params." + key + ": unknown parameter for " + family->name);
      }
      flat = detail::checked_leaf_params(*family, flat, path + ".params");
      b.add_node(LeafNode{family, std::move(flat), scope});
    } else {
      throw model_error(path + ".kind: expected \"sum\", \"product\" or \"leaf\"");
    }
  }
  return b.finalize(NodeHandle{root});
}

}  // namespace spn
