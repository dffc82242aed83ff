#pragma once

#include <cctype>
#include <cmath>
#include <string>

#include "spn/error.hpp"
#include "spn/format.hpp"
#include "spn/network.hpp"

namespace spn {

struct EmitOptions {
  std::string function_name = "spn_loglik";
  bool emit_main = false;  // adds a main() that evaluates CSV rows from stdin
};

namespace detail {

inline bool is_c_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

inline std::string var(NodeId id) { return "n" + std::to_string(id.value); }

}  // namespace detail

/// Emits a self-contained C99 translation unit evaluating the network's
/// log-likelihood as straight-line code, one local per node in id order.
inline std::string emit_source(const Network& net, const EmitOptions& options = {}) {
  if (!detail::is_c_identifier(options.function_name))
    throw model_error("'" + options.function_name + "' is not a valid C identifier");
  for (const Node& node : net.nodes())
    if (const auto* leaf = std::get_if<LeafNode>(&node); leaf && !leaf->family->emit_c)
      throw model_error("leaf family '" + leaf->family->name + "' has no C emission handler");

  const std::string& fn = options.function_name;
  const std::size_t nvars = net.num_variables();
  std::string src;
  src += "/* Generated sum-product network evaluator.\n";
  src += " *\n";
  src += " *   double " + fn + "(const double *x);\n";
  src += " *\n";
  src += " * x points to " + std::to_string(nvars) + " doubles, one per variable in column order.\n";
  src += " * A NaN entry is missing and is marginalized out. Returns the natural log of\n";
  src += " * the probability (mass or density) of the observed entries.\n";
  src += " * No global state and no heap allocation: the function is reentrant.\n";
  src += " * Nodes: " + std::to_string(net.size()) + ".\n";
  src += " */\n";
  src += "#include <math.h>\n";
  if (options.emit_main) src += "#include <stdio.h>\n#include <stdlib.h>\n";
  src += "\n";
  src += "double " + fn + "(const double *x);\n\n";
  src += "double " + fn + "(const double *x)\n{\n";

  for (std::size_t i = 0; i < net.size(); ++i) {
    const NodeId id = detail::as_id(i);
    const Node& node = net.nodes()[i];
    if (const auto* leaf = std::get_if<LeafNode>(&node)) {
      const std::string xv = "x[" + std::to_string(leaf->scope_var) + "]";
      src += "  const double " + detail::var(id) + " = (" + xv + " != " + xv + ") ? 0.0 : " +
             leaf->family->emit_c(leaf->params, xv) + ";\n";
    } else if (const auto* p = std::get_if<ProductNode>(&node)) {
      src += "  const double " + detail::var(id) + " = ";
      for (std::size_t k = 0; k < p->children.size(); ++k) src += (k ? " + " : "") + detail::var(p->children[k]);
      src += ";\n";
    } else {
      const auto& s = std::get<SumNode>(node);
      const std::string v = detail::var(id);
      src += "  double " + v + ";\n  {\n";
      for (std::size_t k = 0; k < s.children.size(); ++k)
        src += "    const double t" + std::to_string(k) + " = " + format_c_literal(std::log(s.weights[k])) + " + " +
               detail::var(s.children[k]) + ";\n";
      src += "    double m = t0;\n";
      for (std::size_t k = 1; k < s.children.size(); ++k)
        src += "    if (t" + std::to_string(k) + " > m) m = t" + std::to_string(k) + ";\n";
      src += "    " + v + " = (m == -INFINITY) ? -INFINITY : m + log(";
      for (std::size_t k = 0; k < s.children.size(); ++k)
        src += std::string(k ? " + " : "") + "exp(t" + std::to_string(k) + " - m)";
      src += ");\n  }\n";
    }
  }
  src += "  return " + detail::var(net.root()) + ";\n}\n";

  if (options.emit_main) {
    const std::string n = std::to_string(nvars);
    src += R"(
/* Reads comma-separated rows from stdin (empty or "nan" cells are missing)
 * and prints one log-likelihood per line with 17 significant digits. */
int main(void)
{
  char line[65536];
  double x[)" + n + R"(];
  unsigned long row = 0;
  while (fgets(line, sizeof line, stdin)) {
    char *p = line;
    int i;
    while (*p == ' ' || *p == '\t') ++p;
    if (*p == '\n' || *p == '\r' || *p == '\0') continue;
    for (i = 0; i < )" + n + R"(; ++i) {
      while (*p == ' ' || *p == '\t') ++p;
      if (*p == ',' || *p == '\n' || *p == '\r' || *p == '\0') {
        x[i] = NAN;
      } else {
        char *end;
        x[i] = strtod(p, &end);
        if (end == p) {
          fprintf(stderr, "row %lu, column %d: not a number\n", row, i);
          return 3;
        }
        p = end;
        while (*p == ' ' || *p == '\t') ++p;
      }
      if (*p == ',') ++p;
    }
    printf("%.17g\n", )" + fn + R"((x));
    ++row;
  }
  return 0;
}
)";
  }
  return src;
}

}  // namespace spn
