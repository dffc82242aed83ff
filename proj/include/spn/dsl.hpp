#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spn/error.hpp"
#include "spn/format.hpp"
#include "spn/network.hpp"

// Text format for networks:
//
//   network  := sumexpr
//   sumexpr  := wterm ('+' wterm)*
//   wterm    := NUMBER '*' prodexpr
//   prodexpr := atom ('*' atom)*
//   atom     := leaf | '(' sumexpr ')'
//   leaf     := IDENT '(' arg (',' arg)* ')'
//   arg      := IDENT '=' (NUMBER | '[' NUMBER (',' NUMBER)* ']')
//
// '#' starts a comment running to end of line. Every leaf needs an integer
// `scope` argument. Weights of a multi-term sum must add up to 1 within 1e-6
// and a lone term must carry weight 1.

namespace spn {

namespace dsl_detail {

enum class Tok { number, ident, lparen, rparen, lbracket, rbracket, comma, equals, plus, star, end };

inline const char* describe(Tok t) {
  switch (t) {
    case Tok::number: return "NUMBER";
    case Tok::ident: return "IDENT";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::comma: return "','";
    case Tok::equals: return "'='";
    case Tok::plus: return "'+'";
    case Tok::star: return "'*'";
    case Tok::end: return "end of input";
  }
  return "?";
}

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= src_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = src_[pos_];
      const std::size_t start = pos_;
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
          (c == '-' && pos_ + 1 < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])) || src_[pos_ + 1] == '.'))) {
        t.kind = Tok::number;
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) advance();
        t.kind = Tok::ident;
      } else {
        switch (c) {
          case '(': t.kind = Tok::lparen; break;
          case ')': t.kind = Tok::rparen; break;
          case '[': t.kind = Tok::lbracket; break;
          case ']': t.kind = Tok::rbracket; break;
          case ',': t.kind = Tok::comma; break;
          case '=': t.kind = Tok::equals; break;
          case '+': t.kind = Tok::plus; break;
          case '*': t.kind = Tok::star; break;
          default: throw parse_error(t.line, t.column, std::string("unexpected character '") + c + "'");
        }
        advance();
      }
      t.text = src_.substr(start, pos_ - start);
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  bool digit_at(std::size_t i) const { return i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i])); }

  void lex_number(Token& t) {
    const std::size_t start = pos_;
    if (src_[pos_] == '-') advance();
    bool digits = false;
    while (digit_at(pos_)) advance(), digits = true;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      advance();
      while (digit_at(pos_)) advance(), digits = true;
    }
    if (!digits) throw parse_error(t.line, t.column, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (!digit_at(look)) throw parse_error(line_, column_, "malformed exponent");
      while (pos_ < look) advance();
      while (digit_at(pos_)) advance();
    }
    const std::string_view text = src_.substr(start, pos_ - start);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), t.number);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw parse_error(t.line, t.column, "number '" + std::string(text) + "' is out of range");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, NetworkBuilder& b) : toks_(std::move(tokens)), b_(b) {}

  NodeHandle parse_network() {
    const NodeHandle root = sumexpr();
    expect(Tok::end, "'+' or end of input");
    return root;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  bool at(Tok k) const { return peek().kind == k; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw parse_error(t.line, t.column, msg); }

  const Token& expect(Tok k, const char* what = nullptr) {
    const Token& t = peek();
    if (t.kind != k) {
      std::string found = describe(t.kind);
      if (t.kind != Tok::end) found += " '" + std::string(t.text) + "'";
      fail(t, std::string("expected ") + (what ? what : describe(k)) + ", found " + found);
    }
    ++pos_;
    return t;
  }

  NodeHandle sumexpr() {
    const Token& start = peek();
    std::vector<NodeHandle> kids;
    std::vector<double> weights;
    do {
      const Token& w = expect(Tok::number);
      if (!(w.number >= 0.0)) fail(w, "sum weight must be nonnegative");
      expect(Tok::star);
      weights.push_back(w.number);
      kids.push_back(prodexpr());
    } while (at(Tok::plus) && (++pos_, true));

    double total = 0.0;
    for (double w : weights) total += w;
    if (kids.size() == 1) {
      if (!(std::abs(weights[0] - 1.0) <= 1e-6)) fail(start, "a single weighted term must have weight 1, got " + format_real(weights[0]));
      return kids[0];
    }
    if (!(std::abs(total - 1.0) <= 1e-6)) fail(start, "sum weights add up to " + format_real(total) + ", expected 1");
    return b_.make_sum(kids, weights);
  }

  NodeHandle prodexpr() {
    std::vector<NodeHandle> atoms{atom()};
    while (at(Tok::star)) {
      ++pos_;
      atoms.push_back(atom());
    }
    return atoms.size() == 1 ? atoms[0] : b_.make_product(atoms);
  }

  NodeHandle atom() {
    if (at(Tok::lparen)) {
      ++pos_;
      const NodeHandle inner = sumexpr();
      expect(Tok::rparen, "'+' or ')'");
      return inner;
    }
    if (at(Tok::ident)) return leaf();
    expect(Tok::ident, "leaf or '('");
    return {};
  }

  struct Arg {
    const Token* name;
    std::vector<double> values;
    bool is_list;
  };

  NodeHandle leaf() {
    const Token& name = expect(Tok::ident);
    const auto family = b_.registry().find(name.text);
    if (!family) fail(name, "unknown leaf family '" + std::string(name.text) + "'");
    expect(Tok::lparen);
    std::vector<Arg> args;
    do {
      const Token& arg_name = expect(Tok::ident, "argument name");
      expect(Tok::equals);
      Arg a{&arg_name, {}, false};
      if (at(Tok::lbracket)) {
        ++pos_;
        a.is_list = true;
        a.values.push_back(expect(Tok::number).number);
        while (at(Tok::comma)) {
          ++pos_;
          a.values.push_back(expect(Tok::number).number);
        }
        expect(Tok::rbracket, "',' or ']'");
      } else {
        a.values.push_back(expect(Tok::number, "NUMBER or '['").number);
      }
      for (const auto& prev : args)
        if (prev.name->text == arg_name.text) fail(arg_name, "duplicate argument '" + std::string(arg_name.text) + "'");
      args.push_back(std::move(a));
    } while (at(Tok::comma) && (++pos_, true));
    expect(Tok::rparen, "',' or ')'");

    std::optional<std::size_t> scope;
    std::vector<double> params;
    std::vector<bool> used(args.size(), false);
    const auto find_arg = [&](std::string_view n) -> const Arg* {
      for (std::size_t i = 0; i < args.size(); ++i)
        if (args[i].name->text == n) {
          used[i] = true;
          return &args[i];
        }
      return nullptr;
    };
    if (const Arg* s = find_arg("scope")) {
      const double v = s->values[0];
      if (s->is_list || !(v >= 0.0 && v == std::floor(v)))
        fail(*s->name, "scope must be a nonnegative integer");
      scope = static_cast<std::size_t>(v);
    } else {
      fail(name, "leaf " + family->name + " is missing the 'scope' argument");
    }
    for (const auto& spec : family->schema) {
      const Arg* a = find_arg(spec.name);
      if (!a) fail(name, "leaf " + family->name + " is missing the '" + spec.name + "' argument");
      if (a->is_list != spec.is_vector)
        fail(*a->name, "argument '" + spec.name + "' expects " + (spec.is_vector ? "a list" : "a number"));
      params.insert(params.end(), a->values.begin(), a->values.end());
    }
    for (std::size_t i = 0; i < args.size(); ++i)
      if (!used[i]) fail(*args[i].name, "unknown argument '" + std::string(args[i].name->text) + "' for " + family->name);

    try {
      return b_.make_leaf(family, std::move(params), *scope);
    } catch (const construction_error& e) {
      fail(name, e.what());
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  NetworkBuilder& b_;
};

inline std::string leaf_text(const LeafNode& leaf) {
  std::string s = leaf.family->name + "(";
  const auto parts = leaf.family->split(leaf.params);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    s += leaf.family->schema[i].name + "=";
    if (leaf.family->schema[i].is_vector) {
      s += "[";
      for (std::size_t j = 0; j < parts[i].size(); ++j) s += (j ? ", " : "") + format_real(parts[i][j]);
      s += "]";
    } else {
      s += format_real(parts[i][0]);
    }
    s += ", ";
  }
  return s + "scope=" + std::to_string(leaf.scope_var) + ")";
}

class Printer {
 public:
  explicit Printer(const Network& net) : net_(net) {}

  std::string network() {
    const Node& root = net_.node(net_.root());
    if (const auto* s = std::get_if<SumNode>(&root)) return sum_body(*s);
    return "1.0 * " + term(net_.root());
  }

 private:
  std::string sum_body(const SumNode& s) {
    std::string out;
    for (std::size_t k = 0; k < s.children.size(); ++k) {
      if (k) out += " + ";
      out += format_real(s.weights[k]) + " * " + term(s.children[k]);
    }
    return out;
  }

  // A prodexpr: products print their atoms, anything else is a single atom.
  std::string term(NodeId id) {
    if (const auto* p = std::get_if<ProductNode>(&net_.node(id))) {
      std::string out;
      for (std::size_t k = 0; k < p->children.size(); ++k) out += (k ? " * " : "") + atom(p->children[k]);
      return out;
    }
    return atom(id);
  }

  std::string atom(NodeId id) {
    const Node& node = net_.node(id);
    if (const auto* leaf = std::get_if<LeafNode>(&node)) return leaf_text(*leaf);
    if (const auto* s = std::get_if<SumNode>(&node)) return "(" + sum_body(*s) + ")";
    return "(1.0 * " + term(id) + ")";
  }

  const Network& net_;
};

}  // namespace dsl_detail

/// Parses DSL text into a finalized network.
inline Network parse_dsl(std::string_view text, const LeafRegistry& registry = default_registry()) {
  NetworkBuilder b(registry);
  dsl_detail::Parser parser(dsl_detail::Lexer(text).run(), b);
  const NodeHandle root = parser.parse_network();
  return b.finalize(root);
}

/// Canonical DSL text: children in stored (id) order, every number with 17
/// significant digits, nested sums parenthesized. Shared sub-networks are
/// written out once per reference.
inline std::string print_dsl(const Network& net) { return dsl_detail::Printer(net).network() + "\n"; }

}  // namespace spn
