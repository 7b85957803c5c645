/* Copyright 2026 The pqos Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cctype>
#include <cstddef>
#include <cstdlib>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pqos/error.hpp"
#include "pqos/formula.hpp"
#include "pqos/geometry.hpp"
#include "pqos/profiles.hpp"

namespace pqos {

namespace detail {

enum class Tok {
  end, ident, number, lparen, rparen, lbracket, rbracket, comma, semicolon,
  star, plus, minus, le, ge, and_, or_, not_, implies, iff
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.offset = pos_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
          ++end;
        }
        t.kind = Tok::ident;
        t.text = std::string(text_.substr(pos_, end - pos_));
        pos_ = end;
      } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        lex_number(t);
      } else {
        lex_symbol(t);
      }
      out.push_back(std::move(t));
    }
  }

  template <class E = ParseError>
  [[noreturn]] static void fail(std::string_view text, std::size_t offset, const std::string& msg) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw E(msg, offset, line, column);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  void lex_number(Token& t) {
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    t.number = std::strtod(rest.c_str(), &end);
    const auto len = static_cast<std::size_t>(end - rest.c_str());
    if (len == 0) fail(text_, pos_, "malformed number");
    t.kind = Tok::number;
    t.text = rest.substr(0, len);
    pos_ += len;
  }

  void lex_symbol(Token& t) {
    auto starts = [&](std::string_view s) { return text_.substr(pos_, s.size()) == s; };
    static constexpr std::pair<std::string_view, Tok> symbols[] = {
        {"<->", Tok::iff}, {"->", Tok::implies}, {"<=", Tok::le}, {">=", Tok::ge},
        {"&&", Tok::and_}, {"||", Tok::or_},     {"!", Tok::not_}, {"(", Tok::lparen},
        {")", Tok::rparen}, {"[", Tok::lbracket}, {"]", Tok::rbracket}, {",", Tok::comma},
        {";", Tok::semicolon}, {"*", Tok::star}, {"+", Tok::plus},   {"-", Tok::minus}};
    for (const auto& [text, kind] : symbols) {
      if (starts(text)) {
        t.kind = kind;
        t.text = std::string(text);
        pos_ += text.size();
        return;
      }
    }
    fail(text_, pos_, std::string("unexpected character '") + text_[pos_] + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view text, const AttributeSchema& schema)
      : text_(text), schema_(schema), tokens_(Lexer(text).run()) {}

  QoSRequirement requirement() {
    QoSRequirement req;
    req.schema = schema_;
    req.source = std::string(text_);
    if (peek().kind == Tok::ident && peek().text == "vars") {
      next();
      declared_ = true;
      while (peek().kind == Tok::ident) {
        const Token& t = next();
        if (is_reserved(t.text)) fail(t, "reserved word '" + t.text + "' cannot be a variable");
        if (!declared_vars_.insert(t.text).second) fail(t, "variable '" + t.text + "' declared twice");
        req.variables.push_back(t.text);
      }
      if (req.variables.empty()) fail(peek(), "expected at least one variable name after 'vars'");
      expect(Tok::semicolon, "';' after variable declarations");
    }
    req.formula = iff();
    if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "'");
    if (!declared_) req.variables = collect_variables(*req.formula);
    return req;
  }

  HPolytope region_only() {
    const std::size_t start = peek().offset;
    const RegionRows rows = region_rows();
    if (peek().kind != Tok::end) fail(peek(), "unexpected '" + peek().text + "'");
    return build_region(rows, start);
  }

 private:
  static bool is_reserved(const std::string& s) {
    return s == "true" || s == "false" || s == "vars" || s == "in" || s == "_";
  }

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() { return tokens_[std::min(pos_++, tokens_.size() - 1)]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    Lexer::fail(text_, t.offset, msg);
  }

  const Token& expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      fail(peek(), std::string("expected ") + what +
                       (peek().kind == Tok::end ? " before end of input" : ", found '" + peek().text + "'"));
    }
    return next();
  }

  // iff := imp ("<->" imp)*
  FormulaPtr iff() {
    FormulaPtr lhs = imp();
    while (peek().kind == Tok::iff) {
      next();
      lhs = Formula::equivalence(lhs, imp());
    }
    return lhs;
  }

  // imp := or ("->" imp)?
  FormulaPtr imp() {
    FormulaPtr lhs = disj();
    if (peek().kind == Tok::implies) {
      next();
      return Formula::implication(lhs, imp());
    }
    return lhs;
  }

  FormulaPtr disj() {
    FormulaPtr lhs = conj();
    while (peek().kind == Tok::or_) {
      next();
      lhs = Formula::disjunction(lhs, conj());
    }
    return lhs;
  }

  FormulaPtr conj() {
    FormulaPtr lhs = unary();
    while (peek().kind == Tok::and_) {
      next();
      lhs = Formula::conjunction(lhs, unary());
    }
    return lhs;
  }

  FormulaPtr unary() {
    if (peek().kind == Tok::not_) {
      next();
      return Formula::negation(unary());
    }
    return atom();
  }

  FormulaPtr atom() {
    const Token& t = peek();
    if (t.kind == Tok::lparen) {
      next();
      FormulaPtr inner = iff();
      expect(Tok::rparen, "')'");
      return inner;
    }
    if (t.kind != Tok::ident) fail(t, t.kind == Tok::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
    if (t.text == "P" && peek(1).kind == Tok::lbracket) return constraint();
    next();
    if (t.text == "true") return Formula::top();
    if (t.text == "false") return Formula::bottom();
    if (is_reserved(t.text)) fail(t, "unexpected '" + t.text + "'");
    if (declared_ && !declared_vars_.count(t.text)) {
      fail(t, "undeclared propositional variable '" + t.text + "'");
    }
    if (schema_.index_of(t.text) < schema_.size()) {
      fail(t, "'" + t.text + "' is an attribute, not a propositional variable");
    }
    return Formula::variable(t.text);
  }

  // constraint := "P" "[" region "]" "in" "[" bound "," bound "]"
  FormulaPtr constraint() {
    const std::size_t start = next().offset;
    expect(Tok::lbracket, "'['");
    const RegionRows rows = region_rows();
    expect(Tok::rbracket, "']' closing the region");
    const Token& in = peek();
    if (in.kind != Tok::ident || in.text != "in") fail(in, "expected 'in' after region");
    next();
    expect(Tok::lbracket, "'[' opening the probability bounds");
    const Token& lo_tok = peek();
    const double lo = bound(0.0);
    expect(Tok::comma, "','");
    const double hi = bound(1.0);
    const Token& close = expect(Tok::rbracket, "']' closing the probability bounds");
    if (lo > hi) fail(lo_tok, "p_min exceeds p_max");
    const std::string label(text_.substr(start, close.offset + 1 - start));
    return Formula::constraint(QoSConstraint(build_region(rows, start), lo, hi, label));
  }

  double bound(double placeholder) {
    const Token& t = peek();
    if (t.kind == Tok::ident && t.text == "_") {
      next();
      return placeholder;
    }
    const double v = expect(Tok::number, "a probability bound or '_'").number;
    if (!(v >= 0.0 && v <= 1.0)) fail(t, "probability bound outside [0, 1]");
    return v;
  }

  struct RegionRows {
    std::vector<Vector> rows;
    std::vector<double> bounds;
  };

  // region := lin ("&&" lin)*
  RegionRows region_rows() {
    RegionRows r;
    linear(r.rows, r.bounds);
    while (peek().kind == Tok::and_) {
      next();
      linear(r.rows, r.bounds);
    }
    return r;
  }

  HPolytope build_region(const RegionRows& r, std::size_t start) const {
    const auto n = static_cast<Eigen::Index>(schema_.size());
    Matrix a(static_cast<Eigen::Index>(r.rows.size()), n);
    Vector b(static_cast<Eigen::Index>(r.rows.size()));
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) = r.rows[i].transpose();
      b(static_cast<Eigen::Index>(i)) = r.bounds[i];
    }
    try {
      return HPolytope(std::move(a), std::move(b), schema_.names());
    } catch (const UnboundedError& e) {
      throw UnboundedError(location(start) + "region is not bounded: " + e.what());
    } catch (const InfeasibleError&) {
      Lexer::fail(text_, start, "region is empty");
    }
  }

  std::string location(std::size_t offset) const {
    try {
      Lexer::fail(text_, offset, "");
    } catch (const ParseError& e) {
      return std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": ";
    }
  }

  // lin := affine cmp affine, stored as row . x <= bound
  void linear(std::vector<Vector>& rows, std::vector<double>& bounds) {
    const Token& first = peek();
    Vector lhs = Vector::Zero(static_cast<Eigen::Index>(schema_.size()));
    double lhs_const = 0.0;
    affine(lhs, lhs_const);
    const Token& cmp = next();
    if (cmp.kind != Tok::le && cmp.kind != Tok::ge) fail(cmp, "expected '<=' or '>='");
    Vector rhs = Vector::Zero(lhs.size());
    double rhs_const = 0.0;
    affine(rhs, rhs_const);
    Vector row = lhs - rhs;
    double bound = rhs_const - lhs_const;
    if (cmp.kind == Tok::ge) {
      row = -row;
      bound = -bound;
    }
    if ((row.array() == 0.0).all()) fail(first, "inequality does not involve any attribute");
    rows.push_back(std::move(row));
    bounds.push_back(bound);
  }

  // affine := ["-"] term (("+"|"-") term)*
  void affine(Vector& coef, double& constant) {
    double sign = 1.0;
    if (peek().kind == Tok::minus) {
      next();
      sign = -1.0;
    }
    term(sign, coef, constant);
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      sign = next().kind == Tok::plus ? 1.0 : -1.0;
      term(sign, coef, constant);
    }
  }

  // term := number | number "*" ident | ident
  void term(double sign, Vector& coef, double& constant) {
    const Token& t = peek();
    if (t.kind == Tok::number) {
      next();
      if (peek().kind == Tok::star) {
        next();
        coef(attribute(expect(Tok::ident, "an attribute name after '*'"))) += sign * t.number;
      } else {
        constant += sign * t.number;
      }
      return;
    }
    if (t.kind == Tok::ident) {
      next();
      coef(attribute(t)) += sign;
      return;
    }
    fail(t, t.kind == Tok::end ? "unexpected end of input in linear expression"
                               : "unexpected '" + t.text + "' in linear expression");
  }

  Eigen::Index attribute(const Token& t) const {
    const std::size_t idx = schema_.index_of(t.text);
    if (idx == schema_.size()) {
      Lexer::fail<UnknownAttributeError>(text_, t.offset, "unknown attribute '" + t.text + "'");
    }
    return static_cast<Eigen::Index>(idx);
  }

  std::string_view text_;
  const AttributeSchema& schema_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  bool declared_ = false;
  std::set<std::string> declared_vars_;
};

}  // namespace detail

/// Parses the requirement language:
///
///   requirement := [ "vars" ident+ ";" ] expr
///   constraint  := "P[" lin ("&&" lin)* "]" "in" "[" bound "," bound "]"
///   lin         := affine ("<=" | ">=") affine
///   bound       := number | "_"
///
/// with connectives `!`, `&&`, `||`, `->` (right-associative) and `<->`,
/// in decreasing precedence. Sugar is expanded into negation and disjunction.
/// Without a `vars` declaration the variable set is every identifier used.
inline QoSRequirement parse_requirement(std::string_view text, const AttributeSchema& schema) {
  return detail::Parser(text, schema).requirement();
}

/// Parses a bare region such as `60 <= TP && TP <= 100 && RT <= 300`.
inline HPolytope parse_region(std::string_view text, const AttributeSchema& schema) {
  return detail::Parser(text, schema).region_only();
}

}  // namespace pqos
