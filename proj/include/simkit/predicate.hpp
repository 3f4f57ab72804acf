#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "simkit/errors.hpp"
#include "simkit/format.hpp"
#include "simkit/param_value.hpp"

namespace simkit {

enum class CmpOp { kEq, kNe, kLt, kLe, kGt, kGe };

/// Boolean expression over scalar model parameters, e.g. `k == 20 | k == 80`
/// or `k > 30 & k <= 60`. Built programmatically or parsed from a CLI string.
class Predicate {
 public:
  /// Matches every model.
  Predicate() : node_(nullptr) {}

  static Predicate compare(std::string param, CmpOp op, ParamValue literal) {
    Predicate p;
    p.node_ = std::make_shared<Node>();
    p.node_->kind = Node::kCmp;
    p.node_->param = std::move(param);
    p.node_->op = op;
    p.node_->literal = std::move(literal);
    return p;
  }

  friend Predicate operator&&(const Predicate& a, const Predicate& b) {
    return Predicate::combine(Node::kAnd, a, b);
  }
  friend Predicate operator||(const Predicate& a, const Predicate& b) {
    return Predicate::combine(Node::kOr, a, b);
  }

  bool always_true() const { return node_ == nullptr; }

  /// Evaluates against a model's scalar parameters. Referencing a parameter
  /// the model does not have (or a non-scalar one) is an error rather than a
  /// silent non-match.
  bool matches(const ParamMap& scalars) const {
    if (!node_) return true;
    return eval(*node_, scalars);
  }

  /// Parses the CLI predicate grammar: comparisons `name OP literal` with
  /// OP in {==, !=, <, <=, >, >=}, combined with '&' and '|' (or '&&'/'||')
  /// and parentheses. Literals: numbers, true/false, quoted or bare strings.
  static Predicate parse(std::string_view text);

 private:
  struct Node {
    enum Kind { kCmp, kAnd, kOr } kind = kCmp;
    std::string param;
    CmpOp op = CmpOp::kEq;
    ParamValue literal;
    std::shared_ptr<Node> lhs, rhs;
  };

  static Predicate combine(Node::Kind kind, const Predicate& a, const Predicate& b) {
    if (!a.node_) return b;
    if (!b.node_) return a;
    Predicate p;
    p.node_ = std::make_shared<Node>();
    p.node_->kind = kind;
    p.node_->lhs = a.node_;
    p.node_->rhs = b.node_;
    return p;
  }

  static bool eval(const Node& n, const ParamMap& scalars) {
    switch (n.kind) {
      case Node::kAnd:
        return eval(*n.lhs, scalars) && eval(*n.rhs, scalars);
      case Node::kOr:
        return eval(*n.lhs, scalars) || eval(*n.rhs, scalars);
      case Node::kCmp:
        break;
    }
    const ParamValue* v = scalars.find(n.param);
    if (!v)
      throw ContractError("predicate references \"" + n.param +
                          "\", which is not a scalar parameter of this model");
    if (v->is_numeric_scalar() && n.literal.is_numeric_scalar()) {
      double a = v->as_double(), b = n.literal.as_double();
      switch (n.op) {
        case CmpOp::kEq: return a == b;
        case CmpOp::kNe: return a != b;
        case CmpOp::kLt: return a < b;
        case CmpOp::kLe: return a <= b;
        case CmpOp::kGt: return a > b;
        case CmpOp::kGe: return a >= b;
      }
    }
    if (v->is_bool() && n.literal.is_bool()) {
      bool a = v->boolean(), b = n.literal.boolean();
      if (n.op == CmpOp::kEq) return a == b;
      if (n.op == CmpOp::kNe) return a != b;
      throw ContractError("only == and != are defined for boolean parameter \"" + n.param + "\"");
    }
    if (v->is_string() && n.literal.is_string()) {
      int c = v->string().compare(n.literal.string());
      switch (n.op) {
        case CmpOp::kEq: return c == 0;
        case CmpOp::kNe: return c != 0;
        default:
          throw ContractError("only == and != are defined for string parameter \"" + n.param +
                              "\"");
      }
    }
    throw ContractError("predicate on \"" + n.param + "\" compares a " + v->type_name() +
                        " with a " + n.literal.type_name());
  }

  std::shared_ptr<Node> node_;
};

namespace detail {

class PredicateParser {
 public:
  explicit PredicateParser(std::string_view text) : text_(text) {}

  Predicate parse() {
    Predicate p = or_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected trailing input in predicate at \"" +
                       std::string(text_.substr(pos_)) + "\"");
    return p;
  }

 private:
  Predicate or_expr() {
    Predicate p = and_expr();
    while (true) {
      skip_ws();
      if (accept("||") || accept("|")) {
        p = p || and_expr();
      } else {
        return p;
      }
    }
  }

  Predicate and_expr() {
    Predicate p = atom();
    while (true) {
      skip_ws();
      if (accept("&&") || accept("&")) {
        p = p && atom();
      } else {
        return p;
      }
    }
  }

  Predicate atom() {
    skip_ws();
    if (accept("(")) {
      Predicate p = or_expr();
      skip_ws();
      if (!accept(")")) throw ParseError("missing ')' in predicate");
      return p;
    }
    std::string param = ident();
    skip_ws();
    CmpOp op;
    if (accept("==")) op = CmpOp::kEq;
    else if (accept("!=")) op = CmpOp::kNe;
    else if (accept("<=")) op = CmpOp::kLe;
    else if (accept(">=")) op = CmpOp::kGe;
    else if (accept("<")) op = CmpOp::kLt;
    else if (accept(">")) op = CmpOp::kGt;
    else throw ParseError("expected comparison operator after \"" + param + "\"");
    skip_ws();
    return Predicate::compare(std::move(param), op, literal());
  }

  ParamValue literal() {
    if (pos_ >= text_.size()) throw ParseError("predicate ends where a literal was expected");
    char c = text_[pos_];
    if (c == '"' || c == '\'') {
      char quote = c;
      ++pos_;
      std::string s;
      while (pos_ < text_.size() && text_[pos_] != quote) s.push_back(text_[pos_++]);
      if (pos_ >= text_.size()) throw ParseError("unterminated string literal in predicate");
      ++pos_;
      return ParamValue(std::move(s));
    }
    if (c == '-' || c == '+' || (c >= '0' && c <= '9') || c == '.') {
      std::size_t start = pos_;
      if (c == '-' || c == '+') ++pos_;
      while (pos_ < text_.size() &&
             ((text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '.' ||
              text_[pos_] == 'e' || text_[pos_] == 'E' ||
              ((text_[pos_] == '-' || text_[pos_] == '+') &&
               (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
        ++pos_;
      return ParamValue(string_to_double(text_.substr(start, pos_ - start)));
    }
    std::string word = ident();
    if (word == "true") return ParamValue(true);
    if (word == "false") return ParamValue(false);
    return ParamValue(std::move(word));  // bare string literal
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
          c == '_' || c == '.' || c == '-' || c == '/')
        ++pos_;
      else
        break;
    }
    if (pos_ == start) throw ParseError("expected identifier in predicate at position " +
                                        std::to_string(pos_));
    return std::string(text_.substr(start, pos_ - start));
  }

  bool accept(std::string_view tok) {
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Predicate Predicate::parse(std::string_view text) {
  return detail::PredicateParser(text).parse();
}

}  // namespace simkit
