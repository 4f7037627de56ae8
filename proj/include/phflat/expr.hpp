#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "phflat/errors.hpp"
#include "phflat/interval.hpp"
#include "phflat/scalar.hpp"
#include "phflat/series.hpp"

namespace phflat {

// How an expression tree evaluates over a value type T: conversion of exact
// literals plus the transcendental vocabulary.
template <class T>
struct ExprTraits;

template <>
struct ExprTraits<double> {
  static double literal(const Rational& q) { return q.get_d(); }
  static double exp(double v) { return std::exp(v); }
  static double sin(double v) { return std::sin(v); }
  static double cos(double v) { return std::cos(v); }
  static double log(double v) { return std::log(v); }
  static double real_power(double b, double p) { return std::pow(b, p); }
};

template <>
struct ExprTraits<Rational> {
  static Rational literal(const Rational& q) { return q; }
  [[noreturn]] static Rational unsupported(const char* fn) {
    throw UnsupportedError(std::string("expression: ") + fn + " has no exact rational value");
  }
  static Rational exp(const Rational&) { unsupported("exp"); }
  static Rational sin(const Rational&) { unsupported("sin"); }
  static Rational cos(const Rational&) { unsupported("cos"); }
  static Rational log(const Rational&) { unsupported("log"); }
  static Rational real_power(const Rational&, const Rational&) { unsupported("a non-integer power"); }
};

template <>
struct ExprTraits<Interval> {
  static Interval literal(const Rational& q) { return enclose(q); }
  static Interval exp(const Interval& v) { return boost::numeric::exp(v); }
  static Interval sin(const Interval& v) { return boost::numeric::sin(v); }
  static Interval cos(const Interval& v) { return boost::numeric::cos(v); }
  static Interval log(const Interval& v) { return boost::numeric::log(v); }
  static Interval real_power(const Interval& b, const Interval& p) { return boost::numeric::exp(boost::numeric::log(b) * p); }
};

// Series over a scalar: Taylor-mode propagation of the same vocabulary.
template <class S>
struct ExprTraits<Series<S>> {
  // The order is taken from the argument; literals are promoted lazily.
  static S literal_scalar(const Rational& q) { return ExprTraits<S>::literal(q); }
  static Series<S> exp(const Series<S>& v) {
    if constexpr (std::is_same_v<S, Rational>) {
      ExprTraits<Rational>::unsupported("exp");
    } else {
      return phflat::exp(v);
    }
  }
  static Series<S> sin(const Series<S>& v) {
    if constexpr (std::is_same_v<S, Rational>) {
      ExprTraits<Rational>::unsupported("sin");
    } else {
      return phflat::sin(v);
    }
  }
  static Series<S> cos(const Series<S>& v) {
    if constexpr (std::is_same_v<S, Rational>) {
      ExprTraits<Rational>::unsupported("cos");
    } else {
      return phflat::cos(v);
    }
  }
  static Series<S> log(const Series<S>& v) {
    if constexpr (std::is_same_v<S, Rational>) {
      ExprTraits<Rational>::unsupported("log");
    } else {
      return phflat::log(v);
    }
  }
  static Series<S> real_power(const Series<S>& b, const S& p) {
    if constexpr (std::is_same_v<S, Rational>) {
      ExprTraits<Rational>::unsupported("a non-integer power");
    } else {
      return phflat::pow(b, p);
    }
  }
};

// Expression over one variable and named exact constants, parsed from text:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('-'|'+') unary | power
//   power  := atom ('^' unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
// Functions: exp, sin, cos, log. Numbers are exact rationals ("0.99" = 99/100).
// Powers with a constant integer exponent are exact; other constant exponents
// go through exp/log.
class Expr {
 public:
  enum class Kind { Constant, Variable, Add, Sub, Mul, Div, Neg, Pow, Call };

  Expr() = default;

  static Expr parse(const std::string& text, const std::string& variable = "x",
                    const std::map<std::string, Rational>& constants = {}) {
    Parser p{text, 0, variable, constants};
    Expr e;
    e.root_ = p.parse_expr();
    p.skip_space();
    if (p.pos != text.size()) throw ParseError("expression: unexpected '" + text.substr(p.pos) + "' in '" + text + "'");
    e.text_ = text;
    return e;
  }

  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

  // Evaluates at a value of type T (double, Rational, Interval, Series<...>).
  template <class T>
  T eval(const T& x) const {
    if (!root_) throw ArgumentError("expression: empty");
    return eval_node<T>(*root_, x);
  }

 private:
  struct Node {
    Kind kind = Kind::Constant;
    Rational value = 0;       // Constant
    std::string function;     // Call
    std::unique_ptr<Node> a, b;
  };

  struct Parser {
    const std::string& s;
    std::size_t pos;
    const std::string& variable;
    const std::map<std::string, Rational>& constants;

    void skip_space() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_space();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    static std::unique_ptr<Node> make(Kind k, std::unique_ptr<Node> a = nullptr, std::unique_ptr<Node> b = nullptr) {
      auto n = std::make_unique<Node>();
      n->kind = k;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }
    std::unique_ptr<Node> parse_expr() {
      auto left = parse_term();
      for (;;) {
        if (accept('+')) {
          left = make(Kind::Add, std::move(left), parse_term());
        } else if (accept('-')) {
          left = make(Kind::Sub, std::move(left), parse_term());
        } else {
          return left;
        }
      }
    }
    std::unique_ptr<Node> parse_term() {
      auto left = parse_unary();
      for (;;) {
        if (accept('*')) {
          left = make(Kind::Mul, std::move(left), parse_unary());
        } else if (accept('/')) {
          left = make(Kind::Div, std::move(left), parse_unary());
        } else {
          return left;
        }
      }
    }
    std::unique_ptr<Node> parse_unary() {
      if (accept('-')) return make(Kind::Neg, parse_unary());
      if (accept('+')) return parse_unary();
      return parse_power();
    }
    std::unique_ptr<Node> parse_power() {
      auto base = parse_atom();
      if (accept('^')) {
        auto exponent = parse_unary();
        if (!is_constant(*exponent)) throw ParseError("expression: exponents must be constant in '" + s + "'");
        return make(Kind::Pow, std::move(base), std::move(exponent));
      }
      return base;
    }
    std::unique_ptr<Node> parse_atom() {
      skip_space();
      if (pos >= s.size()) throw ParseError("expression: unexpected end of '" + s + "'");
      char c = s[pos];
      if (accept('(')) {
        auto inner = parse_expr();
        if (!accept(')')) throw ParseError("expression: missing ')' in '" + s + "'");
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t start = pos;
        while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) ++pos;
        if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
          std::size_t save = pos;
          ++pos;
          if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) ++pos;
          if (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
          } else {
            pos = save;
          }
        }
        auto n = make(Kind::Constant);
        n->value = parse_rational(s.substr(start, pos - start));
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
        std::string name = s.substr(start, pos - start);
        if (accept('(')) {
          if (name != "exp" && name != "sin" && name != "cos" && name != "log") {
            throw ParseError("expression: unknown function '" + name + "'");
          }
          auto arg = parse_expr();
          if (!accept(')')) throw ParseError("expression: missing ')' after " + name + "(...)");
          auto n = make(Kind::Call, std::move(arg));
          n->function = name;
          return n;
        }
        if (name == variable) return make(Kind::Variable);
        auto it = constants.find(name);
        if (it == constants.end()) throw ParseError("expression: unknown name '" + name + "'");
        auto n = make(Kind::Constant);
        n->value = it->second;
        return n;
      }
      throw ParseError(std::string("expression: unexpected character '") + c + "' in '" + s + "'");
    }
  };

  static bool is_constant(const Node& n) {
    switch (n.kind) {
      case Kind::Constant:
        return true;
      case Kind::Variable:
      case Kind::Call:
        return false;
      case Kind::Neg:
        return is_constant(*n.a);
      default:
        return is_constant(*n.a) && is_constant(*n.b);
    }
  }

  // Exact value of a constant subtree (used for exponents).
  static Rational constant_value(const Node& n) {
    switch (n.kind) {
      case Kind::Constant:
        return n.value;
      case Kind::Neg:
        return -constant_value(*n.a);
      case Kind::Add:
        return constant_value(*n.a) + constant_value(*n.b);
      case Kind::Sub:
        return constant_value(*n.a) - constant_value(*n.b);
      case Kind::Mul:
        return constant_value(*n.a) * constant_value(*n.b);
      case Kind::Div: {
        Rational d = constant_value(*n.b);
        if (sgn(d) == 0) throw ArgumentError("expression: division by zero in an exponent");
        return constant_value(*n.a) / d;
      }
      case Kind::Pow: {
        Rational e = constant_value(*n.b);
        if (e.get_den() != 1 || !e.get_num().fits_slong_p()) throw ArgumentError("expression: nested non-integer exponent");
        Rational base = constant_value(*n.a);
        long k = e.get_num().get_si();
        Rational out = 1;
        for (long i = 0; i < std::labs(k); ++i) out *= base;
        return k < 0 ? Rational(1 / out) : out;
      }
      default:
        throw ArgumentError("expression: not a constant");
    }
  }

  template <class T>
  static T literal(const Rational& q, const T& like) {
    if constexpr (requires { ExprTraits<T>::literal_scalar(q); }) {
      return T::constant(ExprTraits<T>::literal_scalar(q), like.order());
    } else {
      (void)like;
      return ExprTraits<T>::literal(q);
    }
  }

  template <class T>
  static T integer_power(const T& base, long k) {
    if constexpr (requires { base.order(); }) {
      return phflat::pow(base, k);
    } else if constexpr (std::is_same_v<T, Interval>) {
      return k >= 0 ? boost::numeric::pow(base, static_cast<int>(k)) : Interval(1.0) / boost::numeric::pow(base, static_cast<int>(-k));
    } else {
      T result(1), b = base;
      long n = std::labs(k);
      while (n > 0) {
        if (n & 1) result = result * b;
        n >>= 1;
        if (n > 0) b = b * b;
      }
      return k < 0 ? T(T(1) / result) : result;
    }
  }

  template <class T>
  static T eval_node(const Node& n, const T& x) {
    switch (n.kind) {
      case Kind::Constant:
        return literal<T>(n.value, x);
      case Kind::Variable:
        return x;
      case Kind::Add:
        return T(eval_node<T>(*n.a, x) + eval_node<T>(*n.b, x));
      case Kind::Sub:
        return T(eval_node<T>(*n.a, x) - eval_node<T>(*n.b, x));
      case Kind::Mul:
        return T(eval_node<T>(*n.a, x) * eval_node<T>(*n.b, x));
      case Kind::Div:
        return T(eval_node<T>(*n.a, x) / eval_node<T>(*n.b, x));
      case Kind::Neg:
        return T(-eval_node<T>(*n.a, x));
      case Kind::Pow: {
        const Rational e = constant_value(*n.b);
        const T base = eval_node<T>(*n.a, x);
        if (e.get_den() == 1 && e.get_num().fits_slong_p()) return integer_power(base, e.get_num().get_si());
        if constexpr (requires { ExprTraits<T>::literal_scalar(e); }) {
          return ExprTraits<T>::real_power(base, ExprTraits<T>::literal_scalar(e));
        } else {
          return ExprTraits<T>::real_power(base, ExprTraits<T>::literal(e));
        }
      }
      case Kind::Call: {
        const T a = eval_node<T>(*n.a, x);
        if (n.function == "exp") return ExprTraits<T>::exp(a);
        if (n.function == "sin") return ExprTraits<T>::sin(a);
        if (n.function == "cos") return ExprTraits<T>::cos(a);
        return ExprTraits<T>::log(a);
      }
    }
    throw ArgumentError("expression: corrupt node");
  }

  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace phflat
