#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "diracvac/errors.hpp"
#include "diracvac/model.hpp"
#include "diracvac/quadrature.hpp"

namespace diracvac {

enum class Parity { odd, even, mixed };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::odd: return "odd";
    case Parity::even: return "even";
    default: return "mixed";
  }
}

namespace detail {

template <class Real>
Real ipow(Real x, int p) {
  Real r = 1;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace detail

/// coef * x^power
struct Monomial {
  double coef = 0.0;
  int power = 0;
};

/// amplitude * sin(freq x) or amplitude * cos(freq x)
struct Sinusoid {
  double amplitude = 0.0;
  double freq = 0.0;
  bool sine = true;
};

using PotentialTerm = std::variant<Monomial, Sinusoid>;

/// External perturbation V(x) on the bag interior together with its phase
/// function f (df/dx = V, f(0) = 0).
///
/// Analytic potentials are finite sums of monomials and sinusoids with exact
/// antiderivatives and exact parity. A user-supplied function gets f by
/// panel Gauss-Legendre antidifferentiation on [-a, a] and is tagged mixed.
class Potential {
 public:
  Potential() = default;

  static Potential zero() { return Potential{}; }
  static Potential linear(double lambda) { return from_terms({Monomial{lambda, 1}}); }
  static Potential constant(double c) { return from_terms({Monomial{c, 0}}); }
  /// sum_p coefs[p] x^p
  static Potential polynomial(const std::vector<double>& coefs) {
    std::vector<PotentialTerm> t;
    for (std::size_t p = 0; p < coefs.size(); ++p)
      if (coefs[p] != 0.0) t.push_back(Monomial{coefs[p], static_cast<int>(p)});
    return from_terms(std::move(t));
  }
  static Potential sine(double amplitude, double freq) {
    return from_terms({Sinusoid{amplitude, freq, true}});
  }
  static Potential cosine(double amplitude, double freq) {
    return from_terms({Sinusoid{amplitude, freq, false}});
  }

  static Potential from_terms(std::vector<PotentialTerm> terms) {
    Potential p;
    for (auto& t : terms) {
      const bool zero = std::visit(
          [](const auto& term) {
            if constexpr (std::is_same_v<std::decay_t<decltype(term)>, Monomial>)
              return term.coef == 0.0;
            else
              return term.amplitude == 0.0 || (term.sine && term.freq == 0.0);
          },
          t);
      if (!zero) p.terms_.push_back(t);
    }
    return p;
  }

  /// Arbitrary smooth V on [-a, a]. `panels` fixes the antiderivative table.
  static Potential user(std::function<double(double)> v, const ModelParams& params,
                        int panels = 256) {
    Potential p;
    auto table = std::make_shared<UserTable>();
    table->v = std::move(v);
    table->a = params.half_width();
    table->panels = panels;
    table->width = 2.0 * table->a / panels;
    table->cumulative.assign(panels + 1, 0.0);
    for (int i = 0; i < panels; ++i) {
      const double lo = -table->a + i * table->width;
      table->cumulative[i + 1] =
          table->cumulative[i] + quad::composite(table->v, lo, lo + table->width, 1);
    }
    table->f_at_zero = table->primitive(0.0);
    double sup = 0.0;
    for (int i = 0; i <= 4 * panels; ++i)
      sup = std::max(sup, std::abs(table->v(-table->a + i * table->width / 4.0)));
    table->sup = sup;
    p.user_ = std::move(table);
    return p;
  }

  bool is_user() const noexcept { return static_cast<bool>(user_); }
  const std::vector<PotentialTerm>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return !user_ && terms_.empty(); }

  Potential operator+(const Potential& other) const {
    if (user_ || other.user_)
      throw std::invalid_argument("Potential: cannot add user-supplied potentials");
    auto t = terms_;
    t.insert(t.end(), other.terms_.begin(), other.terms_.end());
    return from_terms(std::move(t));
  }

  Potential scaled(double s) const {
    if (user_) {
      auto v = user_->v;
      return user([v, s](double x) { return s * v(x); }, ModelParams(user_->a),
                  user_->panels);
    }
    auto t = terms_;
    for (auto& term : t)
      std::visit(
          [s](auto& x) {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Monomial>)
              x.coef *= s;
            else
              x.amplitude *= s;
          },
          term);
    return from_terms(std::move(t));
  }

  double operator()(double x) const { return evaluate<double>(x); }
  long double operator()(long double x) const { return evaluate<long double>(x); }

  /// Phase function f(x) with f(0) = 0.
  double phase(double x) const { return antiderivative<double>(x); }
  long double phase(long double x) const { return antiderivative<long double>(x); }

  Parity parity() const {
    if (user_) return Parity::mixed;
    bool odd = false, even = false;
    for (const auto& term : terms_) {
      if (const auto* m = std::get_if<Monomial>(&term)) {
        (m->power % 2 ? odd : even) = true;
      } else {
        const auto& s = std::get<Sinusoid>(term);
        (s.sine ? odd : even) = true;
      }
    }
    if (odd && even) return Parity::mixed;
    return even ? Parity::even : Parity::odd;
  }

  /// (1/2a) * integral of V over [-a, a]; exactly zero for odd potentials.
  double mean(const ModelParams& params) const {
    if (parity() == Parity::odd) return 0.0;
    const double a = params.half_width();
    return (phase(a) - phase(-a)) / (2.0 * a);
  }

  /// Returns (lambda, c) when V(x) = lambda x + c.
  std::optional<std::pair<double, double>> as_affine() const {
    if (user_) return std::nullopt;
    double lambda = 0.0, c = 0.0;
    for (const auto& term : terms_) {
      const auto* m = std::get_if<Monomial>(&term);
      if (!m || m->power > 1) return std::nullopt;
      (m->power == 1 ? lambda : c) += m->coef;
    }
    return std::pair{lambda, c};
  }

  /// Upper bound on the local oscillation rate V contributes to integrands
  /// on [-a, a]: sup|V| plus the largest sinusoid frequency.
  double oscillation_bound(const ModelParams& params) const {
    if (user_) return user_->sup;
    const double a = params.half_width();
    double sup = 0.0, freq = 0.0;
    for (const auto& term : terms_) {
      if (const auto* m = std::get_if<Monomial>(&term)) {
        sup += std::abs(m->coef) * detail::ipow(a, m->power);
      } else {
        const auto& s = std::get<Sinusoid>(term);
        sup += std::abs(s.amplitude);
        freq = std::max(freq, std::abs(s.freq));
      }
    }
    return sup + freq;
  }

  std::string describe() const;

 private:
  struct UserTable {
    std::function<double(double)> v;
    double a = 1.0;
    int panels = 1;
    double width = 1.0;
    double f_at_zero = 0.0;
    double sup = 0.0;
    std::vector<double> cumulative;

    // integral of v from -a to x
    double primitive(double x) const {
      const double s = (x + a) / width;
      int i = static_cast<int>(std::floor(s));
      if (i < 0) i = 0;
      if (i >= panels) i = panels - 1;
      const double lo = -a + i * width;
      if (x == lo) return cumulative[i];
      return cumulative[i] + quad::composite(v, lo, x, 1);
    }
  };

  template <class Real>
  Real evaluate(Real x) const {
    if (user_) return static_cast<Real>(user_->v(static_cast<double>(x)));
    Real v = 0;
    for (const auto& term : terms_) {
      if (const auto* m = std::get_if<Monomial>(&term)) {
        v += m->coef * detail::ipow(x, m->power);
      } else {
        const auto& s = std::get<Sinusoid>(term);
        v += s.amplitude * (s.sine ? std::sin(s.freq * x) : std::cos(s.freq * x));
      }
    }
    return v;
  }

  template <class Real>
  Real antiderivative(Real x) const {
    if (user_)
      return static_cast<Real>(user_->primitive(static_cast<double>(x)) - user_->f_at_zero);
    Real f = 0;
    for (const auto& term : terms_) {
      if (const auto* m = std::get_if<Monomial>(&term)) {
        f += m->coef * detail::ipow(x, m->power + 1) / (m->power + 1);
      } else {
        const auto& s = std::get<Sinusoid>(term);
        const Real w = s.freq;
        if (s.freq == 0.0) {
          f += s.amplitude * x;  // cos(0 x) = 1
        } else if (s.sine) {
          // 1 - cos(w x) = 2 sin^2(w x / 2)
          const Real h = std::sin(w * x / 2);
          f += s.amplitude * 2 * h * h / w;
        } else {
          f += s.amplitude * std::sin(w * x) / w;
        }
      }
    }
    return f;
  }

  std::vector<PotentialTerm> terms_;
  std::shared_ptr<const UserTable> user_;
};

inline std::string Potential::describe() const {
  if (user_) return "user";
  if (terms_.empty()) return "0";
  std::string out;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& term : terms_) {
    if (!out.empty()) out += " + ";
    if (const auto* m = std::get_if<Monomial>(&term)) {
      out += num(m->coef);
      if (m->power >= 1) out += "*x";
      if (m->power >= 2) out += "^" + std::to_string(m->power);
    } else {
      const auto& s = std::get<Sinusoid>(term);
      out += num(s.amplitude) + (s.sine ? "*sin(" : "*cos(") + num(s.freq) + "*x)";
    }
  }
  return out;
}

/// Parses inline potential expressions built from polynomial and sin/cos
/// terms, e.g. "0.5*x^2 - 2*x + 0.3 + 1.5*sin(pi*x/2)". Every term is a
/// product of numeric factors (literals, `pi`, `/` by a literal) with at most
/// one of x^p, sin(w*x) or cos(w*x). Throws ConfigError("potential", ...).
class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : s_(text) {}

  Potential parse() {
    std::vector<PotentialTerm> terms;
    skip();
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') sign = get() == '-' ? -1.0 : 1.0;
    terms.push_back(term(sign));
    while (true) {
      skip();
      if (pos_ >= s_.size()) break;
      const char op = get();
      if (op != '+' && op != '-') fail("expected '+' or '-'");
      terms.push_back(term(op == '-' ? -1.0 : 1.0));
    }
    return Potential::from_terms(std::move(terms));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("potential", what + " at position " + std::to_string(pos_) +
                                       " in '" + std::string(s_) + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }
  char get() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    return s_[pos_++];
  }
  bool consume_word(std::string_view w) {
    skip();
    if (s_.substr(pos_, w.size()) == w) {
      const std::size_t end = pos_ + w.size();
      if (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) return false;
      pos_ = end;
      return true;
    }
    return false;
  }

  std::optional<double> number() {
    skip();
    if (consume_word("pi")) return std::numbers::pi;
    char* end = nullptr;
    const char c = peek();
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return std::nullopt;
    const std::string tmp(s_.substr(pos_));
    const double v = std::strtod(tmp.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - tmp.c_str());
    if (used == 0) return std::nullopt;
    pos_ += used;
    return v;
  }

  // product of numeric factors followed by "x"
  double frequency() {
    double w = 1.0;
    bool saw_x = false;
    while (true) {
      if (auto n = number()) {
        w *= *n;
      } else if (consume_word("x")) {
        if (saw_x) fail("nonlinear sinusoid argument");
        saw_x = true;
      } else {
        fail("expected number, 'pi' or 'x' in sinusoid argument");
      }
      while (peek() == '/') {
        get();
        auto n = number();
        if (!n || *n == 0.0) fail("expected nonzero divisor");
        w /= *n;
      }
      if (peek() != '*') break;
      get();
    }
    if (!saw_x) fail("sinusoid argument must be proportional to x");
    return w;
  }

  PotentialTerm term(double sign) {
    double coef = sign;
    int power = -1;  // -1: no x factor
    std::optional<Sinusoid> wave;
    bool any = false;
    while (true) {
      if (auto n = number()) {
        coef *= *n;
      } else if (consume_word("x")) {
        if (power >= 0 || wave) fail("unsupported product of x factors");
        power = 1;
        if (peek() == '^') {
          get();
          auto p = number();
          if (!p || *p < 0 || *p != std::floor(*p) || *p > 64) fail("expected integer power");
          power = static_cast<int>(*p);
        }
      } else if (consume_word("sin")) {
        if (power >= 0 || wave) fail("unsupported product of x factors");
        if (get() != '(') fail("expected '('");
        wave = Sinusoid{1.0, frequency(), true};
        if (get() != ')') fail("expected ')'");
      } else if (consume_word("cos")) {
        if (power >= 0 || wave) fail("unsupported product of x factors");
        if (get() != '(') fail("expected '('");
        wave = Sinusoid{1.0, frequency(), false};
        if (get() != ')') fail("expected ')'");
      } else {
        fail("expected number, 'pi', 'x', 'sin' or 'cos'");
      }
      any = true;
      while (peek() == '/') {
        get();
        auto n = number();
        if (!n || *n == 0.0) fail("expected nonzero divisor");
        coef /= *n;
      }
      if (peek() != '*') break;
      get();
    }
    if (!any) fail("empty term");
    if (wave) {
      wave->amplitude = coef;
      return *wave;
    }
    return Monomial{coef, power < 0 ? 0 : power};
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline Potential parse_potential(std::string_view text) { return ExpressionParser(text).parse(); }

}  // namespace diracvac
