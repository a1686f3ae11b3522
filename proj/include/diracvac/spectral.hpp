#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "diracvac/errors.hpp"
#include "diracvac/model.hpp"
#include "diracvac/parallel.hpp"
#include "diracvac/potential.hpp"
#include "diracvac/quadrature.hpp"

namespace diracvac {

using cd = std::complex<double>;

/// Eigenmode of the massless bag in the w_(+/-) = u +/- i v representation:
///
///   w_+(x) = C_+ exp(+i [f(x) - eta x]),   w_-(x) = C_- exp(-i [f(x) - eta x])
///
/// with the wall condition w_+(+/-a) = -/+ i w_-(+/-a). The default phase
/// convention takes C_+ = 1/sqrt(2a) real and fixes C_- from the condition at
/// x = -a.
class Mode {
 public:
  Mode(LevelIndex level, double eigenvalue, cd cplus, cd cminus, Potential potential)
      : level_(level),
        eigenvalue_(eigenvalue),
        cplus_(cplus),
        cminus_(cminus),
        potential_(std::move(potential)) {}

  LevelIndex level() const noexcept { return level_; }
  double eigenvalue() const noexcept { return eigenvalue_; }
  cd cplus() const noexcept { return cplus_; }
  cd cminus() const noexcept { return cminus_; }
  const Potential& potential() const noexcept { return potential_; }

  cd wplus(double x) const {
    return cplus_ * std::polar(1.0, potential_.phase(x) - eigenvalue_ * x);
  }
  cd wminus(double x) const {
    return cminus_ * std::polar(1.0, eigenvalue_ * x - potential_.phase(x));
  }
  /// upper spinor component u = (w_+ + w_-)/2
  cd upper(double x) const { return 0.5 * (wplus(x) + wminus(x)); }
  /// lower spinor component v = (w_+ - w_-)/(2i)
  cd lower(double x) const { return (wplus(x) - wminus(x)) / cd(0.0, 2.0); }

  /// Same state multiplied by exp(i phi).
  Mode rephased(double phi) const {
    const cd z = std::polar(1.0, phi);
    return Mode(level_, eigenvalue_, z * cplus_, z * cminus_, potential_);
  }

  /// max(|w_+(a) + i w_-(a)|, |w_+(-a) - i w_-(-a)|)
  double boundary_residual(const ModelParams& params) const {
    const double a = params.half_width();
    const cd i(0.0, 1.0);
    return std::max(std::abs(wplus(a) + i * wminus(a)), std::abs(wplus(-a) - i * wminus(-a)));
  }

 private:
  LevelIndex level_;
  double eigenvalue_;
  cd cplus_;
  cd cminus_;
  Potential potential_;
};

/// Exact eigenvalue under V: eta_k = eps_k + (1/2a) * integral of V.
/// The shift is the same for every level.
inline double perturbed_eigenvalue_exact(LevelIndex k, const Potential& pot,
                                         const ModelParams& params) {
  return unperturbed_eigenvalue(k, params) + pot.mean(params);
}

namespace detail {

inline Mode make_mode(LevelIndex k, double eta, const Potential& pot, const ModelParams& params) {
  const double a = params.half_width();
  const double c = 1.0 / std::sqrt(2.0 * a);
  // w_+(-a) = i w_-(-a)  =>  C_- = -i C_+ exp(2i [f(-a) + eta a])
  const cd cminus = cd(0.0, -1.0) * c * std::polar(1.0, 2.0 * (pot.phase(-a) + eta * a));
  return Mode(k, eta, cd(c, 0.0), cminus, pot);
}

/// i^q for integer q, exactly.
inline cd ipow_i(std::int64_t q) {
  switch (((q % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace detail

inline Mode unperturbed_mode(LevelIndex k, const ModelParams& params) {
  return detail::make_mode(k, unperturbed_eigenvalue(k, params), Potential::zero(), params);
}

inline Mode perturbed_mode(LevelIndex k, const Potential& pot, const ModelParams& params) {
  return detail::make_mode(k, perturbed_eigenvalue_exact(k, pot, params), pot, params);
}

/// <a|b> = integral of (conj(u_a) u_b + conj(v_a) v_b) over the bag.
inline cd inner_product(const Mode& bra, const Mode& ket, const ModelParams& params,
                        const quad::Options& opts = {}) {
  const double a = params.half_width();
  const double freq = std::abs(bra.eigenvalue()) + std::abs(ket.eigenvalue()) +
                      bra.potential().oscillation_bound(params) +
                      ket.potential().oscillation_bound(params);
  return quad::integrate(
      [&](double x) {
        return std::conj(bra.upper(x)) * ket.upper(x) + std::conj(bra.lower(x)) * ket.lower(x);
      },
      -a, a, freq, opts);
}

inline double norm(const Mode& m, const ModelParams& params, const quad::Options& opts = {}) {
  return std::sqrt(inner_product(m, m, params, opts).real());
}

/// <phi_m | V | phi_n> by quadrature on the explicit spinor integrand.
inline cd matrix_element_quadrature(LevelIndex m, LevelIndex n, const Potential& pot,
                                    const ModelParams& params, const quad::Options& opts = {}) {
  const Mode bra = unperturbed_mode(m, params);
  const Mode ket = unperturbed_mode(n, params);
  const double a = params.half_width();
  const double freq =
      std::abs(bra.eigenvalue()) + std::abs(ket.eigenvalue()) + pot.oscillation_bound(params);
  return quad::integrate(
      [&](double x) {
        const double v = pot(x);
        return v * (std::conj(bra.upper(x)) * ket.upper(x) +
                    std::conj(bra.lower(x)) * ket.lower(x));
      },
      -a, a, freq, opts);
}

/// Closed form for V = lambda x + c between unperturbed modes. With
/// s = n(n) - n(m) and d = s pi/(2a),
///   V_mn = c delta_mn - lambda i^s / (a d^2)   for odd s, 0 for even s != 0.
inline cd matrix_element_affine(std::int64_t shift, double lambda, double c,
                                const ModelParams& params) {
  if (shift == 0) return {c, 0.0};
  if (shift % 2 == 0) return {0.0, 0.0};
  const double a = params.half_width();
  const double d = static_cast<double>(shift) * params.level_spacing();
  return -(lambda / (a * d * d)) * detail::ipow_i(shift);
}

/// V_mn depends on (m, n) only through s = n(n) - n(m):
///   V_mn = (1/2a) exp(i d a) * integral of V(x) cos(d (x + a)),  d = s pi/(2a).
/// Uses the closed form for affine potentials and quadrature on this reduced
/// integrand otherwise.
inline cd matrix_element_by_shift(std::int64_t shift, const Potential& pot,
                                  const ModelParams& params, const quad::Options& opts = {}) {
  if (auto affine = pot.as_affine()) return matrix_element_affine(shift, affine->first, affine->second, params);
  const double a = params.half_width();
  const double d = static_cast<double>(shift) * params.level_spacing();
  const double integral = quad::integrate(
      [&](double x) { return pot(x) * std::cos(d * (x + a)); }, -a, a,
      std::abs(d) + pot.oscillation_bound(params), opts);
  return detail::ipow_i(shift) * (integral / (2.0 * a));
}

/// <phi_m | V | phi_n> under the fixed phase convention.
inline cd matrix_element(LevelIndex m, LevelIndex n, const Potential& pot,
                         const ModelParams& params, const quad::Options& opts = {}) {
  if (auto affine = pot.as_affine())
    return matrix_element_affine(n.quantum_number() - m.quantum_number(), affine->first,
                                 affine->second, params);
  return matrix_element_quadrature(m, n, pot, params, opts);
}

/// <psi_k | phi_n> between a perturbed and an unperturbed mode, by quadrature.
inline cd overlap(LevelIndex perturbed, LevelIndex unperturbed, const Potential& pot,
                  const ModelParams& params, const quad::Options& opts = {}) {
  return inner_product(perturbed_mode(perturbed, pot, params), unperturbed_mode(unperturbed, params),
                       params, opts);
}

/// Decomposition of <psi_k|phi_n> for s = n(k) - n(n). With D = eta_k - eps_n,
/// y = x + a and delta(x) = f(-a) - f(x),
///
///   <psi_k|phi_n> = exp(-i theta) P / (2a),   theta = D a + f(-a),
///   P = integral of cos(D y + delta) = base + linear + even + odd,
///
/// where base = integral cos(D y), linear = -integral sin(D y) delta,
/// even = integral cos(D y)(cos delta - 1) and odd = -integral sin(D y)(sin delta - delta).
/// Each piece is integrated separately in extended precision so that the
/// higher-order parts keep full relative accuracy.
struct OverlapParts {
  std::int64_t shift = 0;
  double theta = 0.0;
  long double base = 0.0L;
  long double linear = 0.0L;
  long double even = 0.0L;
  long double odd = 0.0L;

  long double amplitude() const { return base + linear + even + odd; }
  cd value(const ModelParams& params) const {
    return std::polar(1.0, -theta) *
           static_cast<double>(amplitude() / (2.0L * params.half_width()));
  }
  /// |<psi_k|phi_n>|^2
  long double probability(const ModelParams& params) const {
    const long double p = amplitude() / (2.0L * params.half_width());
    return p * p;
  }
};

namespace detail {

// sin(t) - t without cancellation for small t
inline long double sin_minus_identity(long double t) {
  if (std::abs(t) < 0.25L) {
    const long double t2 = t * t;
    long double term = -t * t2 / 6.0L, sum = term;
    for (int k = 2; k < 12; ++k) {
      term *= -t2 / ((2.0L * k) * (2.0L * k + 1.0L));
      sum += term;
    }
    return sum;
  }
  return std::sin(t) - t;
}

}  // namespace detail

/// The shift-independent factors of the overlap integrands, tabulated on
/// composite Gauss-Legendre grids of 2^m panels. Every shift evaluated with
/// the same panel count reuses one grid, so a table of overlaps costs one
/// phase evaluation per node instead of one per node and shift. Grids are
/// built on first use; the cache is safe to share between threads.
class OverlapKernel {
 public:
  struct Grid {
    int panels = 0;
    long double half = 0.0L;            ///< half panel width
    std::vector<long double> lefts;     ///< x + a at each panel midpoint
    std::vector<long double> linear;    ///< -delta at each node
    std::vector<long double> even;      ///< -2 sin^2(delta/2)
    std::vector<long double> odd;       ///< -(sin delta - delta)
  };

  OverlapKernel(const Potential& pot, const ModelParams& params)
      : pot_(pot), params_(params), mean_(pot.mean(params)),
        f_left_(pot.phase(-static_cast<long double>(params.half_width()))),
        bound_(pot.oscillation_bound(params)) {}

  const Potential& potential() const noexcept { return pot_; }
  const ModelParams& params() const noexcept { return params_; }
  double mean() const noexcept { return mean_; }
  long double phase_left() const noexcept { return f_left_; }
  double oscillation_bound() const noexcept { return bound_; }

  const Grid& grid(int panels) const {
    std::lock_guard lock(mutex_);
    auto& slot = grids_[panels];
    if (!slot) slot = std::make_unique<Grid>(build(panels));
    return *slot;
  }

 private:
  Grid build(int panels) const {
    const auto& rule = quad::GaussLegendre<quad::kRuleOrder, long double>::instance();
    const long double a = params_.half_width();
    Grid g;
    g.panels = panels;
    const long double width = 2.0L * a / panels;
    g.half = width / 2.0L;
    const std::size_t nodes = static_cast<std::size_t>(panels) * quad::kRuleOrder;
    g.lefts.resize(static_cast<std::size_t>(panels));
    g.linear.resize(nodes);
    g.even.resize(nodes);
    g.odd.resize(nodes);
    for (int p = 0; p < panels; ++p) {
      const long double mid = -a + (p + 0.5L) * width;
      g.lefts[static_cast<std::size_t>(p)] = mid + a;
      for (int i = 0; i < quad::kRuleOrder; ++i) {
        const std::size_t n = static_cast<std::size_t>(p) * quad::kRuleOrder + i;
        const long double delta = f_left_ - pot_.phase(mid + g.half * rule.x[i]);
        const long double h = std::sin(delta / 2.0L);
        g.linear[n] = -delta;
        g.even[n] = -2.0L * h * h;
        g.odd[n] = -detail::sin_minus_identity(delta);
      }
    }
    return g;
  }

  Potential pot_;
  ModelParams params_;
  double mean_;
  long double f_left_;
  double bound_;
  mutable std::mutex mutex_;
  mutable std::map<int, std::unique_ptr<Grid>> grids_;
};

namespace detail {

/// linear, even and odd integrals at frequency D on one grid. The phase at
/// each node is the exact panel phase rotated by a per-node offset, both
/// computed directly, so no error accumulates across panels.
inline std::array<long double, 3> overlap_pieces(const OverlapKernel::Grid& g, long double D) {
  const auto& rule = quad::GaussLegendre<quad::kRuleOrder, long double>::instance();
  std::array<long double, quad::kRuleOrder> cos_off{}, sin_off{};
  for (int i = 0; i < quad::kRuleOrder; ++i) {
    cos_off[i] = std::cos(D * g.half * rule.x[i]);
    sin_off[i] = std::sin(D * g.half * rule.x[i]);
  }
  long double lin = 0.0L, even = 0.0L, odd = 0.0L;
  for (int p = 0; p < g.panels; ++p) {
    const long double c0 = std::cos(D * g.lefts[static_cast<std::size_t>(p)]);
    const long double s0 = std::sin(D * g.lefts[static_cast<std::size_t>(p)]);
    long double pl = 0.0L, pe = 0.0L, po = 0.0L;
    const std::size_t base = static_cast<std::size_t>(p) * quad::kRuleOrder;
    for (int i = 0; i < quad::kRuleOrder; ++i) {
      const long double s = s0 * cos_off[i] + c0 * sin_off[i];
      const long double c = c0 * cos_off[i] - s0 * sin_off[i];
      pl += rule.w[i] * s * g.linear[base + i];
      pe += rule.w[i] * c * g.even[base + i];
      po += rule.w[i] * s * g.odd[base + i];
    }
    lin += pl;
    even += pe;
    odd += po;
  }
  return {g.half * lin, g.half * even, g.half * odd};
}

inline int next_power_of_two(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

}  // namespace detail

inline OverlapParts overlap_parts(std::int64_t shift, const OverlapKernel& kernel,
                                  const quad::Options& opts = {}) {
  const long double a = kernel.params().half_width();
  const double mean = kernel.mean();
  const long double D =
      static_cast<long double>(shift) * std::numbers::pi_v<long double> / (2.0L * a) + mean;
  const double freq = std::abs(static_cast<double>(D)) + kernel.oscillation_bound();

  OverlapParts parts;
  parts.shift = shift;
  parts.theta = static_cast<double>(D * a + kernel.phase_left());
  if (mean == 0.0) {
    parts.base = shift == 0 ? 2.0L * a : 0.0L;
  } else {
    parts.base = D == 0.0L ? 2.0L * a : std::sin(2.0L * a * D) / D;
  }
  if (kernel.potential().is_zero()) return parts;

  // Doubling refinement as in quad::integrate, with each piece required to
  // converge on its own so the small pieces keep their relative accuracy.
  int panels = detail::next_power_of_two(quad::initial_panels(-a, a, freq, opts));
  auto coarse = detail::overlap_pieces(kernel.grid(panels), D);
  while (true) {
    if (2 * panels > opts.max_panels)
      throw QuadratureNotConverged("quadrature: panel budget of " +
                                   std::to_string(opts.max_panels) + " exceeded");
    panels *= 2;
    const auto fine = detail::overlap_pieces(kernel.grid(panels), D);
    bool done = true;
    for (std::size_t c = 0; c < fine.size(); ++c) {
      const double diff = static_cast<double>(std::abs(fine[c] - coarse[c]));
      done = done && (diff <= opts.abs_tol ||
                      diff <= opts.rel_tol * static_cast<double>(std::abs(fine[c])));
    }
    if (done) {
      parts.linear = fine[0];
      parts.even = fine[1];
      parts.odd = fine[2];
      return parts;
    }
    coarse = fine;
  }
}

inline OverlapParts overlap_parts(std::int64_t shift, const Potential& pot,
                                  const ModelParams& params, const quad::Options& opts = {}) {
  return overlap_parts(shift, OverlapKernel(pot, params), opts);
}

/// Values indexed by level shift s in [-max_shift, max_shift]; built once,
/// read-only afterwards.
template <class T>
class ShiftTable {
 public:
  ShiftTable() = default;
  template <class Fn>
  ShiftTable(std::int64_t max_shift, int threads, Fn&& fn) : max_shift_(max_shift) {
    values_.resize(static_cast<std::size_t>(2 * max_shift + 1));
    parallel_for(values_.size(), threads, [&](std::size_t i) {
      values_[i] = fn(static_cast<std::int64_t>(i) - max_shift_);
    });
  }
  std::int64_t max_shift() const noexcept { return max_shift_; }
  const T& operator()(std::int64_t s) const {
    return values_.at(static_cast<std::size_t>(s + max_shift_));
  }

 private:
  std::int64_t max_shift_ = 0;
  std::vector<T> values_;
};

/// V_mn for all |n(n) - n(m)| <= max_shift.
class MatrixElementTable {
 public:
  MatrixElementTable(const Potential& pot, const ModelParams& params, std::int64_t max_shift,
                     const quad::Options& opts = {}, int threads = 1)
      : table_(max_shift, threads,
               [&](std::int64_t s) { return matrix_element_by_shift(s, pot, params, opts); }) {}

  cd operator()(LevelIndex m, LevelIndex n) const {
    return table_(n.quantum_number() - m.quantum_number());
  }
  cd by_shift(std::int64_t s) const { return table_(s); }
  std::int64_t max_shift() const noexcept { return table_.max_shift(); }

 private:
  ShiftTable<cd> table_;
};

/// <psi_k|phi_n> for all |n(k) - n(n)| <= max_shift.
class OverlapTable {
 public:
  OverlapTable(const Potential& pot, const ModelParams& params, std::int64_t max_shift,
               const quad::Options& opts = {}, int threads = 1)
      : params_(params),
        table_(max_shift, threads, [&, kernel = OverlapKernel(pot, params)](std::int64_t s) {
          return overlap_parts(s, kernel, opts);
        }) {}

  const OverlapParts& parts(std::int64_t s) const { return table_(s); }
  cd operator()(LevelIndex perturbed, LevelIndex unperturbed) const {
    return table_(perturbed.quantum_number() - unperturbed.quantum_number()).value(params_);
  }
  std::int64_t max_shift() const noexcept { return table_.max_shift(); }
  const ModelParams& params() const noexcept { return params_; }

 private:
  ModelParams params_;
  ShiftTable<OverlapParts> table_;
};

struct ShootingOptions {
  /// Half-width of each root bracket; 0 selects pi/(8a), which holds at most
  /// one boundary-condition root.
  double bracket_half_width = 0.0;
  /// Follow the root while V is switched on as s V, s: 0 -> 1. When false a
  /// single bracket around eps_k is searched.
  bool continuation = true;
  int panels = 64;
  int max_halvings = 40;
};

/// Independent eigenvalue oracle. Integrates the Dirac equation
/// u' = (eta - V) v, v' = -(eta - V) u from x = -a with u = v (wall
/// condition at -a) to x = +a, and finds eta where u(a) + v(a) = 0 (wall
/// condition at +a). The potential enters only through per-panel
/// Gauss-Legendre integrals of V, never through the closed-form phase f.
inline double eigenvalue_by_shooting(LevelIndex k, const Potential& pot, const ModelParams& params,
                                     const ShootingOptions& opts = {}) {
  const double a = params.half_width();
  const double width = 2.0 * a / opts.panels;
  std::vector<double> panel_potential(static_cast<std::size_t>(opts.panels));
  for (int p = 0; p < opts.panels; ++p) {
    const double lo = -a + p * width;
    panel_potential[p] = quad::composite(pot, lo, lo + width, 1);
  }

  auto residual = [&](double eta, double s) {
    double u = std::numbers::sqrt2 / 2.0, v = u;
    for (int p = 0; p < opts.panels; ++p) {
      const double angle = eta * width - s * panel_potential[p];
      const double c = std::cos(angle), sn = std::sin(angle);
      const double un = c * u + sn * v;
      v = -sn * u + c * v;
      u = un;
    }
    return u + v;
  };

  const double half = opts.bracket_half_width > 0.0 ? opts.bracket_half_width
                                                     : std::numbers::pi / (8.0 * a);
  auto solve = [&](double center, double s) -> std::optional<double> {
    double lo = center - half, hi = center + half;
    double flo = residual(lo, s), fhi = residual(hi, s);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) return std::nullopt;
    std::uintmax_t iters = 200;
    auto root = boost::math::tools::toms748_solve(
        [&](double eta) { return residual(eta, s); }, lo, hi, flo, fhi,
        [](double l, double h) { return std::abs(h - l) <= 1e-15 * std::max(1.0, std::abs(l)); },
        iters);
    return 0.5 * (root.first + root.second);
  };

  const double eps = unperturbed_eigenvalue(k, params);
  if (!opts.continuation) {
    if (auto root = solve(eps, 1.0)) return *root;
    throw NoRootInBracket("shooting: no boundary-condition root within " + std::to_string(half) +
                          " of eps_k = " + std::to_string(eps));
  }

  double eta = eps, s = 0.0, step = 1.0;
  int halvings = 0;
  while (s < 1.0) {
    const double next = std::min(1.0, s + step);
    if (auto root = solve(eta, next); root && std::abs(*root - eta) < 0.5 * half) {
      eta = *root;
      s = next;
    } else {
      if (++halvings > opts.max_halvings)
        throw NoRootInBracket("shooting: lost the root of level " + std::to_string(k.value()) +
                              " at switching parameter " + std::to_string(s));
      step *= 0.5;
    }
  }
  // final polish on the full potential
  if (auto root = solve(eta, 1.0)) return *root;
  throw NoRootInBracket("shooting: no root near continued eigenvalue");
}

/// True when eta_k keeps the sign of eps_k (the pairing the vacuum sums assume).
inline bool sign_pairing_holds(LevelIndex k, const Potential& pot, const ModelParams& params) {
  const double eta = perturbed_eigenvalue_exact(k, pot, params);
  return k.positive() ? eta > 0.0 : eta < 0.0;
}

/// Levels with |k| <= kmax whose perturbed eigenvalue changed sign.
inline std::vector<int> sign_pairing_violations(const Potential& pot, const ModelParams& params,
                                                int kmax) {
  std::vector<int> out;
  for (int k = -kmax; k <= kmax; ++k)
    if (k != 0 && !sign_pairing_holds(LevelIndex(k), pot, params)) out.push_back(k);
  return out;
}

}  // namespace diracvac
