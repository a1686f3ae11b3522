#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "diracvac/errors.hpp"

namespace diracvac::quad {

/// Abscissas and weights of the N-point Gauss-Legendre rule on [-1, 1],
/// found by Newton iteration on P_N.
template <int N, class Real = double>
struct GaussLegendre {
  std::array<Real, N> x{};
  std::array<Real, N> w{};

  GaussLegendre() {
    const Real pi = std::numbers::pi_v<Real>;
    for (int i = 0; i < (N + 1) / 2; ++i) {
      Real z = std::cos(pi * (i + Real(0.75)) / (N + Real(0.5)));
      Real dp = 0;
      for (int iter = 0; iter < 100; ++iter) {
        Real p0 = 1, p1 = 0;
        for (int j = 1; j <= N; ++j) {
          const Real p2 = p1;
          p1 = p0;
          p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
        }
        dp = N * (z * p0 - p1) / (z * z - 1);
        const Real dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 4 * std::numeric_limits<Real>::epsilon()) break;
      }
      x[i] = -z;
      x[N - 1 - i] = z;
      // refresh P_N' at the converged root
      Real p0 = 1, p1 = 0;
      for (int j = 1; j <= N; ++j) {
        const Real p2 = p1;
        p1 = p0;
        p0 = ((2 * j - 1) * z * p1 - (j - 1) * p2) / j;
      }
      dp = N * (z * p0 - p1) / (z * z - 1);
      w[i] = w[N - 1 - i] = 2 / ((1 - z * z) * dp * dp);
    }
  }

  static const GaussLegendre& instance() {
    static const GaussLegendre rule;
    return rule;
  }
};

inline constexpr int kRuleOrder = 16;

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-12;
  int panels_per_period = 4;
  int min_panels = 4;
  int max_panels = 1 << 17;
};

/// Composite rule over `panels` equal panels. The abscissa type follows the
/// interval endpoints, so long double endpoints give an extended-precision
/// rule.
template <class F, class Real>
auto composite(F&& f, Real lo, Real hi, int panels) {
  const auto& rule = GaussLegendre<kRuleOrder, Real>::instance();
  using T = decltype(f(lo));
  const Real width = (hi - lo) / panels;
  const Real half = width / 2;
  T total{};
  for (int p = 0; p < panels; ++p) {
    const Real mid = lo + (p + Real(0.5)) * width;
    T panel{};
    for (int i = 0; i < kRuleOrder; ++i) panel += rule.w[i] * f(mid + half * rule.x[i]);
    total += half * panel;
  }
  return total;
}

template <class F, class Real>
auto composite_components(F&& f, Real lo, Real hi, int panels) {
  const auto& rule = GaussLegendre<kRuleOrder, Real>::instance();
  using T = decltype(f(lo));
  const Real width = (hi - lo) / panels;
  const Real half = width / 2;
  T total{};
  for (int p = 0; p < panels; ++p) {
    const Real mid = lo + (p + Real(0.5)) * width;
    T panel{};
    for (int i = 0; i < kRuleOrder; ++i) {
      const T v = f(mid + half * rule.x[i]);
      for (std::size_t c = 0; c < v.size(); ++c) panel[c] += rule.w[i] * v[c];
    }
    for (std::size_t c = 0; c < panel.size(); ++c) total[c] += half * panel[c];
  }
  return total;
}

template <class Real>
int initial_panels(Real lo, Real hi, double max_frequency, const Options& opts) {
  const double periods =
      std::abs(max_frequency) * static_cast<double>(hi - lo) / (2.0 * std::numbers::pi);
  const double want = std::ceil(opts.panels_per_period * periods);
  return want > opts.min_panels ? static_cast<int>(want) : opts.min_panels;
}

/// Adaptive panel Gauss-Legendre integration of a smooth integrand whose
/// fastest oscillation is bounded by `max_frequency` (radians per unit x).
/// The panel count starts at `panels_per_period` panels per period and is
/// doubled until two successive estimates agree.
template <class F, class Real>
auto integrate(F&& f, Real lo, Real hi, double max_frequency, const Options& opts = {}) {
  int panels = initial_panels(lo, hi, max_frequency, opts);
  auto coarse = composite(f, lo, hi, panels);
  while (true) {
    if (2 * panels > opts.max_panels)
      throw QuadratureNotConverged("quadrature: panel budget of " +
                                   std::to_string(opts.max_panels) + " exceeded");
    panels *= 2;
    auto fine = composite(f, lo, hi, panels);
    using std::abs;
    const double diff = static_cast<double>(abs(fine - coarse));
    if (diff <= opts.abs_tol || diff <= opts.rel_tol * static_cast<double>(abs(fine)))
      return fine;
    coarse = fine;
  }
}

/// Like integrate(), for an integrand returning std::array<Real, M>. Each
/// component must pass the tolerance test on its own, so small components keep
/// their relative accuracy next to large ones.
template <class F, class Real>
auto integrate_components(F&& f, Real lo, Real hi, double max_frequency, const Options& opts = {}) {
  int panels = initial_panels(lo, hi, max_frequency, opts);
  auto coarse = composite_components(f, lo, hi, panels);
  while (true) {
    if (2 * panels > opts.max_panels)
      throw QuadratureNotConverged("quadrature: panel budget of " +
                                   std::to_string(opts.max_panels) + " exceeded");
    panels *= 2;
    auto fine = composite_components(f, lo, hi, panels);
    bool done = true;
    for (std::size_t c = 0; c < fine.size(); ++c) {
      const double diff = static_cast<double>(std::abs(fine[c] - coarse[c]));
      done = done && (diff <= opts.abs_tol || diff <= opts.rel_tol * static_cast<double>(std::abs(fine[c])));
    }
    if (done) return fine;
    coarse = fine;
  }
}

}  // namespace diracvac::quad
