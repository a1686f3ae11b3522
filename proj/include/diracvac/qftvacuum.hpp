#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diracvac/model.hpp"
#include "diracvac/numerics.hpp"
#include "diracvac/potential.hpp"
#include "diracvac/spectral.hpp"

/// Field-theory vacuum: the perturbed vacuum expressed in the unperturbed
/// Fock basis through overlap matrices.
namespace diracvac::qftvacuum {

using numerics::SeriesResult;
using numerics::SumOptions;

/// Overlaps <psi_k|phi_n> between perturbed (rows) and unperturbed (columns)
/// modes, truncated to N levels per branch. Row/column r holds level r + 1
/// for the positive branch and level -(r + 1) for the negative branch.
struct BogoliubovBlocks {
  Eigen::MatrixXcd pp;  ///< <psi_i|phi_i'>
  Eigen::MatrixXcd pa;  ///< <psi_i|phi_-j>
  Eigen::MatrixXcd ap;  ///< <psi_-j|phi_i>
  Eigen::MatrixXcd aa;  ///< <psi_-j|phi_-j'>
  int cutoff = 0;

  /// max over perturbed rows with level |k| <= window of |1 - sum |entry|^2|
  double completeness_defect(int window) const {
    const int rows = std::min(window, cutoff);
    long double worst = 0.0L;
    auto row_defect = [&](const Eigen::MatrixXcd& left, const Eigen::MatrixXcd& right, int r) {
      long double s = 0.0L;
      for (int c = 0; c < cutoff; ++c)
        s += static_cast<long double>(std::norm(left(r, c))) +
             static_cast<long double>(std::norm(right(r, c)));
      return std::abs(1.0L - s);
    };
    for (int r = 0; r < rows; ++r) {
      worst = std::max(worst, row_defect(pp, pa, r));
      worst = std::max(worst, row_defect(ap, aa, r));
    }
    return static_cast<double>(worst);
  }
};

namespace detail {

inline void require_reach(const OverlapTable& table, std::int64_t reach, const char* who) {
  if (table.max_shift() < reach)
    throw std::invalid_argument(std::string(who) + ": overlap table too short for the cutoff");
}

}  // namespace detail

/// Overlap table covering every shift that appears at cutoff N.
inline OverlapTable overlap_table(const Potential& pot, const ModelParams& params, int cutoff,
                                  const quad::Options& qopts = {}, int threads = 1) {
  if (cutoff < 1) throw std::invalid_argument("overlap_table: cutoff must be >= 1");
  return OverlapTable(pot, params, 2 * std::int64_t{cutoff} - 1, qopts, threads);
}

/// Overlaps depend only on the level shift, so one table of 2(2N - 1) + 1
/// entries fills all four blocks.
inline BogoliubovBlocks bogoliubov_blocks(const OverlapTable& table, int cutoff) {
  if (cutoff < 1) throw std::invalid_argument("bogoliubov_blocks: cutoff must be >= 1");
  detail::require_reach(table, 2 * std::int64_t{cutoff} - 1, "bogoliubov_blocks");
  BogoliubovBlocks b;
  b.cutoff = cutoff;
  const auto n = static_cast<Eigen::Index>(cutoff);
  b.pp.resize(n, n);
  b.pa.resize(n, n);
  b.ap.resize(n, n);
  b.aa.resize(n, n);
  for (int r = 0; r < cutoff; ++r) {
    const auto pos_r = LevelIndex::particle(r + 1), neg_r = LevelIndex::antiparticle(r + 1);
    for (int c = 0; c < cutoff; ++c) {
      const auto pos_c = LevelIndex::particle(c + 1), neg_c = LevelIndex::antiparticle(c + 1);
      b.pp(r, c) = table(pos_r, pos_c);
      b.pa(r, c) = table(pos_r, neg_c);
      b.ap(r, c) = table(neg_r, pos_c);
      b.aa(r, c) = table(neg_r, neg_c);
    }
  }
  return b;
}

inline BogoliubovBlocks bogoliubov_blocks(const Potential& pot, const ModelParams& params,
                                          int cutoff, const quad::Options& qopts = {},
                                          int threads = 1) {
  return bogoliubov_blocks(overlap_table(pot, params, cutoff, qopts, threads), cutoff);
}

/// Second-order vacuum shift,
///   -sum_{j, i <= N} |V_{i,-j}|^2 / (eps_i + epsbar_j),  epsbar_j = -eps_{-j}.
/// Terms and summation order coincide with the hole-theory Pauli-enforced
/// sum, so the two agree bit for bit.
inline SeriesResult qft_second_order(const Potential& pot, const ModelParams& params, int cutoff,
                                     const SumOptions& opts = {},
                                     const quad::Options& qopts = {}) {
  if (cutoff < 1) throw std::invalid_argument("qft_second_order: cutoff must be >= 1");
  const MatrixElementTable v(pot, params, 2 * cutoff, qopts, opts.threads);
  auto term = [&](std::int64_t j, std::int64_t i) {
    const LevelIndex anti = LevelIndex::antiparticle(static_cast<int>(j));
    const LevelIndex up = LevelIndex::particle(static_cast<int>(i));
    const double epsbar = -unperturbed_eigenvalue(anti, params);
    return -std::norm(v(up, anti)) / (unperturbed_eigenvalue(up, params) + epsbar);
  };
  return numerics::sum_double(term, numerics::SquareCutoff{cutoff}, opts,
                              numerics::Diagonal::include);
}

namespace detail {

/// Pairs (i, j) in [1, n]^2 with i + j - 1 = s: i runs over [lo, hi].
struct ShiftGroup {
  std::int64_t lo = 0, hi = -1;
  std::int64_t count() const { return hi - lo + 1; }
  /// sum over the group of (2i - 1)
  long double odd_sum() const {
    return static_cast<long double>(hi * hi - (lo - 1) * (lo - 1));
  }
};

inline ShiftGroup group(std::int64_t s, std::int64_t n) {
  return {std::max<std::int64_t>(1, s + 1 - n), std::min(n, s)};
}

/// Runs `per_shift(s, group)` for s = 1 .. 2n - 1 at every trace cutoff and
/// sums the returned values in ascending s in extended precision.
template <class F>
SeriesResult grouped_trace(std::int64_t cutoff, const SumOptions& opts, const F& per_shift) {
  std::int64_t used = 0;
  std::vector<numerics::TracePoint> trace;
  std::vector<double> h;
  for (auto n : numerics::detail::halvings(cutoff, opts.trace_points)) {
    numerics::detail::charge(used, 2 * n * n, opts);
    long double total = 0.0L;
    for (std::int64_t s = 1; s <= 2 * n - 1; ++s) total += per_shift(s, group(s, n));
    trace.push_back({double(n), static_cast<double>(total)});
    h.push_back(1.0 / n);
  }
  return numerics::finish(std::move(trace), h, opts.tolerance);
}

}  // namespace detail

/// Exact vacuum shift from the overlaps,
///   -sum_{i, j <= N} (eta_i |<psi_i|phi_-j>|^2 + etabar_j |<psi_-j|phi_i>|^2),
/// with eta from the exact single-particle levels. Both overlaps depend on
/// i + j - 1 only, so the double sum collapses to a sum over that shift with
/// exact integer weights.
inline SeriesResult qft_vacuum_shift_exact(const OverlapTable& table, const Potential& pot,
                                           int cutoff, const SumOptions& opts = {}) {
  if (cutoff < 1) throw std::invalid_argument("qft_vacuum_shift_exact: cutoff must be >= 1");
  detail::require_reach(table, 2 * std::int64_t{cutoff} - 1, "qft_vacuum_shift_exact");
  const ModelParams& params = table.params();
  const long double quarter = std::numbers::pi_v<long double> / (4.0L * params.half_width());
  const long double mean = pot.mean(params);
  return detail::grouped_trace(cutoff, opts, [&](std::int64_t s, const detail::ShiftGroup& g) {
    const long double level_sum = g.odd_sum() * quarter;
    const long double count = static_cast<long double>(g.count());
    const long double w_particle = level_sum + mean * count;      // sum of eta_i
    const long double w_antiparticle = level_sum - mean * count;  // sum of etabar_j
    return -(w_particle * table.parts(s).probability(params) +
             w_antiparticle * table.parts(-s).probability(params));
  });
}

inline SeriesResult qft_vacuum_shift_exact(const Potential& pot, const ModelParams& params,
                                           int cutoff, const SumOptions& opts = {},
                                           const quad::Options& qopts = {}) {
  return qft_vacuum_shift_exact(overlap_table(pot, params, cutoff, qopts, opts.threads), pot,
                                cutoff, opts);
}

/// Same sum evaluated entry by entry from explicit blocks, without using the
/// shift structure. Quadratic in N; a cross-check for the grouped form.
inline double vacuum_shift_from_blocks(const BogoliubovBlocks& b, const Potential& pot,
                                       const ModelParams& params) {
  numerics::CompensatedSum sum;
  for (int j = 1; j <= b.cutoff; ++j) {
    const double etabar = -perturbed_eigenvalue_exact(LevelIndex::antiparticle(j), pot, params);
    for (int i = 1; i <= b.cutoff; ++i) {
      const double eta = perturbed_eigenvalue_exact(LevelIndex::particle(i), pot, params);
      sum.add(-eta * std::norm(b.pa(i - 1, j - 1)));
      sum.add(-etabar * std::norm(b.ap(j - 1, i - 1)));
    }
  }
  return sum.value();
}

/// Shift beyond second order, exact minus second order at equal cutoff.
struct Remainder {
  SeriesResult series;
  /// true when evaluated without subtracting the two large sums
  bool cancellation_free = false;
};

/// For a zero-mean potential the overlap amplitude at shift +-s splits into a
/// part linear in the phase function, which reproduces the second-order sum
/// exactly, and higher-order parts:
///   P(+-s) = +-L + E +- O,  P(s)^2 + P(-s)^2 = 2L^2 + 4LO + 2O^2 + 2E^2.
/// Dropping the 2L^2 piece gives the remainder directly, with no cancellation
/// between the exact and second-order totals. Other potentials fall back to
/// the plain difference.
inline Remainder qft_remainder(const OverlapTable& table, const Potential& pot, int cutoff,
                               const SumOptions& opts = {}, const quad::Options& qopts = {}) {
  if (cutoff < 1) throw std::invalid_argument("qft_remainder: cutoff must be >= 1");
  detail::require_reach(table, 2 * std::int64_t{cutoff} - 1, "qft_remainder");
  const ModelParams& params = table.params();
  Remainder r;
  if (pot.mean(params) != 0.0) {
    const auto exact = qft_vacuum_shift_exact(table, pot, cutoff, opts);
    const auto second = qft_second_order(pot, params, cutoff, opts, qopts);
    r.series = exact;
    for (std::size_t t = 0; t < r.series.trace.size(); ++t)
      r.series.trace[t].value -= second.trace.at(t).value;
    r.series.value = exact.value - second.value;
    if (exact.extrapolated && second.extrapolated)
      r.series.extrapolated = *exact.extrapolated - *second.extrapolated;
    return r;
  }
  const long double quarter = std::numbers::pi_v<long double> / (4.0L * params.half_width());
  const long double two_a = 2.0L * params.half_width();
  r.series = detail::grouped_trace(cutoff, opts, [&](std::int64_t s, const detail::ShiftGroup& g) {
    const auto& p = table.parts(s);
    const long double higher = 4.0L * p.linear * p.odd + 2.0L * p.odd * p.odd + 2.0L * p.even * p.even;
    return -g.odd_sum() * quarter * higher / (two_a * two_a);
  });
  r.cancellation_free = true;
  return r;
}

inline Remainder qft_remainder(const Potential& pot, const ModelParams& params, int cutoff,
                               const SumOptions& opts = {}, const quad::Options& qopts = {}) {
  return qft_remainder(overlap_table(pot, params, cutoff, qopts, opts.threads), pot, cutoff, opts,
                       qopts);
}

enum class Conjugation {
  /// conj(<psi_k|phi_i'>) <psi_k|phi_i''> for every k; a true spectral resolution
  resolution,
  /// the antiparticle term with the conjugate on the other factor
  swapped,
};

/// Residual of the spectral resolution of H0 + V in the unperturbed basis,
///   sum_k eta_k conj(<psi_k|phi_i'>) <psi_k|phi_i''> = eps_i' delta + V_i'i'',
/// over k = +-1 .. +-N and i', i'' = 1 .. window. Returns the max-norm of the
/// difference.
inline double spectral_resolution_check(const OverlapTable& table, const Potential& pot,
                                        int cutoff, int window = 8,
                                        Conjugation form = Conjugation::resolution,
                                        const quad::Options& qopts = {}) {
  if (cutoff < 1 || window < 1)
    throw std::invalid_argument("spectral_resolution_check: cutoff and window must be >= 1");
  detail::require_reach(table, std::int64_t{cutoff} + window, "spectral_resolution_check");
  const ModelParams& params = table.params();
  const MatrixElementTable v(pot, params, window, qopts);
  const long double mean = pot.mean(params);
  double worst = 0.0;
  for (int p = 1; p <= window; ++p) {
    for (int q = 1; q <= window; ++q) {
      const auto ip = LevelIndex::particle(p), iq = LevelIndex::particle(q);
      std::complex<long double> lhs{0.0L, 0.0L};
      for (int j = 1; j <= cutoff; ++j) {
        for (const auto k : {LevelIndex::particle(j), LevelIndex::antiparticle(j)}) {
          const long double eta = unperturbed_eigenvalue(k, params) + mean;
          const cd a = table(k, ip), b = table(k, iq);
          const cd prod = (form == Conjugation::swapped && !k.positive()) ? a * std::conj(b)
                                                                           : std::conj(a) * b;
          lhs += eta * std::complex<long double>(prod.real(), prod.imag());
        }
      }
      cd rhs = v(ip, iq);
      if (p == q) rhs += unperturbed_eigenvalue(ip, params);
      const cd diff = cd(static_cast<double>(lhs.real()), static_cast<double>(lhs.imag())) - rhs;
      worst = std::max(worst, std::abs(diff));
    }
  }
  return worst;
}

inline double spectral_resolution_check(const Potential& pot, const ModelParams& params, int cutoff,
                                        int window = 8,
                                        Conjugation form = Conjugation::resolution,
                                        const quad::Options& qopts = {}, int threads = 1) {
  if (cutoff < 1 || window < 1)
    throw std::invalid_argument("spectral_resolution_check: cutoff and window must be >= 1");
  const OverlapTable table(pot, params, std::int64_t{cutoff} + window, qopts, threads);
  return spectral_resolution_check(table, pot, cutoff, window, form, qopts);
}

/// Occupied particle levels i and antiparticle levels j (both listed as
/// positive integers).
class OccupationSet {
 public:
  OccupationSet() = default;
  OccupationSet(std::vector<int> particles, std::vector<int> antiparticles)
      : particles_(std::move(particles)), antiparticles_(std::move(antiparticles)) {
    check(particles_, "particles");
    check(antiparticles_, "antiparticles");
  }
  const std::vector<int>& particles() const noexcept { return particles_; }
  const std::vector<int>& antiparticles() const noexcept { return antiparticles_; }
  bool empty() const noexcept { return particles_.empty() && antiparticles_.empty(); }

 private:
  static void check(const std::vector<int>& list, const char* what) {
    std::set<int> seen;
    for (int i : list) {
      if (i < 1)
        throw std::invalid_argument(std::string("OccupationSet: ") + what + " must be >= 1");
      if (!seen.insert(i).second)
        throw std::invalid_argument(std::string("OccupationSet: repeated level in ") + what);
    }
  }
  std::vector<int> particles_;
  std::vector<int> antiparticles_;
};

/// sum_i (eta_i - eps_i) + sum_j (etabar_j - epsbar_j) + vacuum_shift
inline double system_shift(const OccupationSet& occ, const Potential& pot,
                           const ModelParams& params, double vacuum_shift) {
  numerics::CompensatedSum sum;
  for (int i : occ.particles()) {
    const auto k = LevelIndex::particle(i);
    sum.add(perturbed_eigenvalue_exact(k, pot, params) - unperturbed_eigenvalue(k, params));
  }
  for (int j : occ.antiparticles()) {
    const auto k = LevelIndex::antiparticle(j);
    sum.add(unperturbed_eigenvalue(k, params) - perturbed_eigenvalue_exact(k, pot, params));
  }
  sum.add(vacuum_shift);
  return sum.value();
}

inline double system_shift(const OccupationSet& occ, const Potential& pot,
                           const ModelParams& params, int cutoff, const SumOptions& opts = {},
                           const quad::Options& qopts = {}) {
  return system_shift(occ, pot, params,
                      qft_vacuum_shift_exact(pot, params, cutoff, opts, qopts).value);
}

}  // namespace diracvac::qftvacuum
