#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "diracvac/model.hpp"
#include "diracvac/numerics.hpp"
#include "diracvac/potential.hpp"
#include "diracvac/spectral.hpp"

/// Hole-theory vacuum: every negative-energy level occupied. Energy shifts
/// are sums over the filled sea j = 1, 2, ... (level -j).
namespace diracvac::holetheory {

using numerics::SeriesResult;
using numerics::SumOptions;
using numerics::SummationScheme;

struct FirstOrder {
  int cutoff = 0;
  /// sum_{j <= cutoff} V_{-j,-j}
  double partial_sum = 0.0;
  /// true when the diagonal elements settle on a nonzero constant, i.e. the
  /// partial sums grow linearly with the cutoff
  bool divergent = false;
  double per_level = 0.0;
  std::vector<double> terms;
};

inline constexpr double kDivergenceThreshold = 1e-10;

/// First-order shift: the expectation value of V in the filled sea.
inline FirstOrder ht_first_order(const Potential& pot, const ModelParams& params, int cutoff,
                                 const quad::Options& qopts = {}) {
  if (cutoff < 1) throw std::invalid_argument("ht_first_order: cutoff must be >= 1");
  FirstOrder out;
  out.cutoff = cutoff;
  numerics::CompensatedSum sum;
  for (int j = 1; j <= cutoff; ++j) {
    const double v =
        matrix_element(LevelIndex::antiparticle(j), LevelIndex::antiparticle(j), pot, params, qopts)
            .real();
    out.terms.push_back(v);
    sum.add(v);
  }
  out.partial_sum = sum.value();
  const double last = out.terms.back();
  bool flat = std::abs(last) > kDivergenceThreshold;
  for (int j = std::max(1, cutoff / 10); flat && j <= cutoff; ++j)
    flat = std::abs(out.terms[j - 1] - last) < kDivergenceThreshold;
  out.divergent = flat;
  out.per_level = flat ? last : 0.0;
  return out;
}

/// Largest |n(n) - n(m)| reached by the terms of the Pauli-enforced sum and
/// of the X term under a scheme.
inline std::int64_t max_shift_for(const SummationScheme& scheme) {
  struct {
    std::int64_t operator()(const numerics::SquareCutoff& s) const { return s.n; }
    std::int64_t operator()(const numerics::RectangularCutoff& s) const { return std::max(s.nj, s.nk); }
    std::int64_t operator()(const numerics::RowIterated& s) const { return std::max(s.outer, s.inner); }
    std::int64_t operator()(const numerics::EnergyCutoff&) const { return -1; }
    std::int64_t operator()(const numerics::AbelRegularized& s) const { return s.n; }
  } visitor;
  return std::visit(visitor, scheme);
}

/// Energy of sea level -j as a positive number, for energy-ordered schemes.
inline SumOptions with_sea_energies(SumOptions opts, const ModelParams& params) {
  opts.level_energy = [params](std::int64_t j) {
    return -unperturbed_eigenvalue(LevelIndex::antiparticle(static_cast<int>(j)), params);
  };
  return opts;
}

/// Pauli-enforced second order: sea level -j may only be excited to an empty
/// positive level i,
///   sum_{j, i <= N} |V_{i,-j}|^2 / (eps_{-j} - eps_i).
/// Every term is negative. Summed with outer index j and inner index i.
inline SeriesResult ht_second_order_pp(const Potential& pot, const ModelParams& params, int cutoff,
                                       const SumOptions& opts = {},
                                       const quad::Options& qopts = {}) {
  if (cutoff < 1) throw std::invalid_argument("ht_second_order_pp: cutoff must be >= 1");
  const MatrixElementTable v(pot, params, 2 * cutoff, qopts, opts.threads);
  auto term = [&](std::int64_t j, std::int64_t i) {
    const LevelIndex sea = LevelIndex::antiparticle(static_cast<int>(j));
    const LevelIndex up = LevelIndex::particle(static_cast<int>(i));
    return std::norm(v(up, sea)) /
           (unperturbed_eigenvalue(sea, params) - unperturbed_eigenvalue(up, params));
  };
  return numerics::sum_double(term, numerics::SquareCutoff{cutoff}, opts, numerics::Diagonal::include);
}

/// Transitions inside the sea,
///   X = sum_j sum_{k != j} |V_{-k,-j}|^2 / (eps_{-j} - eps_{-k}),
/// with outer index j and inner index k. The summand is antisymmetric in
/// (j, k), so the value depends on the summation scheme.
inline SeriesResult ht_x_term(const Potential& pot, const ModelParams& params,
                              const SummationScheme& scheme, const SumOptions& opts = {},
                              const quad::Options& qopts = {}) {
  numerics::validate(scheme);
  const SumOptions sea_opts = with_sea_energies(opts, params);
  std::int64_t reach = max_shift_for(scheme);
  if (reach < 0)
    reach = numerics::detail::energy_index(sea_opts, std::get<numerics::EnergyCutoff>(scheme).emax);
  const MatrixElementTable v(pot, params, std::max<std::int64_t>(reach, 1), qopts, opts.threads);
  auto term = [&](std::int64_t j, std::int64_t k) {
    const LevelIndex from = LevelIndex::antiparticle(static_cast<int>(j));
    const LevelIndex to = LevelIndex::antiparticle(static_cast<int>(k));
    return std::norm(v(to, from)) /
           (unperturbed_eigenvalue(from, params) - unperturbed_eigenvalue(to, params));
  };
  return numerics::sum_double(term, scheme, sea_opts, numerics::Diagonal::exclude);
}

/// Exact vacuum shift from the exact single-particle levels: every level moves
/// by the mean of V, so the sea either does not move at all or moves by the
/// same amount per level (an infinite total).
struct ExactVacuumShift {
  enum class Kind { zero, divergent_uniform };
  Kind kind = Kind::zero;
  double per_level = 0.0;

  bool is_zero() const noexcept { return kind == Kind::zero; }
};

inline constexpr double kZeroMeanTolerance = 1e-12;

inline ExactVacuumShift ht_exact_vacuum_shift(const Potential& pot, const ModelParams& params) {
  const double mean = pot.mean(params);
  if (std::abs(mean) <= kZeroMeanTolerance) return {};
  return {ExactVacuumShift::Kind::divergent_uniform, mean};
}

struct SchemeEntry {
  SummationScheme scheme;
  SeriesResult x_term;
  /// second_order_pp.value + x_term.value
  double total = 0.0;
  /// second_order_pp.best() + x_term.best()
  double total_extrapolated = 0.0;
};

struct HTShiftReport {
  FirstOrder first_order;
  SeriesResult second_order_pp;
  std::vector<SchemeEntry> schemes;
  ExactVacuumShift exact;
};

inline HTShiftReport ht_report(const Potential& pot, const ModelParams& params, int cutoff,
                               const std::vector<SummationScheme>& schemes,
                               const SumOptions& opts = {}, const quad::Options& qopts = {}) {
  HTShiftReport r;
  r.first_order = ht_first_order(pot, params, cutoff, qopts);
  r.second_order_pp = ht_second_order_pp(pot, params, cutoff, opts, qopts);
  for (const auto& s : schemes) {
    SchemeEntry e{s, ht_x_term(pot, params, s, opts, qopts)};
    e.total = r.second_order_pp.value + e.x_term.value;
    e.total_extrapolated = r.second_order_pp.best() + e.x_term.best();
    r.schemes.push_back(std::move(e));
  }
  r.exact = ht_exact_vacuum_shift(pot, params);
  return r;
}

/// Scheme menu used when none is requested: square, row-iterated with a 4x
/// inner reach, rectangular, energy-ordered and Abel-damped.
inline std::vector<SummationScheme> default_schemes(int cutoff, const ModelParams& params) {
  return {
      numerics::SquareCutoff{cutoff},
      numerics::RowIterated{cutoff, 4 * std::int64_t{cutoff}},
      numerics::RectangularCutoff{cutoff, 2 * std::int64_t{cutoff}},
      numerics::EnergyCutoff{-unperturbed_eigenvalue(LevelIndex::antiparticle(cutoff), params)},
      numerics::AbelRegularized{{0.08, 0.04, 0.02, 0.01}, cutoff},
  };
}

}  // namespace diracvac::holetheory
