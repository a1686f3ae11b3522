#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "diracvac/errors.hpp"
#include "diracvac/parallel.hpp"

namespace diracvac::numerics {

// ---------------------------------------------------------------------------
// Compensated accumulation

/// Running sum with a Neumaier (improved Kahan) error term.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  void add(const CompensatedSum& other) {
    add(other.sum_);
    comp_ += other.comp_;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Pairwise reduction over a fixed binary tree: the tree shape depends only on
/// the number of partials, never on how they were produced.
inline CompensatedSum pairwise_reduce(std::vector<CompensatedSum> partials) {
  if (partials.empty()) return {};
  std::size_t n = partials.size();
  while (n > 1) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) partials[i].add(partials[i + half]);
    n = half;
  }
  return partials.front();
}

inline constexpr std::int64_t kBlockRows = 16;
inline constexpr std::int64_t kBlockTerms = 4096;

// ---------------------------------------------------------------------------
// Schemes

struct SquareCutoff {
  std::int64_t n = 1;
};
struct RectangularCutoff {
  std::int64_t nj = 1;
  std::int64_t nk = 1;
};
/// Outer index j, inner index k; each row is summed completely before the
/// rows are combined.
struct RowIterated {
  std::int64_t outer = 1;
  std::int64_t inner = 1;
};
/// Keeps indices whose level energy does not exceed emax.
struct EnergyCutoff {
  double emax = 1.0;
};
/// Weights each term by exp(-t (E_j + E_k)) for every t in `damping`
/// (strictly decreasing to 0) on a square index cutoff n.
struct AbelRegularized {
  std::vector<double> damping;
  std::int64_t n = 1;
};

using SummationScheme =
    std::variant<SquareCutoff, RectangularCutoff, RowIterated, EnergyCutoff, AbelRegularized>;

namespace detail {

/// Shortest %g form that reads back as the same double.
inline std::string shortest(double x) {
  char buf[32];
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

}  // namespace detail

/// Text form of a scheme, e.g. "square:512", "rect:512:1024", "row:512:2048",
/// "energy:402.12", "abel:512:0.08,0.04". Doubles are written to round-trip.
inline std::string describe(const SummationScheme& scheme) {
  struct {
    std::string operator()(const SquareCutoff& s) const { return "square:" + std::to_string(s.n); }
    std::string operator()(const RectangularCutoff& s) const {
      return "rect:" + std::to_string(s.nj) + ":" + std::to_string(s.nk);
    }
    std::string operator()(const RowIterated& s) const {
      return "row:" + std::to_string(s.outer) + ":" + std::to_string(s.inner);
    }
    std::string operator()(const EnergyCutoff& s) const { return "energy:" + detail::shortest(s.emax); }
    std::string operator()(const AbelRegularized& s) const {
      std::string out = "abel:" + std::to_string(s.n) + ":";
      for (std::size_t i = 0; i < s.damping.size(); ++i)
        out += (i ? "," : "") + detail::shortest(s.damping[i]);
      return out;
    }
  } visitor;
  return std::visit(visitor, scheme);
}

inline void validate(const SummationScheme& scheme) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("scheme: " + what); };
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SquareCutoff>) {
          if (s.n < 1) fail("cutoff must be >= 1");
        } else if constexpr (std::is_same_v<S, RectangularCutoff>) {
          if (s.nj < 1 || s.nk < 1) fail("cutoffs must be >= 1");
        } else if constexpr (std::is_same_v<S, RowIterated>) {
          if (s.outer < 1 || s.inner < 1) fail("cutoffs must be >= 1");
        } else if constexpr (std::is_same_v<S, EnergyCutoff>) {
          if (!(s.emax > 0.0)) fail("energy cutoff must be > 0");
        } else {
          if (s.n < 1) fail("cutoff must be >= 1");
          if (s.damping.empty()) fail("Abel damping sequence is empty");
          for (std::size_t i = 0; i < s.damping.size(); ++i) {
            if (!(s.damping[i] > 0.0)) fail("Abel damping parameters must be > 0");
            if (i > 0 && !(s.damping[i] < s.damping[i - 1]))
              fail("Abel damping sequence must be strictly decreasing");
          }
        }
      },
      scheme);
}

// ---------------------------------------------------------------------------
// Results

struct TracePoint {
  double cutoff = 0.0;
  double value = 0.0;
};

struct SeriesResult {
  double value = 0.0;
  std::vector<TracePoint> trace;
  std::optional<double> extrapolated;
  /// tail exponent used by the extrapolation
  int leading_exponent = 1;
  bool converged = false;
  double tolerance = 0.0;

  /// Extrapolated value when available, the raw partial sum otherwise.
  double best() const { return extrapolated.value_or(value); }
};

/// Leading exponent p of the tail c h^p, estimated from the last three
/// points as log(d1/d2)/log(h1/h2) with d the successive differences, rounded
/// to an integer in [1, 6]. Returns 1 when the differences do not shrink
/// geometrically.
inline int leading_exponent(const std::vector<double>& h, const std::vector<double>& p) {
  const std::size_t n = std::min(h.size(), p.size());
  if (n < 3) return 1;
  const double d1 = p[n - 2] - p[n - 3], d2 = p[n - 1] - p[n - 2];
  const double q = h[n - 3] / h[n - 2];
  if (d1 == 0.0 || d2 == 0.0 || !(q > 1.0)) return 1;
  const double r = d1 / d2;
  if (!(r > 1.0) || !std::isfinite(r)) return 1;
  return static_cast<int>(std::clamp(std::lround(std::log(r) / std::log(q)), 1L, 6L));
}

/// Richardson extrapolation to h = 0 through the last `order + 1` points,
/// eliminating the terms h^leading, ..., h^(leading + order - 1). With
/// leading = 1 this is polynomial (Neville) extrapolation.
inline std::optional<double> richardson(const std::vector<double>& h, const std::vector<double>& p,
                                        int order = 2, int leading = 1) {
  const std::size_t n = std::min<std::size_t>(h.size(), static_cast<std::size_t>(order) + 1);
  if (n < 2 || p.size() < n) return std::nullopt;
  // rows [1, h^leading, h^(leading+1), ...] | p, solved by Gaussian elimination
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
  for (std::size_t r = 0; r < n; ++r) {
    const double hr = h[h.size() - n + r];
    m[r][0] = 1.0;
    for (std::size_t c = 1; c < n; ++c) m[r][c] = std::pow(hr, double(leading) + double(c - 1));
    m[r][n] = p[p.size() - n + r];
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    std::swap(m[c], m[piv]);
    if (m[c][c] == 0.0) return std::nullopt;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return m[0][n] / m[0][0];
}

/// Fills value/extrapolated/converged from an ascending trace. `h` is the
/// extrapolation variable for each trace point (1/cutoff, or t for Abel).
inline SeriesResult finish(std::vector<TracePoint> trace, const std::vector<double>& h,
                           double tolerance) {
  SeriesResult r;
  r.trace = std::move(trace);
  r.tolerance = tolerance;
  if (r.trace.empty()) return r;
  r.value = r.trace.back().value;
  std::vector<double> p;
  for (const auto& t : r.trace) p.push_back(t.value);
  if (r.trace.size() >= 3) {
    r.leading_exponent = leading_exponent(h, p);
    r.extrapolated = richardson(h, p, 2, r.leading_exponent);
  }
  const std::size_t n = r.trace.size();
  r.converged = n >= 3 && std::abs(p[n - 1] - p[n - 2]) < tolerance &&
                std::abs(p[n - 2] - p[n - 3]) < tolerance;
  return r;
}

struct SumOptions {
  double tolerance = 1e-8;
  /// Maximum number of terms evaluated across all trace points.
  std::int64_t budget = std::int64_t{1} << 32;
  int threads = 1;
  /// Number of trace points at cutoff / 2^m, m = 0 .. trace_points - 1.
  int trace_points = 4;
  /// Level energy used by EnergyCutoff and AbelRegularized; defaults to the index.
  std::function<double(std::int64_t)> level_energy;
};

enum class Diagonal { exclude, include };

namespace detail {

inline std::vector<std::int64_t> halvings(std::int64_t n, int points) {
  std::vector<std::int64_t> out;
  for (int m = 0; m < points && n >= 1; ++m, n /= 2) {
    if (out.empty() || out.back() != n) out.push_back(n);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

inline void charge(std::int64_t& used, std::int64_t terms, const SumOptions& opts) {
  used += terms;
  if (used > opts.budget)
    throw BudgetExceeded("series: term budget of " + std::to_string(opts.budget) + " exceeded");
}

/// sum over j in [1, nj], k in [1, nk] of weight(j, k) * terms(j, k), rows
/// accumulated either flat (row-major into the block sum) or each row first.
template <class F, class W>
double rectangle(const F& terms, const W& weight, std::int64_t nj, std::int64_t nk,
                 Diagonal diag, bool rows_first, int threads) {
  const std::int64_t blocks = (nj + kBlockRows - 1) / kBlockRows;
  std::vector<CompensatedSum> partial(static_cast<std::size_t>(blocks));
  parallel_for(partial.size(), threads, [&](std::size_t b) {
    CompensatedSum block;
    const std::int64_t j0 = 1 + static_cast<std::int64_t>(b) * kBlockRows;
    const std::int64_t j1 = std::min(nj, j0 + kBlockRows - 1);
    for (std::int64_t j = j0; j <= j1; ++j) {
      CompensatedSum row;
      CompensatedSum& target = rows_first ? row : block;
      for (std::int64_t k = 1; k <= nk; ++k) {
        if (diag == Diagonal::exclude && k == j) continue;
        target.add(weight(j, k) * terms(j, k));
      }
      if (rows_first) block.add(row.value());
    }
    partial[b] = block;
  });
  return pairwise_reduce(std::move(partial)).value();
}

inline std::int64_t energy_index(const SumOptions& opts, double emax) {
  auto energy = [&](std::int64_t i) {
    return opts.level_energy ? opts.level_energy(i) : static_cast<double>(i);
  };
  std::int64_t n = 0;
  while (energy(n + 1) <= emax) {
    ++n;
    if (n > opts.budget) throw BudgetExceeded("series: energy cutoff admits too many levels");
  }
  return n;
}

}  // namespace detail

/// Sums terms(j, k) over j, k >= 1 (k != j unless `diag` is include) in the
/// order fixed by `scheme`. Rows are grouped into fixed blocks, each block is
/// accumulated with compensation, and blocks are combined by a fixed pairwise
/// tree, so the result is bit-identical for any thread count.
template <class F>
SeriesResult sum_double(const F& terms, const SummationScheme& scheme, const SumOptions& opts = {},
                        Diagonal diag = Diagonal::exclude) {
  validate(scheme);
  std::int64_t used = 0;
  const auto unit = [](std::int64_t, std::int64_t) { return 1.0; };
  std::vector<TracePoint> trace;
  std::vector<double> h;

  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SquareCutoff>) {
          for (auto n : detail::halvings(s.n, opts.trace_points)) {
            detail::charge(used, n * n, opts);
            trace.push_back({double(n), detail::rectangle(terms, unit, n, n, diag, false, opts.threads)});
            h.push_back(1.0 / n);
          }
        } else if constexpr (std::is_same_v<S, RectangularCutoff>) {
          const auto nj = detail::halvings(s.nj, opts.trace_points);
          const auto nk = detail::halvings(s.nk, opts.trace_points);
          const std::size_t m = std::min(nj.size(), nk.size());
          for (std::size_t i = 0; i < m; ++i) {
            const auto a = nj[nj.size() - m + i], b = nk[nk.size() - m + i];
            detail::charge(used, a * b, opts);
            trace.push_back({double(a), detail::rectangle(terms, unit, a, b, diag, false, opts.threads)});
            h.push_back(1.0 / a);
          }
        } else if constexpr (std::is_same_v<S, RowIterated>) {
          const auto outer = detail::halvings(s.outer, opts.trace_points);
          for (auto j : outer) {
            // inner cutoff scales with the outer one
            const std::int64_t k = std::max<std::int64_t>(1, (s.inner * j) / s.outer);
            detail::charge(used, j * k, opts);
            trace.push_back({double(j), detail::rectangle(terms, unit, j, k, diag, true, opts.threads)});
            h.push_back(1.0 / j);
          }
        } else if constexpr (std::is_same_v<S, EnergyCutoff>) {
          std::vector<double> caps;
          for (int m = opts.trace_points - 1; m >= 0; --m) caps.push_back(s.emax / double(1 << m));
          for (double cap : caps) {
            const std::int64_t n = detail::energy_index(opts, cap);
            if (n < 1) continue;
            if (!trace.empty() && trace.back().cutoff >= cap) continue;
            detail::charge(used, n * n, opts);
            trace.push_back({cap, detail::rectangle(terms, unit, n, n, diag, false, opts.threads)});
            h.push_back(1.0 / cap);
          }
        } else {
          auto energy = [&](std::int64_t i) {
            return opts.level_energy ? opts.level_energy(i) : static_cast<double>(i);
          };
          for (double t : s.damping) {
            detail::charge(used, s.n * s.n, opts);
            const auto weight = [&](std::int64_t j, std::int64_t k) {
              return std::exp(-t * (energy(j) + energy(k)));
            };
            trace.push_back({1.0 / t, detail::rectangle(terms, weight, s.n, s.n, diag, false, opts.threads)});
            h.push_back(t);
          }
        }
      },
      scheme);
  return finish(std::move(trace), h, opts.tolerance);
}

/// Compensated, deterministic partial sums of terms(i), i = 1..cutoff, traced
/// at cutoff / 2^m.
template <class F>
SeriesResult sum_single(const F& terms, std::int64_t cutoff, const SumOptions& opts = {}) {
  if (cutoff < 1) throw std::invalid_argument("sum_single: cutoff must be >= 1");
  std::int64_t used = 0;
  std::vector<TracePoint> trace;
  std::vector<double> h;
  for (auto n : detail::halvings(cutoff, opts.trace_points)) {
    detail::charge(used, n, opts);
    const std::int64_t blocks = (n + kBlockTerms - 1) / kBlockTerms;
    std::vector<CompensatedSum> partial(static_cast<std::size_t>(blocks));
    parallel_for(partial.size(), opts.threads, [&](std::size_t b) {
      CompensatedSum block;
      const std::int64_t i0 = 1 + static_cast<std::int64_t>(b) * kBlockTerms;
      const std::int64_t i1 = std::min(n, i0 + kBlockTerms - 1);
      for (std::int64_t i = i0; i <= i1; ++i) block.add(terms(i));
      partial[b] = block;
    });
    trace.push_back({double(n), pairwise_reduce(std::move(partial)).value()});
    h.push_back(1.0 / n);
  }
  return finish(std::move(trace), h, opts.tolerance);
}

}  // namespace diracvac::numerics
