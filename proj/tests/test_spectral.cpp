#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "diracvac/spectral.hpp"
#include "oracles.hpp"

using namespace diracvac;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

struct Named {
  const char* name;
  Potential v;
};

std::vector<Named> suite(const ModelParams& p) {
  std::vector<Named> out;
  for (double s : {0.1, 1.0}) {
    out.push_back({"linear", Potential::linear(s)});
    out.push_back({"constant", Potential::constant(s)});
    out.push_back({"sine", Potential::sine(s, pi / p.half_width())});
    for (double c : {0.1, 1.0}) out.push_back({"linear+c", Potential::polynomial({c, s})});
  }
  out.push_back({"quadratic", Potential::polynomial({0, 0, 1})});
  return out;
}

}  // namespace

TEST_CASE("model parameters and level labels") {
  CHECK_THROWS_AS(ModelParams(0.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(ModelParams(1.0, 0.5), std::invalid_argument);
  CHECK(ModelParams(2.0).half_width() == 2.0);
  CHECK(ModelParams(1.0).mass() == 0.0);

  CHECK_THROWS_AS(LevelIndex(0), std::invalid_argument);
  CHECK(LevelIndex(1).quantum_number() == 0);
  CHECK(LevelIndex(3).quantum_number() == 2);
  CHECK(LevelIndex(-1).quantum_number() == -1);
  CHECK(LevelIndex(-4).quantum_number() == -4);
  CHECK(LevelIndex::from_quantum_number(0) == LevelIndex(1));
  CHECK(LevelIndex::from_quantum_number(-2) == LevelIndex(-2));
  CHECK(LevelIndex::antiparticle(3).value() == -3);
}

TEST_CASE("unperturbed spectrum") {
  const ModelParams one(1.0), two(2.0);
  CHECK_THAT(unperturbed_eigenvalue(LevelIndex(1), one), WithinAbs(0.7853981634, 1e-10));
  CHECK(unperturbed_eigenvalue(LevelIndex(-1), one) == -pi / 4);
  CHECK_THAT(unperturbed_eigenvalue(LevelIndex(3), two), WithinRel(5 * pi / 8, 1e-15));

  double prev = -1e300;
  for (int k = -64; k <= 64; ++k) {
    if (k == 0) continue;
    const LevelIndex level(k);
    const double e = unperturbed_eigenvalue(level, one);
    CHECK(e > prev);
    prev = e;
    CHECK(e == (2.0 * level.quantum_number() + 1.0) * pi / 4.0);
    CHECK(unperturbed_eigenvalue(LevelIndex(-k), one) == -e);
  }
}

TEST_CASE("unperturbed modes: norm, wall condition, orthogonality") {
  const ModelParams params(1.0);
  for (int k : {-5, -1, 1, 2, 7}) {
    const auto m = unperturbed_mode(LevelIndex(k), params);
    CHECK_THAT(norm(m, params), WithinAbs(1.0, 1e-12));
    CHECK(m.boundary_residual(params) < 1e-12);
    CHECK(m.cplus().imag() == 0.0);
    CHECK_THAT(std::abs(m.cminus()), WithinRel(1.0 / std::sqrt(2.0), 1e-15));
  }
  const auto m1 = unperturbed_mode(LevelIndex(1), params);
  const auto m2 = unperturbed_mode(LevelIndex(2), params);
  CHECK(std::abs(inner_product(m1, m2, params)) < 1e-13);
}

TEST_CASE("Gram matrix of the first 64 unperturbed modes") {
  const ModelParams params(1.0);
  std::vector<Mode> modes;
  for (int j = 1; j <= 32; ++j) {
    modes.push_back(unperturbed_mode(LevelIndex(j), params));
    modes.push_back(unperturbed_mode(LevelIndex(-j), params));
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < modes.size(); ++r)
    for (std::size_t c = r; c < modes.size(); ++c) {
      const cd g = inner_product(modes[r], modes[c], params);
      worst = std::max(worst, std::abs(g - cd(r == c ? 1.0 : 0.0, 0.0)));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("exact perturbed eigenvalues") {
  const ModelParams params(1.0);
  for (double l : {0.1, 1.0, 10.0})
    for (int k : {-3, 1, 4})
      CHECK(perturbed_eigenvalue_exact(LevelIndex(k), Potential::linear(l), params) ==
            unperturbed_eigenvalue(LevelIndex(k), params));
  CHECK_THAT(perturbed_eigenvalue_exact(LevelIndex(2), Potential::constant(0.4), params),
             WithinAbs(unperturbed_eigenvalue(LevelIndex(2), params) + 0.4, 1e-15));
  CHECK_THAT(perturbed_eigenvalue_exact(LevelIndex(1), Potential::polynomial({0, 0, 1}), params),
             WithinAbs(pi / 4 + 1.0 / 3.0, 1e-15));
}

TEST_CASE("perturbed modes") {
  const ModelParams params(1.0);
  for (int k : {-2, 1, 3}) {
    const auto free = unperturbed_mode(LevelIndex(k), params);
    const auto same = perturbed_mode(LevelIndex(k), Potential::zero(), params);
    for (double x : {-1.0, -0.4, 0.3, 1.0}) {
      CHECK(std::abs(free.wplus(x) - same.wplus(x)) < 1e-12);
      CHECK(std::abs(free.wminus(x) - same.wminus(x)) < 1e-12);
    }
  }
  for (const auto& [name, v] : suite(params)) {
    INFO(name);
    for (int k : {-3, 1, 2}) {
      const auto m = perturbed_mode(LevelIndex(k), v, params);
      CHECK(m.boundary_residual(params) < 1e-12);
      CHECK_THAT(norm(m, params), WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("shooting agrees with the exact eigenvalue") {
  const ModelParams params(1.0);
  CHECK_THAT(eigenvalue_by_shooting(LevelIndex(1), Potential::zero(), params), WithinAbs(pi / 4, 1e-10));
  CHECK_THAT(eigenvalue_by_shooting(LevelIndex(1), Potential::polynomial({0, 0, 1}), params),
             WithinAbs(pi / 4 + 1.0 / 3.0, 1e-10));
  for (const auto& [name, v] : suite(params)) {
    INFO(name);
    for (int k : {-8, -1, 1, 5}) {
      INFO(k);
      CHECK_THAT(eigenvalue_by_shooting(LevelIndex(k), v, params),
                 WithinAbs(perturbed_eigenvalue_exact(LevelIndex(k), v, params), 1e-10));
    }
  }
}

TEST_CASE("shooting reports a missing root") {
  const ModelParams params(1.0);
  ShootingOptions opts;
  opts.continuation = false;
  // a uniform shift of 1 moves every level beyond the pi/8 bracket
  CHECK_THROWS_AS(eigenvalue_by_shooting(LevelIndex(1), Potential::constant(1.0), params, opts),
                  NoRootInBracket);
  CHECK_NOTHROW(eigenvalue_by_shooting(LevelIndex(1), Potential::constant(1.0), params));
}

TEST_CASE("matrix elements") {
  const ModelParams params(1.0);
  const auto lin = Potential::linear(1.0);

  for (int j = 1; j <= 20; ++j)
    CHECK(matrix_element(LevelIndex(-j), LevelIndex(-j), lin, params) == cd(0.0, 0.0));

  const cd v = matrix_element(LevelIndex(1), LevelIndex(-1), lin, params);
  CHECK_THAT(v.imag(), WithinAbs(oracle::kV1m1Imag, 1e-10));
  CHECK(v.real() == 0.0);
  const cd vq = matrix_element_quadrature(LevelIndex(1), LevelIndex(-1), lin, params);
  CHECK(std::abs(vq - v) < 1e-10);

  CHECK_THAT(matrix_element(LevelIndex(-2), LevelIndex(-2), Potential::polynomial({0, 0, 1}), params).real(),
             WithinAbs(oracle::kQuadraticDiagonal, 1e-13));
  const auto sine = Potential::sine(1.0, pi);
  for (int j = 1; j <= 3; ++j)
    CHECK(std::abs(matrix_element(LevelIndex(-j), LevelIndex(-j), sine, params)) < 1e-13);
}

TEST_CASE("closed form matches quadrature for the linear potential") {
  const ModelParams params(1.0);
  const auto lin = Potential::linear(1.0);
  double worst = 0.0;
  for (int m = -32; m <= 32; ++m)
    for (int n = -32; n <= 32; ++n) {
      if (m == 0 || n == 0) continue;
      const cd closed = matrix_element(LevelIndex(m), LevelIndex(n), lin, params);
      const cd quad = matrix_element_quadrature(LevelIndex(m), LevelIndex(n), lin, params);
      worst = std::max(worst, std::abs(closed - quad));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("matrix elements are hermitian and depend only on the level shift") {
  const ModelParams params(1.3);
  for (const auto& [name, v] : suite(params)) {
    INFO(name);
    for (int m : {-6, -1, 2, 5})
      for (int n : {-4, 1, 3}) {
        const LevelIndex lm(m), ln(n);
        const cd mn = matrix_element(lm, ln, v, params);
        CHECK(std::abs(mn - std::conj(matrix_element(ln, lm, v, params))) < 1e-13);
        CHECK(std::abs(mn - matrix_element_by_shift(ln.quantum_number() - lm.quantum_number(), v, params)) <
              1e-12);
      }
  }
}

TEST_CASE("overlaps") {
  const ModelParams params(1.0);
  for (int k : {-2, 1, 3})
    for (int n : {-2, 1, 3}) {
      const cd o = overlap(LevelIndex(k), LevelIndex(n), Potential::zero(), params);
      CHECK(std::abs(o - cd(k == n ? 1.0 : 0.0, 0.0)) < 1e-12);
    }

  for (const auto& ref : oracle::kOverlaps) {
    INFO(ref.k << " " << ref.n << " " << ref.lambda);
    const auto v = Potential::linear(ref.lambda);
    const cd want(ref.re, ref.im);
    CHECK(std::abs(overlap(LevelIndex(ref.k), LevelIndex(ref.n), v, params) - want) < 1e-12);
    const auto parts = overlap_parts(LevelIndex(ref.k).quantum_number() - LevelIndex(ref.n).quantum_number(),
                                     v, params);
    CHECK(std::abs(parts.value(params) - want) < 1e-13);
  }
  // a constant added to V changes eta but not the mode, so the overlap is unchanged
  const cd shifted = overlap(LevelIndex(1), LevelIndex(-1), Potential::polynomial({0.3, 1.0}), params);
  CHECK(std::abs(shifted - cd(oracle::kOverlaps[4].re, oracle::kOverlaps[4].im)) < 1e-12);
  const cd shifted_parts = overlap_parts(1, Potential::polynomial({0.3, 1.0}), params).value(params);
  CHECK(std::abs(shifted_parts - shifted) < 1e-12);
}

TEST_CASE("overlap rows are complete") {
  const ModelParams params(1.0);
  const auto v = Potential::linear(1.0);
  const OverlapTable table(v, params, 600);
  for (int k : {-2, 1, 4}) {
    long double sum = 0.0L;
    for (int j = 1; j <= 300; ++j) {
      sum += std::norm(table(LevelIndex(k), LevelIndex(j)));
      sum += std::norm(table(LevelIndex(k), LevelIndex(-j)));
    }
    CHECK(std::abs(1.0L - sum) < 1e-12L);
  }
}

TEST_CASE("first-order overlap approaches V / energy gap linearly in lambda") {
  const ModelParams params(1.0);
  const double gap = unperturbed_eigenvalue(LevelIndex(1), params) - unperturbed_eigenvalue(LevelIndex(-1), params);
  std::vector<double> deviation;
  for (double l : {1e-3, 1e-2, 1e-1}) {
    const auto v = Potential::linear(l);
    const cd first = matrix_element(LevelIndex(1), LevelIndex(-1), v, params) / gap;
    const cd exact = overlap(LevelIndex(1), LevelIndex(-1), v, params);
    deviation.push_back(std::abs(exact - first) / std::abs(first));
  }
  for (std::size_t i = 1; i < deviation.size(); ++i) {
    const double ratio = deviation[i] / deviation[i - 1];
    CHECK(ratio > 10.0 / 3.0);
    CHECK(ratio < 30.0);
  }
}

TEST_CASE("sign pairing") {
  const ModelParams params(1.0);
  CHECK(sign_pairing_violations(Potential::linear(5.0), params, 8).empty());
  // a uniform shift of 1 lifts eps_-1 = -pi/4 above zero
  CHECK(sign_pairing_violations(Potential::constant(1.0), params, 8) == std::vector<int>{-1});
  CHECK(sign_pairing_violations(Potential::constant(-2.5), params, 8) == std::vector<int>{1, 2});
}
