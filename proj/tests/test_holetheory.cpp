#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "diracvac/holetheory.hpp"
#include "oracles.hpp"

using namespace diracvac;
using namespace diracvac::holetheory;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;
const ModelParams unit(1.0);

}  // namespace

TEST_CASE("first order") {
  const auto odd = ht_first_order(Potential::linear(1.0), unit, 200);
  CHECK(odd.partial_sum == 0.0);
  CHECK_FALSE(odd.divergent);

  const auto flat = ht_first_order(Potential::constant(0.7), unit, 200);
  CHECK(flat.divergent);
  CHECK_THAT(flat.per_level, WithinAbs(0.7, 1e-14));
  CHECK_THAT(flat.partial_sum, WithinRel(200 * 0.7, 1e-12));

  const auto mixed = ht_first_order(Potential::polynomial({0.3, 1.0}), unit, 100);
  CHECK(mixed.divergent);
  CHECK_THAT(mixed.per_level, WithinAbs(0.3, 1e-14));

  // every diagonal element of sin(pi x) vanishes by parity
  const auto wave = ht_first_order(Potential::sine(1.0, pi), unit, 64);
  CHECK_FALSE(wave.divergent);
  for (double t : wave.terms) CHECK(std::abs(t) < 1e-13);

  CHECK_THROWS_AS(ht_first_order(Potential::zero(), unit, 0), std::invalid_argument);
}

TEST_CASE("Pauli-enforced second order") {
  const auto r = ht_second_order_pp(Potential::linear(1.0), unit, 512);
  CHECK(r.value < 0.0);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].value <= r.trace[i - 1].value);
  REQUIRE(r.extrapolated);
  CHECK_THAT(*r.extrapolated, WithinAbs(oracle::kPairSumLinear4096, 1e-12));
  CHECK_THAT(*r.extrapolated, WithinRel(-1.0 / (3.0 * pi), 1e-10));
  CHECK(r.converged);

  CHECK(ht_second_order_pp(Potential::zero(), unit, 32).value == 0.0);
  CHECK_THAT(ht_second_order_pp(Potential::sine(1.0, pi), unit, 64).value,
             WithinAbs(oracle::kPairSumSine64, 1e-13));
}

TEST_CASE("second-order quantities scale as lambda squared") {
  for (double l : {0.3, 1.0}) {
    const auto one = ht_second_order_pp(Potential::linear(l), unit, 128);
    const auto two = ht_second_order_pp(Potential::linear(2 * l), unit, 128);
    CHECK_THAT(two.value, WithinRel(4.0 * one.value, 1e-12));
    const numerics::SummationScheme row = numerics::RowIterated{128, 512};
    const auto x1 = ht_x_term(Potential::linear(l), unit, row);
    const auto x2 = ht_x_term(Potential::linear(2 * l), unit, row);
    CHECK_THAT(x2.value, WithinRel(4.0 * x1.value, 1e-12));
  }
  const auto s1 = ht_second_order_pp(Potential::sine(0.5, pi), unit, 32);
  const auto s2 = ht_second_order_pp(Potential::sine(1.0, pi), unit, 32);
  CHECK_THAT(s2.value, WithinRel(4.0 * s1.value, 1e-12));
}

TEST_CASE("the sea-to-sea term depends on the summation scheme") {
  const auto lin = Potential::linear(1.0);
  const auto square = ht_x_term(lin, unit, numerics::SquareCutoff{512});
  CHECK(std::abs(square.value) < 1e-15);
  const auto sine_square = ht_x_term(Potential::sine(1.0, pi), unit, numerics::SquareCutoff{32});
  CHECK(std::abs(sine_square.value) < 1e-15);

  const auto row = ht_x_term(lin, unit, numerics::RowIterated{512, 2048});
  CHECK(row.value > 0.0);
  CHECK(std::abs(row.value - square.value) > 10.0 * row.tolerance);

  const auto pp = ht_second_order_pp(lin, unit, 512);
  REQUIRE(row.extrapolated);
  CHECK(std::abs(*row.extrapolated + *pp.extrapolated) < 0.01 * std::abs(*pp.extrapolated));
}

TEST_CASE("exact classification") {
  CHECK(ht_exact_vacuum_shift(Potential::linear(3.0), unit).is_zero());
  CHECK(ht_exact_vacuum_shift(Potential::sine(1.0, pi), unit).is_zero());
  const auto c = ht_exact_vacuum_shift(Potential::constant(0.4), unit);
  CHECK(c.kind == ExactVacuumShift::Kind::divergent_uniform);
  CHECK_THAT(c.per_level, WithinAbs(0.4, 1e-15));
  CHECK_THAT(ht_exact_vacuum_shift(Potential::polynomial({0.3, 1.0}), unit).per_level, WithinAbs(0.3, 1e-15));
}

TEST_CASE("report totals decompose and one scheme reproduces the exact answer") {
  const int n = 256;
  const auto lin = Potential::linear(1.0);
  const auto report = ht_report(lin, unit, n, default_schemes(n, unit));
  CHECK(report.exact.is_zero());
  CHECK(report.second_order_pp.value < 0.0);
  REQUIRE(report.schemes.size() == 5);
  bool reproduces = false;
  for (const auto& e : report.schemes) {
    INFO(numerics::describe(e.scheme));
    CHECK(e.total - report.second_order_pp.value - e.x_term.value == 0.0);
    CHECK(e.total_extrapolated == report.second_order_pp.best() + e.x_term.best());
    if (std::abs(e.total_extrapolated) < 0.01 * std::abs(report.second_order_pp.best())) reproduces = true;
  }
  CHECK(reproduces);
  // the square cutoff leaves the Pauli-enforced value in place
  CHECK(report.schemes[0].total == report.second_order_pp.value);
}

TEST_CASE("zero potential gives an all-zero report") {
  const auto report = ht_report(Potential::zero(), unit, 32, default_schemes(32, unit));
  CHECK(report.first_order.partial_sum == 0.0);
  CHECK(report.second_order_pp.value == 0.0);
  for (const auto& e : report.schemes) CHECK(e.total == 0.0);
  CHECK(report.exact.is_zero());
}

TEST_CASE("term budget propagates") {
  numerics::SumOptions opts;
  opts.budget = 100;
  CHECK_THROWS_AS(ht_second_order_pp(Potential::linear(1.0), unit, 64, opts), BudgetExceeded);
  CHECK_THROWS_AS(ht_x_term(Potential::linear(1.0), unit, numerics::RowIterated{64, 256}, opts), BudgetExceeded);
}
