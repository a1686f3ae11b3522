#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "diracvac/cli.hpp"

using namespace diracvac;
using namespace diracvac::cli;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

std::string config_error_field(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "<no error>";
}

RunConfig small(const std::string& potential = "linear") {
  RunConfig cfg;
  cfg.potential.name = potential;
  cfg.ht_cutoff = cfg.qft_cutoff = 32;
  cfg.spectrum_range = 4;
  return cfg;
}

struct Process {
  int status = -1;
  std::string out;
};

Process invoke(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " DIRACVAC_CLI " " + args + " 2>/dev/null";
  Process p;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) p.out.append(buf, n);
  const int raw = pclose(pipe);
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        out.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) rows.push_back(split_csv_line(line));
  return rows;
}

// Text fields must match exactly, numeric fields to 1e-12 relative (plus a
// small absolute floor for values that are zero up to round-off).
void compare_golden(const std::string& name, const std::string& got) {
  const auto path = std::filesystem::path(DIRACVAC_GOLDEN_DIR) / name;
  if (std::getenv("DIRACVAC_UPDATE_GOLDEN")) {
    std::ofstream(path) << got;
    WARN("rewrote " << path);
    return;
  }
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream want;
  want << in.rdbuf();
  const auto a = parse_csv(want.str()), b = parse_csv(got);
  REQUIRE(a.size() == b.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    REQUIRE(a[r].size() == b[r].size());
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      INFO(name << " row " << r << " column " << c);
      char* end = nullptr;
      const double x = std::strtod(a[r][c].c_str(), &end);
      const bool numeric = !a[r][c].empty() && *end == '\0';
      if (!numeric) {
        CHECK(a[r][c] == b[r][c]);
      } else {
        const double y = std::stod(b[r][c]);
        CHECK(std::abs(x - y) <= 1e-12 * std::abs(x) + 1e-15);
      }
    }
  }
}

}  // namespace

TEST_CASE("scheme strings") {
  const ModelParams p(1.0);
  CHECK(numerics::describe(parse_scheme("square", 64, p)) == "square:64");
  CHECK(numerics::describe(parse_scheme("rect", 64, p)) == "rect:64:128");
  CHECK(numerics::describe(parse_scheme("row", 64, p)) == "row:64:256");
  CHECK(numerics::describe(parse_scheme("row:10:30", 64, p)) == "row:10:30");
  CHECK(std::get<numerics::EnergyCutoff>(parse_scheme("energy", 4, p)).emax == 7 * pi / 4);
  CHECK(numerics::describe(parse_scheme("abel:16", 64, p)) == "abel:16:0.08,0.04,0.02,0.01");
  CHECK(numerics::describe(parse_scheme("abel:16:0.5,0.25", 64, p)) == "abel:16:0.5,0.25");
  for (const char* text : {"square", "rect:3:7", "row:5:9", "energy:2.5", "abel:8:0.3,0.1"}) {
    const auto s = parse_scheme(text, 16, p);
    CHECK(numerics::describe(parse_scheme(numerics::describe(s), 16, p)) == numerics::describe(s));
  }
  for (const char* bad : {"", "circle", "square:x", "square:0", "rect:1:2:3", "abel:8:0.1,0.2", "energy:-1"}) {
    INFO(bad);
    CHECK(config_error_field([&] { parse_scheme(bad, 16, p); }) == "scheme");
  }
}

TEST_CASE("configuration errors name the offending field") {
  CHECK(config_error_field([] { config_from_json(json::parse(R"({"model": {"a": "wide"}})")); }) == "model.a");
  CHECK(config_error_field([] { config_from_json(json::parse(R"({"model": {"m": 1}})")); }) == "model.m");
  CHECK(config_error_field([] { config_from_json(json::parse(R"({"cutoffs": {"depth": 3}})")); }) ==
        "cutoffs.depth");
  CHECK(config_error_field([] { config_from_json(json::parse(R"({"colour": 1})")); }) == "colour");
  CHECK(config_error_field([] { config_from_json(json::parse(R"({"output": {"format": "xml"}})")); }) ==
        "output.format");
  CHECK(config_error_field([] { load_config("/nonexistent/diracvac.json"); }) == "config");

  auto check = [](auto mutate, const char* field) {
    RunConfig cfg;
    mutate(cfg);
    CHECK(config_error_field([&] { validate(cfg); }) == field);
  };
  check([](RunConfig& c) { c.a = 0.0; }, "model.a");
  check([](RunConfig& c) { c.potential.name = "cubic"; }, "potential.name");
  check([](RunConfig& c) { c.potential.expression = "exp(x)"; }, "potential");
  check([](RunConfig& c) { c.ht_cutoff = 0; }, "cutoffs.ht");
  check([](RunConfig& c) { c.qft_cutoff = -3; }, "cutoffs.qft");
  check([](RunConfig& c) { c.series_tolerance = 0.0; }, "tolerances.series");
  check([](RunConfig& c) { c.quadrature_tolerance = -1.0; }, "tolerances.quadrature");
  check([](RunConfig& c) { c.threads = 0; }, "threads");
  check([](RunConfig& c) { c.particles = {2, 2}; }, "occupation");
  check([](RunConfig& c) { c.schemes = {"spiral"}; }, "scheme");
}

TEST_CASE("configuration round trip") {
  RunConfig cfg = small("sine");
  cfg.a = 1.5;
  cfg.schemes = {"square", "row:16:64"};
  cfg.sweep = {0.01, 0.02};
  cfg.particles = {1};
  cfg.format = Format::csv;
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.a == 1.5);
  CHECK(back.potential.name == "sine");
  CHECK(back.format == Format::csv);
}

TEST_CASE("registry") {
  const ModelParams p(2.0);
  for (const auto& [name, entry] : registry()) {
    INFO(name);
    PotentialSpec spec{name, 0.5, 0.25, ""};
    CHECK_NOTHROW(make_potential(spec, p));
  }
  CHECK_THAT(make_potential({"sine", 2.0, 0.0, ""}, p)(1.0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(make_potential({"linear_plus_constant", 1.0, 0.3, ""}, p).mean(p), WithinAbs(0.3, 1e-15));
  CHECK_THAT(make_potential_at({"linear", 1.0, 0.0, "x^2"}, 3.0, p)(2.0), WithinAbs(12.0, 1e-15));
  CHECK_THROWS_AS(make_potential({"cubic", 1.0, 0.0, ""}, p), ConfigError);
}

TEST_CASE("spectrum command") {
  auto cfg = small("zero");
  const auto free = cmd_spectrum(cfg);
  REQUIRE(free.rows.size() == 8);
  const double want[] = {-7, -5, -3, -1, 1, 3, 5, 7};
  for (std::size_t i = 0; i < 8; ++i) CHECK(free.rows[i].epsilon == want[i] * pi / 4);

  cfg.potential = {"linear", 3.0, 0.0, ""};
  for (const auto& row : cmd_spectrum(cfg).rows) CHECK(row.shift == 0.0);
  cfg.potential = {"constant", 1.0, 0.3, ""};
  for (const auto& row : cmd_spectrum(cfg).rows) CHECK_THAT(row.shift, WithinAbs(0.3, 1e-15));
  cfg.potential = {"constant", 1.0, 1.0, ""};
  CHECK(cmd_spectrum(cfg).sign_pairing_violations == std::vector<int>{-1});
}

TEST_CASE("ht command") {
  auto cfg = small();
  cfg.schemes = {"square", "row"};
  const auto r = cmd_ht(cfg);
  CHECK(r.exact.is_zero());
  CHECK(r.second_order_pp.value < 0.0);
  REQUIRE(r.schemes.size() == 2);
  CHECK(r.schemes[0].x_term.value != r.schemes[1].x_term.value);

  cfg.potential.name = "zero";
  cfg.schemes.clear();
  const auto z = cmd_ht(cfg);
  CHECK(z.first_order.partial_sum == 0.0);
  CHECK(z.second_order_pp.value == 0.0);
  for (const auto& e : z.schemes) CHECK(e.total == 0.0);
}

TEST_CASE("qft command") {
  auto cfg = small();
  cfg.sweep = {0.01, 0.02, 0.05, 0.1};
  cfg.particles = {1, 2};
  const auto r = cmd_qft(cfg);
  CHECK(r.exact.value < 0.0);
  CHECK(r.second_order.value == holetheory::ht_second_order_pp(Potential::linear(1.0), ModelParams(1.0), 32).value);
  REQUIRE(r.system_shift);
  CHECK_THAT(*r.system_shift, WithinAbs(r.exact.value, 1e-15));
  CHECK(r.completeness_defect < 1e-3);
  CHECK(r.remainder_cancellation_free);
  REQUIRE(r.sweep.size() == 4);
  for (const auto& row : r.sweep) {
    CHECK(row.exact < 0.0);
    CHECK_THAT(row.second_order, WithinRel(r.second_order.value * row.lambda * row.lambda, 1e-12));
  }

  cfg = small("zero");
  const auto z = cmd_qft(cfg);
  CHECK(z.exact.value == 0.0);
  CHECK(z.second_order.value == 0.0);
}

TEST_CASE("compare command") {
  auto cfg = small();
  cfg.ht_cutoff = cfg.qft_cutoff = 128;
  const auto r = cmd_compare(cfg);
  CHECK(r.checks.at("ht_exact_zero"));
  CHECK(r.checks.at("qft_exact_negative"));
  CHECK(r.checks.at("second_order_identity"));
  CHECK(r.checks.at("method_ii_reproduces_ht_exact"));
  CHECK(r.flags == std::vector<std::string>{"ht_qft_mismatch"});

  const auto z = cmd_compare(small("zero"));
  CHECK(z.flags.empty());
  for (const auto& e : z.entries) {
    REQUIRE(e.value);
    CHECK(*e.value == 0.0);
  }

  const auto s = cmd_compare(small("sine"));
  CHECK(s.checks.at("ht_exact_zero"));
  CHECK(s.checks.at("second_order_identity"));
  CHECK(s.flags == std::vector<std::string>{"ht_qft_mismatch"});

  // a nonzero mean makes the hole-theory shift infinite
  auto shifted = small("constant");
  shifted.potential.c = 0.3;
  const auto c = cmd_compare(shifted);
  CHECK(c.entries.front().quantity == "ht_exact");
  CHECK_FALSE(c.entries.front().value);
}

TEST_CASE("JSON reports re-parse to the same values") {
  auto cfg = small();
  const auto ht = cmd_ht(cfg);
  const json j = ht;
  const auto back = ht_report_from_json(json::parse(j.dump()));
  CHECK(json(back) == j);
  CHECK(back.second_order_pp.value == ht.second_order_pp.value);
  CHECK(back.schemes.size() == ht.schemes.size());

  cfg.sweep = {0.1};
  const auto qft = cmd_qft(cfg);
  const auto qback = qft_report_from_json(json::parse(to_json(qft).dump()));
  CHECK(to_json(qback) == to_json(qft));
  CHECK(qback.exact.value == qft.exact.value);

  const auto text = run("spectrum", small());
  const auto doc = json::parse(text);
  CHECK(doc.at("units") == "hbar=c=1");
  CHECK(doc.at("command") == "spectrum");
  CHECK(doc.at("report").at("levels").size() == 8);
}

TEST_CASE("golden CSV output") {
  auto cfg = small();
  cfg.format = Format::csv;
  cfg.ht_cutoff = cfg.qft_cutoff = 16;
  compare_golden("spectrum_linear.csv", run("spectrum", cfg));
  compare_golden("ht_linear.csv", run("ht", cfg));
  compare_golden("compare_linear.csv", run("compare", cfg));
  cfg.potential = {"sine", 1.0, 0.0, ""};
  compare_golden("qft_sine.csv", run("qft", cfg));
}

TEST_CASE("command-line executable") {
  auto ok = invoke("spectrum --range 2 --format csv --potential zero");
  CHECK(ok.status == kOk);
  CHECK(ok.out.rfind("k,epsilon,eta,shift\n", 0) == 0);
  CHECK(parse_csv(ok.out).size() == 5);

  auto expr = invoke("spectrum --range 1 --potential '0.3 + x' --format json");
  CHECK(expr.status == kOk);
  CHECK_THAT(json::parse(expr.out).at("report").at("levels").at(0).at("shift").get<double>(), WithinAbs(0.3, 1e-15));

  CHECK(invoke("spectrum --a -1").status == kConfigError);
  CHECK(invoke("spectrum --potential 'exp(x)'").status == kConfigError);
  CHECK(invoke("ht --scheme spiral --cutoff 8").status == kConfigError);
  CHECK(invoke("spectrum --no-such-flag").status == kConfigError);
  CHECK(invoke("").status == kConfigError);
  CHECK(invoke("ht --cutoff 64 --budget 100").status == kBudgetExceeded);
  CHECK(invoke("qft --cutoff 8 --quad-tolerance 1e-300").status == kQuadratureNotConverged);

  const auto dir = std::filesystem::temp_directory_path() / "diracvac_cli_test";
  std::filesystem::create_directories(dir);
  const auto config = dir / "config.json";
  std::ofstream(config) << R"({"potential": {"name": "constant", "c": 0.25}, "cutoffs": {"spectrum": 2},
                               "output": {"format": "csv"}})";
  const auto via_env = invoke("spectrum", "DIRACVAC_CONFIG=" + config.string());
  CHECK(via_env.status == kOk);
  const auto rows = parse_csv(via_env.out);
  REQUIRE(rows.size() == 5);
  CHECK(std::stod(rows[1][3]) == 0.25);
  // flags override the file
  const auto overridden = invoke("spectrum --range 1", "DIRACVAC_CONFIG=" + config.string());
  CHECK(parse_csv(overridden.out).size() == 3);

  const auto out = dir / "spectrum.csv";
  CHECK(invoke("spectrum --out " + out.string(), "DIRACVAC_CONFIG=" + config.string()).status == kOk);
  CHECK(std::filesystem::file_size(out) > 0);
  std::filesystem::remove_all(dir);
}
