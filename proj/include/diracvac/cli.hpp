#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "diracvac/errors.hpp"
#include "diracvac/holetheory.hpp"
#include "diracvac/model.hpp"
#include "diracvac/numerics.hpp"
#include "diracvac/potential.hpp"
#include "diracvac/qftvacuum.hpp"
#include "diracvac/spectral.hpp"

namespace diracvac::cli {

using json = nlohmann::json;

inline constexpr const char* kConfigEnv = "DIRACVAC_CONFIG";

enum class Format { csv, json };

/// Named potential with its scale parameters, or an inline expression (when
/// `expression` is nonempty the name and parameters are ignored).
struct PotentialSpec {
  std::string name = "linear";
  double lambda = 1.0;
  double c = 0.0;
  std::string expression;
};

struct RunConfig {
  double a = 1.0;
  PotentialSpec potential;
  int spectrum_range = 8;  ///< levels 1 <= |k| <= range
  int ht_cutoff = 512;
  int qft_cutoff = 512;
  int window = 8;          ///< completeness and spectral-resolution window
  std::vector<std::string> schemes;  ///< empty selects the default menu
  double quadrature_tolerance = 1e-13;
  double series_tolerance = 1e-8;
  Format format = Format::json;
  std::string out = "-";
  int threads = 1;
  std::int64_t budget = std::int64_t{1} << 32;
  std::vector<double> sweep;  ///< lambda values for the qft sweep
  std::vector<int> particles;
  std::vector<int> antiparticles;

  ModelParams params() const { return ModelParams(a); }
  quad::Options quadrature() const {
    quad::Options q;
    q.abs_tol = quadrature_tolerance;
    q.rel_tol = 10.0 * quadrature_tolerance;
    return q;
  }
  numerics::SumOptions series() const {
    numerics::SumOptions s;
    s.tolerance = series_tolerance;
    s.budget = budget;
    s.threads = threads;
    return s;
  }
};

// ---------------------------------------------------------------------------
// Potential registry

struct RegistryEntry {
  std::string formula;
  std::function<Potential(double lambda, double c, const ModelParams&)> make;
};

inline const std::map<std::string, RegistryEntry>& registry() {
  static const std::map<std::string, RegistryEntry> entries{
      {"zero", {"0", [](double, double, const ModelParams&) { return Potential::zero(); }}},
      {"linear", {"lambda*x", [](double l, double, const ModelParams&) { return Potential::linear(l); }}},
      {"constant", {"c", [](double, double c, const ModelParams&) { return Potential::constant(c); }}},
      {"linear_plus_constant",
       {"lambda*x + c",
        [](double l, double c, const ModelParams&) { return Potential::polynomial({c, l}); }}},
      {"sine",
       {"lambda*sin(pi*x/a)",
        [](double l, double, const ModelParams& p) {
          return Potential::sine(l, std::numbers::pi / p.half_width());
        }}},
      {"quadratic",
       {"lambda*x^2", [](double l, double, const ModelParams&) { return Potential::polynomial({0, 0, l}); }}},
  };
  return entries;
}

inline Potential make_potential(const PotentialSpec& spec, const ModelParams& params) {
  if (!spec.expression.empty()) return parse_potential(spec.expression);
  const auto it = registry().find(spec.name);
  if (it == registry().end()) throw ConfigError("potential", "unknown potential '" + spec.name + "'");
  return it->second.make(spec.lambda, spec.c, params);
}

/// The potential at scale lambda: the named form with its lambda replaced,
/// or an inline expression multiplied by lambda.
inline Potential make_potential_at(const PotentialSpec& spec, double lambda,
                                   const ModelParams& params) {
  if (!spec.expression.empty()) return parse_potential(spec.expression).scaled(lambda);
  PotentialSpec s = spec;
  s.lambda = lambda;
  return make_potential(s, params);
}

// ---------------------------------------------------------------------------
// Schemes

inline const std::vector<double>& default_abel_damping() {
  static const std::vector<double> t{0.08, 0.04, 0.02, 0.01};
  return t;
}

/// "square[:N]", "rect[:Nj:Nk]", "row[:J:K]", "energy[:E]", "abel[:N[:t1,t2,...]]".
/// Missing numbers default from `cutoff`: rect N x 2N, row N x 4N, energy up
/// to the N-th sea level.
inline numerics::SummationScheme parse_scheme(const std::string& text, int cutoff,
                                              const ModelParams& params) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw ConfigError("scheme", "empty scheme");
  auto fail = [&](const std::string& why) -> void {
    throw ConfigError("scheme", "'" + text + "': " + why);
  };
  auto integer = [&](std::size_t i, std::int64_t fallback) -> std::int64_t {
    if (i >= parts.size()) return fallback;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(parts[i], &used);
    } catch (const std::exception&) {
      fail("expected an integer");
    }
    if (used != parts[i].size()) fail("expected an integer");
    return v;
  };
  auto real = [&](const std::string& t) -> double {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      fail("expected a number");
    }
    if (used != t.size()) fail("expected a number");
    return v;
  };
  const std::string& kind = parts[0];
  const std::int64_t n = cutoff;
  numerics::SummationScheme scheme;
  std::size_t arity = 1;
  if (kind == "square") {
    scheme = numerics::SquareCutoff{integer(1, n)};
    arity = 2;
  } else if (kind == "rect") {
    scheme = numerics::RectangularCutoff{integer(1, n), integer(2, 2 * n)};
    arity = 3;
  } else if (kind == "row") {
    scheme = numerics::RowIterated{integer(1, n), integer(2, 4 * n)};
    arity = 3;
  } else if (kind == "energy") {
    const double emax = parts.size() > 1
                            ? real(parts[1])
                            : -unperturbed_eigenvalue(LevelIndex::antiparticle(cutoff), params);
    scheme = numerics::EnergyCutoff{emax};
    arity = 2;
  } else if (kind == "abel") {
    std::vector<double> damping = default_abel_damping();
    if (parts.size() > 2) {
      damping.clear();
      std::stringstream ts(parts[2]);
      for (std::string t; std::getline(ts, t, ',');) damping.push_back(real(t));
    }
    scheme = numerics::AbelRegularized{damping, integer(1, n)};
    arity = 3;
  } else {
    fail("unknown scheme (square, rect, row, energy, abel)");
  }
  if (parts.size() > arity) fail("too many fields");
  try {
    numerics::validate(scheme);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  return scheme;
}

inline std::vector<numerics::SummationScheme> schemes_for(const RunConfig& cfg) {
  if (cfg.schemes.empty()) return holetheory::default_schemes(cfg.ht_cutoff, cfg.params());
  std::vector<numerics::SummationScheme> out;
  for (const auto& s : cfg.schemes) out.push_back(parse_scheme(s, cfg.ht_cutoff, cfg.params()));
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

inline void validate(const RunConfig& cfg) {
  if (!(cfg.a > 0.0) || !std::isfinite(cfg.a)) throw ConfigError("model.a", "must be > 0");
  if (cfg.potential.expression.empty()) {
    if (!registry().count(cfg.potential.name))
      throw ConfigError("potential.name", "unknown potential '" + cfg.potential.name + "'");
  } else {
    parse_potential(cfg.potential.expression);
  }
  if (!std::isfinite(cfg.potential.lambda)) throw ConfigError("potential.lambda", "must be finite");
  if (!std::isfinite(cfg.potential.c)) throw ConfigError("potential.c", "must be finite");
  if (cfg.spectrum_range < 1) throw ConfigError("cutoffs.spectrum", "must be >= 1");
  if (cfg.ht_cutoff < 1) throw ConfigError("cutoffs.ht", "must be >= 1");
  if (cfg.qft_cutoff < 1) throw ConfigError("cutoffs.qft", "must be >= 1");
  if (cfg.window < 1) throw ConfigError("cutoffs.window", "must be >= 1");
  if (!(cfg.quadrature_tolerance > 0.0)) throw ConfigError("tolerances.quadrature", "must be > 0");
  if (!(cfg.series_tolerance > 0.0)) throw ConfigError("tolerances.series", "must be > 0");
  if (cfg.threads < 1) throw ConfigError("threads", "must be >= 1");
  if (cfg.budget < 1) throw ConfigError("budget", "must be >= 1");
  for (double l : cfg.sweep)
    if (!std::isfinite(l)) throw ConfigError("sweep", "values must be finite");
  try {
    qftvacuum::OccupationSet(cfg.particles, cfg.antiparticles);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("occupation", e.what());
  }
  schemes_for(cfg);
}

namespace detail {

template <class T>
T field(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key, "wrong type");
  }
}

inline void only_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "config" : path, "expected an object");
  for (const auto& [k, v] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(path + k, "unknown key");
  }
}

}  // namespace detail

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw ConfigError("output.format", "expected 'csv' or 'json'");
}

inline std::string to_string(Format f) { return f == Format::csv ? "csv" : "json"; }

/// Reads a configuration object; absent keys keep their defaults.
inline RunConfig config_from_json(const json& j, RunConfig cfg = {}) {
  using detail::field;
  detail::only_keys(j, "", {"model", "potential", "cutoffs", "schemes", "tolerances", "output",
                            "threads", "budget", "sweep", "occupation"});
  if (j.contains("model")) {
    const auto& m = j["model"];
    detail::only_keys(m, "model.", {"a", "m"});
    cfg.a = field(m, "a", "model.", cfg.a);
    if (field(m, "m", "model.", 0.0) != 0.0)
      throw ConfigError("model.m", "only the massless model is supported");
  }
  if (j.contains("potential")) {
    const auto& p = j["potential"];
    detail::only_keys(p, "potential.", {"name", "lambda", "c", "expression"});
    cfg.potential.name = field(p, "name", "potential.", cfg.potential.name);
    cfg.potential.lambda = field(p, "lambda", "potential.", cfg.potential.lambda);
    cfg.potential.c = field(p, "c", "potential.", cfg.potential.c);
    cfg.potential.expression = field(p, "expression", "potential.", cfg.potential.expression);
  }
  if (j.contains("cutoffs")) {
    const auto& c = j["cutoffs"];
    detail::only_keys(c, "cutoffs.", {"spectrum", "ht", "qft", "window"});
    cfg.spectrum_range = field(c, "spectrum", "cutoffs.", cfg.spectrum_range);
    cfg.ht_cutoff = field(c, "ht", "cutoffs.", cfg.ht_cutoff);
    cfg.qft_cutoff = field(c, "qft", "cutoffs.", cfg.qft_cutoff);
    cfg.window = field(c, "window", "cutoffs.", cfg.window);
  }
  cfg.schemes = detail::field(j, "schemes", "", cfg.schemes);
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    detail::only_keys(t, "tolerances.", {"quadrature", "series"});
    cfg.quadrature_tolerance = field(t, "quadrature", "tolerances.", cfg.quadrature_tolerance);
    cfg.series_tolerance = field(t, "series", "tolerances.", cfg.series_tolerance);
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    detail::only_keys(o, "output.", {"format", "path"});
    cfg.format = parse_format(field(o, "format", "output.", to_string(cfg.format)));
    cfg.out = field(o, "path", "output.", cfg.out);
  }
  cfg.threads = field(j, "threads", "", cfg.threads);
  cfg.budget = field(j, "budget", "", cfg.budget);
  cfg.sweep = field(j, "sweep", "", cfg.sweep);
  if (j.contains("occupation")) {
    const auto& o = j["occupation"];
    detail::only_keys(o, "occupation.", {"particles", "antiparticles"});
    cfg.particles = field(o, "particles", "occupation.", cfg.particles);
    cfg.antiparticles = field(o, "antiparticles", "occupation.", cfg.antiparticles);
  }
  return cfg;
}

inline json config_to_json(const RunConfig& cfg) {
  json pot = {{"name", cfg.potential.name}, {"lambda", cfg.potential.lambda}, {"c", cfg.potential.c}};
  if (!cfg.potential.expression.empty()) pot = {{"expression", cfg.potential.expression}};
  return {
      {"model", {{"a", cfg.a}}},
      {"potential", pot},
      {"cutoffs",
       {{"spectrum", cfg.spectrum_range}, {"ht", cfg.ht_cutoff}, {"qft", cfg.qft_cutoff}, {"window", cfg.window}}},
      {"schemes", cfg.schemes},
      {"tolerances", {{"quadrature", cfg.quadrature_tolerance}, {"series", cfg.series_tolerance}}},
      {"output", {{"format", to_string(cfg.format)}, {"path", cfg.out}}},
      {"threads", cfg.threads},
      {"budget", cfg.budget},
      {"sweep", cfg.sweep},
      {"occupation", {{"particles", cfg.particles}, {"antiparticles", cfg.antiparticles}}},
  };
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open '" + path + "'");
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports

struct SpectrumRow {
  int k = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  double shift = 0.0;
};

struct SpectrumReport {
  std::vector<SpectrumRow> rows;
  std::vector<int> sign_pairing_violations;
};

struct SweepRow {
  double lambda = 0.0;
  double second_order = 0.0;
  double exact = 0.0;
  double remainder = 0.0;
};

struct QftReport {
  numerics::SeriesResult second_order;
  numerics::SeriesResult exact;
  numerics::SeriesResult remainder;
  bool remainder_cancellation_free = false;
  double completeness_defect = 0.0;
  double resolution_residual = 0.0;
  std::optional<double> system_shift;
  std::vector<SweepRow> sweep;
};

struct CompareEntry {
  std::string quantity;
  std::string scheme;
  std::optional<double> value;  ///< empty when the quantity diverges
  std::optional<double> extrapolated;
};

struct CompareReport {
  std::vector<CompareEntry> entries;
  std::map<std::string, bool> checks;
  std::vector<std::string> flags;
};

inline SpectrumReport cmd_spectrum(const RunConfig& cfg) {
  validate(cfg);
  const auto params = cfg.params();
  const auto pot = make_potential(cfg.potential, params);
  SpectrumReport r;
  for (int k = -cfg.spectrum_range; k <= cfg.spectrum_range; ++k) {
    if (k == 0) continue;
    const LevelIndex level(k);
    const double eps = unperturbed_eigenvalue(level, params);
    const double eta = perturbed_eigenvalue_exact(level, pot, params);
    r.rows.push_back({k, eps, eta, eta - eps});
  }
  r.sign_pairing_violations = sign_pairing_violations(pot, params, cfg.spectrum_range);
  return r;
}

inline holetheory::HTShiftReport cmd_ht(const RunConfig& cfg) {
  validate(cfg);
  const auto params = cfg.params();
  return holetheory::ht_report(make_potential(cfg.potential, params), params, cfg.ht_cutoff,
                               schemes_for(cfg), cfg.series(), cfg.quadrature());
}

inline QftReport cmd_qft(const RunConfig& cfg) {
  validate(cfg);
  const auto params = cfg.params();
  const auto pot = make_potential(cfg.potential, params);
  const auto opts = cfg.series();
  const auto qopts = cfg.quadrature();
  const int n = cfg.qft_cutoff;
  QftReport r;
  {
    const auto table = qftvacuum::overlap_table(pot, params, n, qopts, cfg.threads);
    r.second_order = qftvacuum::qft_second_order(pot, params, n, opts, qopts);
    r.exact = qftvacuum::qft_vacuum_shift_exact(table, pot, n, opts);
    const auto rem = qftvacuum::qft_remainder(table, pot, n, opts, qopts);
    r.remainder = rem.series;
    r.remainder_cancellation_free = rem.cancellation_free;
    r.completeness_defect = qftvacuum::bogoliubov_blocks(table, n).completeness_defect(cfg.window);
    if (n > cfg.window)
      r.resolution_residual = qftvacuum::spectral_resolution_check(
          table, pot, n, cfg.window, qftvacuum::Conjugation::resolution, qopts);
    else
      r.resolution_residual = qftvacuum::spectral_resolution_check(
          pot, params, n, cfg.window, qftvacuum::Conjugation::resolution, qopts, cfg.threads);
  }
  if (!cfg.particles.empty() || !cfg.antiparticles.empty())
    r.system_shift = qftvacuum::system_shift(qftvacuum::OccupationSet(cfg.particles, cfg.antiparticles),
                                             pot, params, r.exact.value);
  for (double lambda : cfg.sweep) {
    const auto p = make_potential_at(cfg.potential, lambda, params);
    const auto table = qftvacuum::overlap_table(p, params, n, qopts, cfg.threads);
    SweepRow row;
    row.lambda = lambda;
    row.second_order = qftvacuum::qft_second_order(p, params, n, opts, qopts).value;
    row.exact = qftvacuum::qft_vacuum_shift_exact(table, p, n, opts).value;
    row.remainder = qftvacuum::qft_remainder(table, p, n, opts, qopts).series.value;
    r.sweep.push_back(row);
  }
  return r;
}

/// Hole-theory and field-theory shifts side by side. A mismatch is flagged
/// when the exact hole-theory shift is not zero, or when the exact
/// field-theory shift differs from zero by more than 100 series tolerances.
inline CompareReport cmd_compare(const RunConfig& cfg) {
  validate(cfg);
  const auto params = cfg.params();
  const auto pot = make_potential(cfg.potential, params);
  const auto opts = cfg.series();
  const auto qopts = cfg.quadrature();
  const double margin = 100.0 * cfg.series_tolerance;

  const auto ht = cmd_ht(cfg);
  const auto qft2 = qftvacuum::qft_second_order(pot, params, cfg.ht_cutoff, opts, qopts);
  const auto qft = qftvacuum::qft_vacuum_shift_exact(pot, params, cfg.qft_cutoff, opts, qopts);

  CompareReport r;
  if (ht.exact.is_zero())
    r.entries.push_back({"ht_exact", "", 0.0, std::nullopt});
  else
    r.entries.push_back({"ht_exact", "", std::nullopt, std::nullopt});
  r.entries.push_back({"ht_second_order_pp", "", ht.second_order_pp.value, ht.second_order_pp.extrapolated});
  for (const auto& e : ht.schemes) {
    std::optional<double> ext;
    if (ht.second_order_pp.extrapolated && e.x_term.extrapolated) ext = e.total_extrapolated;
    r.entries.push_back({"ht_second_order", numerics::describe(e.scheme), e.total, ext});
  }
  r.entries.push_back({"qft_second_order", "", qft2.value, qft2.extrapolated});
  r.entries.push_back({"qft_exact", "", qft.value, qft.extrapolated});

  r.checks["ht_exact_zero"] = ht.exact.is_zero();
  r.checks["qft_exact_negative"] = qft.value < -margin;
  r.checks["second_order_identity"] =
      std::abs(qft2.value - ht.second_order_pp.value) <= 1e-14 * std::max(1.0, std::abs(qft2.value));
  const double ht_pp = ht.second_order_pp.best();
  bool method_ii = false;
  for (const auto& e : ht.schemes) {
    const double total = e.total_extrapolated;
    method_ii = method_ii || (ht_pp == 0.0 ? total == 0.0 : std::abs(total) <= 0.01 * std::abs(ht_pp));
  }
  r.checks["method_ii_reproduces_ht_exact"] = ht.exact.is_zero() && method_ii;
  const bool mismatch = !ht.exact.is_zero() || std::abs(qft.value) > margin;
  r.checks["ht_qft_mismatch"] = mismatch;
  if (mismatch) r.flags.push_back("ht_qft_mismatch");
  return r;
}

// ---------------------------------------------------------------------------
// JSON

inline json meta(const std::string& command, const RunConfig& cfg) {
  const auto params = cfg.params();
  return {{"units", std::string(kUnits)},
          {"command", command},
          {"a", cfg.a},
          {"potential", make_potential(cfg.potential, params).describe()},
          {"config", config_to_json(cfg)}};
}

}  // namespace diracvac::cli

namespace diracvac::numerics {

inline void to_json(nlohmann::json& j, const TracePoint& t) { j = {{"cutoff", t.cutoff}, {"value", t.value}}; }
inline void from_json(const nlohmann::json& j, TracePoint& t) {
  j.at("cutoff").get_to(t.cutoff);
  j.at("value").get_to(t.value);
}

inline void to_json(nlohmann::json& j, const SeriesResult& r) {
  j = {{"value", r.value},
       {"trace", r.trace},
       {"extrapolated", r.extrapolated ? nlohmann::json(*r.extrapolated) : nlohmann::json(nullptr)},
       {"leading_exponent", r.leading_exponent},
       {"converged", r.converged},
       {"tolerance", r.tolerance}};
}
inline void from_json(const nlohmann::json& j, SeriesResult& r) {
  j.at("value").get_to(r.value);
  j.at("trace").get_to(r.trace);
  r.extrapolated.reset();
  if (!j.at("extrapolated").is_null()) r.extrapolated = j.at("extrapolated").get<double>();
  j.at("leading_exponent").get_to(r.leading_exponent);
  j.at("converged").get_to(r.converged);
  j.at("tolerance").get_to(r.tolerance);
}

}  // namespace diracvac::numerics

namespace diracvac::holetheory {

inline void to_json(nlohmann::json& j, const FirstOrder& f) {
  j = {{"cutoff", f.cutoff},
       {"partial_sum", f.partial_sum},
       {"divergent", f.divergent},
       {"per_level", f.per_level}};
}
inline void from_json(const nlohmann::json& j, FirstOrder& f) {
  j.at("cutoff").get_to(f.cutoff);
  j.at("partial_sum").get_to(f.partial_sum);
  j.at("divergent").get_to(f.divergent);
  j.at("per_level").get_to(f.per_level);
}

inline void to_json(nlohmann::json& j, const ExactVacuumShift& e) {
  j = {{"kind", e.is_zero() ? "zero" : "divergent_uniform"}, {"per_level", e.per_level}};
}
inline void from_json(const nlohmann::json& j, ExactVacuumShift& e) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "zero")
    e.kind = ExactVacuumShift::Kind::zero;
  else if (kind == "divergent_uniform")
    e.kind = ExactVacuumShift::Kind::divergent_uniform;
  else
    throw ConfigError("exact.kind", "unknown kind '" + kind + "'");
  j.at("per_level").get_to(e.per_level);
}

inline void to_json(nlohmann::json& j, const HTShiftReport& r) {
  nlohmann::json schemes = nlohmann::json::array();
  for (const auto& e : r.schemes)
    schemes.push_back({{"scheme", numerics::describe(e.scheme)},
                       {"x_term", e.x_term},
                       {"total", e.total},
                       {"total_extrapolated", e.total_extrapolated}});
  j = {{"first_order", r.first_order},
       {"second_order_pp", r.second_order_pp},
       {"schemes", schemes},
       {"exact", r.exact}};
}

}  // namespace diracvac::holetheory

namespace diracvac::cli {

/// Parses an "ht" report body. Scheme strings carry explicit cutoffs, so
/// the defaults passed to the parser are never used.
inline holetheory::HTShiftReport ht_report_from_json(const json& j) {
  holetheory::HTShiftReport r;
  j.at("first_order").get_to(r.first_order);
  j.at("second_order_pp").get_to(r.second_order_pp);
  j.at("exact").get_to(r.exact);
  for (const auto& e : j.at("schemes")) {
    holetheory::SchemeEntry entry;
    entry.scheme = parse_scheme(e.at("scheme").get<std::string>(), 1, ModelParams(1.0));
    e.at("x_term").get_to(entry.x_term);
    e.at("total").get_to(entry.total);
    e.at("total_extrapolated").get_to(entry.total_extrapolated);
    r.schemes.push_back(std::move(entry));
  }
  return r;
}

inline json to_json(const SpectrumReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"k", row.k}, {"epsilon", row.epsilon}, {"eta", row.eta}, {"shift", row.shift}});
  return {{"levels", rows}, {"sign_pairing_violations", r.sign_pairing_violations}};
}

inline json to_json(const QftReport& r) {
  json sweep = json::array();
  for (const auto& s : r.sweep)
    sweep.push_back({{"lambda", s.lambda},
                     {"second_order", s.second_order},
                     {"exact", s.exact},
                     {"remainder", s.remainder}});
  return {{"second_order", r.second_order},
          {"exact", r.exact},
          {"remainder", r.remainder},
          {"remainder_cancellation_free", r.remainder_cancellation_free},
          {"completeness_defect", r.completeness_defect},
          {"resolution_residual", r.resolution_residual},
          {"system_shift", r.system_shift ? json(*r.system_shift) : json(nullptr)},
          {"sweep", sweep}};
}

inline QftReport qft_report_from_json(const json& j) {
  QftReport r;
  j.at("second_order").get_to(r.second_order);
  j.at("exact").get_to(r.exact);
  j.at("remainder").get_to(r.remainder);
  j.at("remainder_cancellation_free").get_to(r.remainder_cancellation_free);
  j.at("completeness_defect").get_to(r.completeness_defect);
  j.at("resolution_residual").get_to(r.resolution_residual);
  if (!j.at("system_shift").is_null()) r.system_shift = j.at("system_shift").get<double>();
  for (const auto& s : j.at("sweep"))
    r.sweep.push_back({s.at("lambda").get<double>(), s.at("second_order").get<double>(),
                       s.at("exact").get<double>(), s.at("remainder").get<double>()});
  return r;
}

inline json to_json(const CompareReport& r) {
  json entries = json::array();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& e : r.entries)
    entries.push_back({{"quantity", e.quantity},
                       {"scheme", e.scheme},
                       {"value", opt(e.value)},
                       {"extrapolated", opt(e.extrapolated)}});
  return {{"entries", entries}, {"checks", r.checks}, {"flags", r.flags}};
}

// ---------------------------------------------------------------------------
// CSV
//
// spectrum:            k,epsilon,eta,shift
// ht, qft, compare:    quantity,label,cutoff,value
//
// In the long format every number is one row. `label` holds the scheme (ht,
// compare), the lambda value (qft sweep) or a flag name; `cutoff` is the
// truncation level of that row, empty where it does not apply. Series
// results expand into rows "<name>.trace" (one per trace point), "<name>",
// "<name>.extrapolated" and "<name>.converged" (1 or 0).

namespace detail {

inline std::string num(double x) { return numerics::detail::shortest(x); }

/// Quotes a field containing a comma or quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

struct LongTable {
  std::ostringstream out;
  LongTable() { out << "quantity,label,cutoff,value\n"; }
  void row(const std::string& q, const std::string& label, const std::string& cutoff, double v) {
    row(q, label, cutoff, num(v));
  }
  void row(const std::string& q, const std::string& label, const std::string& cutoff,
           const std::string& v) {
    out << csv_field(q) << ',' << csv_field(label) << ',' << cutoff << ',' << v << '\n';
  }
  void series(const std::string& q, const std::string& label, const numerics::SeriesResult& r) {
    for (const auto& t : r.trace) row(q + ".trace", label, num(t.cutoff), t.value);
    const std::string last = r.trace.empty() ? "" : num(r.trace.back().cutoff);
    row(q, label, last, r.value);
    if (r.extrapolated) row(q + ".extrapolated", label, "", *r.extrapolated);
    row(q + ".converged", label, "", r.converged ? "1" : "0");
  }
};

}  // namespace detail

inline std::string to_csv(const SpectrumReport& r) {
  std::ostringstream out;
  out << "k,epsilon,eta,shift\n";
  for (const auto& row : r.rows)
    out << row.k << ',' << detail::num(row.epsilon) << ',' << detail::num(row.eta) << ','
        << detail::num(row.shift) << '\n';
  return out.str();
}

inline std::string to_csv(const holetheory::HTShiftReport& r) {
  detail::LongTable t;
  t.row("first_order", "", std::to_string(r.first_order.cutoff), r.first_order.partial_sum);
  t.row("first_order.divergent", "", "", r.first_order.divergent ? "1" : "0");
  t.row("first_order.per_level", "", "", r.first_order.per_level);
  t.series("second_order_pp", "", r.second_order_pp);
  for (const auto& e : r.schemes) {
    const auto label = numerics::describe(e.scheme);
    t.series("x_term", label, e.x_term);
    t.row("second_order_total", label, "", e.total);
    t.row("second_order_total.extrapolated", label, "", e.total_extrapolated);
  }
  t.row("exact", r.exact.is_zero() ? "zero" : "divergent_uniform", "", r.exact.per_level);
  return t.out.str();
}

inline std::string to_csv(const QftReport& r) {
  detail::LongTable t;
  t.series("second_order", "", r.second_order);
  t.series("exact", "", r.exact);
  t.series("remainder", "", r.remainder);
  t.row("completeness_defect", "", "", r.completeness_defect);
  t.row("resolution_residual", "", "", r.resolution_residual);
  if (r.system_shift) t.row("system_shift", "", "", *r.system_shift);
  for (const auto& s : r.sweep) {
    const auto label = detail::num(s.lambda);
    t.row("sweep.second_order", label, "", s.second_order);
    t.row("sweep.exact", label, "", s.exact);
    t.row("sweep.remainder", label, "", s.remainder);
  }
  return t.out.str();
}

inline std::string to_csv(const CompareReport& r) {
  detail::LongTable t;
  for (const auto& e : r.entries) {
    t.row(e.quantity, e.scheme, "", e.value ? detail::num(*e.value) : std::string("inf"));
    if (e.extrapolated) t.row(e.quantity + ".extrapolated", e.scheme, "", *e.extrapolated);
  }
  for (const auto& [name, ok] : r.checks) t.row("check", name, "", ok ? "1" : "0");
  for (const auto& f : r.flags) t.row("flag", f, "", "1");
  return t.out.str();
}

// ---------------------------------------------------------------------------
// Dispatch

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{"spectrum", "ht", "qft", "compare"};
  return names;
}

/// Runs one command and returns the serialized report.
inline std::string run(const std::string& command, const RunConfig& cfg) {
  auto emit = [&](const auto& report) {
    if (cfg.format == Format::csv) return to_csv(report);
    json j = meta(command, cfg);
    j["report"] = to_json(report);
    return j.dump(2) + "\n";
  };
  if (command == "spectrum") return emit(cmd_spectrum(cfg));
  if (command == "qft") return emit(cmd_qft(cfg));
  if (command == "compare") return emit(cmd_compare(cfg));
  if (command == "ht") {
    const auto report = cmd_ht(cfg);
    if (cfg.format == Format::csv) return to_csv(report);
    json j = meta(command, cfg);
    j["report"] = report;
    return j.dump(2) + "\n";
  }
  throw ConfigError("command", "unknown command '" + command + "'");
}

inline void write_output(const std::string& text, const std::string& path, std::ostream& stdout_stream) {
  if (path.empty() || path == "-") {
    stdout_stream << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("output.path", "cannot write '" + path + "'");
  out << text;
}

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kBudgetExceeded = 3,
  kQuadratureNotConverged = 4,
  kNoRootInBracket = 5,
};

}  // namespace diracvac::cli
