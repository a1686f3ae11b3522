// diracvac: vacuum energy shifts of the one-dimensional massless Dirac bag.
//
//   diracvac <spectrum|ht|qft|compare> [--config FILE] [overrides...]
//
// The configuration file (JSON) defaults to $DIRACVAC_CONFIG when set. Flags
// override values from the file. See README.md for the file format.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "diracvac/cli.hpp"

namespace {

using namespace diracvac;

struct Overrides {
  std::string config;
  std::optional<double> a;
  std::optional<std::string> potential;
  std::optional<double> lambda;
  std::optional<double> c;
  std::optional<int> cutoff;
  std::optional<int> range;
  std::optional<int> window;
  std::vector<std::string> schemes;
  std::optional<std::string> format;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::int64_t> budget;
  std::optional<double> tolerance;
  std::optional<double> quad_tolerance;
  std::vector<double> sweep;
  std::vector<int> particles;
  std::vector<int> antiparticles;
};

cli::RunConfig resolve(const Overrides& o) {
  cli::RunConfig cfg;
  std::string path = o.config;
  if (path.empty())
    if (const char* env = std::getenv(cli::kConfigEnv)) path = env;
  if (!path.empty()) cfg = cli::load_config(path);

  if (o.a) cfg.a = *o.a;
  if (o.potential) {
    if (cli::registry().count(*o.potential)) {
      cfg.potential.name = *o.potential;
      cfg.potential.expression.clear();
    } else {
      cfg.potential.expression = *o.potential;
    }
  }
  if (o.lambda) cfg.potential.lambda = *o.lambda;
  if (o.c) cfg.potential.c = *o.c;
  if (o.cutoff) cfg.ht_cutoff = cfg.qft_cutoff = *o.cutoff;
  if (o.range) cfg.spectrum_range = *o.range;
  if (o.window) cfg.window = *o.window;
  if (!o.schemes.empty()) cfg.schemes = o.schemes;
  if (o.format) cfg.format = cli::parse_format(*o.format);
  if (o.out) cfg.out = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  if (o.budget) cfg.budget = *o.budget;
  if (o.tolerance) cfg.series_tolerance = *o.tolerance;
  if (o.quad_tolerance) cfg.quadrature_tolerance = *o.quad_tolerance;
  if (!o.sweep.empty()) cfg.sweep = o.sweep;
  if (!o.particles.empty()) cfg.particles = o.particles;
  if (!o.antiparticles.empty()) cfg.antiparticles = o.antiparticles;
  cli::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vacuum energy shifts of the one-dimensional massless Dirac bag (hbar = c = 1)"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON configuration file (default: $DIRACVAC_CONFIG)");
  app.add_option("--a", o.a, "bag half-width");
  std::string names;
  for (const auto& [name, entry] : cli::registry()) names += " " + name + " (" + entry.formula + ")";
  app.add_option("--potential", o.potential,
                 "named potential or inline expression in x; names:" + names);
  app.add_option("--lambda", o.lambda, "scale of the named potential");
  app.add_option("--c", o.c, "constant of the named potential");
  app.add_option("--cutoff", o.cutoff, "levels per branch for ht and qft");
  app.add_option("--range", o.range, "spectrum: list levels 1 <= |k| <= range");
  app.add_option("--window", o.window, "qft: completeness and resolution window");
  app.add_option("--scheme", o.schemes,
                 "summation scheme, repeatable: square[:N] rect[:Nj:Nk] row[:J:K] energy[:E] "
                 "abel[:N[:t1,t2,...]]");
  app.add_option("--format", o.format, "csv or json");
  app.add_option("--out", o.out, "output file, '-' for stdout");
  app.add_option("--threads", o.threads, "worker threads");
  app.add_option("--budget", o.budget, "maximum number of series terms");
  app.add_option("--tolerance", o.tolerance, "series convergence tolerance");
  app.add_option("--quad-tolerance", o.quad_tolerance, "quadrature absolute tolerance");
  app.add_option("--sweep", o.sweep, "qft: lambda values to sweep, repeatable");
  app.add_option("--particles", o.particles, "qft: occupied particle levels i >= 1");
  app.add_option("--antiparticles", o.antiparticles, "qft: occupied antiparticle levels j >= 1");
  for (const auto& name : cli::commands()) app.add_subcommand(name, "run the " + name + " report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kConfigError;
  }

  try {
    const auto cfg = resolve(o);
    const std::string command = app.get_subcommands().front()->get_name();
    cli::write_output(cli::run(command, cfg), cfg.out, std::cout);
    return cli::kOk;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kConfigError;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kBudgetExceeded;
  } catch (const QuadratureNotConverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kQuadratureNotConverged;
  } catch (const NoRootInBracket& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kNoRootInBracket;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kFailure;
  }
}
