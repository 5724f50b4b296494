#include "commands.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>

using namespace ksat::cli;

namespace {

struct Subcommand {
  CLI::App* app;
  std::function<CommandResult(const RunConfig&)> body;
};

std::string trim_name(const std::string& flag) {
  auto s = flag.substr(flag.find_first_not_of('-'));
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reproduction pipeline for the 3-SAT first-moment upper bound"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;

  // Shared flags live on each subcommand so they can follow its name.
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with RunConfig fields; flags override it");
    sub->add_option("--gamma", cfg.gamma, "clause density (decimal)");
    sub->add_option("--M", cfg.M, "light/heavy cutoff");
    sub->add_option("--digits", cfg.digits, "working precision in decimal digits (>= 30)");
    sub->add_option("--jobs", cfg.jobs, "worker threads");
    sub->add_option("--out", cfg.out, "write the JSON report here instead of stdout");
  };
  auto seeded = [&](CLI::App* sub) {
    sub->add_option("--seeds", cfg.seeds, "number of seeds");
    sub->add_option("--seed-base", cfg.seed_base, "first seed");
    sub->add_option("--n", cfg.n, "variables per Monte Carlo instance");
  };

  std::vector<Subcommand> subs;
  auto* bound = app.add_subcommand("bound", "rate (1+1e-7) B max F at one density");
  common(bound);
  bound->add_option("--multistarts", cfg.multistarts, "random Lagrange starts");
  subs.push_back({bound, cmd_bound});

  auto* sweep = app.add_subcommand("sweep", "bisect the density where the rate crosses 1");
  common(sweep);
  sweep->add_option("--lo", cfg.lo, "bracket lower end");
  sweep->add_option("--hi", cfg.hi, "bracket upper end");
  sweep->add_option("--tol", cfg.tol, "final bracket width");
  sweep->add_option("--csv", cfg.csv, "bisection trace");
  subs.push_back({sweep, cmd_sweep});

  auto* exps = app.add_subcommand("experiments", "Monte Carlo and exhaustive oracle suites");
  common(exps);
  seeded(exps);
  exps->add_option("--suite", cfg.suites, "concentration, simplicity, sat, tiny-exact, all, or an experiment name");
  exps->add_option("--sat-n", cfg.sat_n, "variables for sat-rate");
  exps->add_option("--sat-seeds", cfg.sat_seeds, "seeds for sat-rate");
  exps->add_option("--tiny-n", cfg.tiny_n, "largest variable count for tiny-exact");
  exps->add_option("--csv", cfg.csv, "per-seed metrics");
  subs.push_back({exps, cmd_experiments});

  auto* grid = app.add_subcommand("grid", "restricted maxima over an ell grid");
  common(grid);
  grid->add_option("--grid", cfg.grid, "points per dimension (>= 2)");
  grid->add_option("--multistarts", cfg.multistarts, "random Lagrange starts");
  grid->add_option("--csv", cfg.csv, "every slice");
  subs.push_back({grid, cmd_grid});

  auto* lp = app.add_subcommand("lp-check", "exact boundary LPs, interior points and the case-3 direction");
  common(lp);
  subs.push_back({lp, cmd_lp_check});

  auto* ps = app.add_subcommand("peel-stats", "pure-literal elimination statistics");
  common(ps);
  seeded(ps);
  ps->add_option("--trace-stride", cfg.trace_stride, "snapshot stride for --csv");
  ps->add_option("--csv", cfg.csv, "trace of the first seed");
  subs.push_back({ps, cmd_peel_stats});

  auto* self = app.add_subcommand("selftest", "fast checks across all modules");
  common(self);
  subs.push_back({self, cmd_selftest});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  for (const auto& s : subs) {
    if (!s.app->parsed()) {
      continue;
    }
    const std::string name = s.app->get_name();
    try {
      if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is) {
          throw ConfigError("cannot read config file: " + config_path);
        }
        nlohmann::json j;
        try {
          is >> j;
        } catch (const nlohmann::json::exception& e) {
          throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        std::vector<std::string> given;
        for (const auto* opt : s.app->get_options()) {
          if (opt->count() > 0 && !opt->get_lnames().empty()) {
            given.push_back(trim_name(opt->get_lnames().front()));
          }
        }
        // flags given on the command line win over the file
        apply_json(cfg, j, given);
      }
      cfg.validate();
      const auto res = s.body(cfg);
      const auto report = envelope(name, cfg, res);
      if (cfg.out.empty()) {
        std::cout << report.dump(2) << '\n';
      } else {
        auto os = open_output(cfg.out);
        os << report.dump(2) << '\n';
      }
      return res.pass ? kPass : kFail;
    } catch (const ConfigError& e) {
      std::cerr << name << ": configuration error: " << e.what() << '\n';
      return kConfigError;
    } catch (const ksat::BracketError& e) {
      std::cerr << name << ": " << e.what() << '\n';
      return kConfigError;
    } catch (const ksat::UnknownExperiment& e) {
      std::cerr << name << ": " << e.what() << '\n';
      return kConfigError;
    } catch (const std::exception& e) {
      std::cerr << name << ": numeric error: " << e.what() << '\n';
      return kNumericError;
    }
  }
  return kConfigError;
}
