#pragma once

// Subcommand bodies for the ksat tool. Each returns a JSON result plus a
// pass flag; main() wraps them in the report envelope and maps exit codes.

#include "ksat/dpll.hpp"
#include "ksat/experiments.hpp"
#include "ksat/optimize.hpp"
#include "ksat/polytope.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksat::cli {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum ExitCode { kPass = 0, kFail = 1, kConfigError = 2, kNumericError = 3 };

struct RunConfig {
  std::string gamma = "4.4898";
  int M = 23;
  unsigned digits = 50;
  int seeds = 10;  // seeds are seed_base, seed_base + 1, ...
  std::uint64_t seed_base = 1;
  int grid = 20;
  int multistarts = 32;
  std::int64_t n = 100000;
  std::vector<std::string> suites;
  // sat-rate and tiny-exact run at their own scale
  std::int64_t sat_n = 150;
  int sat_seeds = 50;
  int tiny_n = 3;
  // bisection bracket
  std::string lo = "4.2", hi = "4.6", tol = "0.0001";
  int trace_stride = 0;  // peel-stats snapshots, 0 = off
  std::string out, csv;
  unsigned jobs = default_jobs();  // not serialized: results do not depend on it

  Rational gamma_value() const { return parse_decimal(gamma); }

  std::vector<std::uint64_t> seed_list(int count) const {
    std::vector<std::uint64_t> s;
    for (int k = 0; k < count; ++k) {
      s.push_back(seed_base + static_cast<std::uint64_t>(k));
    }
    return s;
  }

  void validate() const {
    Rational g;
    try {
      g = gamma_value();
    } catch (const std::exception&) {
      throw ConfigError("gamma is not a decimal number: " + gamma);
    }
    if (!(g > 0)) {
      throw ConfigError("gamma must be positive");
    }
    if (digits < 30) {
      throw ConfigError("digits must be at least 30");
    }
    if (M < 1) {
      throw ConfigError("M must be at least 1");
    }
    if (seeds < 1 || sat_seeds < 1) {
      throw ConfigError("seed count must be positive");
    }
    if (n < 3 || sat_n < 3 || tiny_n < 1) {
      throw ConfigError("instance size too small");
    }
    if (multistarts < 1) {
      throw ConfigError("multistarts must be positive");
    }
    if (trace_stride < 0) {
      throw ConfigError("trace stride must be nonnegative");
    }
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return {{"gamma", c.gamma},   {"M", c.M},
          {"digits", c.digits}, {"seeds", c.seeds},
          {"seed_base", c.seed_base}, {"grid", c.grid},
          {"multistarts", c.multistarts}, {"n", c.n},
          {"suites", c.suites}, {"sat_n", c.sat_n},
          {"sat_seeds", c.sat_seeds}, {"tiny_n", c.tiny_n},
          {"lo", c.lo},         {"hi", c.hi},
          {"tol", c.tol},       {"trace_stride", c.trace_stride}};
}

/// Fills every field present in `j`; unknown keys are configuration errors.
inline void apply_json(RunConfig& c, const nlohmann::json& j, const std::vector<std::string>& skip) {
  if (!j.is_object()) {
    throw ConfigError("config file must hold a JSON object");
  }
  auto str = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, v] : j.items()) {
    if (std::find(skip.begin(), skip.end(), key) != skip.end()) {
      continue;
    }
    try {
      if (key == "gamma") c.gamma = str(v);
      else if (key == "M") c.M = v.get<int>();
      else if (key == "digits") c.digits = v.get<unsigned>();
      else if (key == "seeds") c.seeds = v.get<int>();
      else if (key == "seed_base") c.seed_base = v.get<std::uint64_t>();
      else if (key == "grid") c.grid = v.get<int>();
      else if (key == "multistarts") c.multistarts = v.get<int>();
      else if (key == "n") c.n = v.get<std::int64_t>();
      else if (key == "suites") c.suites = v.get<std::vector<std::string>>();
      else if (key == "sat_n") c.sat_n = v.get<std::int64_t>();
      else if (key == "sat_seeds") c.sat_seeds = v.get<int>();
      else if (key == "tiny_n") c.tiny_n = v.get<int>();
      else if (key == "lo") c.lo = str(v);
      else if (key == "hi") c.hi = str(v);
      else if (key == "tol") c.tol = str(v);
      else if (key == "trace_stride") c.trace_stride = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "csv") c.csv = v.get<std::string>();
      else if (key == "jobs") c.jobs = v.get<unsigned>();
      else throw ConfigError("unknown config key: " + key);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config key " + key + ": " + e.what());
    }
  }
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned k = 0; k < len; ++k) {
    s += hex[md[k] >> 4];
    s += hex[md[k] & 15];
  }
  return s;
}

struct CommandResult {
  nlohmann::json result;
  bool pass = true;
};

/// Report envelope; the hash covers everything but itself.
inline nlohmann::json envelope(const std::string& command, const RunConfig& c, const CommandResult& r) {
  nlohmann::json j = {{"command", command}, {"config", to_json(c)}, {"result", r.result}, {"pass", r.pass}};
  j["content_sha256"] = sha256_hex(j.dump());
  return j;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) {
    throw ConfigError("cannot open output file: " + path);
  }
  return os;
}

inline void log(const std::string& msg) { std::cerr << msg << '\n'; }

// ---------------------------------------------------------------------------

inline CommandResult cmd_bound(const RunConfig& c) {
  BoundOptions bo;
  bo.digits = c.digits;
  bo.M = c.M;
  bo.multistart.count = c.multistarts;
  bo.multistart.jobs = c.jobs;
  const auto r = upper_bound_rate(c.gamma_value(), bo);
  PrecisionGuard guard(c.digits);
  return {to_json(r), r.rate < 1};
}

inline CommandResult cmd_sweep(const RunConfig& c) {
  const Rational lo = parse_decimal(c.lo), hi = parse_decimal(c.hi), tol = parse_decimal(c.tol);
  if (!(tol > 0)) {
    throw ConfigError("sweep tolerance must be positive");
  }
  const auto rep = bisect_threshold(lo, hi, tol, c.M, c.digits, [](const ThresholdStep& s) {
    log("bracket [" + decimal(scalar_cast<double>(s.lo), 10) + ", " + decimal(scalar_cast<double>(s.hi), 10) + "]");
  });
  PrecisionGuard guard(c.digits);
  const int d = static_cast<int>(c.digits);
  nlohmann::json j;
  j["gamma_star"] = decimal(rep.gamma_star);
  j["gamma_star_decimal"] = decimal(scalar_cast<Real>(rep.gamma_star), 20);
  j["rate_lo"] = decimal(rep.rate_lo, d);
  j["rate_hi"] = decimal(rep.rate_hi, d);
  j["steps"] = rep.trace.size();
  j["gamma_upper"] = decimal(rep.gamma_upper);
  j["crossing_at_or_below_4_4898"] = rep.gamma_star <= parse_decimal("4.4898");
  if (!c.csv.empty()) {
    auto os = open_output(c.csv);
    os << "lo,hi,width,rate_lo,rate_hi\n";
    for (const auto& s : rep.trace) {
      os << decimal(s.lo) << ',' << decimal(s.hi) << ',' << decimal(Rational(s.hi - s.lo)) << ','
         << decimal(s.rate_lo, d) << ',' << decimal(s.rate_hi, d) << '\n';
    }
  }
  return {j, true};
}

inline const std::vector<std::string>& concentration_suite() {
  static const std::vector<std::string> s = {"degree-concentration", "core-degree", "clause-type-concentration",
                                             "peel-trace-vs-ode", "neighborhood"};
  return s;
}

inline CommandResult cmd_experiments(const RunConfig& c) {
  if (c.suites.empty()) {
    throw ConfigError("no experiment suite selected (use --suite)");
  }
  struct Run {
    std::string name;
    Rational gamma;
    std::int64_t n;
    std::vector<std::uint64_t> seeds;
  };
  std::vector<Run> runs;
  const auto conc_seeds = c.seed_list(c.seeds);
  auto add_concentration = [&](const std::string& e) { runs.push_back({e, c.gamma_value(), c.n, conc_seeds}); };
  auto add_sat = [&]() {
    for (const char* g : {"3.5", "5.5"}) {
      runs.push_back({"sat-rate", parse_decimal(g), c.sat_n, c.seed_list(c.sat_seeds)});
    }
  };
  auto add_tiny = [&]() { runs.push_back({"tiny-exact", c.gamma_value(), c.tiny_n, {c.seed_base}}); };
  for (const auto& s : c.suites) {
    if (s == "concentration") {
      for (const auto& e : concentration_suite()) add_concentration(e);
    } else if (s == "sat") {
      add_sat();
    } else if (s == "tiny-exact") {
      add_tiny();
    } else if (s == "simplicity") {
      runs.push_back({"simplicity-rate", c.gamma_value(), 10000, conc_seeds});
    } else if (s == "all") {
      for (const auto& e : concentration_suite()) add_concentration(e);
      runs.push_back({"simplicity-rate", c.gamma_value(), 10000, conc_seeds});
      add_sat();
      add_tiny();
    } else if (s == "sat-rate") {
      runs.push_back({s, c.gamma_value(), c.sat_n, c.seed_list(c.sat_seeds)});
    } else {
      // a single experiment by name; unknown names are rejected by the harness
      if (std::find(experiment_names().begin(), experiment_names().end(), s) == experiment_names().end()) {
        throw ConfigError("unknown experiment or suite: " + s);
      }
      runs.push_back({s, c.gamma_value(), s == "tiny-exact" ? c.tiny_n : c.n, conc_seeds});
    }
  }
  CommandResult out;
  out.result["reports"] = nlohmann::json::array();
  std::ofstream csv;
  if (!c.csv.empty()) {
    csv = open_output(c.csv);
  }
  bool header = true;
  for (const auto& r : runs) {
    ExperimentParams p;
    p.gamma = r.gamma;
    p.n = r.n;
    p.jobs = c.jobs;
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_experiment(r.name, p, r.seeds);
    log(r.name + " gamma=" + decimal(r.gamma) + " n=" + std::to_string(r.n) + ": " + (rep.pass ? "pass" : "FAIL") +
        " (" + decimal(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 3) + " s)");
    out.result["reports"].push_back(to_json(rep));
    out.pass = out.pass && rep.pass;
    if (csv) {
      std::ostringstream os;
      write_csv(os, rep);
      std::string body = os.str();
      if (!header) {
        body = body.substr(body.find('\n') + 1);
      }
      csv << body;
      header = false;
    }
  }
  return out;
}

inline CommandResult cmd_grid(const RunConfig& c) {
  if (c.grid < 2) {
    throw ConfigError("grid_per_dim must be at least 2");
  }
  BoundOptions bo;
  bo.digits = c.digits;
  bo.M = c.M;
  bo.multistart.count = c.multistarts;
  bo.multistart.jobs = c.jobs;
  const auto bound = upper_bound_rate(c.gamma_value(), bo);
  PrecisionGuard guard(c.digits);
  const auto rep = grid_sweep(bound.params, c.grid, c.jobs);
  const Real limit = bound.log_maxF + Real("1e-12");
  int above = 0;
  for (const auto& p : rep.points) {
    if (rep.feasible(p) && !(Real(p.value) <= limit)) {
      ++above;
    }
  }
  const bool refined_ok = rep.best < 0 || !rep.feasible(rep.points[rep.best]) ||
                          rep.best_refined_status == SliceStatus::rejected ||
                          rep.best_refined_status == SliceStatus::infeasible || rep.best_refined <= limit;
  nlohmann::json j;
  j["per_dim"] = rep.per_dim;
  j["points"] = rep.points.size();
  j["interior"] = rep.interior;
  j["boundary"] = rep.boundary;
  j["infeasible"] = rep.infeasible;
  j["rejected"] = rep.rejected;
  j["all_finite"] = rep.all_finite;
  j["log_maxF"] = decimal(bound.log_maxF, static_cast<int>(c.digits));
  j["above_limit"] = above;
  if (rep.best >= 0) {
    const auto& b = rep.points[rep.best];
    j["best"] = {{"l_ps", decimal(b.ell[0])}, {"l_nsf", decimal(b.ell[1])}, {"l_nsr", decimal(b.ell[2])},
                 {"value", decimal(b.value)}, {"refined", decimal(rep.best_refined, 30)},
                 {"refined_status", to_string(rep.best_refined_status)}};
    j["margin"] = decimal(Real(bound.log_maxF - rep.best_refined), 10);
  }
  if (!c.csv.empty()) {
    auto os = open_output(c.csv);
    write_grid_csv(os, rep);
  }
  return {j, rep.all_finite && above == 0 && refined_ok};
}

inline nlohmann::json rational_json(const Rational& q) {
  return {{"decimal", decimal(scalar_cast<Real>(q), 30)}, {"is_zero", q == 0}, {"positive", q > 0}};
}

inline CommandResult cmd_lp_check(const RunConfig& c) {
  PrecisionGuard guard(c.digits);
  const auto a = clause_type_ideals<Real>(c.gamma_value(), c.M, analytic_tolerance<Real>());
  const auto sys = build_constraints(a);
  CommandResult out;
  auto& j = out.result;
  j["K"] = sys.layout.size();
  j["rows"] = sys.row_count();
  bool ok = true;
  for (int s = 0; s < 5; ++s) {
    const auto m = lp_min_coordinate(sys, sys.layout.ell(s));
    const bool certified = m.lp.status == LpStatus::optimal && m.lp.certified;
    const bool expected = s == kNsr ? m.value() == 0 : m.value() > 0;
    j["minima"][m.name] = rational_json(m.value());
    j["minima"][m.name]["certified"] = certified;
    j["minima"][m.name]["pivots"] = m.lp.pivots;
    ok = ok && certified && expected;
    log(m.name + " min " + decimal(scalar_cast<double>(m.value()), 8));
  }
  for (auto mode : {InteriorMode::relative, InteriorMode::case2}) {
    const auto ip = strict_interior_point(sys, mode);
    const char* key = mode == InteriorMode::relative ? "interior" : "case2";
    j[key] = {{"found", ip.found},
              {"margin", decimal(scalar_cast<Real>(ip.margin), 10)},
              {"required", ip.required},
              {"fixed_zero", ip.fixed_zero},
              {"lp_status", to_string(ip.lp.status)},
              {"certified", ip.lp.certified}};
    if (ip.lp.status == LpStatus::optimal) {
      j[key]["residual"] = decimal(scalar_cast<Real>(max_abs(residuals(sys, ip.point))), 5);
    }
    ok = ok && ip.found && ip.lp.certified;
  }
  const auto c3 = verify_case3_direction(sys);
  j["case3_null_space"] = c3.in_null_space;
  ok = ok && c3.in_null_space;
  out.pass = ok;
  return out;
}

inline CommandResult cmd_peel_stats(const RunConfig& c) {
  const Rational g = c.gamma_value();
  const auto st = stopping_time<double>(g, 1e-15);
  const auto dhat = peeled_ideal<double>(g, st.b);
  const auto seeds = c.seed_list(c.seeds);
  struct Row {
    double steps, core_clauses, core_vars, max_dev;
  };
  const auto rows = parallel_map(seeds.size(), c.jobs, [&](std::size_t k) {
    const auto conf = configuration_from_formula(sample_uniform_formula(static_cast<int>(c.n), g, seeds[k]));
    const auto tr = peel(conf, seeds[k] ^ 0x9e3779b97f4a7c15ULL);
    const auto d = degree_sequence(unbalance(tr.core));
    const double n = static_cast<double>(c.n);
    double worst = 0;
    for (int i = 0; i <= 10; ++i) {
      for (int jj = 0; jj <= 10; ++jj) {
        worst = std::max(worst, std::abs(static_cast<double>(d.count(i, jj)) / n - dhat(i, jj)));
      }
    }
    return Row{tr.steps / n, static_cast<double>(tr.core.clauses.size()) / n,
               (n - static_cast<double>(d.count(0, 0))) / n, worst};
  });
  nlohmann::json j;
  j["t_D"] = decimal(st.t_D);
  j["b"] = decimal(st.b);
  j["per_seed"] = nlohmann::json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    j["per_seed"].push_back({{"seed", seeds[k]},
                             {"steps_over_n", decimal(rows[k].steps)},
                             {"core_clauses_over_n", decimal(rows[k].core_clauses)},
                             {"core_variables_over_n", decimal(rows[k].core_vars)},
                             {"max_dev_deltahat", decimal(rows[k].max_dev)}});
  }
  if (!c.csv.empty()) {
    const auto conf = configuration_from_formula(sample_uniform_formula(static_cast<int>(c.n), g, seeds.front()));
    const int stride = c.trace_stride > 0 ? c.trace_stride : std::max<int>(1, static_cast<int>(c.n / 400));
    const auto tr = peel(conf, seeds.front() ^ 0x9e3779b97f4a7c15ULL, stride);
    auto os = open_output(c.csv);
    write_trace_csv(os, tr, 5);
  }
  return {j, true};
}

/// A fast battery over every module.
inline CommandResult cmd_selftest(const RunConfig& c) {
  CommandResult out;
  out.result["checks"] = nlohmann::json::array();
  auto record = [&](const std::string& name, bool ok) {
    out.result["checks"].push_back({{"check", name}, {"pass", ok}});
    out.pass = out.pass && ok;
    log(std::string(ok ? "pass " : "FAIL ") + name);
  };
  PrecisionGuard guard(c.digits);

  record("naive threshold rounds to 5.191", std::abs(naive_threshold<double>() - 5.191) < 5e-4);

  bool dpll_ok = true;
  for (std::uint64_t s = 1; s <= 200; ++s) {
    const auto f = sample_uniform_formula(8, 4.0 + static_cast<double>(s % 5) * 0.5, s);
    const auto cnf = to_cnf(f);
    dpll_ok = dpll_ok && ((dpll(cnf).result == SatResult::sat) == brute_force_sat(cnf));
  }
  record("dpll agrees with truth tables on 200 formulas, n = 8", dpll_ok);

  ExperimentParams tp;
  tp.n = 2;
  record("tiny classes n <= 2: closed forms equal enumeration", run_experiment("tiny-exact", tp, {1}).pass);

  const auto a = clause_type_ideals<Real>(c.gamma_value(), 4, analytic_tolerance<Real>());
  using std::abs;
  record("clause-type identities at M = 4",
         abs(a.gammahat_k[1] + 2 * a.gammahat_k[2] + 3 * a.gammahat_k[3] - a.lambda_p) < Real("1e-40"));

  const auto sys = build_constraints(a);
  bool lp_ok = true;
  for (int s = 0; s < 5; ++s) {
    const auto m = lp_min_coordinate(sys, sys.layout.ell(s));
    lp_ok = lp_ok && m.lp.status == LpStatus::optimal && m.lp.certified;
  }
  record("boundary LPs at M = 4 solve with exact certificates", lp_ok);
  record("case-3 direction in the null space at M = 4", verify_case3_direction(sys).in_null_space);
  return out;
}

}  // namespace ksat::cli
