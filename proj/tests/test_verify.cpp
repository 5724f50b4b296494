#include "ksat/dpll.hpp"
#include "ksat/experiments.hpp"
#include "ksat/verify.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace ksat;
using ksat::test::conf;

namespace {

bool model_satisfies(const Cnf& cnf, const std::vector<char>& model) {
  for (const auto& cl : cnf.clauses) {
    bool ok = false;
    for (int lit : cl) {
      ok = ok || (model[std::abs(lit) - 1] != 0) == (lit > 0);
    }
    if (!ok) {
      return false;
    }
  }
  return true;
}

bool exists_assignment(const Configuration& c, bool prime, int M = kTinyM) {
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << c.n); ++bits) {
    const auto a = assignment_from_bits(c.n, bits);
    if (prime ? flat_prime_sat(c, a, M) : flat_sat(c, a, M)) {
      return true;
    }
  }
  return false;
}

}  // namespace

TEST(Dpll, TrivialCases) {
  EXPECT_EQ(dpll(Cnf{3, {}}).result, SatResult::sat);
  Cnf all;
  all.n = 3;
  for (int s = 0; s < 8; ++s) {
    all.clauses.push_back({(s & 1) ? 1 : -1, (s & 2) ? 2 : -2, (s & 4) ? 3 : -3});
  }
  EXPECT_EQ(dpll(all).result, SatResult::unsat);
  all.clauses.pop_back();
  const auto r = dpll(all);
  ASSERT_EQ(r.result, SatResult::sat);
  EXPECT_TRUE(model_satisfies(all, r.model));
}

// Every set of at most three 3-clauses over four variables.
TEST(Dpll, ExhaustiveSmallFormulasAgreeWithTruthTables) {
  std::vector<std::vector<int>> pool;
  for (int a = 1; a <= 4; ++a) {
    for (int b = a + 1; b <= 4; ++b) {
      for (int c = b + 1; c <= 4; ++c) {
        for (int s = 0; s < 8; ++s) {
          pool.push_back({(s & 1) ? a : -a, (s & 2) ? b : -b, (s & 4) ? c : -c});
        }
      }
    }
  }
  ASSERT_EQ(pool.size(), 32u);
  int checked = 0;
  auto run = [&](std::vector<std::vector<int>> cls) {
    const Cnf cnf{4, std::move(cls)};
    const auto r = dpll(cnf);
    ASSERT_EQ(r.result == SatResult::sat, brute_force_sat(cnf));
    if (r.result == SatResult::sat) {
      ASSERT_TRUE(model_satisfies(cnf, r.model));
    }
    ++checked;
  };
  for (std::size_t i = 0; i < pool.size(); ++i) {
    run({pool[i]});
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      run({pool[i], pool[j]});
      for (std::size_t k = j + 1; k < pool.size(); ++k) {
        run({pool[i], pool[j], pool[k]});
      }
    }
  }
  EXPECT_EQ(checked, 32 + 496 + 4960);
}

TEST(Dpll, RandomFormulasAgreeWithTruthTables) {
  int sat = 0, unsat = 0;
  for (std::uint64_t s = 1; s <= 300; ++s) {
    const int n = 10;
    const auto f = sample_uniform_formula(n, Rational(static_cast<long>(30 + s % 30), 10), s);
    const auto cnf = to_cnf(f);
    const auto r = dpll(cnf);
    ASSERT_EQ(r.result == SatResult::sat, brute_force_sat(cnf)) << s;
    (r.result == SatResult::sat ? sat : unsat) += 1;
  }
  EXPECT_GT(sat, 20);
  EXPECT_GT(unsat, 20);
}

TEST(Dpll, NodeLimitGivesUnknown) {
  const auto f = sample_uniform_formula(200, 4.26, 3);
  const auto r = dpll(to_cnf(f), DpllOptions{1});
  EXPECT_EQ(r.result, SatResult::unknown);
  EXPECT_STREQ(to_string(r.result), "unknown");
}

TEST(Flat, SingleMixedClause) {
  const auto c = conf(3, {{1, 2, -3}});
  auto A = [](std::initializer_list<int> v) { return Assignment(v.begin(), v.end()); };
  EXPECT_FALSE(flat_sat(c, A({0, 0, 1}), 2));
  // only ¬x3 is satisfied, so the clause blocks x3 but not x1, x2
  EXPECT_TRUE(flat_sat(c, A({0, 0, 0}), 2));
  EXPECT_FALSE(flat_prime_sat(c, A({0, 0, 0}), 2));
  EXPECT_FALSE(flat_prime_sat(c, A({1, 1, 0}), 2));
  EXPECT_TRUE(flat_prime_sat(c, A({1, 1, 1}), 2));
  EXPECT_EQ(count_flat_prime_assignments(c, 2), 1);
  EXPECT_THROW(flat_sat(c, A({1, 1}), 2), std::invalid_argument);
}

TEST(Flat, SinglePositiveClause) {
  const auto c = conf(3, {{1, 2, 3}});
  std::int64_t flat = 0;
  for (std::uint64_t b = 0; b < 8; ++b) {
    flat += flat_sat(c, assignment_from_bits(3, b), 2);
  }
  EXPECT_EQ(flat, 7);
  EXPECT_EQ(count_flat_prime_assignments(c, 2), 1);
}

TEST(Flat, EmptyConfigurationHasOnlyTheAllOnesAssignment) {
  const auto c = conf(2, {});
  EXPECT_EQ(count_flat_prime_assignments(c, 2), 1);
  const DegreeSequence d(2, {{{0, 0}, 2}});
  const ClauseTypeSequence ct{2, {0, 0, 0, 0}};
  EXPECT_EQ(count_space(d, ct), 1);
  EXPECT_EQ(expected_X_exact(d, ct), 1);
}

// With M = 0 every variable with an occurrence is heavy: its copies all count
// as satisfied and its value is unconstrained.
TEST(Flat, EverythingHeavyAtCutoffZero) {
  const auto c = conf(4, {{1, -2, 3}, {-1, -2, -3}});
  EXPECT_EQ(count_flat_prime_assignments(c, 0), 8);  // x4 is light with no copies: must be 1
  for (std::uint64_t b = 0; b < 16; ++b) {
    EXPECT_TRUE(flat_sat(c, assignment_from_bits(4, b), 0));
  }
}

TEST(Flat, PairCountsOfASatisfyingPair) {
  const auto c = conf(3, {{1, 2, 3}});
  const Layout L(2);
  const auto x = pair_counts(c, assignment_from_bits(3, 7), L);
  EXPECT_EQ(x[L.t(1, 0)], 3);
  EXPECT_EQ(x[L.c(class_index({3, 0, 0, 0}))], 1);
  EXPECT_EQ(x[L.ell(kPs)], 3);
  EXPECT_THROW(pair_counts(c, assignment_from_bits(3, 0), L), std::invalid_argument);
}

// On simple configurations: satisfiable implies a ♭′ assignment, and a ♭
// assignment exists iff a ♭′ one does.
TEST(Flat, SatisfiabilityChainOnSimpleConfigurations) {
  int simple = 0;
  for (const auto& tc : tiny_classes(3)) {
    for_each_configuration(tc.d, tc.c, [&](const Configuration& c) {
      if (!is_simple(c)) {
        return;
      }
      ++simple;
      const bool prime = exists_assignment(c, true);
      if (dpll_sat(project(c)) == SatResult::sat) {
        ASSERT_TRUE(prime);
      }
      ASSERT_EQ(exists_assignment(c, false), prime);
    });
  }
  EXPECT_GT(simple, 100);
}

TEST(Counts, SpaceOfASingleAllPositiveClause) {
  const DegreeSequence d(3, {{{1, 0}, 3}});
  const ClauseTypeSequence ct{3, {0, 0, 0, 1}};
  // 3!/3! · 3! 0! / (2 · 3 · 1!)
  EXPECT_EQ(count_space(d, ct), 1);
  EXPECT_THROW(count_space(d, ClauseTypeSequence{3, {1, 0, 0, 0}}), ParameterError);
}

TEST(Counts, ClauseClassWeights) {
  // w = 1, c n = 2: 2! · 2!^1 / 1!^2 = 4
  EXPECT_EQ(W_alpha({1, 1, 1, 0}, 2), 4);
  // w = 3: 6! / (3!^2 · 2!) = 10
  EXPECT_EQ(W_alpha({3, 0, 0, 0}, 2), 10);
  EXPECT_EQ(W_alpha({1, 1, 0, 1}, 0), 1);
}

TEST(Counts, NonLatticePointsAreRejected) {
  const auto c = conf(3, {{1, 2, 3}});
  const auto d = degree_sequence(c);
  const auto ct = clause_type_sequence(c);
  PolytopePoint<Rational> x(Layout(2));
  EXPECT_THROW(count_T(x, d, ct, 2), std::domain_error);
  x[0] = Rational(1, 3);
  EXPECT_THROW(lattice_counts(x, 2), std::domain_error);
  EXPECT_THROW(count_T(std::vector<std::int64_t>(3, 0), d, ct, 2), std::invalid_argument);
}

TEST(Counts, LatticePointOfTheSingleClause) {
  const auto c = conf(3, {{1, 2, 3}});
  const auto d = degree_sequence(c);
  const auto ct = clause_type_sequence(c);
  const auto pts = lattice_points(d, ct, 2);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_EQ(count_T(pts[0], d, ct, 2), 1);
  PolytopePoint<Rational> x(Layout(2));
  for (std::size_t k = 0; k < pts[0].size(); ++k) {
    x.x[k] = Rational(pts[0][k], 3);
  }
  EXPECT_EQ(count_T(x, d, ct, 2), 1);
}

TEST(Guards, EnumerationLimits) {
  const DegreeSequence big(4, {{{3, 0}, 4}});
  const ClauseTypeSequence ct{4, {0, 0, 0, 4}};
  EXPECT_THROW(for_each_configuration(big, ct, [](const Configuration&) {}), GuardError);
  EXPECT_THROW(expected_X_exact(big, ct), GuardError);
  Configuration wide;
  wide.n = 25;
  wide.copies.assign(50, 0);
  EXPECT_THROW(count_flat_prime_assignments(wide, 2), GuardError);
}

// Closed forms against the stored tallies, and the stored tallies against
// fresh enumeration.
TEST(Fixtures, ClosedFormsAndEnumerationAgree) {
  const auto fx = ksat::test::load_fixtures();
  ASSERT_EQ(fx.size(), 413u);
  for (const auto& f : fx) {
    const auto& d = f.cls.d;
    const auto& c = f.cls.c;
    ASSERT_EQ(count_space(d, c), f.configurations);
    ASSERT_EQ(expected_X_exact(d, c, f.M), f.expected_X);
    ASSERT_EQ(lattice_points(d, c, f.M).size(), f.lattice_points);
    const auto e = enumerate_class(d, c, f.M);
    ASSERT_EQ(e.configurations, f.configurations);
    ASSERT_EQ(e.pairs, f.pairs);
    for (const auto& [x, pairs] : e.per_point) {
      ASSERT_EQ(count_T(x, d, c, f.M), pairs);
    }
  }
}

// Markov: the fraction of configurations with a ♭′ assignment is at most E X.
TEST(Fixtures, MarkovBound) {
  for (const auto& f : ksat::test::load_fixtures()) {
    BigInt with = 0;
    for_each_configuration(f.cls.d, f.cls.c, [&](const Configuration& c) { with += exists_assignment(c, true, f.M); });
    ASSERT_LE(Rational(with, f.configurations), f.expected_X);
  }
}

TEST(Experiments, Harness) {
  EXPECT_THROW(run_experiment("no-such-experiment", {}, {1}), UnknownExperiment);
  EXPECT_THROW(run_experiment("tiny-exact", {}, {}), std::invalid_argument);
  EXPECT_EQ(experiment_names().size(), 8u);
  auto [lo, hi] = detail::wilson_interval(0, 10);
  EXPECT_EQ(lo, 0);
  EXPECT_GT(hi, 0.2);
  std::tie(lo, hi) = detail::wilson_interval(10, 10);
  EXPECT_EQ(hi, 1);
  std::tie(lo, hi) = detail::wilson_interval(5, 10);
  EXPECT_LT(lo, 0.5);
  EXPECT_GT(hi, 0.5);
}

TEST(Experiments, DeterministicAcrossThreadCounts) {
  ExperimentParams p;
  p.n = 3000;
  auto one = run_experiment("core-degree", p, {1, 2, 3});
  p.jobs = 2;
  auto two = run_experiment("core-degree", p, {1, 2, 3});
  ASSERT_EQ(one.per_seed.size(), two.per_seed.size());
  for (std::size_t k = 0; k < one.per_seed.size(); ++k) {
    EXPECT_EQ(one.per_seed[k].seed, two.per_seed[k].seed);
    EXPECT_EQ(one.per_seed[k].metrics, two.per_seed[k].metrics);
  }
  EXPECT_EQ(one.aggregate, two.aggregate);
}

TEST(Experiments, SmallRuns) {
  ExperimentParams p;
  p.gamma = parse_decimal("3.5");
  p.n = 60;
  const auto sat = run_experiment("sat-rate", p, {1, 2, 3, 4, 5});
  EXPECT_TRUE(sat.pass);
  p.n = 2;
  const auto tiny = run_experiment("tiny-exact", p, {1});
  EXPECT_TRUE(tiny.pass);
  EXPECT_EQ(tiny.aggregate.at("mismatches"), 0);
  std::ostringstream os;
  write_csv(os, tiny);
  EXPECT_EQ(os.str().rfind("experiment,seed,metric,value\n", 0), 0u);
  EXPECT_EQ(to_json(tiny).at("name"), "tiny-exact");
}
