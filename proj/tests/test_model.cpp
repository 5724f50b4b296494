#include "ksat/analytic.hpp"
#include "ksat/model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace ksat;
using ksat::test::conf;

TEST(SampleUniform, SingleClauseOnThreeVariables) {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto f = sample_uniform_formula(3, Rational(1, 3), s);
    ASSERT_EQ(f.clauses.size(), 1u);
    std::set<int> vars;
    for (int lit : f.clauses[0]) {
      vars.insert(variable_of(lit));
    }
    EXPECT_EQ(vars, (std::set<int>{1, 2, 3}));
  }
}

TEST(SampleUniform, ClauseCountIsFloorOfGammaN) {
  const auto f = sample_uniform_formula(100, parse_decimal("4.4898"), 7);
  EXPECT_EQ(f.clauses.size(), 448u);
  EXPECT_TRUE(is_proper(f));
  EXPECT_EQ(scaled_clause_count(degree_sequence(f)), Rational(448, 100));
}

TEST(SampleUniform, DeterministicPerSeed) {
  EXPECT_EQ(sample_uniform_formula(500, 4.2, 3), sample_uniform_formula(500, 4.2, 3));
  EXPECT_NE(sample_uniform_formula(500, 4.2, 3), sample_uniform_formula(500, 4.2, 4));
}

TEST(SampleUniform, CapacityError) {
  // 8 distinct clauses fit on 3 variables, 9 do not
  EXPECT_NO_THROW(sample_uniform_formula(3, Rational(8, 3), 1));
  EXPECT_THROW(sample_uniform_formula(3, Rational(3), 1), ModelError);
  EXPECT_THROW(sample_uniform_formula(2, Rational(1), 1), ModelError);
}

TEST(DegreeSequence, SingleClause) {
  const auto d = degree_sequence(Formula{3, {{1, 2, -3}}});
  EXPECT_EQ(d.scaled(1, 0), Rational(2, 3));
  EXPECT_EQ(d.scaled(0, 1), Rational(1, 3));
  EXPECT_EQ(d.total(), 1);
  EXPECT_EQ(scaled_clause_count(d), Rational(1, 3));
  EXPECT_EQ(literal_counts(d), std::make_pair(Rational(2, 3), Rational(1, 3)));
}

TEST(DegreeSequence, EmptyFormula) {
  const auto d = degree_sequence(Formula{2, {}});
  EXPECT_EQ(d.scaled(0, 0), 1);
  EXPECT_EQ(d.counts().size(), 1u);
}

TEST(DegreeSequence, SumsToOneExactly) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    EXPECT_EQ(degree_sequence(sample_uniform_formula(1000, 4.4898, s)).total(), 1);
  }
}

TEST(DegreeSequence, RejectsInconsistentCounts) {
  EXPECT_THROW(DegreeSequence(3, {{{1, 0}, 2}}), ModelError);
  EXPECT_THROW(scaled_clause_count(DegreeSequence(1, {{{1, 0}, 1}})), ModelError);
}

TEST(DegreeSequence, PoissonIdealHasClauseCountGamma) {
  PrecisionGuard g(50);
  const Rational gamma = parse_decimal("4.4898");
  const auto delta = poisson_ideal<Real>(gamma);
  Real c = 0, lp = 0, ln = 0;
  for (int i = 0; i < delta.size; ++i) {
    for (int j = 0; j < delta.size; ++j) {
      c += (i + j) * delta.at(i, j);
      lp += i * delta.at(i, j);
      ln += j * delta.at(i, j);
    }
  }
  using std::abs;
  const Real g3 = scalar_cast<Real>(gamma);
  EXPECT_LT(abs(c / 3 - g3), Real("1e-30"));
  EXPECT_LT(abs(lp - g3 * 3 / 2), Real("1e-30"));
  EXPECT_LT(abs(ln - g3 * 3 / 2), Real("1e-30"));
}

TEST(SampleConfiguration, RoundTripsDegreeSequence) {
  const auto d = degree_sequence(sample_uniform_formula(2000, 4.4898, 11));
  for (std::uint64_t s = 1; s <= 3; ++s) {
    const auto c = sample_configuration(d, s);
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(degree_sequence(c), d);
  }
}

TEST(SampleConfiguration, ThreeCopiesGiveTheUniqueClause) {
  const std::vector<std::pair<int, int>> deg{{1, 0}, {0, 1}, {1, 0}};
  const auto c = sample_configuration(deg, 5);
  ASSERT_EQ(c.clauses.size(), 1u);
  EXPECT_EQ(c.clauses[0], (std::array<int, 3>{0, 1, 2}));
  EXPECT_EQ(c.copies, (std::vector<int>{1, 0, 0, 1, 1, 0}));
}

// 6 labelled copies have 6!/(3!^2 2!) = 10 partitions into triples.
TEST(SampleConfiguration, UniformOverTheTenPartitions) {
  const std::vector<std::pair<int, int>> deg{{2, 1}, {1, 2}};
  std::map<std::vector<std::array<int, 3>>, int> freq;
  const int draws = 100000;
  for (int s = 0; s < draws; ++s) {
    ++freq[sample_configuration(deg, static_cast<std::uint64_t>(s)).clauses];
  }
  ASSERT_EQ(freq.size(), 10u);
  const double p = 0.1, mean = draws * p, sd = std::sqrt(draws * p * (1 - p));
  for (const auto& [k, v] : freq) {
    EXPECT_LT(std::abs(v - mean), 3 * sd);
  }
}

TEST(SampleConfiguration, PreservesCopyCounts) {
  const std::vector<std::pair<int, int>> deg{{3, 1}, {0, 2}, {2, 1}, {1, 2}};
  const auto c = sample_configuration(deg, 9);
  for (std::size_t v = 0; v < deg.size(); ++v) {
    EXPECT_EQ(c.copies[2 * v], deg[v].first);
    EXPECT_EQ(c.copies[2 * v + 1], deg[v].second);
  }
  EXPECT_THROW(sample_configuration(std::vector<std::pair<int, int>>{{1, 0}}, 1), ModelError);
}

TEST(Configuration, ValidateCatchesBrokenPartitions) {
  auto c = conf(3, {{1, 2, 3}});
  EXPECT_NO_THROW(c.validate());
  c.clauses[0][2] = 1;
  EXPECT_THROW(c.validate(), ModelError);
  c = conf(3, {{1, 2, 3}});
  c.copies[0] = 2;
  EXPECT_THROW(c.validate(), ModelError);
}

TEST(Project, SimpleConfiguration) {
  const auto c = conf(4, {{1, 2, -3}, {-1, 3, 4}});
  EXPECT_TRUE(is_simple(c));
  const auto f = project(c);
  EXPECT_TRUE(is_proper(f));
  EXPECT_EQ(f.clauses.size(), 2u);
}

TEST(Project, RepeatedClauseIsAMultiformula) {
  const auto c = conf(3, {{1, 2, 3}, {1, 2, 3}});
  const auto f = project(c);
  ASSERT_EQ(f.clauses.size(), 2u);
  EXPECT_EQ(f.clauses[0], f.clauses[1]);
  EXPECT_FALSE(is_proper(f));
  EXPECT_FALSE(is_simple(c));
}

// Every simple formula has exactly prod_v i_v! j_v! configurations above it.
TEST(Project, FiberSizeIsProductOfFactorials) {
  int checked = 0;
  for (const auto& tc : tiny_classes(4)) {
    std::map<std::vector<Clause>, std::int64_t> fiber;
    bool any_simple = false;
    for_each_configuration(tc.d, tc.c, [&](const Configuration& c) {
      if (is_simple(c)) {
        ++fiber[project(c).clauses];
        any_simple = true;
      }
    });
    if (!any_simple) {
      continue;
    }
    for (const auto& [clauses, count] : fiber) {
      std::int64_t expect = 1;
      for (const auto& [i, j] : variable_degrees(configuration_from_clauses(static_cast<int>(tc.n()), clauses))) {
        expect *= static_cast<std::int64_t>(factorial(i) * factorial(j));
      }
      ASSERT_EQ(count, expect);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(IsSimple, Examples) {
  EXPECT_TRUE(is_simple(conf(3, {{1, 2, 3}})));
  EXPECT_FALSE(is_simple(conf(3, {{1, -1, 3}})));
  EXPECT_FALSE(is_simple(conf(3, {{1, 1, 3}})));
}

TEST(ClauseTypes, AllPositive) {
  const auto t = clause_type_sequence(conf(4, {{1, 2, 3}, {2, 3, 4}}));
  EXPECT_EQ(t.counts, (std::array<std::int64_t, 4>{0, 0, 0, 2}));
  EXPECT_EQ(t.scaled(3), t.total());
}

TEST(ClauseTypes, SingleClause) {
  const auto t = clause_type_sequence(conf(3, {{1, 2, -3}}));
  EXPECT_EQ(t.scaled(2), Rational(1, 3));
}

TEST(ClauseTypes, LiteralIdentitiesHoldExactly) {
  for (std::uint64_t s = 1; s <= 5; ++s) {
    const auto c = configuration_from_formula(sample_uniform_formula(3000, 4.4898, s));
    const auto t = clause_type_sequence(c);
    const auto [lp, ln] = literal_counts(degree_sequence(c));
    EXPECT_EQ(t.scaled(1) + 2 * t.scaled(2) + 3 * t.scaled(3), lp);
    EXPECT_EQ(3 * t.scaled(0) + 2 * t.scaled(1) + t.scaled(2), ln);
    EXPECT_EQ(t.total(), scaled_clause_count(degree_sequence(c)));
  }
}

namespace {

// Counts n·δ rounded, then nudged so they sum to n with a copy count divisible by 3.
// Moves `by` variables from degree `from` to degree `to` after rounding.
DegreeSequence rounded_ideal(const IdealSequence<double>& xi, std::int64_t n, std::pair<int, int> from = {0, 0},
                             std::pair<int, int> to = {0, 0}, std::int64_t by = 0) {
  std::map<DegreeSequence::Key, std::int64_t> counts;
  std::int64_t total = 0, copies = 0;
  for (int i = 0; i < xi.size; ++i) {
    for (int j = 0; j < xi.size; ++j) {
      const auto v = static_cast<std::int64_t>(std::llround(xi.at(i, j) * static_cast<double>(n)));
      counts[{i, j}] = v;
      total += v;
      copies += (i + j) * v;
    }
  }
  if (by != 0) {
    counts[to] += by;
    counts[from] -= by;
    copies += (to.first + to.second - from.first - from.second) * by;
  }
  counts[{0, 0}] += n - total;
  while (copies % 3 != 0) {
    counts[{0, 0}] -= 1;
    counts[{1, 0}] += 1;
    copies += 1;
  }
  return DegreeSequence(n, counts);
}

}  // namespace

TEST(Neighborhood, IdealItselfIsInside) {
  const auto delta = poisson_ideal<double>(parse_decimal("4.4898"));
  const auto d = rounded_ideal(delta, 1000000);
  EXPECT_TRUE(in_neighborhood(d, delta, 0.01, false));
  // the literal n^{1/6} cutoff (= 10 here) excludes it: the ideal has mass beyond degree 10
  EXPECT_FALSE(in_neighborhood(d, delta, 0.01, true));
}

TEST(Neighborhood, MassMovedByTwoEpsilon) {
  const auto delta = poisson_ideal<double>(parse_decimal("4.4898"));
  const auto d = rounded_ideal(delta, 1000000, {6, 6}, {2, 2}, 20000);
  EXPECT_FALSE(in_neighborhood(d, delta, 0.01, false));
}

TEST(Neighborhood, RejectsNonIntegralClauseCount) {
  const auto delta = poisson_ideal<double>(parse_decimal("4.4898"));
  EXPECT_FALSE(in_neighborhood(DegreeSequence(1, {{{1, 0}, 1}}), delta, 1.0, false));
}

TEST(Dimacs, RoundTrip) {
  const auto f = sample_uniform_formula(50, 4.0, 2);
  std::stringstream ss;
  write_dimacs(ss, f);
  const auto back = to_formula(read_dimacs(ss));
  EXPECT_EQ(back.n, f.n);
  EXPECT_EQ(back.clauses, f.clauses);
}

TEST(Dimacs, RejectsMalformedInput) {
  std::stringstream bad("p cnf 3 2\n1 2 3 0\n");
  EXPECT_THROW(read_dimacs(bad), ModelError);
}

TEST(ConfigurationJson, RoundTrip) {
  const auto c = configuration_from_formula(sample_uniform_formula(30, 4.0, 3));
  EXPECT_EQ(configuration_from_json(to_json(c)), c);
}
