#include "ksat/polytope.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ksat;

namespace {

const Rational kGamma = parse_decimal("4.4898");

struct Setup {
  AnalyticParams<Real> a;
  ConstraintSystem sys;
};

// Parameters and constraint system at γ = 4.4898, cached per M.
const Setup& setup(int M) {
  static std::map<int, Setup> cache;
  auto it = cache.find(M);
  if (it == cache.end()) {
    auto a = clause_type_ideals<Real>(kGamma, M, analytic_tolerance<Real>());
    auto sys = build_constraints(a);
    it = cache.emplace(M, Setup{std::move(a), std::move(sys)}).first;
  }
  return it->second;
}

// The Lagrange root at M = 23.
const LagrangeVars<Real>& root() {
  static const auto r = solve_lagrange(setup(23).a, published_solution<Real>()).vars;
  return r;
}

class Polytope : public ::testing::Test {
 protected:
  PrecisionGuard guard{50};
};

}  // namespace

TEST(Layout, DimensionAudit) {
  for (int M = 1; M <= 23; ++M) {
    const Layout L(M);
    EXPECT_EQ(L.size(), Layout::closed_form_size(M)) << M;
    EXPECT_EQ(L.size(), (M + 1) * (M + 1) * (2 + M) / 2 + 23) << M;
    EXPECT_EQ(L.extended_count(), (M + 1) * M * (M + 1) / 2) << M;
    EXPECT_EQ(L.light_count(), (M + 1) * (M + 1));
  }
  EXPECT_EQ(clause_classes().size(), 16u);
  EXPECT_THROW(Layout(0), std::invalid_argument);
}

TEST(Layout, NamesAndForcedCoordinates) {
  const Layout L(3);
  EXPECT_EQ(L.name(L.t(2, 1)), "t[2,1]");
  EXPECT_EQ(L.name(L.f(1, 3, 2)), "f[1,3,2]");
  EXPECT_EQ(L.name(L.ell(kNsr)), "l_nsr");
  EXPECT_EQ(L.name(L.c(class_index({0, 1, 1, 1}))), "c(0,1,1,1)");
  EXPECT_TRUE(L.forced(L.h_nsr()));
  EXPECT_TRUE(L.forced(L.f(0, 3, 1)));
  EXPECT_FALSE(L.forced(L.f(0, 3, 3)));
  EXPECT_TRUE(L.forced(L.c(class_index({1, 2, 0, 0}))));
  EXPECT_FALSE(L.forced(L.c(class_index({0, 1, 2, 0}))));
  EXPECT_FALSE(L.forced(L.ell(kNsr)));
}

TEST(ClauseClasses, TypesAndBlocking) {
  std::array<int, 4> by_type{};
  int blocking = 0;
  for (const auto& c : clause_classes()) {
    EXPECT_EQ(c.ps + c.ns + c.pu + c.nu, 3);
    ++by_type[c.tp()];
    blocking += c.blocking();
  }
  EXPECT_EQ(by_type, (std::array<int, 4>{3, 5, 5, 3}));
  EXPECT_EQ(blocking, 3);
}

TEST_F(Polytope, RowCountAndZeroVector) {
  for (int M : {2, 6, 23}) {
    const auto& s = setup(M);
    EXPECT_EQ(s.sys.row_count(), (M + 1) * (M + 1) + 13);
    EXPECT_TRUE(s.sys.params.consistent());
    const auto r = residuals(s.sys, PolytopePoint<Rational>(s.sys.layout));
    for (std::size_t q = 0; q < r.size(); ++q) {
      EXPECT_EQ(r[q], -s.sys.rhs[q]);
    }
  }
}

TEST_F(Polytope, CriticalPointSatisfiesBothFormulations) {
  const auto& s = setup(23);
  const auto x = critical_point(root(), s.a);
  EXPECT_LT(max_abs(residuals(s.sys, x)), Real("1e-30"));
  EXPECT_LT(max_abs(original_residuals(s.sys, x)), Real("1e-30"));
  for (const auto& v : x.x) {
    EXPECT_GE(v, 0);
  }
  // A x = b, so A (2x) - b = b
  auto twice = x;
  for (auto& v : twice.x) {
    v *= 2;
  }
  const auto r = residuals(s.sys, twice);
  for (std::size_t q = 0; q < r.size(); ++q) {
    EXPECT_LT(abs(r[q] - scalar_cast<Real>(s.sys.rhs[q])), Real("1e-29"));
  }
}

TEST_F(Polytope, DimensionMismatchThrows) {
  const auto& s = setup(6);
  EXPECT_THROW(residuals(s.sys, PolytopePoint<Rational>(Layout(5))), std::invalid_argument);
  EXPECT_THROW(lp_min_coordinate(s.sys, s.sys.layout.size()), std::out_of_range);
}

TEST_F(Polytope, InconsistentParametersAreRejected) {
  auto p = setup(6).sys.params;
  p.c_hat[3] += Rational(1, 1000);
  EXPECT_FALSE(p.consistent());
  EXPECT_THROW(build_constraints(p), ParameterError);
  const DegreeSequence d(3, {{{1, 0}, 3}});
  EXPECT_THROW(constraint_params(d, ClauseTypeSequence{3, {1, 0, 0, 0}}, 2), ParameterError);
}

// At M = 6 the heavy mass is large enough that ℓ_nsr is bounded away from 0
// while ℓ_pu, ℓ_nsf and ℓ_nu reach it.
TEST_F(Polytope, EllMinimaAtSmallCutoff) {
  const auto& s = setup(6);
  std::array<Rational, 5> mins;
  for (int sg = 0; sg < 5; ++sg) {
    const auto m = lp_min_coordinate(s.sys, s.sys.layout.ell(sg));
    ASSERT_EQ(m.lp.status, LpStatus::optimal) << kEllNames[sg];
    EXPECT_TRUE(m.lp.certified) << kEllNames[sg];
    mins[sg] = m.value();
  }
  EXPECT_GT(mins[kPs], 0);
  EXPECT_EQ(mins[kPu], 0);
  EXPECT_EQ(mins[kNsf], 0);
  EXPECT_GT(mins[kNsr], 0);
  EXPECT_EQ(mins[kNu], 0);
  EXPECT_NEAR(scalar_cast<double>(mins[kPs]), 6.87, 0.01);
  EXPECT_NEAR(scalar_cast<double>(mins[kNsr]), 3.889, 0.001);
}

TEST_F(Polytope, LightOneVariablesCanVanish) {
  const auto& s = setup(6);
  const Layout& L = s.sys.layout;
  for (auto [i, j] : std::vector<std::pair<int, int>>{{1, 1}, {3, 2}, {6, 6}}) {
    const auto m = lp_min_coordinate(s.sys, L.t(i, j));
    EXPECT_TRUE(m.lp.certified);
    EXPECT_EQ(m.value(), 0) << i << "," << j;
  }
  // no f coordinates at j = 0, so t_{0,0} is pinned
  EXPECT_EQ(lp_min_coordinate(s.sys, L.t(0, 0)).value(), s.sys.params.light(0, 0));
}

TEST_F(Polytope, RelativeInteriorPoint) {
  const auto& s = setup(6);
  const auto ip = strict_interior_point(s.sys, InteriorMode::relative);
  ASSERT_TRUE(ip.found);
  EXPECT_TRUE(ip.lp.certified);
  EXPECT_GT(ip.margin, 0);
  EXPECT_EQ(max_abs(residuals(s.sys, ip.point)), 0);
  const auto zeros = structural_zeros(s.sys);
  int required = 0;
  for (int k = 0; k < s.sys.layout.size(); ++k) {
    if (zeros[k]) {
      EXPECT_EQ(ip.point[k], 0);
    } else {
      EXPECT_GE(ip.point[k], ip.margin) << s.sys.layout.name(k);
      ++required;
    }
  }
  EXPECT_EQ(ip.required, required);
}

TEST_F(Polytope, BlockedInteriorAtSmallCutoff) {
  // ℓ_nsr >= 3.889 on P at M = 6, so it cannot be held at 0
  const auto ip = strict_interior_point(setup(6).sys, InteriorMode::case2);
  EXPECT_FALSE(ip.found);
  EXPECT_EQ(ip.lp.status, LpStatus::infeasible);
  EXPECT_TRUE(ip.lp.certified);
  EXPECT_EQ(ip.fixed_zero, 44);
}

TEST_F(Polytope, NoInteriorWithoutAllPositiveClauses) {
  using ksat::test::conf;
  const auto c = conf(3, {{1, 2, -3}, {-1, -2, 3}, {1, -2, -3}});
  const auto d = degree_sequence(c);
  const auto ct = clause_type_sequence(c);
  ASSERT_EQ(ct.counts[3], 0);
  const auto sys = build_constraints(constraint_params(d, ct, 2));
  EXPECT_FALSE(strict_interior_point(sys).found);
}

TEST_F(Polytope, EscapeDirectionIsInTheNullSpace) {
  for (int M : {2, 6, 23}) {
    const auto& s = setup(M);
    const auto c3 = verify_case3_direction(s.sys);
    EXPECT_TRUE(c3.in_null_space) << M;
    for (const auto& v : c3.products) {
      EXPECT_EQ(v, 0);
    }
    const Layout& L = s.sys.layout;
    EXPECT_EQ(c3.direction[L.ell(kNsr)], 1);
    EXPECT_EQ(c3.direction[L.ell(kNsf)], -1);
    EXPECT_EQ(c3.direction[L.ell(kPs)], 0);
  }
  const auto c = ksat::test::conf(3, {{1, 2, 3}, {-1, -2, -3}});
  const auto tiny = build_constraints(constraint_params(degree_sequence(c), clause_type_sequence(c), 1));
  EXPECT_THROW(verify_case3_direction(tiny), std::invalid_argument);
}

TEST_F(Polytope, EscapeDirectionKeepsResidualsAtAnyScale) {
  const auto& s = setup(6);
  const auto ip = strict_interior_point(s.sys);
  ASSERT_TRUE(ip.found);
  const auto dir = verify_case3_direction(s.sys).direction;
  for (const Rational zeta : {Rational(1, 1000000), Rational(1, 7), Rational(-3, 11)}) {
    auto x = ip.point;
    for (std::size_t k = 0; k < x.x.size(); ++k) {
      x.x[k] += zeta * dir.x[k];
    }
    EXPECT_EQ(max_abs(residuals(s.sys, x)), 0);
  }
}

TEST_F(Polytope, RestrictedMaximumThroughTheCriticalPoint) {
  const auto& s = setup(23);
  const auto x = critical_point(root(), s.a);
  const Layout& L = s.sys.layout;
  std::array<Real, 5> ell;
  for (int sg = 0; sg < 5; ++sg) {
    ell[sg] = x[L.ell(sg)];
  }
  const auto sm = restricted_maximize(s.a, ell, Real("1e-30"));
  ASSERT_EQ(sm.status, SliceStatus::interior);
  EXPECT_LT(abs(sm.value - max_F_value(root(), s.a)), Real("1e-30"));
  EXPECT_LT(abs(log_F(sm.point) - sm.value), Real("1e-30"));
  ell[kPu] += Real("1e-6");
  EXPECT_EQ(restricted_maximize(s.a, ell, Real("1e-30")).status, SliceStatus::rejected);
}

TEST_F(Polytope, GridStaysBelowTheCriticalValue) {
  const auto& s = setup(23);
  const double top = scalar_cast<double>(max_F_value(root(), s.a));
  const auto g = grid_sweep(s.a, 6);
  EXPECT_EQ(g.points.size(), 216u);
  EXPECT_TRUE(g.all_finite);
  ASSERT_GE(g.best, 0);
  EXPECT_GT(g.interior, 0);
  for (const auto& p : g.points) {
    if (g.feasible(p)) {
      EXPECT_LE(p.value, top + 1e-12);
    }
  }
  EXPECT_LE(g.best_refined, max_F_value(root(), s.a) + Real("1e-30"));
  std::ostringstream os;
  write_grid_csv(os, g);
  EXPECT_EQ(os.str().rfind("l_ps,l_nsf,l_nsr,feasible,status,slice_max\n", 0), 0u);
  EXPECT_THROW(grid_sweep(s.a, 1), std::invalid_argument);
}

TEST_F(Polytope, RandomSlicePointsLieOnTheSlice) {
  const auto& s = setup(23);
  const auto ad = convert_params<double>(s.a);
  const auto m = make_entropy_model(ad);
  const auto y = interior_ell(m);
  Rng rng = make_rng(5);
  int found = 0;
  for (int t = 0; t < 10; ++t) {
    const auto p = random_slice_point(m, y, rng);
    if (!p) {
      continue;
    }
    ++found;
    EXPECT_LT(max_abs(residuals(s.sys, *p)), 1e-9);
    EXPECT_LT(max_abs(original_residuals(s.sys, *p)), 1e-9);
    const Layout& L = s.sys.layout;
    EXPECT_NEAR((*p)[L.ell(kPs)], y[0], 1e-9);
    EXPECT_NEAR((*p)[L.ell(kNsr)], y[2], 1e-9);
  }
  EXPECT_GE(found, 8);
}

TEST_F(Polytope, ConcaveInsideSlices) {
  const auto& s = setup(23);
  const auto ad = convert_params<double>(s.a);
  const auto y = interior_ell(make_entropy_model(ad));
  std::vector<Vec3<double>> slices{y, {y[0] * 0.98, y[1] * 1.02, y[2]}, {y[0], y[1] * 0.97, y[2] * 1.03}};
  const auto rep = concavity_probe(ad, s.sys, slices, 10, 3);
  EXPECT_GE(rep.trials, 20);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_LT(rep.max_residual, 1e-9);
}

TEST_F(Polytope, LogFRejectsNegativeCoordinates) {
  const auto& s = setup(6);
  PolytopePoint<Real> x(s.sys.layout);
  EXPECT_EQ(log_F(x), 0);
  x[s.sys.layout.t(1, 1)] = -1;
  EXPECT_THROW(log_F(x), std::domain_error);
}
