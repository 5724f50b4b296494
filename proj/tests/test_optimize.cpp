#include "ksat/optimize.hpp"
#include "ksat/random.hpp"

#include <gtest/gtest.h>

using namespace ksat;

namespace {

const Rational kGamma = parse_decimal("4.4898");

const AnalyticParams<Real>& params() {
  static const auto a = clause_type_ideals<Real>(kGamma, 23, analytic_tolerance<Real>());
  return a;
}

const BoundReport<Real>& bound() {
  static const auto r = upper_bound_rate_here(kGamma, BoundOptions{});
  return r;
}

class Optimize : public ::testing::Test {
 protected:
  PrecisionGuard guard{50};
};

LagrangeVars<Real> ones() { return {{Real(1), Real(1), Real(1), Real(1), Real(1), Real(1)}}; }

}  // namespace

// At ν = μ = 1: Ψ_{i,j} = 1 + 2^j - 1, Ψ = 2, Ψ+ = 2, Ψ- = 3. Each Ψ_k sums
// 2/w! over its matrices (w zero entries), e.g. Ψ_0 over (0,3,0,0), (0,2,0,1),
// (0,1,0,2) is 1/3 + 1 + 1.
TEST_F(Optimize, PsiAtAllOnes) {
  const auto ps = evaluate_psis(ones(), params());
  for (int i = 0; i <= 23; ++i) {
    for (int j = 0; j <= 23; ++j) {
      ASSERT_EQ(ps.psi_light.at(i, j), pow(Real(2), j)) << i << "," << j;
    }
  }
  EXPECT_EQ(ps.psi, 2);
  EXPECT_EQ(ps.psi_p, 2);
  EXPECT_EQ(ps.psi_n, 3);
  const Real third = Real(7) / 3;
  EXPECT_LT(abs(ps.psi_clause[0] - third), Real("1e-48"));
  EXPECT_LT(abs(ps.psi_clause[1] - 7), Real("1e-48"));
  EXPECT_LT(abs(ps.psi_clause[2] - 7), Real("1e-48"));
  EXPECT_LT(abs(ps.psi_clause[3] - third), Real("1e-48"));
  LagrangeVars<Real> bad = ones();
  bad.v[kMuNsr] = 0;
  EXPECT_THROW(evaluate_psis(bad, params()), std::domain_error);
}

TEST_F(Optimize, PublishedSolutionIsNearlyCritical) {
  const auto r = lagrange_residual(published_solution<Real>(), params());
  EXPECT_LT((norm_inf<Real, 6>(r)), Real("1e-6"));
}

TEST_F(Optimize, SolveFromAllOnesReachesThePublishedRoot) {
  const auto sol = solve_lagrange(params(), ones());
  EXPECT_LT(sol.residual_norm, Real("1e-38"));
  const auto pub = published_solution<Real>();
  for (int k = 0; k < 6; ++k) {
    EXPECT_LT(abs(sol.vars.v[k] - pub.v[k]) / pub.v[k], Real("1e-6")) << kLagrangeNames[k];
  }
}

TEST_F(Optimize, MultistartRootsAgree) {
  MultistartOptions mo;
  mo.count = 8;
  mo.seed = 11;
  const auto ms = multistart(params(), mo);
  EXPECT_EQ(ms.starts.size(), 9u);
  EXPECT_EQ(ms.converged_count, 9);
  EXPECT_TRUE(ms.all_agree);
  EXPECT_LT(ms.max_spread, Real("1e-20"));
  EXPECT_EQ(multistart_points(4, 3, false).size(), 4u);
  for (const auto& s : multistart_points(50, 3, false)) {
    for (double v : s.v) {
      EXPECT_GE(v, 1e-2);
      EXPECT_LE(v, 1e2);
    }
  }
}

TEST_F(Optimize, ToleranceLadder) {
  auto opt = SolveOptions<Real>::standard();
  opt.tol = Real("1e-30");
  const auto coarse = solve_lagrange(params(), ones(), opt);
  opt.tol = Real("1e-40");
  const auto fine = solve_lagrange(params(), ones(), opt);
  EXPECT_LT(abs(max_F_value(coarse.vars, params()) - max_F_value(fine.vars, params())), Real("1e-25"));
}

// Central differences against the analytic gradient and Hessian of log L.
TEST_F(Optimize, GradientAndHessianMatchFiniteDifferences) {
  const LagrangeModel<Real> model(params());
  Rng rng = make_rng(9);
  const Real h("1e-20");
  for (int trial = 0; trial < 10; ++trial) {
    Vec<Real, 6> x;
    for (auto& v : x) {
      v = Real(uniform01(rng) * 2 - 1);
    }
    Vec<Real, 6> g;
    Mat<Real, 6> H;
    model.evaluate(x, g, &H);
    for (int d = 0; d < 6; ++d) {
      auto xp = x, xm = x;
      xp[d] += h;
      xm[d] -= h;
      Vec<Real, 6> gp, gm;
      const Real fd = (model.evaluate(xp, gp, nullptr) - model.evaluate(xm, gm, nullptr)) / (2 * h);
      EXPECT_LT(abs(fd - g[d]), Real("1e-15") * (1 + abs(g[d]))) << trial << " " << d;
      for (int e = 0; e < 6; ++e) {
        const Real fd2 = (gp[e] - gm[e]) / (2 * h);
        EXPECT_LT(abs(fd2 - H[e][d]), Real("1e-15") * (1 + abs(H[e][d]))) << trial << " " << d << " " << e;
      }
    }
  }
}

TEST_F(Optimize, CriticalPointIdentities) {
  const auto& r = bound();
  const auto& a = r.params;
  const auto x = critical_point(r.lagrange, a);
  const Layout L(23);
  const auto ps = evaluate_psis(r.lagrange, a);
  EXPECT_LT(abs(x[L.h_nsf()] + x[L.h_nsr()] - a.h_ns), Real("1e-48"));
  EXPECT_LT(abs(x[L.ell(kPu)] - a.lambda_p / ps.psi_p), Real("1e-48"));
  EXPECT_LT(abs(x[L.ell(kPs)] + x[L.ell(kPu)] - a.lambda_p), Real("1e-45"));
  EXPECT_LT(abs(x[L.ell(kNsf)] + x[L.ell(kNsr)] + x[L.ell(kNu)] - a.lambda_n), Real("1e-45"));
  const auto e = ell_of(r.lagrange, a.lambda_p, a.lambda_n);
  EXPECT_EQ(e[0], x[L.ell(kPs)]);
  EXPECT_EQ(e[2], x[L.ell(kNsr)]);
}

TEST_F(Optimize, LogFTwoRoutes) {
  const auto& r = bound();
  EXPECT_LT(abs(r.log_F_direct - r.log_maxF), Real("1e-25"));
  EXPECT_EQ(log_F(PolytopePoint<Real>(Layout(4))), 0);
}

TEST_F(Optimize, BConstantTwoRoutes) {
  const auto b = B_constant(params());
  EXPECT_LT(abs(b.log_B - b.log_B_alt), Real("1e-40"));
  EXPECT_LT(abs(b.log_B - Real("-27.326555039618430366844768160094283434542")), Real("1e-35"));
}

TEST_F(Optimize, RateBelowOneAtTheTargetDensity) {
  const auto& r = bound();
  EXPECT_LT(r.rate, 1);
  EXPECT_LT(abs(r.B_maxF - Real("0.999999896502445909")), Real("1e-17"));
  EXPECT_LT(abs(r.log_maxF - Real("27.32655493612087092")), Real("1e-17"));
  EXPECT_EQ(r.rate, continuity_factor<Real>() * r.B_maxF);
  EXPECT_LT(r.residual_norm, Real("1e-38"));
  EXPECT_EQ(r.multistart_count, 33);
  EXPECT_EQ(r.converged_count, 33);
  EXPECT_TRUE(r.all_roots_agree);
  const auto j = to_json(r);
  EXPECT_TRUE(j.at("rate_below_one").get<bool>());
  EXPECT_EQ(j.at("multistart_count"), 33);
}

TEST_F(Optimize, RateDecreasesWithDensity) {
  LagrangeVars<Real> root;
  const Real at_target = rate_at(kGamma, 23, published_solution<Real>(), &root);
  EXPECT_LT(abs(at_target - bound().rate), Real("1e-35"));
  const Real above = rate_at(parse_decimal("5.2"), 23, root);
  const Real below = rate_at(parse_decimal("4.2"), 23, root);
  EXPECT_LT(above, at_target);
  EXPECT_LT(above, 1);
  EXPECT_GT(below, 1);
}

TEST(Bisection, CoarseBracket) {
  int steps = 0;
  const auto rep = bisect_threshold(parse_decimal("4.2"), parse_decimal("4.6"), parse_decimal("0.0001"), 23, 50,
                                    [&](const ThresholdStep&) { ++steps; });
  EXPECT_EQ(rep.gamma_star, Rational(9195, 2048));
  EXPECT_EQ(rep.gamma_upper - rep.gamma_star, Rational(1, 10240));  // 0.4 / 2^12, the first width <= 1e-4
  EXPECT_EQ(rep.trace.size(), 13u);
  EXPECT_GE(rep.rate_lo, 1);
  EXPECT_LT(rep.rate_hi, 1);
  EXPECT_LE(rep.gamma_star, kGamma);
  EXPECT_EQ(steps, static_cast<int>(rep.trace.size()));
  for (std::size_t k = 1; k < rep.trace.size(); ++k) {
    EXPECT_EQ(rep.trace[k].hi - rep.trace[k].lo, (rep.trace[k - 1].hi - rep.trace[k - 1].lo) / 2);
  }
}

TEST(Bisection, CrossingToFiveDecimals) {
  const auto rep = bisect_threshold(parse_decimal("4.4897"), parse_decimal("4.4899"), parse_decimal("0.000001"));
  const double g = scalar_cast<double>(rep.gamma_star);
  EXPECT_NEAR(g, 4.48980, 5e-6);
  EXPECT_LE(rep.gamma_star, kGamma);
  EXPECT_GT(rep.gamma_upper, rep.gamma_star);
}

TEST(Bisection, InvalidBrackets) {
  EXPECT_THROW(bisect_threshold(parse_decimal("4.6"), parse_decimal("4.2"), parse_decimal("0.01")), BracketError);
  EXPECT_THROW(bisect_threshold(parse_decimal("4.5"), parse_decimal("4.6"), parse_decimal("0.01")), BracketError);
}

TEST(NaiveThreshold, FirstMomentOfTheSatisfyingCount) {
  PrecisionGuard guard(50);
  const Real v = naive_threshold<Real>();
  EXPECT_EQ(round(v * 1000), 5191);
  EXPECT_LT(abs(2 * pow(Real(7) / 8, v) - 1), Real("1e-48"));
  EXPECT_GT(v, scalar_cast<Real>(kGamma));
  EXPECT_NEAR(naive_threshold<double>(), 5.1909, 1e-4);
}

TEST(ConvertParams, DoubleCopyKeepsValues) {
  PrecisionGuard guard(50);
  const auto d = convert_params<double>(params());
  EXPECT_EQ(d.M, 23);
  EXPECT_NEAR(d.lambda_p, 8.15076789065, 1e-11);
  EXPECT_EQ(d.delta_hat.size, params().delta_hat.size);
}
