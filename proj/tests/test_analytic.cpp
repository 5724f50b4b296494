#include "ksat/analytic.hpp"
#include "ksat/optimize.hpp"

#include <gtest/gtest.h>

using namespace ksat;

namespace {

const Rational kGamma = parse_decimal("4.4898");

class Analytic : public ::testing::Test {
 protected:
  PrecisionGuard guard{50};
  AnalyticParams<Real> a = clause_type_ideals<Real>(kGamma, 23, analytic_tolerance<Real>());
};

Real g() { return scalar_cast<Real>(kGamma); }

void expect_close(const Real& got, const Real& want, const Real& tol, const char* what) {
  EXPECT_LT(abs(got - want), tol) << what << ": got " << decimal(got, 45) << " want " << decimal(want, 45);
}

}  // namespace

TEST(PoissonIdeal, MassAndMoments) {
  PrecisionGuard guard(50);
  const auto d = poisson_ideal<Real>(kGamma);
  expect_close(d.at(0, 0), exp(-3 * g()), Real("1e-54"), "delta_00");
  expect_close(d.total(), Real(1), d.tail_bound + Real("1e-45"), "total");
  Real copies = 0;
  for (int i = 0; i < d.size; ++i) {
    for (int j = 0; j < d.size; ++j) {
      copies += (i + j) * d.at(i, j);
    }
  }
  expect_close(copies, 3 * g(), Real("1e-38"), "copies per variable");
  EXPECT_LT(d.tail_bound, Real("1e-40"));
}

TEST(PoissonIdeal, CutoffMeetsItsBound) {
  for (double lambda : {0.5, 3.0, 6.7347, 20.0}) {
    const int n = poisson_cutoff(lambda);
    EXPECT_GT(n, lambda);
    EXPECT_LT(chernoff_tail(lambda, n), 1e-40);
    EXPECT_GE(chernoff_tail(lambda, n - 1), 1e-40);
  }
}

TEST(Ode, InitialConditionIsTheInput) {
  PrecisionGuard guard(50);
  const auto y = ode_solution<Real>(kGamma, Real(0));
  const auto d = poisson_ideal<Real>(kGamma);
  ASSERT_EQ(y.size, d.size);
  for (int i = 0; i < d.size; ++i) {
    for (int j = 0; j < d.size; ++j) {
      EXPECT_LT(abs(y.at(i, j) - d.at(i, j)), Real("1e-48"));
    }
  }
}

// The binomial-thinning sum against the collapsed Poisson form.
TEST(Ode, GeneralAndCollapsedFormsAgree) {
  PrecisionGuard guard(50);
  for (const char* t : {"0.1", "1.0", "3.0"}) {
    const Real tt(t);
    EXPECT_NO_THROW(ode_solution<Real>(kGamma, tt));
    const auto d = poisson_ideal<Real>(kGamma);
    const Real b = retention(kGamma, tt);
    const Real lambda = 3 * g() * b / 2;
    const Real closed = exp(-2 * lambda) * pow(lambda, 5) / (6 * 2);  // (i, j) = (3, 2)
    expect_close(ode_general_entry(d, b, 3, 2), closed, Real("1e-25"), t);
  }
}

TEST(Ode, RetentionDomain) {
  EXPECT_THROW(retention(kGamma, -0.1), std::domain_error);
  EXPECT_THROW(retention(kGamma, 4.4898), std::domain_error);
  EXPECT_DOUBLE_EQ(retention(Rational(3), 0.0), 1.0);
}

TEST(PureMass, TableSumMatchesClosedForm) {
  PrecisionGuard guard(50);
  for (const char* t : {"0", "0.01", "0.016", "0.5", "2.0"}) {
    expect_close(pure_mass<Real>(kGamma, Real(t)), pure_mass_closed<Real>(kGamma, Real(t)), Real("1e-38"), t);
  }
  // at t = 0 only the axes contribute: 3γ e^{-3γ/2}
  expect_close(pure_mass_closed<Real>(kGamma, Real(0)), 3 * g() * exp(-3 * g() / 2), Real("1e-48"), "y0(0)");
}

TEST_F(Analytic, StoppingTimeIsTheFirstRoot) {
  EXPECT_LT(abs(a.pure_residual), Real("1e-40"));
  for (int k = 1; k < 200; ++k) {
    EXPECT_GT(pure_mass_closed<Real>(kGamma, a.t_D * k / 200), 0) << k;
  }
  EXPECT_LT(pure_mass_closed<Real>(kGamma, a.t_D * Real("1.001")), 0);
  expect_close(a.b, retention(kGamma, a.t_D), Real("1e-48"), "b");
  EXPECT_GT(a.b, 0);
  EXPECT_LT(a.b, 1);
}

TEST_F(Analytic, PinnedConstants) {
  const Real tol("1e-30");
  auto rel = [&](const Real& got, const char* want, const char* what) {
    const Real w(want);
    EXPECT_LT(abs(got - w) / abs(w), tol) << what << ": " << decimal(got, 40);
  };
  rel(a.t_D, "1.6257170096099252199790390169256609519262e-02", "t_D");
  rel(a.b, "9.9758459962854968348082126345659949410952e-01", "b");
  rel(a.lambda_p, "8.1507678906499638873322274171077366018611", "lambda+");
  rel(a.lambda_n, "5.2698605990617383560684014123844935695809", "lambda-");
  rel(a.gammahat, "4.4735428299039007478002096098307433904807", "gammahat");
  rel(a.h_ps, "9.2223273813915760553182498530741740073796e-06", "h_ps");
  rel(a.h_ns, "2.5471375818297440410579716143471892073454e-06", "h_ns");
  rel(a.heavy_mass, "3.7866868435475054099032789641834662949329e-07", "heavy");
  rel(a.removed_mass, "2.4154003714503165191787365434005058904777e-03", "delta_00");
}

TEST_F(Analytic, PeeledIdealShape) {
  const auto y = ode_solution<Real>(kGamma, a.t_D);
  const auto& d = a.delta_hat;
  for (int i = 0; i < d.size; ++i) {
    for (int j = 0; j < d.size; ++j) {
      if (i < j || (j == 0 && i > 0)) {
        EXPECT_EQ(d.at(i, j), 0) << i << "," << j;
      } else if (i > j) {
        EXPECT_LT(abs(d.at(i, j) - 2 * y.at(i, j)), Real("1e-48")) << i << "," << j;
      } else if (i > 0) {
        EXPECT_LT(abs(d.at(i, i) - y.at(i, i)), Real("1e-48")) << i;
      }
    }
  }
  // δ̂_00 = 1 - (1 - e^{-λ})^2 with λ = 3γb/2
  const Real lambda = 3 * g() * a.b / 2;
  expect_close(a.removed_mass, 1 - pow(1 - exp(-lambda), 2), Real("1e-38"), "delta_00");
  EXPECT_EQ(d.total(), 1);
}

TEST_F(Analytic, ClauseTypeIdentities) {
  EXPECT_GE(a.lambda_p, a.lambda_n);
  Real sum = 0, pos = 0, neg = 0;
  for (int k = 0; k < 4; ++k) {
    EXPECT_GT(a.gammahat_k[k], 0);
    sum += a.gammahat_k[k];
    pos += k * a.gammahat_k[k];
    neg += (3 - k) * a.gammahat_k[k];
  }
  expect_close(sum, a.gammahat, Real("1e-45"), "sum gammahat_k");
  expect_close(pos, a.lambda_p, Real("1e-45"), "positive copies");
  expect_close(neg, a.lambda_n, Real("1e-45"), "negative copies");
  // every peeling step removes one clause: the core keeps γ - t_D clauses per variable
  expect_close(a.gammahat, g() - a.t_D, Real("1e-38"), "core clause density");
  const char* pinned[4] = {"0.27085098424822195038", "1.25675630164927058938", "1.94379504301853132616",
                           "1.00214050098787688187"};
  for (int k = 0; k < 4; ++k) {
    EXPECT_LT(abs(a.gammahat_k[k] - Real(pinned[k])), Real("1e-19")) << k;
  }
}

TEST_F(Analytic, HeavyMassFromTheTable) {
  Real heavy = 0, ps = 0, ns = 0;
  const auto& d = a.delta_hat;
  for (int i = 0; i < d.size; ++i) {
    for (int j = 0; j < d.size; ++j) {
      if (i > 23 || j > 23) {
        heavy += d.at(i, j);
        ps += i * d.at(i, j);
        ns += j * d.at(i, j);
      }
    }
  }
  EXPECT_EQ(heavy, a.heavy_mass);
  EXPECT_EQ(ps, a.h_ps);
  EXPECT_EQ(ns, a.h_ns);
  EXPECT_EQ(a.light(24, 1), 0);
  EXPECT_EQ(a.light(5, 3), d.at(5, 3));
}

TEST_F(Analytic, DoubleAgreesWithMultiprecision) {
  const auto ad = clause_type_ideals<double>(kGamma, 23, analytic_tolerance<double>());
  EXPECT_NEAR(ad.t_D, static_cast<double>(a.t_D), 1e-12);
  EXPECT_NEAR(ad.lambda_p, static_cast<double>(a.lambda_p), 1e-12);
  EXPECT_NEAR(ad.removed_mass, static_cast<double>(a.removed_mass), 1e-12);
}

TEST_F(Analytic, JsonCarriesFortyDigits) {
  const auto j = to_json(a);
  EXPECT_EQ(j.at("M"), 23);
  EXPECT_EQ(j.at("t_D").get<std::string>().substr(0, 12), "1.6257170096");
  EXPECT_EQ(j.at("gammahat_k").size(), 4u);
}
