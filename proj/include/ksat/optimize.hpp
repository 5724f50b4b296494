#pragma once

// The first-moment exponential rate: the Lagrange system in (ν, μ), the
// critical point of log F, the constant B and the resulting bound.
//
// log L is handled in log coordinates x = (log ν_ps, log ν_nsf, log ν_nsr,
// log μ_ps, log μ_nsf, log μ_nsr):
//
//   log L = h_ps x_0 + Σ_L δ̂ log Ψ_ij + h_ns log Ψ + Σ_k γ̂_k log Ψ_k
//           − λ+ log Ψ_p − λ− log Ψ_n
//
// and the Lagrange system is ∇ log L = 0.

#include "ksat/analytic.hpp"
#include "ksat/layout.hpp"
#include "ksat/numeric.hpp"
#include "ksat/posynomial.hpp"
#include "ksat/random.hpp"
#include "ksat/slices.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace ksat {

template <class To, class From>
IdealSequence<To> convert_ideal(const IdealSequence<From>& s) {
  IdealSequence<To> out(s.size);
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    out.values[k] = scalar_cast<To>(s.values[k]);
  }
  out.tail_bound = scalar_cast<To>(s.tail_bound);
  return out;
}

template <class To, class From>
AnalyticParams<To> convert_params(const AnalyticParams<From>& a) {
  auto c = [](const From& x) { return scalar_cast<To>(x); };
  AnalyticParams<To> o;
  o.gamma = a.gamma;
  o.M = a.M;
  o.t_D = c(a.t_D);
  o.b = c(a.b);
  o.delta_hat = convert_ideal<To>(a.delta_hat);
  o.gammahat = c(a.gammahat);
  o.lambda_p = c(a.lambda_p);
  o.lambda_n = c(a.lambda_n);
  for (int k = 0; k < 4; ++k) {
    o.gammahat_k[k] = c(a.gammahat_k[k]);
  }
  o.h_ps = c(a.h_ps);
  o.h_ns = c(a.h_ns);
  o.heavy_mass = c(a.heavy_mass);
  o.removed_mass = c(a.removed_mass);
  o.pure_residual = c(a.pure_residual);
  return o;
}

enum LagrangeIndex : int { kNuPs = 0, kNuNsf, kNuNsr, kMuPs, kMuNsf, kMuNsr };
inline constexpr std::array<const char*, 6> kLagrangeNames = {"nu_ps", "nu_nsf", "nu_nsr",
                                                              "mu_ps", "mu_nsf", "mu_nsr"};

template <class T>
struct LagrangeVars {
  std::array<T, 6> v;

  const T& nu_ps() const { return v[kNuPs]; }
  const T& nu_nsf() const { return v[kNuNsf]; }
  const T& nu_nsr() const { return v[kNuNsr]; }
  const T& mu_ps() const { return v[kMuPs]; }
  const T& mu_nsf() const { return v[kMuNsf]; }
  const T& mu_nsr() const { return v[kMuNsr]; }

  void check_positive() const {
    for (int k = 0; k < 6; ++k) {
      if (!(v[k] > 0)) {
        throw std::domain_error(std::string("Lagrange variable ") + kLagrangeNames[k] + " must be positive");
      }
    }
  }

  Vec<T, 6> logs() const {
    using std::log;
    check_positive();
    Vec<T, 6> x;
    for (int k = 0; k < 6; ++k) {
      x[k] = log(v[k]);
    }
    return x;
  }

  static LagrangeVars from_logs(const Vec<T, 6>& x) {
    using std::exp;
    LagrangeVars out;
    for (int k = 0; k < 6; ++k) {
      out.v[k] = exp(x[k]);
    }
    return out;
  }

  template <class U>
  LagrangeVars<U> as() const {
    LagrangeVars<U> out;
    for (int k = 0; k < 6; ++k) {
      out.v[k] = scalar_cast<U>(v[k]);
    }
    return out;
  }
};

/// The solution block printed with the construction (8 significant digits).
template <class T>
LagrangeVars<T> published_solution() {
  return {{T("1.2782018"), T("0.33277280"), T("0.95336927"), T("1.9972796"), T("0.45029358"), T("0.33794030")}};
}

template <>
inline LagrangeVars<double> published_solution<double>() {
  return {{1.2782018, 0.33277280, 0.95336927, 1.9972796, 0.45029358, 0.33794030}};
}

template <class T>
struct PsiValues {
  IdealSequence<T> psi_light;  // Ψ_{i,j} for 0 <= i, j <= M
  std::array<T, 4> psi_clause;
  T psi, psi_p, psi_n;
};

/// Ψ's from their collapsed closed forms.
template <class T>
PsiValues<T> evaluate_psis(const LagrangeVars<T>& lv, const AnalyticParams<T>& a) {
  using std::pow;
  lv.check_positive();
  PsiValues<T> out;
  out.psi_light = IdealSequence<T>(a.M + 1);
  const T s = lv.nu_nsf() + lv.nu_nsr();
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      out.psi_light.at(i, j) = pow(lv.nu_ps(), i) + pow(s, j) - pow(lv.nu_nsr(), j);
    }
  }
  out.psi_clause.fill(T(0));
  for (const auto& al : clause_classes()) {
    out.psi_clause[al.tp()] += T(2) / al.factorial_zeros() * pow(lv.mu_ps(), al.ps) * pow(lv.mu_nsf(), al.nsf()) *
                               pow(lv.mu_nsr(), al.nsr());
  }
  out.psi = s;
  out.psi_p = lv.nu_ps() * lv.mu_ps() + 1;
  out.psi_n = lv.nu_nsf() * lv.mu_nsf() + lv.nu_nsr() * lv.mu_nsr() + 1;
  return out;
}

/// log L as a sum of weighted log-posynomials.
template <class T>
struct LagrangeModel {
  EntropyModel<T> entropy;
  LogPosynomial<T, 6> psi_p, psi_n;

  explicit LagrangeModel(const AnalyticParams<T>& a)
      : entropy(make_entropy_model(a)),
        psi_p(a.lambda_p, {{1.0, {1, 0, 0, 1, 0, 0}}, {1.0, {0, 0, 0, 0, 0, 0}}}),
        psi_n(a.lambda_n, {{1.0, {0, 1, 0, 0, 1, 0}}, {1.0, {0, 0, 1, 0, 0, 1}}, {1.0, {0, 0, 0, 0, 0, 0}}}) {}

  /// log L(e^x) with gradient and optional Hessian in x.
  T evaluate(const Vec<T, 6>& x, Vec<T, 6>& grad, Mat<T, 6>* hess) const {
    const Vec3<T> a{x[0], x[1], x[2]};
    const Vec3<T> b{x[3], x[4], x[5]};
    Vec3<T> ga, gb;
    Mat3<T> ha, hb;
    T value = entropy.h_ps * x[0] + side_sum(entropy.var_side, a, ga, hess ? &ha : nullptr) +
              side_sum(entropy.clause_side, b, gb, hess ? &hb : nullptr);
    grad = zero_vec<T, 6>();
    for (int d = 0; d < 3; ++d) {
      grad[d] = ga[d];
      grad[d + 3] = gb[d];
    }
    grad[0] += entropy.h_ps;
    if (hess) {
      *hess = zero_mat<T, 6>();
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          (*hess)[r][c] = ha[r][c];
          (*hess)[r + 3][c + 3] = hb[r][c];
        }
      }
    }
    std::vector<T> scratch;
    psi_p.accumulate(x, -1, value, grad, hess, scratch);
    psi_n.accumulate(x, -1, value, grad, hess, scratch);
    return value;
  }
};

template <class T>
T log_L(const LagrangeVars<T>& lv, const AnalyticParams<T>& a) {
  Vec<T, 6> g;
  return LagrangeModel<T>(a).evaluate(lv.logs(), g, nullptr);
}

/// The six equations of the expanded system, each written as right-hand side
/// minus left-hand side; this is ∂ log L / ∂ log v_σ.
template <class T>
Vec<T, 6> lagrange_residual(const LagrangeVars<T>& lv, const AnalyticParams<T>& a) {
  Vec<T, 6> g;
  LagrangeModel<T>(a).evaluate(lv.logs(), g, nullptr);
  return g;
}

template <class T>
struct SolveOptions {
  T tol;                 // target for the residual sup-norm
  int max_newton = 60;
  double ascent_tol = 1e-10;  // gradient sup-norm at which the double-precision ascent hands over

  static SolveOptions standard() {
    SolveOptions o;
    if constexpr (std::is_same_v<T, double>) {
      o.tol = 1e-11;
    } else {
      o.tol = boost::multiprecision::pow(T(10), -static_cast<int>(T::default_precision()) + 10);
    }
    return o;
  }
};

template <class T>
struct SolveResult {
  LagrangeVars<T> vars;
  T residual_norm;
  int ascent_iterations = 0;
  int newton_iterations = 0;
};

/// ℓ_ps, ℓ_nsf, ℓ_nsr of the critical-point formulas at (ν, μ).
template <class T>
Vec3<T> ell_of(const LagrangeVars<T>& lv, const T& lambda_p, const T& lambda_n) {
  const T pp = lv.nu_ps() * lv.mu_ps() + 1;
  const T pn = lv.nu_nsf() * lv.mu_nsf() + lv.nu_nsr() * lv.mu_nsr() + 1;
  return {lambda_p * lv.nu_ps() * lv.mu_ps() / pp, lambda_n * lv.nu_nsf() * lv.mu_nsf() / pn,
          lambda_n * lv.nu_nsr() * lv.mu_nsr() / pn};
}

/// Newton on ∇ log L = 0 in log coordinates, with backtracking on the
/// residual norm.
template <class T>
SolveResult<T> newton_polish(const LagrangeModel<T>& model, Vec<T, 6> x, const T& tol, int max_iterations) {
  std::ostringstream trace;
  Vec<T, 6> g;
  Mat<T, 6> h;
  model.evaluate(x, g, &h);
  T gn = norm_inf<T, 6>(g);
  SolveResult<T> out;
  for (int it = 0; it < max_iterations && !(gn < tol); ++it) {
    out.newton_iterations = it + 1;
    trace << "  newton " << it << ": |r| = " << to_decimal(gn, 6) << '\n';
    Vec<T, 6> rhs;
    for (int d = 0; d < 6; ++d) {
      rhs[d] = -g[d];
    }
    auto step = solve<T, 6>(h, rhs);
    if (!step) {
      throw NumericError("singular Jacobian in the Lagrange system\n" + trace.str());
    }
    T s = 1;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      Vec<T, 6> trial;
      for (int d = 0; d < 6; ++d) {
        trial[d] = x[d] + s * (*step)[d];
      }
      Vec<T, 6> g2;
      Mat<T, 6> h2;
      model.evaluate(trial, g2, &h2);
      const T gn2 = norm_inf<T, 6>(g2);
      if (gn2 < gn) {
        x = trial;
        g = g2;
        h = h2;
        gn = gn2;
        moved = true;
        break;
      }
      s /= 2;
    }
    if (!moved) {
      break;
    }
    using std::abs;
    for (int d = 0; d < 6; ++d) {
      if (abs(x[d]) > 200) {
        throw NumericError("Lagrange iterate left every bounded region of the positive orthant\n" + trace.str());
      }
    }
  }
  if (!(gn < tol)) {
    trace << "  final: |r| = " << to_decimal(gn, 6) << '\n';
    throw NumericError("Lagrange system did not converge to tolerance " + to_decimal(tol, 3) + "\n" + trace.str());
  }
  out.vars = LagrangeVars<T>::from_logs(x);
  out.residual_norm = gn;
  return out;
}

/// Solves the Lagrange system from `init`. The start is mapped to ℓ space,
/// the restricted maximum g(ℓ) is climbed in double precision, and the
/// resulting (ν, μ) = (e^θ, e^φ) is polished by Newton in T.
template <class T>
SolveResult<T> solve_lagrange(const AnalyticParams<T>& params, const LagrangeVars<T>& init,
                              const SolveOptions<T>& opt = SolveOptions<T>::standard()) {
  init.check_positive();
  const auto pd = convert_params<double>(params);
  const auto em = make_entropy_model(pd);
  const auto anchor = interior_ell(em);
  const auto start = ell_of(init.template as<double>(), pd.lambda_p, pd.lambda_n);
  const auto climb = ascend_slices(em, start, anchor, opt.ascent_tol);
  if (!climb.converged) {
    throw NumericError("ascent in l-space stalled with gradient " + decimal(climb.grad_norm, 6));
  }
  Vec<T, 6> x;
  for (int d = 0; d < 3; ++d) {
    x[d] = T(climb.theta[d]);
    x[d + 3] = T(climb.phi[d]);
  }
  auto out = newton_polish(LagrangeModel<T>(params), x, opt.tol, opt.max_newton);
  out.ascent_iterations = climb.iterations;
  return out;
}

struct MultistartOptions {
  int count = 32;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool include_published = true;
  double agreement = 1e-20;
};

template <class T>
struct MultistartResult {
  std::vector<LagrangeVars<double>> starts;
  std::vector<bool> converged;
  std::vector<std::string> failures;
  std::vector<LagrangeVars<T>> roots;  // converged roots, in start order
  LagrangeVars<T> root;                // the root of the first converged start
  T residual_norm;
  T max_spread;                        // max |component difference| to `root`
  bool all_agree = false;
  int converged_count = 0;
};

/// `count` log-uniform starts in [1e-2, 1e2]^6, plus the published solution
/// as an extra seeded start.
inline std::vector<LagrangeVars<double>> multistart_points(int count, std::uint64_t seed, bool include_published) {
  std::vector<LagrangeVars<double>> starts;
  if (include_published) {
    starts.push_back(published_solution<double>());
  }
  Rng rng = make_rng(seed);
  for (int s = 0; s < count; ++s) {
    LagrangeVars<double> v;
    for (auto& c : v.v) {
      c = std::pow(10.0, -2.0 + 4.0 * uniform01(rng));
    }
    starts.push_back(v);
  }
  return starts;
}

template <class T>
MultistartResult<T> multistart(const AnalyticParams<T>& params, const MultistartOptions& mo,
                               const SolveOptions<T>& opt = SolveOptions<T>::standard()) {
  MultistartResult<T> out;
  out.starts = multistart_points(mo.count, mo.seed, mo.include_published);
  struct Attempt {
    bool ok = false;
    SolveResult<T> result;
    std::string error;
  };
  auto attempts = parallel_map(out.starts.size(), mo.jobs, [&](std::size_t k) {
    Attempt at;
    try {
      at.result = solve_lagrange(params, out.starts[k].template as<T>(), opt);
      at.ok = true;
    } catch (const NumericError& e) {
      at.error = e.what();
    }
    return at;
  });
  using std::abs;
  out.max_spread = 0;
  for (const auto& at : attempts) {
    out.converged.push_back(at.ok);
    if (!at.ok) {
      out.failures.push_back(at.error);
      continue;
    }
    if (out.converged_count == 0) {
      out.root = at.result.vars;
      out.residual_norm = at.result.residual_norm;
    }
    ++out.converged_count;
    out.roots.push_back(at.result.vars);
    for (int d = 0; d < 6; ++d) {
      const T diff = abs(at.result.vars.v[d] - out.root.v[d]);
      if (diff > out.max_spread) {
        out.max_spread = diff;
      }
    }
  }
  if (out.converged_count == 0) {
    throw NumericError("no multistart converged");
  }
  out.all_agree = out.max_spread < T(mo.agreement);
  return out;
}

/// The critical-point coordinates x̄(ν, μ).
template <class T>
PolytopePoint<T> critical_point(const LagrangeVars<T>& lv, const AnalyticParams<T>& a) {
  using std::pow;
  const Layout lay(a.M);
  const auto ps = evaluate_psis(lv, a);
  PolytopePoint<T> x(lay);
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      const T d = a.light(i, j);
      if (!(d > 0)) {
        continue;
      }
      const T& psi = ps.psi_light.at(i, j);
      x[lay.t(i, j)] = d * pow(lv.nu_ps(), i) / psi;
      for (int k = 1; k <= j; ++k) {
        x[lay.f(i, j, k)] = d * T(binomial(j, k)) * pow(lv.nu_nsf(), k) * pow(lv.nu_nsr(), j - k) / psi;
      }
    }
  }
  x[lay.h_nsf()] = a.h_ns * lv.nu_nsf() / ps.psi;
  x[lay.h_nsr()] = a.h_ns * lv.nu_nsr() / ps.psi;
  const auto& cls = clause_classes();
  for (std::size_t al = 0; al < cls.size(); ++al) {
    const auto& c = cls[al];
    const int k = c.tp();
    if (a.gammahat_k[k] > 0) {
      x[lay.c(static_cast<int>(al))] = a.gammahat_k[k] * T(2) / c.factorial_zeros() * pow(lv.mu_ps(), c.ps) *
                                       pow(lv.mu_nsf(), c.nsf()) * pow(lv.mu_nsr(), c.nsr()) / ps.psi_clause[k];
    }
  }
  x[lay.ell(kPs)] = a.lambda_p * lv.nu_ps() * lv.mu_ps() / ps.psi_p;
  x[lay.ell(kPu)] = a.lambda_p / ps.psi_p;
  x[lay.ell(kNsf)] = a.lambda_n * lv.nu_nsf() * lv.mu_nsf() / ps.psi_n;
  x[lay.ell(kNsr)] = a.lambda_n * lv.nu_nsr() * lv.mu_nsr() / ps.psi_n;
  x[lay.ell(kNu)] = a.lambda_n / ps.psi_n;
  return x;
}

namespace detail {
template <class T>
T xlogx(const T& x) {
  using std::log;
  return x > 0 ? T(x * log(x)) : T(0);
}
}  // namespace detail

/// log F(x̄) with 0 log 0 = 0.
template <class T>
T log_F(const PolytopePoint<T>& x) {
  using std::log;
  const Layout lay(x.M);
  if (static_cast<int>(x.x.size()) != lay.size()) {
    throw std::invalid_argument("point dimension does not match the layout");
  }
  for (int k = 0; k < lay.size(); ++k) {
    if (x[k] < 0) {
      throw std::domain_error("negative coordinate " + lay.name(k));
    }
  }
  T v = 0;
  for (int s = 0; s < 5; ++s) {
    v += detail::xlogx(x[lay.ell(s)]);
  }
  for (int i = 0; i <= x.M; ++i) {
    for (int j = 0; j <= x.M; ++j) {
      v -= detail::xlogx(x[lay.t(i, j)]);
      for (int k = 1; k <= j; ++k) {
        const T& f = x[lay.f(i, j, k)];
        if (f > 0) {
          v -= f * log(f / T(binomial(j, k)));
        }
      }
    }
  }
  v -= detail::xlogx(x[lay.h_nsf()]) + detail::xlogx(x[lay.h_nsr()]);
  const auto& cls = clause_classes();
  for (std::size_t al = 0; al < cls.size(); ++al) {
    const T& c = x[lay.c(static_cast<int>(al))];
    if (c > 0) {
      v -= c * log(T(cls[al].factorial_zeros()) / 2 * c);
    }
  }
  return v;
}

template <class T>
struct BConstant {
  T log_B;      // simplified form
  T log_B_alt;  // unsimplified form through γ̂_k
};

template <class T>
BConstant<T> B_constant(const AnalyticParams<T>& a) {
  using std::log;
  T common = a.heavy_mass * log(T(2)) + detail::xlogx(a.h_ns);
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      common += detail::xlogx(a.light(i, j));
    }
  }
  BConstant<T> out;
  out.log_B = common - 2 * a.gammahat * log(3 * a.gammahat);
  T alt = common + (a.gammahat_k[0] + a.gammahat_k[3]) * log(T(3));
  for (int k = 0; k < 4; ++k) {
    alt += detail::xlogx(a.gammahat_k[k]);
  }
  out.log_B_alt = alt - detail::xlogx(a.lambda_p) - detail::xlogx(a.lambda_n);
  return out;
}

/// log of the closed-form value of F at the critical point for (ν, μ).
template <class T>
T max_F_value(const LagrangeVars<T>& lv, const AnalyticParams<T>& a) {
  using std::log;
  const auto ps = evaluate_psis(lv, a);
  T v = a.h_ps * log(lv.nu_ps()) + a.lambda_p * log(a.lambda_p / ps.psi_p) + a.lambda_n * log(a.lambda_n / ps.psi_n);
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      const T d = a.light(i, j);
      if (d > 0) {
        v += d * log(ps.psi_light.at(i, j) / d);
      }
    }
  }
  if (a.h_ns > 0) {
    v += a.h_ns * log(ps.psi / a.h_ns);
  }
  for (int k = 0; k < 4; ++k) {
    if (a.gammahat_k[k] > 0) {
      v += a.gammahat_k[k] * log(ps.psi_clause[k] / a.gammahat_k[k]);
    }
  }
  return v;
}

/// The continuity factor 1 + 10^-7.
template <class T>
T continuity_factor() {
  return T(1) + T(1) / 10000000;
}

struct BoundOptions {
  unsigned digits = kDefaultDigits;
  int M = 23;
  MultistartOptions multistart;
};

template <class T>
struct BoundReport {
  Rational gamma;
  int M = 23;
  unsigned digits = 0;
  AnalyticParams<T> params;
  LagrangeVars<T> lagrange;
  T log_maxF, log_F_direct;
  T log_B, log_B_alt;
  T B_maxF, rate, log_rate;
  T residual_norm;
  int multistart_count = 0;
  int converged_count = 0;
  bool all_roots_agree = false;
  T root_spread;
};

template <class T>
T analytic_tolerance() {
  if constexpr (std::is_same_v<T, double>) {
    return 1e-15;
  } else {
    return boost::multiprecision::pow(T(10), -static_cast<int>(T::default_precision()) + 5);
  }
}

/// The full pipeline at the current working precision.
inline BoundReport<Real> upper_bound_rate_here(const Rational& gamma, const BoundOptions& bo) {
  using std::exp;
  using std::log;
  BoundReport<Real> r;
  r.gamma = gamma;
  r.M = bo.M;
  r.digits = working_digits();
  r.params = clause_type_ideals<Real>(gamma, bo.M, analytic_tolerance<Real>());
  const auto ms = multistart(r.params, bo.multistart);
  r.lagrange = ms.root;
  r.residual_norm = norm_inf<Real, 6>(lagrange_residual(ms.root, r.params));
  r.multistart_count = static_cast<int>(ms.starts.size());
  r.converged_count = ms.converged_count;
  r.all_roots_agree = ms.all_agree;
  r.root_spread = ms.max_spread;
  r.log_maxF = max_F_value(ms.root, r.params);
  r.log_F_direct = log_F(critical_point(ms.root, r.params));
  const auto b = B_constant(r.params);
  r.log_B = b.log_B;
  r.log_B_alt = b.log_B_alt;
  r.B_maxF = exp(r.log_B + r.log_maxF);
  r.rate = continuity_factor<Real>() * r.B_maxF;
  r.log_rate = log(r.rate);
  return r;
}

inline BoundReport<Real> upper_bound_rate(const Rational& gamma, const BoundOptions& bo = {}) {
  PrecisionGuard guard(bo.digits);
  return upper_bound_rate_here(gamma, bo);
}

template <class T>
nlohmann::json to_json(const LagrangeVars<T>& v, int digits) {
  nlohmann::json j;
  for (int k = 0; k < 6; ++k) {
    j[kLagrangeNames[k]] = to_decimal(v.v[k], digits);
  }
  return j;
}

inline nlohmann::json to_json(const BoundReport<Real>& r) {
  const int d = static_cast<int>(r.digits);
  auto s = [&](const Real& x) { return decimal(x, d); };
  nlohmann::json j;
  j["gamma"] = decimal(r.gamma);
  j["M"] = r.M;
  j["digits"] = r.digits;
  j["params"] = to_json(r.params, d);
  j["lagrange"] = to_json(r.lagrange, d);
  j["log_maxF"] = s(r.log_maxF);
  j["log_F_direct"] = s(r.log_F_direct);
  j["log_B"] = s(r.log_B);
  j["log_B_alt"] = s(r.log_B_alt);
  j["B_maxF"] = s(r.B_maxF);
  j["rate"] = s(r.rate);
  j["log_rate"] = s(r.log_rate);
  j["residual_norm"] = decimal(r.residual_norm, 6);
  j["multistart_count"] = r.multistart_count;
  j["converged_count"] = r.converged_count;
  j["all_roots_agree"] = r.all_roots_agree;
  j["root_spread"] = decimal(r.root_spread, 6);
  j["rate_below_one"] = r.rate < 1;
  return j;
}

struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ThresholdStep {
  Rational lo, hi;
  Real rate_lo, rate_hi;
};

struct ThresholdReport {
  Rational gamma_star;   // lower end of the final bracket: rate(γ*) >= 1 > rate(γ* + tol)
  Rational gamma_upper;  // upper end: rate < 1 here
  Real rate_lo, rate_hi;
  std::vector<ThresholdStep> trace;
};

/// Rate at γ for bisection: a single solve seeded from `seed` (the previous
/// root) instead of a full multistart.
inline Real rate_at(const Rational& gamma, int M, const LagrangeVars<Real>& seed, LagrangeVars<Real>* root = nullptr) {
  using std::exp;
  const auto a = clause_type_ideals<Real>(gamma, M, analytic_tolerance<Real>());
  const auto sol = solve_lagrange(a, seed);
  if (root) {
    *root = sol.vars;
  }
  return continuity_factor<Real>() * exp(B_constant(a).log_B + max_F_value(sol.vars, a));
}

/// Bisects the density at which the rate crosses 1. Requires
/// rate(lo) >= 1 > rate(hi).
inline ThresholdReport bisect_threshold(Rational lo, Rational hi, const Rational& tol_gamma, int M = 23,
                                        unsigned digits = kDefaultDigits,
                                        const std::function<void(const ThresholdStep&)>& on_step = {}) {
  PrecisionGuard guard(digits);
  if (!(lo < hi)) {
    throw BracketError("bisection bracket must satisfy lo < hi");
  }
  LagrangeVars<Real> seed = published_solution<Real>();
  LagrangeVars<Real> root;
  ThresholdReport rep;
  rep.rate_lo = rate_at(lo, M, seed, &root);
  rep.rate_hi = rate_at(hi, M, root, &seed);
  if (!(rep.rate_lo >= 1) || !(rep.rate_hi < 1)) {
    throw BracketError("invalid bracket: rate(lo) = " + decimal(rep.rate_lo, 12) +
                       ", rate(hi) = " + decimal(rep.rate_hi, 12));
  }
  while (hi - lo > tol_gamma) {
    rep.trace.push_back({lo, hi, rep.rate_lo, rep.rate_hi});
    if (on_step) {
      on_step(rep.trace.back());
    }
    const Rational mid = (lo + hi) / 2;
    const Real r = rate_at(mid, M, seed, &root);
    seed = root;
    if (r >= 1) {
      lo = mid;
      rep.rate_lo = r;
    } else {
      hi = mid;
      rep.rate_hi = r;
    }
  }
  rep.trace.push_back({lo, hi, rep.rate_lo, rep.rate_hi});
  if (on_step) {
    on_step(rep.trace.back());
  }
  rep.gamma_star = lo;
  rep.gamma_upper = hi;
  return rep;
}

/// ln 2 / ln(8/7): where 2^n (7/8)^{γ n} = 1.
template <class T>
T naive_threshold() {
  using std::log;
  return log(T(2)) / log(T(8) / 7);
}

}  // namespace ksat
