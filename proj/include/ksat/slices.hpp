#pragma once

// log F restricted to a fixed ℓ̄ splits into two independent maximum-entropy
// problems: one over (t, f, h) and one over c. Each is solved through its
// convex dual in three variables,
//
//   V_var(ℓ)    = min_θ Σ_g w_g log(Ψ_g(e^θ)/w_g) − θ·(ℓ_ps − h_ps, ℓ_nsf, ℓ_nsr)
//   V_clause(ℓ) = min_φ Σ_k γ̂_k log(Ψ_k(e^φ)/γ̂_k) − φ·(ℓ_ps, ℓ_nsf, ℓ_nsr)
//
// and the restricted maximum is g(ℓ) = Σ_σ ℓ_σ log ℓ_σ + V_var + V_clause. At
// the optimum θ = log ν and φ = log μ, so stationary points of g are exactly
// the positive solutions of the Lagrange system. The solver uses ascent on g
// as its globalization.

#include "ksat/analytic.hpp"
#include "ksat/layout.hpp"
#include "ksat/numeric.hpp"
#include "ksat/posynomial.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace ksat {

template <class T>
using Vec3 = Vec<T, 3>;
template <class T>
using Mat3 = Mat<T, 3>;

/// The log-posynomial terms of log L, grouped by side.
template <class T>
struct EntropyModel {
  int M = 0;
  T lambda_p, lambda_n, h_ps, h_ns;
  // Variable side, in θ = log(ν_ps, ν_nsf, ν_nsr): one group per light degree
  // with δ̂ > 0, plus the heavy negative copies.
  std::vector<LogPosynomial<T, 3>> var_side;
  std::vector<std::pair<int, int>> var_degree;  // (i,j) of each var_side group; (-1,-1) for h
  // Clause side, in φ = log(μ_ps, μ_nsf, μ_nsr): Ψ_0..Ψ_3 (empty groups dropped).
  std::vector<LogPosynomial<T, 3>> clause_side;
  std::vector<int> clause_k;
  T var_entropy_const, clause_entropy_const;  // Σ w log w on each side
};

inline std::vector<Monomial<3>> light_monomials(int i, int j) {
  std::vector<Monomial<3>> ms;
  ms.push_back({1.0, {i, 0, 0}});
  double c = 1;
  for (int k = 1; k <= j; ++k) {
    c = c * (j - k + 1) / k;
    ms.push_back({c, {0, k, j - k}});
  }
  return ms;
}

inline std::vector<Monomial<3>> clause_monomials(int k) {
  std::vector<Monomial<3>> ms;
  for (const auto& a : clause_classes()) {
    if (a.tp() == k) {
      ms.push_back({2.0 / a.factorial_zeros(), {a.ps, a.nsf(), a.nsr()}});
    }
  }
  return ms;
}

template <class T>
EntropyModel<T> make_entropy_model(const AnalyticParams<T>& a) {
  using std::log;
  EntropyModel<T> m;
  m.M = a.M;
  m.lambda_p = a.lambda_p;
  m.lambda_n = a.lambda_n;
  m.h_ps = a.h_ps;
  m.h_ns = a.h_ns;
  m.var_entropy_const = 0;
  m.clause_entropy_const = 0;
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      const T w = a.light(i, j);
      if (w > 0) {
        m.var_side.emplace_back(w, light_monomials(i, j));
        m.var_degree.emplace_back(i, j);
        m.var_entropy_const += w * log(w);
      }
    }
  }
  if (a.h_ns > 0) {
    m.var_side.emplace_back(a.h_ns, std::vector<Monomial<3>>{{1.0, {0, 1, 0}}, {1.0, {0, 0, 1}}});
    m.var_degree.emplace_back(-1, -1);
    m.var_entropy_const += a.h_ns * log(a.h_ns);
  }
  for (int k = 0; k < 4; ++k) {
    if (a.gammahat_k[k] > 0) {
      m.clause_side.emplace_back(a.gammahat_k[k], clause_monomials(k));
      m.clause_k.push_back(k);
      m.clause_entropy_const += a.gammahat_k[k] * log(a.gammahat_k[k]);
    }
  }
  return m;
}

/// Σ_g w_g log Ψ_g(e^x) with gradient and Hessian.
template <class T>
T side_sum(const std::vector<LogPosynomial<T, 3>>& side, const Vec3<T>& x, Vec3<T>& grad, Mat3<T>* hess) {
  T value = 0;
  grad = zero_vec<T, 3>();
  if (hess) {
    *hess = zero_mat<T, 3>();
  }
  std::vector<T> scratch;
  for (const auto& g : side) {
    g.accumulate(x, +1, value, grad, hess, scratch);
  }
  return value;
}

enum class SliceStatus { interior, boundary, infeasible, rejected };

inline const char* to_string(SliceStatus s) {
  switch (s) {
    case SliceStatus::interior: return "interior";
    case SliceStatus::boundary: return "boundary";
    case SliceStatus::infeasible: return "infeasible";
    case SliceStatus::rejected: return "rejected";
  }
  return "?";
}

template <class T>
struct DualSolution {
  SliceStatus status = SliceStatus::infeasible;
  T value;  // min of the dual (without the entropy constant)
  Vec3<T> x;
  Mat3<T> hess;
  T grad_norm;
  int iterations = 0;
};

template <class T>
struct DualOptions {
  T grad_tol;
  T cap = 40;              // |x|_inf beyond which the minimizer is taken to be at infinity
  T boundary_tol;          // gradient size separating "boundary" from "infeasible" at the cap
  T max_step = 5;          // per-iteration bound on |Newton step|_inf
  int max_iterations = 200;

  static DualOptions standard() {
    DualOptions o;
    if constexpr (std::is_same_v<T, double>) {
      o.grad_tol = 1e-11;
    } else {
      o.grad_tol = boost::multiprecision::pow(T(10), -static_cast<int>(T::default_precision()) + 10);
    }
    o.boundary_tol = 1e-8;
    return o;
  }
};

namespace detail {

// Value change indistinguishable from rounding at the size of f.
template <class T>
T rounding_slack(const T& f) {
  using std::abs;
  return 64 * resolution<T>() * (1 + abs(f));
}

}  // namespace detail

/// Minimizes Σ_g w_g log Ψ_g(e^x) − x·b by damped Newton from `start`.
template <class T>
DualSolution<T> minimize_dual(const std::vector<LogPosynomial<T, 3>>& side, const Vec3<T>& b, Vec3<T> x,
                              const DualOptions<T>& opt) {
  DualSolution<T> out;
  Vec3<T> g;
  Mat3<T> h;
  auto eval = [&](const Vec3<T>& at, Vec3<T>& grad, Mat3<T>* hess) {
    T v = side_sum(side, at, grad, hess) - dot<T, 3>(at, b);
    for (int d = 0; d < 3; ++d) {
      grad[d] -= b[d];
    }
    return v;
  };
  T f = eval(x, g, &h);
  bool decided = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.iterations = it;
    const T gn = norm_inf<T, 3>(g);
    if (gn < opt.grad_tol) {
      out.status = SliceStatus::interior;
      decided = true;
      break;
    }
    if (norm_inf<T, 3>(x) > opt.cap) {
      out.status = gn < opt.boundary_tol ? SliceStatus::boundary : SliceStatus::infeasible;
      decided = true;
      break;
    }
    Vec3<T> rhs;
    for (int d = 0; d < 3; ++d) {
      rhs[d] = -g[d];
    }
    auto step = solve<T, 3>(h, rhs);
    if (!step || dot<T, 3>(*step, g) >= 0) {
      step = rhs;  // fall back to steepest descent
    }
    // A single long step can jump past the cap from a cold start.
    if (const T len = norm_inf<T, 3>(*step); len > opt.max_step) {
      for (auto& v : *step) {
        v *= opt.max_step / len;
      }
    }
    const T slope = dot<T, 3>(*step, g);
    T s = 1;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      Vec3<T> trial;
      for (int d = 0; d < 3; ++d) {
        trial[d] = x[d] + s * (*step)[d];
      }
      Vec3<T> g2;
      Mat3<T> h2;
      const T f2 = eval(trial, g2, &h2);
      const T gn2 = norm_inf<T, 3>(g2);
      // Armijo with strict progress, or a full Newton step that halves the
      // gradient while the value stays flat to rounding.
      if ((f2 <= f + s * slope / 10000 && (f2 < f || gn2 < gn)) ||
          (ls == 0 && gn2 < gn / 2 && f2 <= f + detail::rounding_slack(f))) {
        x = trial;
        f = f2;
        g = g2;
        h = h2;
        moved = true;
        break;
      }
      s /= 2;
    }
    if (!moved) {
      // No further decrease representable: converged to rounding level.
      out.status = gn < opt.boundary_tol ? SliceStatus::interior : SliceStatus::infeasible;
      decided = true;
      break;
    }
  }
  if (!decided) {
    if (!(norm_inf<T, 3>(g) < opt.boundary_tol)) {
      throw NumericError("slice dual did not converge in " + std::to_string(opt.max_iterations) +
                         " Newton steps; |grad| = " + to_decimal(norm_inf<T, 3>(g), 6) +
                         ", |x| = " + to_decimal(norm_inf<T, 3>(x), 6));
    }
    out.status = SliceStatus::boundary;
  }
  out.value = f;
  out.x = x;
  out.hess = h;
  out.grad_norm = norm_inf<T, 3>(g);
  return out;
}

/// The restricted maximum g(ℓ) with its derivatives in (ℓ_ps, ℓ_nsf, ℓ_nsr).
template <class T>
struct SliceValue {
  SliceStatus status = SliceStatus::rejected;
  T value;
  std::array<T, 5> ell;
  Vec3<T> grad;
  Mat3<T> hess;
  Vec3<T> theta, phi;  // dual optima: log ν and log μ
};

template <class T>
std::array<T, 5> full_ell(const EntropyModel<T>& m, const Vec3<T>& y) {
  return {y[0], m.lambda_p - y[0], y[1], y[2], m.lambda_n - y[1] - y[2]};
}

template <class T>
SliceValue<T> slice_value(const EntropyModel<T>& m, const Vec3<T>& y, const Vec3<T>& theta0, const Vec3<T>& phi0,
                          const DualOptions<T>& opt) {
  using std::log;
  SliceValue<T> out;
  out.ell = full_ell(m, y);
  for (const auto& v : out.ell) {
    if (v < 0) {
      out.status = SliceStatus::rejected;
      return out;
    }
  }
  // The clause side has four groups and rules out most infeasible slices cheaply.
  const auto dc = minimize_dual(m.clause_side, y, phi0, opt);
  if (dc.status == SliceStatus::infeasible) {
    out.status = SliceStatus::infeasible;
    return out;
  }
  const Vec3<T> b_var{y[0] - m.h_ps, y[1], y[2]};
  const auto dv = minimize_dual(m.var_side, b_var, theta0, opt);
  if (dv.status == SliceStatus::infeasible) {
    out.status = SliceStatus::infeasible;
    return out;
  }
  bool on_boundary = dv.status == SliceStatus::boundary || dc.status == SliceStatus::boundary;
  T ent = 0;
  for (const auto& v : out.ell) {
    if (v > 0) {
      ent += v * log(v);
    } else {
      on_boundary = true;
    }
  }
  out.value = ent + dv.value - m.var_entropy_const + dc.value - m.clause_entropy_const;
  out.theta = dv.x;
  out.phi = dc.x;
  out.status = on_boundary ? SliceStatus::boundary : SliceStatus::interior;
  if (!on_boundary) {
    const auto& l = out.ell;
    out.grad = {log(l[kPs] / l[kPu]) - dv.x[0] - dc.x[0], log(l[kNsf] / l[kNu]) - dv.x[1] - dc.x[1],
                log(l[kNsr] / l[kNu]) - dv.x[2] - dc.x[2]};
    auto iv = inverse<T, 3>(dv.hess);
    auto ic = inverse<T, 3>(dc.hess);
    if (!iv || !ic) {
      throw NumericError("singular dual Hessian on an interior slice");
    }
    out.hess = zero_mat<T, 3>();
    out.hess[0][0] = 1 / l[kPs] + 1 / l[kPu];
    out.hess[1][1] = 1 / l[kNsf] + 1 / l[kNu];
    out.hess[2][2] = 1 / l[kNsr] + 1 / l[kNu];
    out.hess[1][2] = out.hess[2][1] = 1 / l[kNu];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        out.hess[r][c] -= (*iv)[r][c] + (*ic)[r][c];
      }
    }
  }
  return out;
}

/// A point in the relative interior of the ℓ projection: the common moment
/// of the two sides at the minimizer of A_var(θ) + A_clause(−θ) + θ_ps·h_ps.
template <class T>
Vec3<T> interior_ell(const EntropyModel<T>& m) {
  Vec3<T> x = zero_vec<T, 3>();
  auto eval = [&](const Vec3<T>& at, Vec3<T>& grad, Mat3<T>& hess, Vec3<T>& clause_mean) {
    Vec3<T> g1, g2;
    Mat3<T> h1, h2;
    const Vec3<T> neg{-at[0], -at[1], -at[2]};
    T v = side_sum(m.var_side, at, g1, &h1) + side_sum(m.clause_side, neg, g2, &h2) + at[0] * m.h_ps;
    for (int d = 0; d < 3; ++d) {
      grad[d] = g1[d] - g2[d] + (d == 0 ? m.h_ps : T(0));
      for (int e = 0; e < 3; ++e) {
        hess[d][e] = h1[d][e] + h2[d][e];
      }
    }
    clause_mean = g2;
    return v;
  };
  Vec3<T> g, mean;
  Mat3<T> h;
  T f = eval(x, g, h, mean);
  const auto opt = DualOptions<T>::standard();
  for (int it = 0; it < 500 && norm_inf<T, 3>(g) > opt.grad_tol; ++it) {
    Vec3<T> rhs{-g[0], -g[1], -g[2]};
    auto step = solve<T, 3>(h, rhs);
    if (!step || dot<T, 3>(*step, g) >= 0) {
      step = rhs;
    }
    const T slope = dot<T, 3>(*step, g);
    T s = 1;
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      Vec3<T> trial{x[0] + s * (*step)[0], x[1] + s * (*step)[1], x[2] + s * (*step)[2]};
      Vec3<T> g2, mean2;
      Mat3<T> h2;
      const T f2 = eval(trial, g2, h2, mean2);
      const T gn = norm_inf<T, 3>(g), gn2 = norm_inf<T, 3>(g2);
      if ((f2 <= f + s * slope / 10000 && (f2 < f || gn2 < gn)) ||
          (ls == 0 && gn2 < gn / 2 && f2 <= f + detail::rounding_slack(f))) {
        x = trial;
        f = f2;
        g = g2;
        h = h2;
        mean = mean2;
        moved = true;
        break;
      }
      s /= 2;
    }
    if (!moved) {
      break;
    }
    if (norm_inf<T, 3>(x) > opt.cap) {
      throw NumericError("the two sides of the polytope have no common interior moment");
    }
  }
  return mean;
}

template <class T>
struct AscentResult {
  bool converged = false;
  int iterations = 0;
  Vec3<T> ell;
  Vec3<T> theta, phi;
  T value;
  T grad_norm;
};

/// Damped Newton ascent of g(ℓ) from `start` (pulled towards `anchor` until
/// the slice is interior). Newton steps are used where the Hessian is
/// negative definite, gradient steps elsewhere.
template <class T>
AscentResult<T> ascend_slices(const EntropyModel<T>& m, Vec3<T> start, const Vec3<T>& anchor, const T& tol,
                              int max_iterations = 500) {
  const auto opt = DualOptions<T>::standard();
  const Vec3<T> zero = zero_vec<T, 3>();
  auto cur = slice_value(m, start, zero, zero, opt);
  for (int pull = 0; cur.status != SliceStatus::interior; ++pull) {
    if (pull > 80) {
      throw NumericError("could not place the start inside the polytope");
    }
    for (int d = 0; d < 3; ++d) {
      start[d] = anchor[d] + (start[d] - anchor[d]) / 2;
    }
    cur = slice_value(m, start, zero, zero, opt);
  }
  AscentResult<T> out;
  Vec3<T> y = start;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it;
    if (norm_inf<T, 3>(cur.grad) < tol) {
      out.converged = true;
      break;
    }
    Mat3<T> neg;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        neg[r][c] = -cur.hess[r][c];
      }
    }
    std::optional<Vec3<T>> step;
    if (positive_definite<T, 3>(neg)) {
      step = solve<T, 3>(neg, cur.grad);
    }
    if (!step) {
      step = cur.grad;
    }
    // Keep the trial step well inside the positive orthant of ℓ.
    T s = 1;
    for (int d = 0; d < 3; ++d) {
      using std::abs;
      const T room = y[d] / 2;
      if (abs((*step)[d]) * s > room) {
        s = room / abs((*step)[d]);
      }
    }
    const T slope = dot<T, 3>(*step, cur.grad);
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      Vec3<T> trial{y[0] + s * (*step)[0], y[1] + s * (*step)[1], y[2] + s * (*step)[2]};
      auto next = slice_value(m, trial, cur.theta, cur.phi, opt);
      if (next.status != SliceStatus::interior) {
        s /= 2;
        continue;
      }
      const T gn = norm_inf<T, 3>(cur.grad);
      const T gn2 = norm_inf<T, 3>(next.grad);
      if ((next.value >= cur.value + s * slope / 10000 && (next.value > cur.value || gn2 < gn)) ||
          (ls == 0 && gn2 < gn / 2 && next.value >= cur.value - detail::rounding_slack(cur.value))) {
        y = trial;
        cur = next;
        moved = true;
        break;
      }
      s /= 2;
    }
    if (!moved) {
      out.converged = norm_inf<T, 3>(cur.grad) < tol * 1000;
      break;
    }
  }
  out.ell = y;
  out.theta = cur.theta;
  out.phi = cur.phi;
  out.value = cur.value;
  out.grad_norm = norm_inf<T, 3>(cur.grad);
  return out;
}

/// The maximizer of the slice: every group's mass spread over its monomials
/// in proportion to coef·e^{x·a}, with θ on the variable side and φ on the
/// clause side. The model may carry perturbed coefficients, in which case the
/// result is another point of the same slice.
template <class T>
PolytopePoint<T> slice_point(const EntropyModel<T>& m, const Vec3<T>& theta, const Vec3<T>& phi,
                             const std::array<T, 5>& ell) {
  const Layout lay(m.M);
  PolytopePoint<T> x(lay);
  std::vector<T> p;
  for (std::size_t g = 0; g < m.var_side.size(); ++g) {
    const auto& grp = m.var_side[g];
    grp.log_sum(theta, p);
    const auto [i, j] = m.var_degree[g];
    if (i < 0) {
      x[lay.h_nsf()] = grp.weight * p[0];
      x[lay.h_nsr()] = grp.weight * p[1];
      continue;
    }
    x[lay.t(i, j)] = grp.weight * p[0];
    for (int k = 1; k <= j; ++k) {
      x[lay.f(i, j, k)] = grp.weight * p[k];
    }
  }
  const auto& cls = clause_classes();
  for (std::size_t g = 0; g < m.clause_side.size(); ++g) {
    const auto& grp = m.clause_side[g];
    grp.log_sum(phi, p);
    std::size_t slot = 0;
    for (std::size_t al = 0; al < cls.size(); ++al) {
      if (cls[al].tp() == m.clause_k[g]) {
        x[lay.c(static_cast<int>(al))] = grp.weight * p[slot++];
      }
    }
  }
  for (int s = 0; s < 5; ++s) {
    x[lay.ell(s)] = ell[s];
  }
  return x;
}

}  // namespace ksat
