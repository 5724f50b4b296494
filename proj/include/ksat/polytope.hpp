#pragma once

// The constraint system of P(d̂, ĉ), exact LP checks on it, and the sweep of
// restricted maxima over the ℓ projection.

#include "ksat/analytic.hpp"
#include "ksat/layout.hpp"
#include "ksat/model.hpp"
#include "ksat/numeric.hpp"
#include "ksat/optimize.hpp"
#include "ksat/random.hpp"
#include "ksat/simplex.hpp"
#include "ksat/slices.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksat {

struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exact right-hand sides of the system.
struct ConstraintParams {
  int M = 0;
  std::vector<Rational> d_light;  // d̂_{i,j} over [0, M]^2
  Rational h_ps, h_ns, ell_p, ell_n;
  std::array<Rational, 4> c_hat;

  const Rational& light(int i, int j) const { return d_light[static_cast<std::size_t>(i) * (M + 1) + j]; }

  /// ĉ1 + 2ĉ2 + 3ĉ3 = ℓ+ and 3ĉ0 + 2ĉ1 + ĉ2 = ℓ−.
  bool consistent() const {
    return c_hat[1] + 2 * c_hat[2] + 3 * c_hat[3] == ell_p && 3 * c_hat[0] + 2 * c_hat[1] + c_hat[2] == ell_n;
  }
};

/// Rationalizes the ideal parameters to `digits` significant digits. ℓ± are
/// recomputed from the rationalized d̂ and h, and ĉ0, ĉ3 from the clause
/// identities, so the rational system is consistent by construction.
inline ConstraintParams constraint_params(const AnalyticParams<Real>& a, unsigned digits = 40) {
  using std::abs;
  const Real tol("1e-30");
  const Real s1 = a.gammahat_k[1] + 2 * a.gammahat_k[2] + 3 * a.gammahat_k[3] - a.lambda_p;
  const Real s2 = 3 * a.gammahat_k[0] + 2 * a.gammahat_k[1] + a.gammahat_k[2] - a.lambda_n;
  const Real s3 = a.gammahat_k[0] + a.gammahat_k[1] + a.gammahat_k[2] + a.gammahat_k[3] - a.gammahat;
  if (abs(s1) > tol || abs(s2) > tol || abs(s3) > tol) {
    throw ParameterError("clause-type identities violated by " + decimal(Real(abs(s1) + abs(s2) + abs(s3)), 6));
  }
  ConstraintParams p;
  p.M = a.M;
  p.d_light.assign(static_cast<std::size_t>(a.M + 1) * (a.M + 1), Rational(0));
  Rational lp = 0, ln = 0;
  for (int i = 0; i <= a.M; ++i) {
    for (int j = 0; j <= a.M; ++j) {
      const Real& v = a.delta_hat.at(i, j);
      if (v > 0) {
        p.d_light[static_cast<std::size_t>(i) * (a.M + 1) + j] = rationalize(v, digits);
      }
      lp += i * p.light(i, j);
      ln += j * p.light(i, j);
    }
  }
  p.h_ps = a.h_ps > 0 ? rationalize(a.h_ps, digits) : Rational(0);
  p.h_ns = a.h_ns > 0 ? rationalize(a.h_ns, digits) : Rational(0);
  p.ell_p = lp + p.h_ps;
  p.ell_n = ln + p.h_ns;
  p.c_hat[1] = rationalize(a.gammahat_k[1], digits);
  p.c_hat[2] = rationalize(a.gammahat_k[2], digits);
  p.c_hat[3] = (p.ell_p - p.c_hat[1] - 2 * p.c_hat[2]) / 3;
  p.c_hat[0] = (p.ell_n - 2 * p.c_hat[1] - p.c_hat[2]) / 3;
  const Real gap = abs(scalar_cast<Real>(p.ell_p) - a.lambda_p) + abs(scalar_cast<Real>(p.ell_n) - a.lambda_n) +
                   abs(scalar_cast<Real>(p.c_hat[0]) - a.gammahat_k[0]) +
                   abs(scalar_cast<Real>(p.c_hat[3]) - a.gammahat_k[3]);
  if (gap > tol) {
    throw ParameterError("rationalized parameters drift by " + decimal(gap, 6));
  }
  return p;
}

/// Parameters of a concrete (d̂, ĉ) pair with light cutoff M.
inline ConstraintParams constraint_params(const DegreeSequence& d, const ClauseTypeSequence& c, int M) {
  ConstraintParams p;
  p.M = M;
  p.d_light.assign(static_cast<std::size_t>(M + 1) * (M + 1), Rational(0));
  p.h_ps = p.h_ns = p.ell_p = p.ell_n = 0;
  const Rational n(d.n());
  for (const auto& [ij, cnt] : d.counts()) {
    const auto [i, j] = ij;
    const Rational v = Rational(cnt) / n;
    if (i <= M && j <= M) {
      p.d_light[static_cast<std::size_t>(i) * (M + 1) + j] = v;
    } else {
      p.h_ps += i * v;
      p.h_ns += j * v;
    }
    p.ell_p += i * v;
    p.ell_n += j * v;
  }
  for (int k = 0; k < 4; ++k) {
    p.c_hat[k] = Rational(c.counts[k]) / n;
  }
  if (!p.consistent()) {
    throw ParameterError("clause-type sequence inconsistent with the literal counts");
  }
  return p;
}

struct ConstraintSystem {
  Layout layout;
  ConstraintParams params;
  std::vector<SparseRow> rows;
  std::vector<Rational> rhs;
  std::vector<std::string> names;

  int row_count() const { return static_cast<int>(rows.size()); }
};

namespace detail {

inline void add_row(ConstraintSystem& s, std::string name, std::vector<std::pair<int, Rational>> entries,
                    Rational rhs) {
  s.rows.push_back(make_row(std::move(entries)));
  s.rhs.push_back(std::move(rhs));
  s.names.push_back(std::move(name));
}

}  // namespace detail

/// The rows defining P: tf, h, c, ell, tfh-ell and c-ell groups, |L| + 13 in all.
inline ConstraintSystem build_constraints(const ConstraintParams& p) {
  if (!p.consistent()) {
    throw ParameterError("clause-type identities violated");
  }
  ConstraintSystem s{Layout(p.M), p, {}, {}, {}};
  const Layout& L = s.layout;
  const int M = p.M;
  const auto& cls = clause_classes();
  for (int i = 0; i <= M; ++i) {
    for (int j = 0; j <= M; ++j) {
      std::vector<std::pair<int, Rational>> e{{L.t(i, j), 1}};
      for (int k = 1; k <= j; ++k) {
        e.emplace_back(L.f(i, j, k), 1);
      }
      detail::add_row(s, "tf[" + std::to_string(i) + "," + std::to_string(j) + "]", std::move(e), p.light(i, j));
    }
  }
  detail::add_row(s, "h", {{L.h_nsf(), 1}, {L.h_nsr(), 1}}, p.h_ns);
  for (int k = 0; k < 4; ++k) {
    std::vector<std::pair<int, Rational>> e;
    for (std::size_t a = 0; a < cls.size(); ++a) {
      if (cls[a].tp() == k) {
        e.emplace_back(L.c(static_cast<int>(a)), 1);
      }
    }
    detail::add_row(s, "c[" + std::to_string(k) + "]", std::move(e), p.c_hat[k]);
  }
  detail::add_row(s, "ell+", {{L.ell(kPs), 1}, {L.ell(kPu), 1}}, p.ell_p);
  detail::add_row(s, "ell-", {{L.ell(kNsf), 1}, {L.ell(kNsr), 1}, {L.ell(kNu), 1}}, p.ell_n);
  {
    std::vector<std::pair<int, Rational>> ps{{L.ell(kPs), 1}}, nsf{{L.ell(kNsf), 1}, {L.h_nsf(), -1}},
        nsr{{L.ell(kNsr), 1}, {L.h_nsr(), -1}};
    for (int i = 0; i <= M; ++i) {
      for (int j = 0; j <= M; ++j) {
        if (i > 0) {
          ps.emplace_back(L.t(i, j), -i);
        }
        for (int k = 1; k <= j; ++k) {
          nsf.emplace_back(L.f(i, j, k), -k);
          if (j > k) {
            nsr.emplace_back(L.f(i, j, k), -(j - k));
          }
        }
      }
    }
    detail::add_row(s, "tfh-ell[ps]", std::move(ps), p.h_ps);
    detail::add_row(s, "tfh-ell[nsf]", std::move(nsf), 0);
    detail::add_row(s, "tfh-ell[nsr]", std::move(nsr), 0);
  }
  const std::array<int, 3> sig{kPs, kNsf, kNsr};
  for (int sg : sig) {
    std::vector<std::pair<int, Rational>> e{{L.ell(sg), 1}};
    for (std::size_t a = 0; a < cls.size(); ++a) {
      const int m = sg == kPs ? cls[a].ps : sg == kNsf ? cls[a].nsf() : cls[a].nsr();
      if (m > 0) {
        e.emplace_back(L.c(static_cast<int>(a)), -m);
      }
    }
    detail::add_row(s, std::string("c-ell[") + kEllNames[sg] + "]", std::move(e), 0);
  }
  return s;
}

inline ConstraintSystem build_constraints(const AnalyticParams<Real>& a, unsigned digits = 40) {
  return build_constraints(constraint_params(a, digits));
}

/// A x − b for every row.
template <class T>
std::vector<T> residuals(const ConstraintSystem& s, const PolytopePoint<T>& x) {
  if (static_cast<int>(x.x.size()) != s.layout.size()) {
    throw std::invalid_argument("point dimension " + std::to_string(x.x.size()) + " does not match K = " +
                                std::to_string(s.layout.size()));
  }
  std::vector<T> r;
  r.reserve(s.rows.size());
  for (std::size_t q = 0; q < s.rows.size(); ++q) {
    const auto& row = s.rows[q];
    T v = -scalar_cast<T>(s.rhs[q]);
    for (std::size_t k = 0; k < row.size(); ++k) {
      v += scalar_cast<T>(row.val[k]) * x[row.idx[k]];
    }
    r.push_back(v);
  }
  return r;
}

/// Residuals of the original formulation: tf, h, the five ℓ-from-(t,f,h)
/// rows, c, and the five ℓ-from-c rows.
template <class T>
std::vector<T> original_residuals(const ConstraintSystem& s, const PolytopePoint<T>& x) {
  const Layout& L = s.layout;
  const auto& p = s.params;
  const int M = p.M;
  auto R = [](const Rational& q) { return scalar_cast<T>(q); };
  std::vector<T> out;
  for (int i = 0; i <= M; ++i) {
    for (int j = 0; j <= M; ++j) {
      T v = x[L.t(i, j)] - R(p.light(i, j));
      for (int k = 1; k <= j; ++k) {
        v += x[L.f(i, j, k)];
      }
      out.push_back(v);
    }
  }
  out.push_back(x[L.h_nsf()] + x[L.h_nsr()] - R(p.h_ns));
  T ps = x[L.ell(kPs)] - R(p.h_ps), pu = x[L.ell(kPu)], nsf = x[L.ell(kNsf)] - x[L.h_nsf()],
    nsr = x[L.ell(kNsr)] - x[L.h_nsr()], nu = x[L.ell(kNu)];
  for (int i = 0; i <= M; ++i) {
    for (int j = 0; j <= M; ++j) {
      ps -= i * x[L.t(i, j)];
      nu -= j * x[L.t(i, j)];
      for (int k = 1; k <= j; ++k) {
        const T& f = x[L.f(i, j, k)];
        pu -= i * f;
        nsf -= k * f;
        nsr -= (j - k) * f;
      }
    }
  }
  out.insert(out.end(), {ps, pu, nsf, nsr, nu});
  const auto& cls = clause_classes();
  for (int k = 0; k < 4; ++k) {
    T v = -R(p.c_hat[k]);
    for (std::size_t a = 0; a < cls.size(); ++a) {
      if (cls[a].tp() == k) {
        v += x[L.c(static_cast<int>(a))];
      }
    }
    out.push_back(v);
  }
  for (int sg = 0; sg < 5; ++sg) {
    T v = x[L.ell(sg)];
    for (std::size_t a = 0; a < cls.size(); ++a) {
      const auto& c = cls[a];
      const int m = sg == kPs ? c.ps : sg == kPu ? c.pu : sg == kNsf ? c.nsf() : sg == kNsr ? c.nsr() : c.nu;
      v -= m * x[L.c(static_cast<int>(a))];
    }
    out.push_back(v);
  }
  return out;
}

template <class T>
T max_abs(const std::vector<T>& v) {
  using std::abs;
  T m = 0;
  for (const auto& x : v) {
    if (abs(x) > m) {
      m = abs(x);
    }
  }
  return m;
}

inline LinearProgram to_lp(const ConstraintSystem& s, std::vector<Rational> cost) {
  LinearProgram lp;
  lp.cols = s.layout.size();
  lp.rows = s.rows;
  lp.rhs = s.rhs;
  lp.cost = std::move(cost);
  return lp;
}

struct CoordinateMin {
  int coord = 0;
  std::string name;
  LpResult lp;

  const Rational& value() const { return lp.objective; }
};

/// Exact minimum of one coordinate over P, with its certificate.
inline CoordinateMin lp_min_coordinate(const ConstraintSystem& s, int coord, const LpOptions& opt = {}) {
  if (coord < 0 || coord >= s.layout.size()) {
    throw std::out_of_range("coordinate out of range");
  }
  std::vector<Rational> cost(static_cast<std::size_t>(s.layout.size()), Rational(0));
  cost[coord] = 1;
  return {coord, s.layout.name(coord), solve_lp(to_lp(s, std::move(cost)), opt)};
}

/// Coordinates that vanish on all of P because their light degree has no
/// mass: t and f of (i, j) with d̂_{i,j} = 0.
inline std::vector<char> structural_zeros(const ConstraintSystem& s) {
  const Layout& L = s.layout;
  std::vector<char> z(static_cast<std::size_t>(L.size()), 0);
  for (int i = 0; i <= L.M(); ++i) {
    for (int j = 0; j <= L.M(); ++j) {
      if (s.params.light(i, j) == 0) {
        z[L.t(i, j)] = 1;
        for (int k = 1; k <= j; ++k) {
          z[L.f(i, j, k)] = 1;
        }
      }
    }
  }
  return z;
}

struct InteriorReport {
  bool found = false;
  Rational margin;  // every required coordinate of `point` is >= margin
  PolytopePoint<Rational> point;
  LpResult lp;
  int required = 0;  // number of coordinates asked to be positive
  int fixed_zero = 0;
};

enum class InteriorMode {
  relative,  // all coordinates except structural zeros positive
  case2,     // ℓ_nsr and the forced coordinates fixed at 0, all other non-structural ones positive
};

/// Maximizes s over x = s·1_J + y, y >= 0, x ∈ P. A positive optimum gives a
/// point with x_j >= s on J; otherwise the LP certificate shows none exists.
inline InteriorReport strict_interior_point(const ConstraintSystem& s, InteriorMode mode = InteriorMode::relative,
                                            const LpOptions& opt = {}) {
  const Layout& L = s.layout;
  const int K = L.size();
  const auto zeros = structural_zeros(s);
  std::vector<char> in_j(static_cast<std::size_t>(K), 0), fixed(static_cast<std::size_t>(K), 0);
  InteriorReport rep;
  for (int k = 0; k < K; ++k) {
    if (zeros[k]) {
      continue;
    }
    if (mode == InteriorMode::case2 && (L.forced(k) || k == L.ell(kNsr))) {
      fixed[k] = 1;
      ++rep.fixed_zero;
    } else {
      in_j[k] = 1;
      ++rep.required;
    }
  }
  LinearProgram lp = to_lp(s, std::vector<Rational>(static_cast<std::size_t>(K) + 1, Rational(0)));
  lp.cols = K + 1;
  lp.cost[K] = -1;
  for (auto& row : lp.rows) {
    Rational sum = 0;
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (in_j[row.idx[q]]) {
        sum += row.val[q];
      }
    }
    row.push(K, sum);
  }
  for (int k = 0; k < K; ++k) {
    if (fixed[k]) {
      lp.rows.push_back(make_row({{k, 1}}));
      lp.rhs.push_back(0);
    }
  }
  rep.lp = solve_lp(lp, opt);
  if (rep.lp.status != LpStatus::optimal) {
    return rep;
  }
  rep.margin = rep.lp.x[K];
  rep.point = PolytopePoint<Rational>(L);
  for (int k = 0; k < K; ++k) {
    rep.point[k] = rep.lp.x[k] + (in_j[k] ? rep.margin : Rational(0));
  }
  rep.found = rep.margin > 0;
  return rep;
}

struct Case3Report {
  bool in_null_space = false;
  PolytopePoint<Rational> direction;
  std::vector<Rational> products;  // row · direction
};

/// The boundary-escape direction for ℓ_nsr = 0: move mass ζ from ℓ_nsf to
/// ℓ_nsr (with ζ = 1) through f_{2,2,·}, h and four clause classes.
inline Case3Report verify_case3_direction(const ConstraintSystem& s) {
  const Layout& L = s.layout;
  if (L.M() < 2) {
    throw std::invalid_argument("the escape direction needs M >= 2");
  }
  Case3Report rep;
  auto& d = rep.direction;
  d = PolytopePoint<Rational>(L);
  const Rational half(1, 2);
  d[L.ell(kNsr)] = 1;
  d[L.ell(kNsf)] = -1;
  d[L.f(2, 2, 1)] = half;
  d[L.f(2, 2, 2)] = -half;
  d[L.h_nsr()] = half;
  d[L.h_nsf()] = -half;
  d[L.c(class_index({0, 1, 1, 1}))] = -1;
  d[L.c(class_index({1, 1, 0, 1}))] = 1;
  d[L.c(class_index({2, 0, 0, 1}))] = -1;
  d[L.c(class_index({1, 0, 1, 1}))] = 1;
  rep.in_null_space = true;
  for (const auto& row : s.rows) {
    Rational v = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      v += row.val[k] * d[row.idx[k]];
    }
    rep.in_null_space = rep.in_null_space && v == 0;
    rep.products.push_back(v);
  }
  return rep;
}

template <class T>
struct SliceMaximum {
  SliceStatus status = SliceStatus::rejected;
  T value;
  PolytopePoint<T> point;
  Vec3<T> theta, phi;
};

/// max log F over the slice {x ∈ P : ℓ̄(x) = ell}. Slices violating the
/// ℓ± equations by more than tol are rejected; infeasible slices carry no value.
template <class T>
SliceMaximum<T> restricted_maximize(const EntropyModel<T>& m, const std::array<T, 5>& ell, const T& tol) {
  using std::abs;
  SliceMaximum<T> out;
  if (abs(ell[kPs] + ell[kPu] - m.lambda_p) > tol || abs(ell[kNsf] + ell[kNsr] + ell[kNu] - m.lambda_n) > tol) {
    out.status = SliceStatus::rejected;
    return out;
  }
  const Vec3<T> y{ell[kPs], ell[kNsf], ell[kNsr]};
  const auto z = zero_vec<T, 3>();
  const auto sv = slice_value(m, y, z, z, DualOptions<T>::standard());
  out.status = sv.status;
  if (sv.status == SliceStatus::interior || sv.status == SliceStatus::boundary) {
    out.value = sv.value;
    out.theta = sv.theta;
    out.phi = sv.phi;
    out.point = slice_point(m, sv.theta, sv.phi, ell);
  }
  return out;
}

template <class T>
SliceMaximum<T> restricted_maximize(const AnalyticParams<T>& a, const std::array<T, 5>& ell, const T& tol) {
  return restricted_maximize(make_entropy_model(a), ell, tol);
}

/// Per-coordinate range of (ℓ_ps, ℓ_nsf, ℓ_nsr) over P: each side's moment
/// range, intersected.
template <class T>
std::array<std::array<T, 2>, 3> ell_box(const EntropyModel<T>& m) {
  std::array<std::array<T, 2>, 3> var{}, cl{};
  for (auto& r : var) {
    r = {T(0), T(0)};
  }
  for (auto& r : cl) {
    r = {T(0), T(0)};
  }
  auto accumulate = [](const auto& side, auto& box) {
    for (const auto& g : side) {
      for (int d = 0; d < 3; ++d) {
        int lo = g.terms[0].exps[d], hi = lo;
        for (const auto& t : g.terms) {
          lo = std::min(lo, t.exps[d]);
          hi = std::max(hi, t.exps[d]);
        }
        box[d][0] += g.weight * lo;
        box[d][1] += g.weight * hi;
      }
    }
  };
  accumulate(m.var_side, var);
  accumulate(m.clause_side, cl);
  var[0][0] += m.h_ps;
  var[0][1] += m.h_ps;
  std::array<std::array<T, 2>, 3> box;
  for (int d = 0; d < 3; ++d) {
    box[d] = {std::max(var[d][0], cl[d][0]), std::min(var[d][1], cl[d][1])};
  }
  box[0][1] = std::min(box[0][1], m.lambda_p);
  box[1][1] = std::min(box[1][1], m.lambda_n);
  box[2][1] = std::min(box[2][1], m.lambda_n);
  return box;
}

struct GridPoint {
  int i = 0, j = 0, k = 0;
  std::array<double, 3> ell{};
  SliceStatus status = SliceStatus::rejected;
  double value = 0;
};

struct GridReport {
  int per_dim = 0;
  std::array<std::array<double, 2>, 3> box{};
  std::vector<GridPoint> points;
  int interior = 0, boundary = 0, infeasible = 0, rejected = 0;
  int best = -1;           // index into points of the largest feasible value
  Real best_refined;       // that slice re-evaluated at working precision
  SliceStatus best_refined_status = SliceStatus::rejected;
  bool all_finite = true;

  bool feasible(const GridPoint& p) const {
    return p.status == SliceStatus::interior || p.status == SliceStatus::boundary;
  }
};

/// Restricted maxima on an N^3 grid over the ℓ box (endpoints included).
/// Slices are evaluated in double; the best one is re-evaluated in Real.
inline GridReport grid_sweep(const AnalyticParams<Real>& a, int per_dim, unsigned jobs = 1) {
  if (per_dim < 2) {
    throw std::invalid_argument("grid_per_dim must be at least 2");
  }
  const auto pd = convert_params<double>(a);
  const auto m = make_entropy_model(pd);
  GridReport rep;
  rep.per_dim = per_dim;
  rep.box = ell_box(m);
  auto coord = [&](int d, int g) {
    return rep.box[d][0] + (rep.box[d][1] - rep.box[d][0]) * g / (per_dim - 1);
  };
  const auto opt = DualOptions<double>::standard();
  auto slabs = parallel_map(static_cast<std::size_t>(per_dim), jobs, [&](std::size_t gi) {
    std::vector<GridPoint> slab;
    slab.reserve(static_cast<std::size_t>(per_dim) * per_dim);
    for (int gj = 0; gj < per_dim; ++gj) {
      Vec3<double> th = zero_vec<double, 3>(), ph = zero_vec<double, 3>();
      for (int gk = 0; gk < per_dim; ++gk) {
        GridPoint p;
        p.i = static_cast<int>(gi);
        p.j = gj;
        p.k = gk;
        p.ell = {coord(0, p.i), coord(1, gj), coord(2, gk)};
        const auto sv = slice_value(m, Vec3<double>{p.ell[0], p.ell[1], p.ell[2]}, th, ph, opt);
        p.status = sv.status;
        if (sv.status == SliceStatus::interior) {
          th = sv.theta;
          ph = sv.phi;
        } else {
          th = zero_vec<double, 3>();
          ph = zero_vec<double, 3>();
        }
        if (sv.status == SliceStatus::interior || sv.status == SliceStatus::boundary) {
          p.value = sv.value;
        }
        slab.push_back(p);
      }
    }
    return slab;
  });
  for (auto& slab : slabs) {
    for (auto& p : slab) {
      rep.points.push_back(p);
    }
  }
  for (std::size_t q = 0; q < rep.points.size(); ++q) {
    const auto& p = rep.points[q];
    switch (p.status) {
      case SliceStatus::interior: ++rep.interior; break;
      case SliceStatus::boundary: ++rep.boundary; break;
      case SliceStatus::infeasible: ++rep.infeasible; break;
      case SliceStatus::rejected: ++rep.rejected; break;
    }
    if (rep.feasible(p)) {
      if (!std::isfinite(p.value)) {
        rep.all_finite = false;
      }
      if (rep.best < 0 || p.value > rep.points[rep.best].value) {
        rep.best = static_cast<int>(q);
      }
    }
  }
  if (rep.best >= 0) {
    const auto& p = rep.points[rep.best];
    const auto mr = make_entropy_model(a);
    const Vec3<Real> y{Real(p.ell[0]), Real(p.ell[1]), Real(p.ell[2])};
    const auto z = zero_vec<Real, 3>();
    const auto sv = slice_value(mr, y, z, z, DualOptions<Real>::standard());
    rep.best_refined_status = sv.status;
    if (sv.status == SliceStatus::interior || sv.status == SliceStatus::boundary) {
      rep.best_refined = sv.value;
    }
  }
  return rep;
}

/// CSV: ℓ_ps, ℓ_nsf, ℓ_nsr, feasible flag, status, slice max.
inline void write_grid_csv(std::ostream& os, const GridReport& rep) {
  os << "l_ps,l_nsf,l_nsr,feasible,status,slice_max\n";
  for (const auto& p : rep.points) {
    os << decimal(p.ell[0]) << ',' << decimal(p.ell[1]) << ',' << decimal(p.ell[2]) << ','
       << (rep.feasible(p) ? 1 : 0) << ',' << to_string(p.status) << ',';
    if (rep.feasible(p)) {
      os << decimal(p.value);
    }
    os << '\n';
  }
}

/// A point of P on the slice ℓ̄ = full_ell(y): the slice
/// maximizer of an entropy whose monomial log-weights are shifted by
/// uniform(−spread, spread). nullopt if either side fails to be interior.
inline std::optional<PolytopePoint<double>> random_slice_point(const EntropyModel<double>& base, const Vec3<double>& y,
                                                               Rng& rng, double spread = 1) {
  auto m = base;
  for (auto* side : {&m.var_side, &m.clause_side}) {
    for (auto& g : *side) {
      for (auto& lc : g.log_coef) {
        lc += spread * (2 * uniform01(rng) - 1);
      }
    }
  }
  const auto opt = DualOptions<double>::standard();
  const Vec3<double> b_var{y[0] - m.h_ps, y[1], y[2]};
  const auto dc = minimize_dual(m.clause_side, y, zero_vec<double, 3>(), opt);
  if (dc.status != SliceStatus::interior) {
    return std::nullopt;
  }
  const auto dv = minimize_dual(m.var_side, b_var, zero_vec<double, 3>(), opt);
  if (dv.status != SliceStatus::interior) {
    return std::nullopt;
  }
  return slice_point(m, dv.x, dc.x, full_ell(m, y));
}

struct ConcavityReport {
  int trials = 0;
  int violations = 0;
  double worst_gap = 0;   // min over trials of F(mid) − (F(a) + F(b))/2
  double max_residual = 0;
};

/// Two-point concavity checks of log F inside fixed-ℓ slices. Slice points
/// come from maximizers of perturbed entropies (random log-weights on every
/// monomial), which stay on the slice; their midpoint is compared with the
/// average of the endpoints.
inline ConcavityReport concavity_probe(const AnalyticParams<double>& a, const ConstraintSystem& sys,
                                       const std::vector<Vec3<double>>& slices, int pairs, std::uint64_t seed) {
  const auto base = make_entropy_model(a);
  Rng rng = make_rng(seed);
  ConcavityReport rep;
  rep.worst_gap = std::numeric_limits<double>::infinity();
  for (const auto& y : slices) {
    for (int t = 0; t < pairs; ++t) {
      const auto p = random_slice_point(base, y, rng);
      const auto q = random_slice_point(base, y, rng);
      if (!p || !q) {
        continue;
      }
      PolytopePoint<double> mid(sys.layout);
      for (std::size_t k = 0; k < mid.x.size(); ++k) {
        mid.x[k] = (p->x[k] + q->x[k]) / 2;
      }
      for (const auto* pt : std::array<const PolytopePoint<double>*, 3>{&*p, &*q, &mid}) {
        rep.max_residual = std::max(rep.max_residual, max_abs(residuals(sys, *pt)));
      }
      const double gap = log_F(mid) - (log_F(*p) + log_F(*q)) / 2;
      ++rep.trials;
      rep.worst_gap = std::min(rep.worst_gap, gap);
      if (gap < -1e-12) {
        ++rep.violations;
      }
    }
  }
  return rep;
}

}  // namespace ksat
