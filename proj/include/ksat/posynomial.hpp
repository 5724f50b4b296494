#pragma once

// Weighted logs of posynomials, w·log Σ_m c_m exp(a_m·x), with their
// gradients (softmax means of the exponents) and Hessians (covariances).
// Every term of log L and of the slice duals has this shape.

#include "ksat/numeric.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace ksat {

template <class T, int D>
using Vec = std::array<T, D>;
template <class T, int D>
using Mat = std::array<std::array<T, D>, D>;

template <class T, int D>
Vec<T, D> zero_vec() {
  Vec<T, D> v;
  v.fill(T(0));
  return v;
}

template <class T, int D>
Mat<T, D> zero_mat() {
  Mat<T, D> m;
  for (auto& r : m) {
    r.fill(T(0));
  }
  return m;
}

template <class T, int D>
T norm_inf(const Vec<T, D>& v) {
  using std::abs;
  T m = 0;
  for (const auto& x : v) {
    if (abs(x) > m) {
      m = abs(x);
    }
  }
  return m;
}

template <class T, int D>
T dot(const Vec<T, D>& a, const Vec<T, D>& b) {
  T s = 0;
  for (int k = 0; k < D; ++k) {
    s += a[k] * b[k];
  }
  return s;
}

/// Solves A x = b by Gaussian elimination with partial pivoting; nullopt if
/// A is numerically singular.
template <class T, int D>
std::optional<Vec<T, D>> solve(Mat<T, D> a, Vec<T, D> b) {
  using std::abs;
  for (int col = 0; col < D; ++col) {
    int piv = col;
    for (int r = col + 1; r < D; ++r) {
      if (abs(a[r][col]) > abs(a[piv][col])) {
        piv = r;
      }
    }
    if (a[piv][col] == 0) {
      return std::nullopt;
    }
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < D; ++r) {
      const T factor = a[r][col] / a[col][col];
      for (int k = col; k < D; ++k) {
        a[r][k] -= factor * a[col][k];
      }
      b[r] -= factor * b[col];
    }
  }
  Vec<T, D> x;
  for (int r = D - 1; r >= 0; --r) {
    T s = b[r];
    for (int k = r + 1; k < D; ++k) {
      s -= a[r][k] * x[k];
    }
    x[r] = s / a[r][r];
  }
  return x;
}

/// True iff the symmetric matrix is positive definite (Cholesky succeeds).
template <class T, int D>
bool positive_definite(const Mat<T, D>& a) {
  using std::sqrt;
  Mat<T, D> l = zero_mat<T, D>();
  for (int i = 0; i < D; ++i) {
    for (int j = 0; j <= i; ++j) {
      T s = a[i][j];
      for (int k = 0; k < j; ++k) {
        s -= l[i][k] * l[j][k];
      }
      if (i == j) {
        if (!(s > 0)) {
          return false;
        }
        l[i][i] = sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

template <class T, int D>
std::optional<Mat<T, D>> inverse(const Mat<T, D>& a) {
  Mat<T, D> inv;
  for (int c = 0; c < D; ++c) {
    Vec<T, D> e = zero_vec<T, D>();
    e[c] = 1;
    auto col = solve<T, D>(a, e);
    if (!col) {
      return std::nullopt;
    }
    for (int r = 0; r < D; ++r) {
      inv[r][c] = (*col)[r];
    }
  }
  return inv;
}

template <int D>
struct Monomial {
  double coef;  // small positive integers or 2/w!, exact in double
  std::array<int, D> exps;
};

/// weight · log Σ_m coef_m exp(exps_m · x).
template <class T, int D>
struct LogPosynomial {
  T weight;
  std::vector<Monomial<D>> terms;
  std::vector<T> log_coef;  // cached log(coef) at the precision of T

  LogPosynomial(T w, std::vector<Monomial<D>> ts) : weight(std::move(w)), terms(std::move(ts)) {
    using std::log;
    log_coef.reserve(terms.size());
    for (const auto& m : terms) {
      log_coef.push_back(log(exact_coef(m.coef)));
    }
  }

  // Coefficients are integers or 1/3; rebuild 1/3 exactly at precision T.
  static T exact_coef(double c) {
    if (c == std::floor(c)) {
      return T(static_cast<long>(c));
    }
    if (std::abs(c - 1.0 / 3.0) < 1e-15) {
      return T(1) / 3;
    }
    return T(c);
  }

  /// log Σ, the softmax probabilities written into p.
  T log_sum(const Vec<T, D>& x, std::vector<T>& p) const {
    using std::exp;
    using std::log;
    p.resize(terms.size());
    T m = 0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      T z = log_coef[k];
      for (int d = 0; d < D; ++d) {
        if (terms[k].exps[d] != 0) {
          z += terms[k].exps[d] * x[d];
        }
      }
      p[k] = z;
      if (k == 0 || z > m) {
        m = z;
      }
    }
    T s = 0;
    for (auto& v : p) {
      v = exp(v - m);
      s += v;
    }
    for (auto& v : p) {
      v /= s;
    }
    return m + log(s);
  }

  /// Adds sign·weight times value, gradient and (optionally) Hessian.
  void accumulate(const Vec<T, D>& x, int sign, T& value, Vec<T, D>& grad, Mat<T, D>* hess,
                  std::vector<T>& scratch) const {
    const T ls = log_sum(x, scratch);
    const T w = sign > 0 ? weight : T(-weight);
    value += w * ls;
    Vec<T, D> mean = zero_vec<T, D>();
    for (std::size_t k = 0; k < terms.size(); ++k) {
      for (int d = 0; d < D; ++d) {
        if (terms[k].exps[d] != 0) {
          mean[d] += scratch[k] * terms[k].exps[d];
        }
      }
    }
    for (int d = 0; d < D; ++d) {
      grad[d] += w * mean[d];
    }
    if (hess) {
      Mat<T, D> second = zero_mat<T, D>();
      for (std::size_t k = 0; k < terms.size(); ++k) {
        for (int a = 0; a < D; ++a) {
          if (terms[k].exps[a] == 0) {
            continue;
          }
          const T pa = scratch[k] * terms[k].exps[a];
          for (int b = 0; b <= a; ++b) {
            if (terms[k].exps[b] != 0) {
              second[a][b] += pa * terms[k].exps[b];
            }
          }
        }
      }
      for (int a = 0; a < D; ++a) {
        for (int b = 0; b <= a; ++b) {
          const T cov = w * (second[a][b] - mean[a] * mean[b]);
          (*hess)[a][b] += cov;
          if (a != b) {
            (*hess)[b][a] += cov;
          }
        }
      }
    }
  }
};

}  // namespace ksat
