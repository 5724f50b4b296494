#pragma once

// Closed-form ideal quantities of the peeled Poisson model.
//
// All functions are templated on the scalar type T (double or Real). Densities
// enter as exact rationals so that 4.4898 means 44898/10000 at every
// precision.

#include "ksat/ideal.hpp"
#include "ksat/numeric.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace ksat {

/// Poisson(λ) probabilities p_0 .. p_{count-1} by the stable recurrence.
template <class T>
std::vector<T> poisson_row(const T& lambda, int count) {
  using std::exp;
  std::vector<T> p(static_cast<std::size_t>(count));
  if (count == 0) {
    return p;
  }
  p[0] = exp(-lambda);
  for (int k = 1; k < count; ++k) {
    p[k] = p[k - 1] * lambda / k;
  }
  return p;
}

/// Smallest N > λ with 2 e^{-λ} (eλ/N)^N < bound: a Chernoff bound on the
/// mass of a product of two Poisson(λ) laws outside [0, N)^2.
inline int poisson_cutoff(double lambda, double log10_bound = -40.0) {
  const double target = log10_bound * std::log(10.0);
  for (int n = static_cast<int>(std::ceil(lambda)) + 1;; ++n) {
    const double log_tail = std::log(2.0) - lambda + n * (1.0 + std::log(lambda) - std::log(double(n)));
    if (log_tail < target) {
      return n;
    }
  }
}

template <class T>
T chernoff_tail(const T& lambda, int n) {
  using std::exp;
  using std::log;
  return 2 * exp(-lambda + n * (1 + log(lambda) - log(T(n))));
}

/// δ_{i,j} = e^{-3γ} (3γ/2)^{i+j} / (i! j!), truncated where the tail < 10^-40.
template <class T>
IdealSequence<T> poisson_ideal(const Rational& gamma, int min_size = 0) {
  const T lambda = scalar_cast<T>(gamma) * 3 / 2;
  const int size = std::max(min_size, poisson_cutoff(static_cast<double>(lambda)));
  const auto p = poisson_row(lambda, size);
  IdealSequence<T> out(size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      out.at(i, j) = p[i] * p[j];
    }
  }
  out.tail_bound = chernoff_tail(lambda, size);
  return out;
}

/// b(t) = (1 - t/γ)^{2/3}.
template <class T>
T retention(const Rational& gamma, const T& t) {
  using std::pow;
  const T g = scalar_cast<T>(gamma);
  if (t < 0 || t >= g) {
    throw std::domain_error("time outside [0, gamma)");
  }
  return pow(1 - t / g, T(2) / 3);
}

/// y_{i,j} from the general solution for an arbitrary initial sequence d:
/// Σ_{k>=i, l>=j} d(k,l) C(k,i) C(l,j) b^{i+j} (1-b)^{k-i+l-j}.
template <class T>
T ode_general_entry(const IdealSequence<T>& d, const T& b, int i, int j) {
  using std::pow;
  const int size = d.size;
  std::vector<T> pow_rest(static_cast<std::size_t>(size), T(1));
  for (int k = 1; k < size; ++k) {
    pow_rest[k] = pow_rest[k - 1] * (1 - b);
  }
  // Row weights C(k,i) (1-b)^{k-i} and column weights C(l,j) (1-b)^{l-j}.
  auto weights = [&](int base) {
    std::vector<T> w(static_cast<std::size_t>(size), T(0));
    T c = 1;
    for (int k = base; k < size; ++k) {
      if (k > base) {
        c = c * k / (k - base);
      }
      w[k] = c * pow_rest[k - base];
    }
    return w;
  };
  const auto wi = weights(i);
  const auto wj = weights(j);
  T s = 0;
  for (int k = i; k < size; ++k) {
    T row = 0;
    for (int l = j; l < size; ++l) {
      row += d.at(k, l) * wj[l];
    }
    s += wi[k] * row;
  }
  return s * pow(b, i + j);
}

/// Collapsed solution y_{i,j}(t) = e^{-3γb} (3γb/2)^{i+j} / (i! j!). The
/// general binomial-sum form is evaluated for i, j <= check_span and must
/// agree to `agreement`; otherwise NumericError is thrown.
template <class T>
IdealSequence<T> ode_solution(const Rational& gamma, const T& t, int check_span = 8, const T& agreement = T(1e-25)) {
  using std::abs;
  const T b = retention(gamma, t);
  const auto initial = poisson_ideal<T>(gamma);
  const T lambda = scalar_cast<T>(gamma) * 3 * b / 2;
  const auto p = poisson_row(lambda, initial.size);
  IdealSequence<T> out(initial.size);
  for (int i = 0; i < out.size; ++i) {
    for (int j = 0; j < out.size; ++j) {
      out.at(i, j) = p[i] * p[j];
    }
  }
  out.tail_bound = initial.tail_bound;
  const int span = std::min(check_span, out.size - 1);
  for (int i = 0; i <= span; ++i) {
    for (int j = 0; j <= span; ++j) {
      const T general = ode_general_entry(initial, b, i, j);
      if (abs(general - out.at(i, j)) > agreement) {
        throw NumericError("general and collapsed ODE solutions disagree at (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");
      }
    }
  }
  return out;
}

/// y_0(t) = 3γ - 3t - Σ_{i,j>0} (i+j) y_{i,j}(t), summed over the table.
template <class T>
T pure_mass(const Rational& gamma, const T& t) {
  const T b = retention(gamma, t);
  const T lambda = scalar_cast<T>(gamma) * 3 * b / 2;
  const int size = poisson_cutoff(static_cast<double>(scalar_cast<T>(gamma) * 3 / 2));
  const auto p = poisson_row(lambda, size);
  T s = 0;
  for (int i = 1; i < size; ++i) {
    for (int j = 1; j < size; ++j) {
      s += (i + j) * p[i] * p[j];
    }
  }
  return scalar_cast<T>(gamma) * 3 - 3 * t - s;
}

/// Same quantity from the Poisson moments: 3γ b^{3/2} - 3γ b (1 - e^{-3γb/2}).
template <class T>
T pure_mass_closed(const Rational& gamma, const T& t) {
  using std::exp;
  using std::sqrt;
  const T b = retention(gamma, t);
  const T g3 = scalar_cast<T>(gamma) * 3;
  return g3 * b * sqrt(b) - g3 * b * (1 - exp(-g3 * b / 2));
}

template <class T>
struct StoppingTime {
  T t_D;
  T b;
  T residual;  // y_0(t_D)
};

/// Smallest root of y_0: scan in steps of γ/10^4 for the first sign change,
/// then bisect until the bracket is narrower than tol.
template <class T>
StoppingTime<T> stopping_time(const Rational& gamma, const T& tol) {
  const T g = scalar_cast<T>(gamma);
  const T step = g / 10000;
  T lo = 0;
  if (!(pure_mass_closed(gamma, lo) > 0)) {
    throw NumericError("no pure occurrences at t = 0");
  }
  T hi = lo;
  bool bracketed = false;
  for (int k = 1; k < 10000; ++k) {
    hi = step * k;
    if (pure_mass_closed(gamma, hi) <= 0) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) {
    throw NumericError("root bracketing failed: y0 has no sign change in (0, gamma)");
  }
  for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
    const T mid = (lo + hi) / 2;
    if (pure_mass_closed(gamma, mid) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const T t = (lo + hi) / 2;
  return {t, retention(gamma, t), pure_mass_closed(gamma, t)};
}

/// All ideal quantities at density γ with light cutoff M.
template <class T>
struct AnalyticParams {
  Rational gamma;
  int M = 23;
  T t_D, b;
  IdealSequence<T> delta_hat;  // δ̂ over [0, size)^2
  T gammahat, lambda_p, lambda_n;
  std::array<T, 4> gammahat_k;
  T h_ps, h_ns;      // heavy positive / negative copy mass
  T heavy_mass;      // Σ_H δ̂
  T removed_mass;    // δ̂_{0,0}: variables left without occurrences
  T pure_residual;   // y_0(t_D)

  T light(int i, int j) const { return i <= M && j <= M ? delta_hat(i, j) : T(0); }
};

/// δ̂ of the unbalanced impure core: 2 y_{i,j}(t_D) for i > j >= 1,
/// y_{i,i}(t_D) on the diagonal, 0 for i < j and on the axes (the core has no
/// pure variables), and δ̂_{0,0} = 1 - Σ(rest).
template <class T>
IdealSequence<T> peeled_ideal(const Rational& gamma, const T& b, int min_size = 0) {
  const T lambda = scalar_cast<T>(gamma) * 3 * b / 2;
  const int size = std::max(min_size, poisson_cutoff(static_cast<double>(scalar_cast<T>(gamma) * 3 / 2)));
  const auto p = poisson_row(lambda, size);
  IdealSequence<T> out(size);
  T rest = 0;
  for (int i = 1; i < size; ++i) {
    for (int j = 1; j <= i; ++j) {
      out.at(i, j) = (i > j ? 2 : 1) * p[i] * p[j];
      rest += out.at(i, j);
    }
  }
  out.at(0, 0) = 1 - rest;
  out.tail_bound = chernoff_tail(lambda, size);
  return out;
}

template <class T>
AnalyticParams<T> clause_type_ideals(const Rational& gamma, int M, const T& tol) {
  using std::pow;
  AnalyticParams<T> a;
  a.gamma = gamma;
  a.M = M;
  const auto st = stopping_time<T>(gamma, tol);
  a.t_D = st.t_D;
  a.b = st.b;
  a.pure_residual = st.residual;
  a.delta_hat = peeled_ideal<T>(gamma, a.b, M + 2);
  a.lambda_p = a.lambda_n = a.h_ps = a.h_ns = a.heavy_mass = 0;
  const auto& d = a.delta_hat;
  for (int i = 0; i < d.size; ++i) {
    for (int j = 0; j < d.size; ++j) {
      const T& v = d.at(i, j);
      a.lambda_p += i * v;
      a.lambda_n += j * v;
      if (i > M || j > M) {
        a.h_ps += i * v;
        a.h_ns += j * v;
        a.heavy_mass += v;
      }
    }
  }
  a.removed_mass = d.at(0, 0);
  a.gammahat = (a.lambda_p + a.lambda_n) / 3;
  const T total = a.lambda_p + a.lambda_n;
  const int binom3[4] = {1, 3, 3, 1};
  for (int k = 0; k < 4; ++k) {
    a.gammahat_k[k] = binom3[k] * pow(a.lambda_p, k) * pow(a.lambda_n, 3 - k) / pow(total, 3) * a.gammahat;
  }
  return a;
}

template <class T>
std::string to_decimal(const T& x, int digits) {
  if constexpr (std::is_same_v<T, double>) {
    return decimal(x, std::min(digits, 17));
  } else {
    return decimal(x, digits);
  }
}

template <class T>
nlohmann::json to_json(const AnalyticParams<T>& a, int digits = 40) {
  auto s = [&](const T& x) { return to_decimal(x, digits); };
  nlohmann::json j;
  j["gamma"] = decimal(a.gamma);
  j["M"] = a.M;
  j["t_D"] = s(a.t_D);
  j["b"] = s(a.b);
  j["gammahat"] = s(a.gammahat);
  j["lambda_p"] = s(a.lambda_p);
  j["lambda_n"] = s(a.lambda_n);
  j["gammahat_k"] = {s(a.gammahat_k[0]), s(a.gammahat_k[1]), s(a.gammahat_k[2]), s(a.gammahat_k[3])};
  j["h_ps"] = s(a.h_ps);
  j["h_ns"] = s(a.h_ns);
  j["heavy_mass"] = s(a.heavy_mass);
  j["removed_mass"] = s(a.removed_mass);
  j["pure_residual"] = s(a.pure_residual);
  j["table_size"] = a.delta_hat.size;
  j["tail_bound"] = s(a.delta_hat.tail_bound);
  return j;
}

}  // namespace ksat
