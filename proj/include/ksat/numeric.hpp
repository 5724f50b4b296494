#pragma once

// Number types shared by the whole library: a runtime-precision binary float
// for analytic work, exact rationals and big integers for counting and LPs.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <limits>
#include <system_error>
#include <type_traits>

namespace ksat {

using Real = boost::multiprecision::mpfr_float;
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

inline constexpr unsigned kDefaultDigits = 50;

/// Raised when an iterative method fails to converge or leaves its domain.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Machine epsilon-like resolution of T (10^-digits for Real).
template <class T>
T resolution() {
  if constexpr (std::is_same_v<T, double>) {
    return std::numeric_limits<double>::epsilon();
  } else {
    return boost::multiprecision::pow(T(10), -static_cast<int>(T::default_precision()));
  }
}

/// Sets the default decimal precision of newly created Real values for the
/// lifetime of the guard. The precision is process-global.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(unsigned digits) : saved_(Real::default_precision()) {
    Real::default_precision(digits);
  }
  ~PrecisionGuard() { Real::default_precision(saved_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  unsigned saved_;
};

inline unsigned working_digits() { return Real::default_precision(); }

/// Converts between scalar types. Real <-> double goes through the value,
/// rationals through their exact quotient.
template <class To, class From>
To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<To, double>) {
    return static_cast<double>(x);
  } else if constexpr (std::is_same_v<From, Rational>) {
    return To(Real(numerator(x)) / Real(denominator(x)));
  } else {
    return To(x);
  }
}

/// Scientific decimal string with `digits` significant digits.
inline std::string decimal(const Real& x, int digits) {
  return x.str(digits, std::ios_base::scientific);
}

inline std::string decimal(double x, int digits = 17) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific, digits - 1);
  return std::string(buf, res.ptr);
}

inline std::string decimal(const Rational& x) { return x.str(); }

/// Exact rational value of a decimal literal such as "4.4898" or "-1.5e-3".
inline Rational parse_decimal(const std::string& text) {
  std::string s = text;
  int exp10 = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    exp10 = std::stoi(s.substr(e + 1));
    s = s.substr(0, e);
  }
  bool negative = false;
  if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
    negative = s[0] == '-';
    s = s.substr(1);
  }
  std::string digits;
  for (char ch : s) {
    if (ch == '.') {
      continue;
    }
    if (ch < '0' || ch > '9') {
      throw std::invalid_argument("not a decimal number: " + text);
    }
    digits.push_back(ch);
  }
  if (digits.empty()) {
    throw std::invalid_argument("not a decimal number: " + text);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    exp10 -= static_cast<int>(s.size() - dot - 1);
  }
  BigInt mantissa(digits);
  BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::abs(exp10)));
  Rational value = exp10 >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
  return negative ? Rational(-value) : value;
}

/// The shortest decimal string that round-trips `x`, read back as an exact
/// rational. Densities typed as 4.4898 become exactly 44898/10000.
inline Rational rational_from_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  if (res.ec != std::errc{}) {
    throw std::invalid_argument("cannot format double");
  }
  return parse_decimal(std::string(buf, res.ptr));
}

/// Rounds x to the nearest multiple of 10^-digits and returns it exactly.
inline Rational rationalize(const Real& x, unsigned digits) {
  Real scaled = x * boost::multiprecision::pow(Real(10), digits);
  Real rounded = boost::multiprecision::round(scaled);
  std::string text = rounded.str(0, std::ios_base::fixed);
  text = text.substr(0, text.find('.'));
  BigInt num(text);
  return Rational(num, boost::multiprecision::pow(BigInt(10), digits));
}

inline BigInt floor_rational(const Rational& q) {
  BigInt num = numerator(q);
  BigInt den = denominator(q);
  BigInt quot = num / den;
  if (num < 0 && quot * den != num) {
    quot -= 1;
  }
  return quot;
}

inline BigInt factorial(unsigned k) {
  BigInt out = 1;
  for (unsigned i = 2; i <= k; ++i) {
    out *= i;
  }
  return out;
}

inline BigInt binomial(unsigned n, unsigned k) {
  if (k > n) {
    return 0;
  }
  BigInt out = 1;
  for (unsigned i = 1; i <= k; ++i) {
    out = out * (n - k + i) / i;
  }
  return out;
}

}  // namespace ksat
