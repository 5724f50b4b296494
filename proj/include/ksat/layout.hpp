#pragma once

// Coordinates of the polytope: x = (t, f, h, c, ℓ).
//
//   t_{i,j}    light 1-variables of degree (i,j),            0 <= i, j <= M
//   f_{i,j,k}  light 0-variables with k blocking copies,     0 <= i <= M, 1 <= k <= j <= M
//   h          (h_nsf, h_nsr)
//   c_α        clauses of extended type α (16 classes)
//   ℓ          (ℓ_ps, ℓ_pu, ℓ_nsf, ℓ_nsr, ℓ_nu)

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksat {

/// Extended clause type: a 2x2 matrix (ps ns; pu nu) of copy counts.
struct ClauseClass {
  int ps, ns, pu, nu;

  bool blocking() const { return ps == 0 && ns == 1; }
  int nsf() const { return blocking() ? ns : 0; }
  int nsr() const { return blocking() ? 0 : ns; }
  int tp() const { return ps + pu; }  // syntactic type: positive copies
  int zeros() const { return (ps == 0) + (ns == 0) + (pu == 0) + (nu == 0); }
  int factorial_zeros() const {
    const int w = zeros();
    return w == 3 ? 6 : w == 2 ? 2 : 1;
  }

  std::string name() const {
    return "(" + std::to_string(ps) + "," + std::to_string(ns) + "," + std::to_string(pu) + "," +
           std::to_string(nu) + ")";
  }
  bool operator==(const ClauseClass&) const = default;
};

/// The 16 matrices with entries summing to 3 and ps + ns > 0, in
/// lexicographic (ps, ns, pu, nu) order.
inline const std::vector<ClauseClass>& clause_classes() {
  static const std::vector<ClauseClass> classes = [] {
    std::vector<ClauseClass> out;
    for (int ps = 0; ps <= 3; ++ps) {
      for (int ns = 0; ps + ns <= 3; ++ns) {
        for (int pu = 0; ps + ns + pu <= 3; ++pu) {
          const int nu = 3 - ps - ns - pu;
          if (ps + ns > 0) {
            out.push_back({ps, ns, pu, nu});
          }
        }
      }
    }
    return out;
  }();
  return classes;
}

inline int class_index(const ClauseClass& a) {
  const auto& cls = clause_classes();
  for (std::size_t k = 0; k < cls.size(); ++k) {
    if (cls[k] == a) {
      return static_cast<int>(k);
    }
  }
  throw std::out_of_range("not a clause class: " + a.name());
}

enum Ell : int { kPs = 0, kPu = 1, kNsf = 2, kNsr = 3, kNu = 4 };
inline constexpr std::array<const char*, 5> kEllNames = {"ps", "pu", "nsf", "nsr", "nu"};

/// Index map of the K coordinates for a light cutoff M.
class Layout {
 public:
  explicit Layout(int M) : M_(M) {
    if (M < 1) {
      throw std::invalid_argument("M must be at least 1");
    }
    const int side = M + 1;
    f_start_.assign(static_cast<std::size_t>(side) * side, -1);
    int next = side * side;
    for (int i = 0; i <= M; ++i) {
      for (int j = 1; j <= M; ++j) {
        f_start_[i * side + j] = next;
        next += j;
      }
    }
    h_ = next;
    c_ = h_ + 2;
    ell_ = c_ + static_cast<int>(clause_classes().size());
    size_ = ell_ + 5;
  }

  int M() const { return M_; }
  int size() const { return size_; }
  int light_count() const { return (M_ + 1) * (M_ + 1); }
  int extended_count() const { return h_ - light_count(); }

  int t(int i, int j) const { return i * (M_ + 1) + j; }
  int f(int i, int j, int k) const { return f_start_[i * (M_ + 1) + j] + (k - 1); }
  int h_nsf() const { return h_; }
  int h_nsr() const { return h_ + 1; }
  int c(int alpha) const { return c_ + alpha; }
  int ell(int sigma) const { return ell_ + sigma; }

  /// Forced coordinates: c_α with nsr(α) > 0, f_{i,j,k} with
  /// j > k, and h_nsr.
  bool forced(int coord) const {
    if (coord == h_nsr()) {
      return true;
    }
    if (coord >= c_ && coord < ell_) {
      return clause_classes()[coord - c_].nsr() > 0;
    }
    if (coord >= light_count() && coord < h_) {
      const auto [i, j, k] = extended_of(coord);
      (void)i;
      return j > k;
    }
    return false;
  }

  /// (i, j, k) of an f coordinate.
  std::array<int, 3> extended_of(int coord) const {
    for (int i = 0; i <= M_; ++i) {
      for (int j = 1; j <= M_; ++j) {
        const int s = f_start_[i * (M_ + 1) + j];
        if (coord >= s && coord < s + j) {
          return {i, j, coord - s + 1};
        }
      }
    }
    throw std::out_of_range("not an f coordinate");
  }

  std::string name(int coord) const {
    if (coord < light_count()) {
      return "t[" + std::to_string(coord / (M_ + 1)) + "," + std::to_string(coord % (M_ + 1)) + "]";
    }
    if (coord < h_) {
      const auto e = extended_of(coord);
      return "f[" + std::to_string(e[0]) + "," + std::to_string(e[1]) + "," + std::to_string(e[2]) + "]";
    }
    if (coord == h_nsf()) {
      return "h_nsf";
    }
    if (coord == h_nsr()) {
      return "h_nsr";
    }
    if (coord < ell_) {
      return "c" + clause_classes()[coord - c_].name();
    }
    return std::string("l_") + kEllNames[coord - ell_];
  }

  /// K = (M+1)^2 (1 + M/2) + 23.
  static long closed_form_size(int M) { return (long(M) + 1) * (M + 1) * (2 + M) / 2 + 23; }

 private:
  int M_;
  std::vector<int> f_start_;
  int h_ = 0, c_ = 0, ell_ = 0, size_ = 0;
};

/// A point of R^K in the layout's coordinates.
template <class T>
struct PolytopePoint {
  int M = 0;
  std::vector<T> x;

  PolytopePoint() = default;
  explicit PolytopePoint(const Layout& lay) : M(lay.M()), x(static_cast<std::size_t>(lay.size()), T(0)) {}

  T& operator[](int k) { return x[k]; }
  const T& operator[](int k) const { return x[k]; }
};

}  // namespace ksat
