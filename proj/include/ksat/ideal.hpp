#pragma once

#include <cstddef>
#include <vector>

namespace ksat {

/// Dense (i, j) -> value table over [0, size)^2 for an ideal (real-valued)
/// degree sequence. Entries outside the table are zero up to `tail_bound`,
/// a certified bound on the total mass discarded by the truncation.
template <class T>
struct IdealSequence {
  int size = 0;
  std::vector<T> values;
  T tail_bound = T(0);

  IdealSequence() = default;
  explicit IdealSequence(int n) : size(n), values(static_cast<std::size_t>(n) * n, T(0)) {}

  T& at(int i, int j) { return values[static_cast<std::size_t>(i) * size + j]; }
  const T& at(int i, int j) const { return values[static_cast<std::size_t>(i) * size + j]; }

  T operator()(int i, int j) const {
    if (i < 0 || j < 0 || i >= size || j >= size) {
      return T(0);
    }
    return at(i, j);
  }

  T total() const {
    T s = 0;
    for (const auto& v : values) {
      s += v;
    }
    return s;
  }
};

}  // namespace ksat
