#pragma once

// Exact two-phase simplex over the rationals for min c·x, A x = b, x >= 0.
//
// The tableau is stored as sparse rows. Artificial columns stay in the
// tableau after phase 1 so the duals can be read off their reduced costs.
// Every answer carries a certificate that is rechecked against the original
// data: (x, y) with equal objectives for optimality, a Farkas vector for
// infeasibility.

#include "ksat/numeric.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ksat {

struct SparseRow {
  std::vector<int> idx;  // strictly increasing
  std::vector<Rational> val;

  void push(int j, Rational v) {
    if (v != 0) {
      idx.push_back(j);
      val.push_back(std::move(v));
    }
  }

  const Rational* find(int j) const {
    auto it = std::lower_bound(idx.begin(), idx.end(), j);
    if (it == idx.end() || *it != j) {
      return nullptr;
    }
    return &val[static_cast<std::size_t>(it - idx.begin())];
  }

  std::size_t size() const { return idx.size(); }
};

/// Builds a row from unsorted (column, coefficient) pairs, summing duplicates.
inline SparseRow make_row(std::vector<std::pair<int, Rational>> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseRow r;
  for (std::size_t k = 0; k < entries.size();) {
    Rational s = 0;
    const int j = entries[k].first;
    for (; k < entries.size() && entries[k].first == j; ++k) {
      s += entries[k].second;
    }
    r.push(j, std::move(s));
  }
  return r;
}

struct LinearProgram {
  int cols = 0;
  std::vector<SparseRow> rows;
  std::vector<Rational> rhs;
  std::vector<Rational> cost;  // minimized
};

enum class LpStatus { optimal, infeasible, unbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
  }
  return "?";
}

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Rational objective;
  std::vector<Rational> x;  // primal solution (optimal)
  std::vector<Rational> y;  // duals (optimal) or Farkas vector (infeasible)
  int pivots = 0;
  bool certified = false;   // certificate rechecked exactly against the input
};

/// A x = b, x >= 0, A^T y <= c and c·x = b·y.
inline bool verify_optimal(const LinearProgram& lp, const std::vector<Rational>& x, const std::vector<Rational>& y) {
  if (static_cast<int>(x.size()) != lp.cols || y.size() != lp.rows.size()) {
    return false;
  }
  for (const auto& v : x) {
    if (v < 0) {
      return false;
    }
  }
  std::vector<Rational> aty(static_cast<std::size_t>(lp.cols), Rational(0));
  Rational by = 0;
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    Rational ax = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      ax += row.val[k] * x[row.idx[k]];
      aty[row.idx[k]] += row.val[k] * y[r];
    }
    if (ax != lp.rhs[r]) {
      return false;
    }
    by += lp.rhs[r] * y[r];
  }
  Rational cx = 0;
  for (int j = 0; j < lp.cols; ++j) {
    if (aty[j] > lp.cost[j]) {
      return false;
    }
    cx += lp.cost[j] * x[j];
  }
  return cx == by;
}

/// A^T y <= 0 and b·y > 0: no x >= 0 solves A x = b.
inline bool verify_farkas(const LinearProgram& lp, const std::vector<Rational>& y) {
  if (y.size() != lp.rows.size()) {
    return false;
  }
  std::vector<Rational> aty(static_cast<std::size_t>(lp.cols), Rational(0));
  Rational by = 0;
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      aty[row.idx[k]] += row.val[k] * y[r];
    }
    by += lp.rhs[r] * y[r];
  }
  for (const auto& v : aty) {
    if (v > 0) {
      return false;
    }
  }
  return by > 0;
}

struct LpOptions {
  int max_pivots = 200000;
  int degenerate_streak = 50;  // consecutive degenerate pivots before Bland's rule
  bool presolve = true;
};

namespace detail {

/// dst -= f * src over sparse rows.
inline void axpy(SparseRow& dst, const Rational& f, const SparseRow& src) {
  SparseRow out;
  out.idx.reserve(dst.size() + src.size());
  out.val.reserve(dst.size() + src.size());
  std::size_t a = 0, b = 0;
  while (a < dst.size() || b < src.size()) {
    if (b == src.size() || (a < dst.size() && dst.idx[a] < src.idx[b])) {
      out.idx.push_back(dst.idx[a]);
      out.val.push_back(std::move(dst.val[a]));
      ++a;
    } else if (a == dst.size() || src.idx[b] < dst.idx[a]) {
      out.push(src.idx[b], -f * src.val[b]);
      ++b;
    } else {
      out.push(dst.idx[a], dst.val[a] - f * src.val[b]);
      ++a;
      ++b;
    }
  }
  dst = std::move(out);
}

class Tableau {
 public:
  explicit Tableau(const LinearProgram& lp) : n_(lp.cols), m_(static_cast<int>(lp.rows.size())) {
    rows_.resize(m_);
    beta_.resize(m_);
    sign_.assign(m_, 1);
    basis_.resize(m_);
    for (int r = 0; r < m_; ++r) {
      rows_[r] = lp.rows[r];
      beta_[r] = lp.rhs[r];
      if (beta_[r] < 0) {
        sign_[r] = -1;
        beta_[r] = -beta_[r];
        for (auto& v : rows_[r].val) {
          v = -v;
        }
      }
      rows_[r].push(n_ + r, Rational(1));
      basis_[r] = n_ + r;
    }
  }

  int pivots() const { return pivots_; }

  /// Minimizes the sum of artificials. Returns its optimal value.
  Rational phase_one(const LpOptions& opt) {
    reset_costs([&](int j) { return j >= n_ ? Rational(1) : Rational(0); });
    run(opt, /*allow_artificial=*/false);
    return z_;
  }

  /// Phase-1 duals in the original row signs (a Farkas vector when the
  /// phase-1 optimum is positive).
  std::vector<Rational> phase_one_duals() const {
    std::vector<Rational> y(m_);
    for (int r = 0; r < m_; ++r) {
      y[r] = sign_[r] * (Rational(1) - d_[n_ + r]);
    }
    return y;
  }

  /// Pivots basic artificials out of the basis where possible.
  void drive_out_artificials() {
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) {
        continue;
      }
      const auto& row = rows_[r];
      for (std::size_t k = 0; k < row.size() && row.idx[k] < n_; ++k) {
        if (row.val[k] != 0) {
          pivot(r, row.idx[k]);
          break;
        }
      }
    }
  }

  /// Returns false if unbounded.
  bool phase_two(const std::vector<Rational>& cost, const LpOptions& opt) {
    reset_costs([&](int j) { return j < n_ ? cost[j] : Rational(0); });
    return run(opt, false);
  }

  Rational objective() const { return z_; }

  std::vector<Rational> primal() const {
    std::vector<Rational> x(n_, Rational(0));
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < n_) {
        x[basis_[r]] = beta_[r];
      }
    }
    return x;
  }

  std::vector<Rational> duals() const {
    std::vector<Rational> y(m_);
    for (int r = 0; r < m_; ++r) {
      y[r] = sign_[r] * -d_[n_ + r];
    }
    return y;
  }

 private:
  template <class CostFn>
  void reset_costs(CostFn cost) {
    cost_.assign(n_ + m_, Rational(0));
    for (int j = 0; j < n_ + m_; ++j) {
      cost_[j] = cost(j);
    }
    d_ = cost_;
    z_ = 0;
    for (int r = 0; r < m_; ++r) {
      const Rational& cb = cost_[basis_[r]];
      if (cb == 0) {
        continue;
      }
      const auto& row = rows_[r];
      for (std::size_t k = 0; k < row.size(); ++k) {
        d_[row.idx[k]] -= cb * row.val[k];
      }
      z_ += cb * beta_[r];
    }
  }

  bool run(const LpOptions& opt, bool allow_artificial) {
    const int limit = allow_artificial ? n_ + m_ : n_;
    int streak = 0;
    while (true) {
      if (pivots_ >= opt.max_pivots) {
        throw NumericError("simplex pivot limit reached");
      }
      const bool bland = streak >= opt.degenerate_streak;
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (d_[j] < 0 && (enter < 0 || (!bland && d_[j] < d_[enter]))) {
          enter = j;
          if (bland) {
            break;
          }
        }
      }
      if (enter < 0) {
        return true;
      }
      int leave = -1;
      Rational best;
      for (int r = 0; r < m_; ++r) {
        const Rational* a = rows_[r].find(enter);
        if (!a || *a <= 0) {
          continue;
        }
        Rational ratio = beta_[r] / *a;
        if (leave < 0 || ratio < best || (ratio == best && basis_[r] < basis_[leave])) {
          leave = r;
          best = std::move(ratio);
        }
      }
      if (leave < 0) {
        return false;
      }
      streak = best == 0 ? streak + 1 : 0;
      pivot(leave, enter);
    }
  }

  void pivot(int r, int e) {
    ++pivots_;
    SparseRow& pr = rows_[r];
    const Rational p = *pr.find(e);
    for (auto& v : pr.val) {
      v /= p;
    }
    beta_[r] /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == r) {
        continue;
      }
      const Rational* a = rows_[i].find(e);
      if (!a) {
        continue;
      }
      const Rational f = *a;
      axpy(rows_[i], f, pr);
      beta_[i] -= f * beta_[r];
    }
    const Rational de = d_[e];
    if (de != 0) {
      for (std::size_t k = 0; k < pr.size(); ++k) {
        d_[pr.idx[k]] -= de * pr.val[k];
      }
      z_ += de * beta_[r];
    }
    basis_[r] = e;
  }

  int n_, m_;
  std::vector<SparseRow> rows_;
  std::vector<Rational> beta_;
  std::vector<int> sign_;
  std::vector<int> basis_;
  std::vector<Rational> cost_, d_;
  Rational z_;
  int pivots_ = 0;
};

}  // namespace detail

/// Rows with zero right-hand side and nonnegative coefficients force their
/// columns to zero. Such rows (pairwise column-disjoint) and their columns
/// are removed before pivoting; their duals are reconstructed afterwards.
struct Presolved {
  LinearProgram reduced;
  std::vector<int> kept_rows, kept_cols;  // reduced index -> original index
  std::vector<int> dropped_rows;
};

inline Presolved presolve(const LinearProgram& lp) {
  Presolved p;
  std::vector<char> col_forced(static_cast<std::size_t>(lp.cols), 0), row_dropped(lp.rows.size(), 0);
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    if (lp.rhs[r] != 0 || row.size() == 0) {
      continue;
    }
    bool ok = true;
    for (std::size_t k = 0; k < row.size() && ok; ++k) {
      ok = row.val[k] > 0 && !col_forced[row.idx[k]];
    }
    if (!ok) {
      continue;
    }
    row_dropped[r] = 1;
    p.dropped_rows.push_back(static_cast<int>(r));
    for (int j : row.idx) {
      col_forced[j] = 1;
    }
  }
  std::vector<int> new_col(static_cast<std::size_t>(lp.cols), -1);
  for (int j = 0; j < lp.cols; ++j) {
    if (!col_forced[j]) {
      new_col[j] = static_cast<int>(p.kept_cols.size());
      p.kept_cols.push_back(j);
      p.reduced.cost.push_back(lp.cost[j]);
    }
  }
  p.reduced.cols = static_cast<int>(p.kept_cols.size());
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    if (row_dropped[r]) {
      continue;
    }
    SparseRow nr;
    const auto& row = lp.rows[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (new_col[row.idx[k]] >= 0) {
        nr.push(new_col[row.idx[k]], row.val[k]);
      }
    }
    p.kept_rows.push_back(static_cast<int>(r));
    p.reduced.rows.push_back(std::move(nr));
    p.reduced.rhs.push_back(lp.rhs[r]);
  }
  return p;
}

inline LpResult solve_lp(const LinearProgram& lp, const LpOptions& opt = {}) {
  if (lp.rows.size() != lp.rhs.size() || static_cast<int>(lp.cost.size()) != lp.cols) {
    throw std::invalid_argument("inconsistent LP dimensions");
  }
  Presolved pre;
  if (opt.presolve) {
    pre = presolve(lp);
  } else {
    pre.reduced = lp;
    for (int j = 0; j < lp.cols; ++j) {
      pre.kept_cols.push_back(j);
    }
    for (std::size_t r = 0; r < lp.rows.size(); ++r) {
      pre.kept_rows.push_back(static_cast<int>(r));
    }
  }
  LpResult res;
  detail::Tableau tab(pre.reduced);
  const Rational infeas = tab.phase_one(opt);
  std::vector<Rational> y(lp.rows.size(), Rational(0));
  if (infeas > 0) {
    const auto yr = tab.phase_one_duals();
    for (std::size_t r = 0; r < pre.kept_rows.size(); ++r) {
      y[pre.kept_rows[r]] = yr[r];
    }
    // Dropped rows have b = 0 and nonnegative entries: a very negative dual
    // keeps A^T y <= 0 on their columns without changing b·y.
    std::vector<Rational> aty(static_cast<std::size_t>(lp.cols), Rational(0));
    for (std::size_t r = 0; r < lp.rows.size(); ++r) {
      const auto& row = lp.rows[r];
      for (std::size_t k = 0; k < row.size(); ++k) {
        aty[row.idx[k]] += row.val[k] * y[r];
      }
    }
    for (int r : pre.dropped_rows) {
      const auto& row = lp.rows[r];
      Rational need = 0;
      for (std::size_t k = 0; k < row.size(); ++k) {
        const Rational bound = -aty[row.idx[k]] / row.val[k];
        if (k == 0 || bound < need) {
          need = bound;
        }
      }
      y[r] = need < 0 ? need : Rational(0);
    }
    res.status = LpStatus::infeasible;
    res.y = std::move(y);
    res.pivots = tab.pivots();
    res.certified = verify_farkas(lp, res.y);
    return res;
  }
  tab.drive_out_artificials();
  if (!tab.phase_two(pre.reduced.cost, opt)) {
    res.status = LpStatus::unbounded;
    res.pivots = tab.pivots();
    return res;
  }
  const auto xr = tab.primal();
  const auto yr = tab.duals();
  res.x.assign(static_cast<std::size_t>(lp.cols), Rational(0));
  for (std::size_t j = 0; j < pre.kept_cols.size(); ++j) {
    res.x[pre.kept_cols[j]] = xr[j];
  }
  for (std::size_t r = 0; r < pre.kept_rows.size(); ++r) {
    y[pre.kept_rows[r]] = yr[r];
  }
  // Reconstruct duals of dropped rows: the largest value keeping every
  // reduced cost of their (forced) columns nonnegative.
  std::vector<Rational> aty(static_cast<std::size_t>(lp.cols), Rational(0));
  for (int r : pre.kept_rows) {
    const auto& row = lp.rows[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      aty[row.idx[k]] += row.val[k] * y[r];
    }
  }
  for (int r : pre.dropped_rows) {
    const auto& row = lp.rows[r];
    for (std::size_t k = 0; k < row.size(); ++k) {
      const Rational bound = (lp.cost[row.idx[k]] - aty[row.idx[k]]) / row.val[k];
      if (k == 0 || bound < y[r]) {
        y[r] = bound;
      }
    }
  }
  res.status = LpStatus::optimal;
  res.objective = tab.objective();
  res.y = std::move(y);
  res.pivots = tab.pivots();
  res.certified = verify_optimal(lp, res.x, res.y);
  return res;
}

}  // namespace ksat
