#pragma once

// Plain DPLL: unit propagation plus Jeroslow-Wang branching, no learning.

#include "ksat/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ksat {

enum class SatResult { sat, unsat, unknown };

inline const char* to_string(SatResult r) {
  switch (r) {
    case SatResult::sat: return "sat";
    case SatResult::unsat: return "unsat";
    case SatResult::unknown: return "unknown";
  }
  return "?";
}

struct DpllOptions {
  std::int64_t node_limit = 50'000'000;  // decisions before giving up with `unknown`
};

struct DpllResult {
  SatResult result = SatResult::unknown;
  std::int64_t nodes = 0;
  std::vector<char> model;  // per variable, valid when sat
};

namespace detail {

class Dpll {
 public:
  Dpll(const Cnf& cnf, std::int64_t limit) : n_(cnf.n), limit_(limit) {
    occ_.resize(2 * static_cast<std::size_t>(n_));
    value_.assign(static_cast<std::size_t>(n_), -1);
    for (const auto& raw : cnf.clauses) {
      std::vector<int> c;
      bool tautology = false;
      for (int lit : raw) {
        if (lit == 0 || variable_of(lit) > n_) {
          throw ModelError("literal out of range");
        }
        const int l = literal_index(lit);
        if (std::find(c.begin(), c.end(), l ^ 1) != c.end()) {
          tautology = true;
        }
        if (std::find(c.begin(), c.end(), l) == c.end()) {
          c.push_back(l);
        }
      }
      if (tautology) {
        continue;
      }
      if (c.empty()) {
        empty_clause_ = true;
      }
      const int id = static_cast<int>(clauses_.size());
      for (int l : c) {
        occ_[l].push_back(id);
      }
      clauses_.push_back(std::move(c));
    }
    sat_.assign(clauses_.size(), 0);
    falses_.assign(clauses_.size(), 0);
  }

  DpllResult run() {
    DpllResult out;
    if (empty_clause_) {
      out.result = SatResult::unsat;
      return out;
    }
    std::vector<int> units;
    for (std::size_t c = 0; c < clauses_.size(); ++c) {
      if (clauses_[c].size() == 1) {
        units.push_back(clauses_[c][0]);
      }
    }
    const auto r = propagate(units) ? search() : SatResult::unsat;
    out.result = r;
    out.nodes = nodes_;
    if (r == SatResult::sat) {
      out.model.resize(static_cast<std::size_t>(n_));
      for (int v = 0; v < n_; ++v) {
        out.model[v] = value_[v] == 1;
      }
    }
    return out;
  }

 private:
  bool lit_true(int l) const { return value_[l / 2] == ((l & 1) ? 0 : 1); }

  // Sets literal l true; returns false on conflict. Newly unit clauses are queued.
  bool assign(int l, std::vector<int>& queue) {
    value_[l / 2] = (l & 1) ? 0 : 1;
    trail_.push_back(l);
    for (int c : occ_[l]) {
      ++sat_[c];
    }
    bool ok = true;
    for (int c : occ_[l ^ 1]) {
      ++falses_[c];
      if (sat_[c] == 0) {
        const auto size = static_cast<int>(clauses_[c].size());
        if (falses_[c] == size) {
          ok = false;
        } else if (falses_[c] == size - 1) {
          for (int m : clauses_[c]) {
            if (value_[m / 2] < 0) {
              queue.push_back(m);
              break;
            }
          }
        }
      }
    }
    return ok;
  }

  void undo_to(std::size_t mark) {
    while (trail_.size() > mark) {
      const int l = trail_.back();
      trail_.pop_back();
      for (int c : occ_[l]) {
        --sat_[c];
      }
      for (int c : occ_[l ^ 1]) {
        --falses_[c];
      }
      value_[l / 2] = -1;
    }
  }

  bool propagate(std::vector<int>& queue) {
    while (!queue.empty()) {
      const int l = queue.back();
      queue.pop_back();
      if (value_[l / 2] >= 0) {
        if (!lit_true(l)) {
          return false;
        }
        continue;
      }
      if (!assign(l, queue)) {
        return false;
      }
    }
    return true;
  }

  int choose() const {
    std::vector<double> score(2 * static_cast<std::size_t>(n_), 0.0);
    bool any = false;
    for (std::size_t c = 0; c < clauses_.size(); ++c) {
      if (sat_[c] > 0) {
        continue;
      }
      const int free = static_cast<int>(clauses_[c].size()) - falses_[c];
      const double w = std::ldexp(1.0, -free);
      for (int l : clauses_[c]) {
        if (value_[l / 2] < 0) {
          score[l] += w;
          any = true;
        }
      }
    }
    if (!any) {
      return -1;
    }
    int best = -1;
    double best_score = -1;
    for (int v = 0; v < n_; ++v) {
      if (value_[v] >= 0) {
        continue;
      }
      const double s = score[2 * v] + score[2 * v + 1];
      if (s > best_score) {
        best_score = s;
        best = v;
      }
    }
    return score[2 * best] >= score[2 * best + 1] ? 2 * best : 2 * best + 1;
  }

  SatResult search() {
    const int l = choose();
    if (l < 0) {
      return SatResult::sat;  // every clause satisfied
    }
    for (int branch : {l, l ^ 1}) {
      if (++nodes_ > limit_) {
        return SatResult::unknown;
      }
      const std::size_t mark = trail_.size();
      std::vector<int> queue{branch};
      if (propagate(queue)) {
        const auto r = search();
        if (r != SatResult::unsat) {
          return r;
        }
      }
      undo_to(mark);
    }
    return SatResult::unsat;
  }

  int n_;
  std::int64_t limit_;
  std::int64_t nodes_ = 0;
  bool empty_clause_ = false;
  std::vector<std::vector<int>> clauses_;
  std::vector<std::vector<int>> occ_;
  std::vector<int> value_;
  std::vector<int> sat_, falses_;
  std::vector<int> trail_;
};

}  // namespace detail

inline DpllResult dpll(const Cnf& cnf, const DpllOptions& opt = {}) { return detail::Dpll(cnf, opt.node_limit).run(); }

inline SatResult dpll_sat(const Formula& f, const DpllOptions& opt = {}) { return dpll(to_cnf(f), opt).result; }

/// Truth-table satisfiability, for cross-checking on small n.
inline bool brute_force_sat(const Cnf& cnf) {
  if (cnf.n > 24) {
    throw std::invalid_argument("truth table limited to 24 variables");
  }
  for (std::uint32_t a = 0; a < (1u << cnf.n); ++a) {
    bool all = true;
    for (const auto& c : cnf.clauses) {
      bool sat = false;
      for (int lit : c) {
        const bool v = (a >> (variable_of(lit) - 1)) & 1u;
        if ((lit > 0) == v) {
          sat = true;
          break;
        }
      }
      if (!sat) {
        all = false;
        break;
      }
    }
    if (all) {
      return true;
    }
  }
  return false;
}

}  // namespace ksat
