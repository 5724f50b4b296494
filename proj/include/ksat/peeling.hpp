#pragma once

// Pure-literal elimination on configurations and positive unbalancing.

#include "ksat/model.hpp"
#include "ksat/random.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace ksat {

struct PeelSnapshot {
  std::int64_t step = 0;
  std::int64_t pure = 0;             // Y_0: live pure occurrences
  std::vector<std::int64_t> counts;  // Y_{i,j}, row-major over [0, span]^2
};

struct PeelTrace {
  std::int64_t n = 0;
  std::int64_t steps = 0;
  int span = 0;  // snapshots hold Y_{i,j} for 0 <= i, j <= span
  std::vector<PeelSnapshot> snapshots;
  Configuration core;

  Rational scaled_steps() const { return Rational(steps, n); }

  std::int64_t count(const PeelSnapshot& s, int i, int j) const {
    return s.counts[static_cast<std::size_t>(i) * (span + 1) + j];
  }
};

namespace detail {

/// Set of ints with O(1) insert, erase and uniform choice.
class IndexedSet {
 public:
  explicit IndexedSet(std::size_t universe) : pos_(universe, -1) {}

  void insert(int x) {
    if (pos_[x] < 0) {
      pos_[x] = static_cast<int>(items_.size());
      items_.push_back(x);
    }
  }

  void erase(int x) {
    const int p = pos_[x];
    if (p < 0) {
      return;
    }
    const int last = items_.back();
    items_[p] = last;
    pos_[last] = p;
    items_.pop_back();
    pos_[x] = -1;
  }

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  int pick(Rng& rng) const { return items_[uniform_below(rng, items_.size())]; }

 private:
  std::vector<int> pos_;
  std::vector<int> items_;
};

}  // namespace detail

/// Removes clauses through uniformly chosen pure occurrences until none is
/// left. With record_stride > 0, Y_0 and Y_{i,j} (i, j <= span) are recorded
/// every record_stride steps and at the end.
inline PeelTrace peel(const Configuration& c, std::uint64_t seed, std::optional<int> record_stride = std::nullopt,
                      int span = 5) {
  const auto lits = c.copy_literals();
  const auto off = c.offsets();
  const auto ncopies = lits.size();
  std::vector<int> clause_of(ncopies);
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    for (int id : c.clauses[t]) {
      clause_of[id] = static_cast<int>(t);
    }
  }
  std::vector<char> alive(c.clauses.size(), 1);
  std::vector<int> occ = c.copies;

  PeelTrace trace;
  trace.n = c.n;
  trace.span = span;
  const bool record = record_stride && *record_stride > 0;
  const int side = span + 1;
  std::vector<std::int64_t> hist;
  if (record) {
    hist.assign(static_cast<std::size_t>(side) * side, 0);
    for (int v = 0; v < c.n; ++v) {
      if (occ[2 * v] <= span && occ[2 * v + 1] <= span) {
        ++hist[occ[2 * v] * side + occ[2 * v + 1]];
      }
    }
  }

  detail::IndexedSet pure(ncopies);
  auto add_literal = [&](int lit) {
    for (int id = off[lit]; id < off[lit + 1]; ++id) {
      if (alive[clause_of[id]]) {
        pure.insert(id);
      }
    }
  };
  for (std::size_t lit = 0; lit < c.copies.size(); ++lit) {
    if (occ[lit] > 0 && occ[lit ^ 1] == 0) {
      add_literal(static_cast<int>(lit));
    }
  }

  auto snapshot = [&] {
    trace.snapshots.push_back({trace.steps, static_cast<std::int64_t>(pure.size()), hist});
  };
  if (record) {
    snapshot();
  }

  Rng rng = make_rng(seed);
  while (!pure.empty()) {
    const int chosen = pure.pick(rng);
    const int t = clause_of[chosen];
    alive[t] = 0;
    for (int id : c.clauses[t]) {
      pure.erase(id);
      const int lit = lits[id];
      const int v = lit / 2;
      if (record && occ[2 * v] <= span && occ[2 * v + 1] <= span) {
        --hist[occ[2 * v] * side + occ[2 * v + 1]];
      }
      --occ[lit];
      if (record && occ[2 * v] <= span && occ[2 * v + 1] <= span) {
        ++hist[occ[2 * v] * side + occ[2 * v + 1]];
      }
      if (occ[lit] == 0 && occ[lit ^ 1] > 0) {
        add_literal(lit ^ 1);
      }
    }
    ++trace.steps;
    if (record && trace.steps % *record_stride == 0) {
      snapshot();
    }
  }
  if (record && trace.steps % *record_stride != 0) {
    snapshot();
  }

  // Renumber the surviving copies literal-major.
  Configuration& core = trace.core;
  core.n = c.n;
  core.copies = occ;
  const auto new_off = core.offsets();
  std::vector<int> next(new_off.begin(), new_off.end() - 1);
  std::vector<int> renum(ncopies, -1);
  for (std::size_t id = 0; id < ncopies; ++id) {
    if (alive[clause_of[id]]) {
      renum[id] = next[lits[id]]++;
    }
  }
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    if (alive[t]) {
      const auto& cl = c.clauses[t];
      core.clauses.push_back({renum[cl[0]], renum[cl[1]], renum[cl[2]]});
    }
  }
  core.canonicalize();
  return trace;
}

/// Flips the sign of every variable with more negative than positive copies.
inline Configuration unbalance(const Configuration& c) {
  const auto lits = c.copy_literals();
  const auto off = c.offsets();
  std::vector<char> flip(static_cast<std::size_t>(c.n), 0);
  Configuration out;
  out.n = c.n;
  out.copies = c.copies;
  for (int v = 0; v < c.n; ++v) {
    if (c.copies[2 * v + 1] > c.copies[2 * v]) {
      flip[v] = 1;
      std::swap(out.copies[2 * v], out.copies[2 * v + 1]);
    }
  }
  const auto new_off = out.offsets();
  auto map_id = [&](int id) {
    const int lit = lits[id];
    const int target = flip[lit / 2] ? (lit ^ 1) : lit;
    return new_off[target] + (id - off[lit]);
  };
  out.clauses.reserve(c.clauses.size());
  for (const auto& t : c.clauses) {
    out.clauses.push_back({map_id(t[0]), map_id(t[1]), map_id(t[2])});
  }
  out.canonicalize();
  return out;
}

inline DegreeSequence core_degree_sequence(const Configuration& c, std::uint64_t seed) {
  return degree_sequence(unbalance(peel(c, seed).core));
}

/// CSV with columns t/n, Y_0/n and Y_{i,j}/n for 1 <= i, j <= max_ij.
inline void write_trace_csv(std::ostream& os, const PeelTrace& trace, int max_ij) {
  max_ij = std::min(max_ij, trace.span);
  os << "t_over_n,y0";
  for (int i = 1; i <= max_ij; ++i) {
    for (int j = 1; j <= max_ij; ++j) {
      os << ",y_" << i << '_' << j;
    }
  }
  os << '\n';
  const double n = static_cast<double>(trace.n);
  for (const auto& s : trace.snapshots) {
    os << decimal(s.step / n) << ',' << decimal(s.pure / n);
    for (int i = 1; i <= max_ij; ++i) {
      for (int j = 1; j <= max_ij; ++j) {
        os << ',' << decimal(trace.count(s, i, j) / n);
      }
    }
    os << '\n';
  }
}

}  // namespace ksat
