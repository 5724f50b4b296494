#pragma once

// Formulas, configurations and the sequences extracted from them.
//
// Literals are signed DIMACS integers (x3 is 3, its negation -3). Internally a
// literal also has an index 2(v-1) + negative, so x1, -x1, x2, -x2, ... are
// 0, 1, 2, 3, .... Copies of literals are numbered literal-major: all copies
// of x1 first, then those of -x1, and so on. A copy id therefore encodes the
// (variable, sign, ordinal) label, and sorting copy ids gives the canonical
// order used for structural comparison.

#include "ksat/numeric.hpp"
#include "ksat/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace ksat {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int literal_index(int lit) { return 2 * (std::abs(lit) - 1) + (lit < 0 ? 1 : 0); }
inline int signed_literal(int index) { return (index & 1) ? -(index / 2 + 1) : index / 2 + 1; }
inline int variable_of(int lit) { return std::abs(lit); }

using Clause = std::array<int, 3>;

inline Clause sorted_clause(Clause c) {
  std::sort(c.begin(), c.end(), [](int a, int b) { return literal_index(a) < literal_index(b); });
  return c;
}

/// A 3-CNF formula. Produced by the samplers with all invariants in place;
/// project() returns the same type but may contain repeated variables or
/// clauses (a multiformula).
struct Formula {
  int n = 0;
  std::vector<Clause> clauses;

  bool operator==(const Formula&) const = default;
};

/// True iff every clause has 3 distinct variables in [1, n] and no two
/// clauses are equal as literal sets.
inline bool is_proper(const Formula& f) {
  std::vector<Clause> seen;
  seen.reserve(f.clauses.size());
  for (const auto& raw : f.clauses) {
    Clause c = sorted_clause(raw);
    for (int lit : c) {
      if (lit == 0 || variable_of(lit) > f.n) {
        return false;
      }
    }
    if (variable_of(c[0]) == variable_of(c[1]) || variable_of(c[1]) == variable_of(c[2])) {
      return false;
    }
    seen.push_back(c);
  }
  std::sort(seen.begin(), seen.end());
  return std::adjacent_find(seen.begin(), seen.end()) == seen.end();
}

/// General CNF as read from DIMACS (clauses of any length).
struct Cnf {
  int n = 0;
  std::vector<std::vector<int>> clauses;
};

inline Cnf to_cnf(const Formula& f) {
  Cnf out{f.n, {}};
  out.clauses.reserve(f.clauses.size());
  for (const auto& c : f.clauses) {
    out.clauses.emplace_back(c.begin(), c.end());
  }
  return out;
}

inline Formula to_formula(const Cnf& cnf) {
  Formula f{cnf.n, {}};
  for (const auto& c : cnf.clauses) {
    if (c.size() != 3) {
      throw ModelError("clause with " + std::to_string(c.size()) + " literals in a 3-CNF");
    }
    f.clauses.push_back(sorted_clause({c[0], c[1], c[2]}));
  }
  return f;
}

inline void write_dimacs(std::ostream& os, const Cnf& cnf) {
  os << "p cnf " << cnf.n << ' ' << cnf.clauses.size() << '\n';
  for (const auto& c : cnf.clauses) {
    for (int lit : c) {
      os << lit << ' ';
    }
    os << "0\n";
  }
}

inline void write_dimacs(std::ostream& os, const Formula& f) { write_dimacs(os, to_cnf(f)); }

inline Cnf read_dimacs(std::istream& is) {
  Cnf cnf;
  std::size_t declared = 0;
  bool header = false;
  std::string line;
  std::vector<int> current;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == 'c' || tok[0] == '%') {
      continue;
    }
    if (tok == "p") {
      std::string fmt;
      if (!(ls >> fmt >> cnf.n >> declared) || fmt != "cnf" || cnf.n < 0) {
        throw ModelError("bad DIMACS header: " + line);
      }
      header = true;
      continue;
    }
    if (!header) {
      throw ModelError("DIMACS clause before header");
    }
    std::istringstream all(line);
    int lit;
    while (all >> lit) {
      if (lit == 0) {
        cnf.clauses.push_back(current);
        current.clear();
      } else {
        if (std::abs(lit) > cnf.n) {
          throw ModelError("literal out of range: " + std::to_string(lit));
        }
        current.push_back(lit);
      }
    }
  }
  if (!current.empty()) {
    cnf.clauses.push_back(current);
  }
  if (!header) {
    throw ModelError("missing DIMACS header");
  }
  if (cnf.clauses.size() != declared) {
    throw ModelError("DIMACS clause count mismatch");
  }
  return cnf;
}

/// Labeled literal copies partitioned into triples.
struct Configuration {
  int n = 0;
  std::vector<int> copies;               // per literal index, size 2n
  std::vector<std::array<int, 3>> clauses;  // copy ids

  bool operator==(const Configuration&) const = default;

  std::int64_t copy_count() const {
    std::int64_t s = 0;
    for (int c : copies) {
      s += c;
    }
    return s;
  }

  /// offsets()[l] is the first copy id of literal index l; size 2n+1.
  std::vector<int> offsets() const {
    std::vector<int> off(copies.size() + 1, 0);
    for (std::size_t l = 0; l < copies.size(); ++l) {
      off[l + 1] = off[l] + copies[l];
    }
    return off;
  }

  /// Literal index of every copy id.
  std::vector<int> copy_literals() const {
    std::vector<int> lits;
    lits.reserve(static_cast<std::size_t>(copy_count()));
    for (std::size_t l = 0; l < copies.size(); ++l) {
      lits.insert(lits.end(), copies[l], static_cast<int>(l));
    }
    return lits;
  }

  void canonicalize() {
    for (auto& t : clauses) {
      std::sort(t.begin(), t.end());
    }
    std::sort(clauses.begin(), clauses.end());
  }

  /// Throws unless the triples partition the copy set exactly.
  void validate() const {
    if (copies.size() != static_cast<std::size_t>(2 * n)) {
      throw ModelError("copies must list 2n literal counts");
    }
    for (int c : copies) {
      if (c < 0) {
        throw ModelError("negative copy count");
      }
    }
    const auto total = copy_count();
    if (total % 3 != 0) {
      throw ModelError("copy count not divisible by 3");
    }
    if (static_cast<std::int64_t>(clauses.size()) * 3 != total) {
      throw ModelError("clauses do not cover the copies");
    }
    std::vector<char> used(static_cast<std::size_t>(total), 0);
    for (const auto& t : clauses) {
      for (int id : t) {
        if (id < 0 || id >= total || used[id]) {
          throw ModelError("copy id missing, repeated or out of range");
        }
        used[id] = 1;
      }
    }
  }
};

/// Builds the configuration whose clauses are the given literal triples, with
/// each occurrence becoming the next unused copy of its literal.
inline Configuration configuration_from_clauses(int n, const std::vector<Clause>& lit_clauses) {
  Configuration c;
  c.n = n;
  c.copies.assign(2 * static_cast<std::size_t>(n), 0);
  for (const auto& cl : lit_clauses) {
    for (int lit : cl) {
      if (lit == 0 || variable_of(lit) > n) {
        throw ModelError("literal out of range");
      }
      ++c.copies[literal_index(lit)];
    }
  }
  auto next = c.offsets();
  for (const auto& cl : lit_clauses) {
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      t[k] = next[literal_index(cl[k])]++;
    }
    c.clauses.push_back(t);
  }
  c.canonicalize();
  return c;
}

inline Configuration configuration_from_formula(const Formula& f) {
  return configuration_from_clauses(f.n, f.clauses);
}

/// Unlabels the copies: a canonical multiset of clauses (sorted list).
inline Formula project(const Configuration& c) {
  const auto lits = c.copy_literals();
  Formula f{c.n, {}};
  f.clauses.reserve(c.clauses.size());
  for (const auto& t : c.clauses) {
    f.clauses.push_back(sorted_clause(
        {signed_literal(lits[t[0]]), signed_literal(lits[t[1]]), signed_literal(lits[t[2]])}));
  }
  std::sort(f.clauses.begin(), f.clauses.end());
  return f;
}

inline bool is_simple(const Configuration& c) {
  const auto lits = c.copy_literals();
  std::vector<std::array<int, 3>> proj;
  proj.reserve(c.clauses.size());
  for (const auto& t : c.clauses) {
    std::array<int, 3> l{lits[t[0]], lits[t[1]], lits[t[2]]};
    std::sort(l.begin(), l.end());
    if (l[0] / 2 == l[1] / 2 || l[1] / 2 == l[2] / 2) {
      return false;
    }
    proj.push_back(l);
  }
  std::sort(proj.begin(), proj.end());
  return std::adjacent_find(proj.begin(), proj.end()) == proj.end();
}

/// Exact integer counts n_{i,j} of variables by degree, with the scale n.
class DegreeSequence {
 public:
  using Key = std::pair<int, int>;

  DegreeSequence() = default;
  DegreeSequence(std::int64_t n, std::map<Key, std::int64_t> counts) : n_(n), counts_(std::move(counts)) {
    std::int64_t total = 0;
    for (auto it = counts_.begin(); it != counts_.end();) {
      if (it->first.first < 0 || it->first.second < 0 || it->second < 0) {
        throw ModelError("degree sequence entries must be nonnegative");
      }
      total += it->second;
      it = it->second == 0 ? counts_.erase(it) : std::next(it);
    }
    if (total != n_) {
      throw ModelError("degree counts must sum to n");
    }
  }

  std::int64_t n() const { return n_; }
  const std::map<Key, std::int64_t>& counts() const { return counts_; }

  std::int64_t count(int i, int j) const {
    auto it = counts_.find({i, j});
    return it == counts_.end() ? 0 : it->second;
  }

  Rational scaled(int i, int j) const { return Rational(count(i, j), n_); }

  std::map<Key, Rational> entries() const {
    std::map<Key, Rational> out;
    for (const auto& [k, v] : counts_) {
      out[k] = Rational(v, n_);
    }
    return out;
  }

  Rational total() const {
    Rational s = 0;
    for (const auto& [k, v] : counts_) {
      s += Rational(v, n_);
    }
    return s;
  }

  /// Σ(i+j) n_{i,j}: the number of literal copies.
  std::int64_t copy_count() const {
    std::int64_t s = 0;
    for (const auto& [k, v] : counts_) {
      s += (k.first + k.second) * v;
    }
    return s;
  }

  bool operator==(const DegreeSequence&) const = default;

 private:
  std::int64_t n_ = 0;
  std::map<Key, std::int64_t> counts_;
};

/// Occurrence counts (positive, negative) of every variable.
inline std::vector<std::pair<int, int>> variable_degrees(const Configuration& c) {
  std::vector<std::pair<int, int>> deg(static_cast<std::size_t>(c.n));
  for (int v = 0; v < c.n; ++v) {
    deg[v] = {c.copies[2 * v], c.copies[2 * v + 1]};
  }
  return deg;
}

inline DegreeSequence degree_sequence_of(int n, const std::vector<std::pair<int, int>>& deg) {
  std::map<DegreeSequence::Key, std::int64_t> counts;
  for (const auto& d : deg) {
    ++counts[d];
  }
  return DegreeSequence(n, std::move(counts));
}

inline DegreeSequence degree_sequence(const Configuration& c) { return degree_sequence_of(c.n, variable_degrees(c)); }

inline DegreeSequence degree_sequence(const Formula& f) {
  std::vector<std::pair<int, int>> deg(static_cast<std::size_t>(f.n));
  for (const auto& cl : f.clauses) {
    for (int lit : cl) {
      auto& d = deg[variable_of(lit) - 1];
      (lit > 0 ? d.first : d.second) += 1;
    }
  }
  return degree_sequence_of(f.n, deg);
}

/// c(d) = (1/3) Σ (i+j) d_{i,j}; throws unless the copy count is a multiple of 3.
inline Rational scaled_clause_count(const DegreeSequence& d) {
  const auto copies = d.copy_count();
  if (copies % 3 != 0) {
    throw ModelError("copy count " + std::to_string(copies) + " is not divisible by 3");
  }
  return Rational(copies / 3, d.n());
}

/// (ℓ+, ℓ-) = (Σ i d_{i,j}, Σ j d_{i,j}).
inline std::pair<Rational, Rational> literal_counts(const DegreeSequence& d) {
  std::int64_t p = 0, q = 0;
  for (const auto& [k, v] : d.counts()) {
    p += k.first * v;
    q += k.second * v;
  }
  return {Rational(p, d.n()), Rational(q, d.n())};
}

struct ClauseTypeSequence {
  std::int64_t n = 0;
  std::array<std::int64_t, 4> counts{};  // clauses with 0..3 positive copies

  Rational scaled(int k) const { return Rational(counts[k], n); }
  Rational total() const { return Rational(counts[0] + counts[1] + counts[2] + counts[3], n); }
  bool operator==(const ClauseTypeSequence&) const = default;
};

inline ClauseTypeSequence clause_type_sequence(const Configuration& c) {
  const auto lits = c.copy_literals();
  ClauseTypeSequence out;
  out.n = c.n;
  for (const auto& t : c.clauses) {
    int k = 0;
    for (int id : t) {
      k += (lits[id] & 1) == 0;
    }
    ++out.counts[k];
  }
  return out;
}

/// m = floor(γ n) with γ taken as an exact rational.
inline std::int64_t clause_count(std::int64_t n, const Rational& gamma) {
  return static_cast<std::int64_t>(floor_rational(gamma * n));
}

/// Uniform member of F_{n,m}, m = floor(γ n): rejection sampling of clauses.
inline Formula sample_uniform_formula(int n, const Rational& gamma, std::uint64_t seed) {
  if (n < 3) {
    throw ModelError("need n >= 3");
  }
  if (n >= (1 << 20)) {
    throw ModelError("n too large for the clause hash");
  }
  const std::int64_t m = clause_count(n, gamma);
  const BigInt capacity = 8 * binomial(static_cast<unsigned>(n), 3);
  if (m < 0 || BigInt(m) > capacity) {
    throw ModelError("capacity error: " + std::to_string(m) + " distinct clauses do not fit on " +
                     std::to_string(n) + " variables");
  }
  Rng rng = make_rng(seed);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(static_cast<std::size_t>(m) * 2);
  Formula f{n, {}};
  f.clauses.reserve(static_cast<std::size_t>(m));
  while (static_cast<std::int64_t>(f.clauses.size()) < m) {
    int v[3];
    v[0] = static_cast<int>(uniform_below(rng, n));
    do {
      v[1] = static_cast<int>(uniform_below(rng, n));
    } while (v[1] == v[0]);
    do {
      v[2] = static_cast<int>(uniform_below(rng, n));
    } while (v[2] == v[0] || v[2] == v[1]);
    const auto signs = uniform_below(rng, 8);
    Clause c;
    for (int k = 0; k < 3; ++k) {
      c[k] = ((signs >> k) & 1) ? -(v[k] + 1) : v[k] + 1;
    }
    c = sorted_clause(c);
    const std::uint64_t key = (std::uint64_t(literal_index(c[0])) << 42) |
                              (std::uint64_t(literal_index(c[1])) << 21) | std::uint64_t(literal_index(c[2]));
    if (seen.insert(key).second) {
      f.clauses.push_back(c);
    }
  }
  return f;
}

inline Formula sample_uniform_formula(int n, double gamma, std::uint64_t seed) {
  return sample_uniform_formula(n, rational_from_double(gamma), seed);
}

/// Uniform partition of the copies of fixed per-variable degrees: a random
/// permutation of the copies cut into consecutive triples.
inline Configuration sample_configuration(const std::vector<std::pair<int, int>>& degrees, std::uint64_t seed) {
  Configuration c;
  c.n = static_cast<int>(degrees.size());
  c.copies.reserve(2 * degrees.size());
  for (const auto& [i, j] : degrees) {
    c.copies.push_back(i);
    c.copies.push_back(j);
  }
  const auto total = c.copy_count();
  if (total % 3 != 0) {
    throw ModelError("copy count " + std::to_string(total) + " is not divisible by 3");
  }
  std::vector<int> perm(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) {
    perm[k] = k;
  }
  Rng rng = make_rng(seed);
  fisher_yates(perm.begin(), perm.end(), rng);
  c.clauses.resize(static_cast<std::size_t>(total / 3));
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    c.clauses[t] = {perm[3 * t], perm[3 * t + 1], perm[3 * t + 2]};
  }
  c.canonicalize();
  return c;
}

/// Configuration for a degree sequence: degrees are first dealt to the
/// variables in uniformly random order, then the copies are partitioned.
inline Configuration sample_configuration(const DegreeSequence& d, std::uint64_t seed) {
  scaled_clause_count(d);
  std::vector<std::pair<int, int>> degrees;
  degrees.reserve(static_cast<std::size_t>(d.n()));
  for (const auto& [k, v] : d.counts()) {
    degrees.insert(degrees.end(), static_cast<std::size_t>(v), k);
  }
  Rng rng = make_rng(seed ^ 0xD1B54A32D192ED03ULL);
  fisher_yates(degrees.begin(), degrees.end(), rng);
  return sample_configuration(degrees, seed);
}

/// Membership in the neighbourhood N(n, ξ, ε) of an ideal sequence. With
/// apply_cutoff, entries beyond n^{1/6} in either coordinate must vanish.
template <class Ideal>
bool in_neighborhood(const DegreeSequence& d, const Ideal& xi, double eps, bool apply_cutoff = true) {
  if (d.total() != 1 || d.copy_count() % 3 != 0) {
    return false;
  }
  const double cutoff = std::pow(static_cast<double>(d.n()), 1.0 / 6.0);
  for (const auto& [k, v] : d.counts()) {
    if (apply_cutoff && (k.first > cutoff || k.second > cutoff)) {
      return false;
    }
    const double dv = static_cast<double>(v) / static_cast<double>(d.n());
    if (std::abs(dv - static_cast<double>(xi(k.first, k.second))) > eps) {
      return false;
    }
  }
  for (int i = 0; i < xi.size; ++i) {
    for (int j = 0; j < xi.size; ++j) {
      if (d.count(i, j) == 0 && static_cast<double>(xi(i, j)) > eps) {
        return false;
      }
    }
  }
  return true;
}

inline nlohmann::json to_json(const Configuration& c) {
  nlohmann::json j;
  j["n"] = c.n;
  j["copies"] = c.copies;
  j["clauses"] = c.clauses;
  return j;
}

inline Configuration configuration_from_json(const nlohmann::json& j) {
  Configuration c;
  c.n = j.at("n").get<int>();
  c.copies = j.at("copies").get<std::vector<int>>();
  c.clauses = j.at("clauses").get<std::vector<std::array<int, 3>>>();
  c.validate();
  c.canonicalize();
  return c;
}

}  // namespace ksat
