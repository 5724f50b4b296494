#pragma once

// Exact oracles on tiny instances: ♭ and ♭′ satisfaction on configurations,
// the closed-form counts |C_{n,d̂,ĉ}| and T(x̄), the lattice points of P, and
// brute-force enumeration of whole (d̂, ĉ) classes to check them against.

#include "ksat/layout.hpp"
#include "ksat/model.hpp"
#include "ksat/numeric.hpp"
#include "ksat/polytope.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace ksat {

using Assignment = std::vector<char>;  // value of variable v (0-based)

struct GuardError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kMaxEnumCopies = 9;
inline constexpr int kMaxEnumVariables = 24;
inline constexpr int kTinyM = 2;

/// Per-copy view of a configuration under an assignment.
struct CopyLabels {
  std::vector<char> heavy;      // per variable
  std::vector<char> satisfied;  // per copy: heavy copies count as satisfied
  std::vector<char> negative;   // per copy
  std::vector<char> blocking;   // per clause: no positive satisfied copy, exactly one satisfied copy, negative
};

inline bool is_heavy(const Configuration& c, int v, int M) { return c.copies[2 * v] > M || c.copies[2 * v + 1] > M; }

inline CopyLabels label_copies(const Configuration& c, const Assignment& a, int M) {
  if (static_cast<int>(a.size()) != c.n) {
    throw std::invalid_argument("assignment size differs from n");
  }
  const auto lits = c.copy_literals();
  CopyLabels out;
  out.heavy.resize(static_cast<std::size_t>(c.n));
  for (int v = 0; v < c.n; ++v) {
    out.heavy[v] = is_heavy(c, v, M);
  }
  out.satisfied.resize(lits.size());
  out.negative.resize(lits.size());
  for (std::size_t id = 0; id < lits.size(); ++id) {
    const int v = lits[id] / 2;
    out.negative[id] = lits[id] & 1;
    out.satisfied[id] = out.heavy[v] || (a[v] != 0) != static_cast<bool>(out.negative[id]);
  }
  out.blocking.resize(c.clauses.size());
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    int sat = 0, sat_neg = 0;
    for (int id : c.clauses[t]) {
      sat += out.satisfied[id];
      sat_neg += out.satisfied[id] && out.negative[id];
    }
    out.blocking[t] = sat == 1 && sat_neg == 1;
  }
  return out;
}

/// A ⊨♭ φ: every clause has a heavy variable or a satisfied light copy.
inline bool flat_sat(const Configuration& c, const Assignment& a, int M) {
  const auto lab = label_copies(c, a, M);
  for (const auto& t : c.clauses) {
    if (!lab.satisfied[t[0]] && !lab.satisfied[t[1]] && !lab.satisfied[t[2]]) {
      return false;
    }
  }
  return true;
}

/// A ⊨♭′ φ: ⊨♭ and every light variable set to 0 is the unique satisfied
/// literal of at least one blocking clause.
inline bool flat_prime_sat(const Configuration& c, const Assignment& a, int M) {
  const auto lab = label_copies(c, a, M);
  for (const auto& t : c.clauses) {
    if (!lab.satisfied[t[0]] && !lab.satisfied[t[1]] && !lab.satisfied[t[2]]) {
      return false;
    }
  }
  const auto lits = c.copy_literals();
  std::vector<char> blocks(static_cast<std::size_t>(c.n), 0);
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    if (!lab.blocking[t]) {
      continue;
    }
    for (int id : c.clauses[t]) {
      if (lab.satisfied[id]) {
        blocks[lits[id] / 2] = 1;
      }
    }
  }
  for (int v = 0; v < c.n; ++v) {
    if (!lab.heavy[v] && a[v] == 0 && !blocks[v]) {
      return false;
    }
  }
  return true;
}

inline Assignment assignment_from_bits(int n, std::uint64_t bits) {
  Assignment a(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    a[v] = (bits >> v) & 1u;
  }
  return a;
}

inline std::int64_t count_flat_prime_assignments(const Configuration& c, int M) {
  if (c.n > kMaxEnumVariables) {
    throw GuardError("assignment enumeration limited to " + std::to_string(kMaxEnumVariables) + " variables");
  }
  std::int64_t count = 0;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << c.n); ++bits) {
    count += flat_prime_sat(c, assignment_from_bits(c.n, bits), M);
  }
  return count;
}

/// The lattice point x̄·n of a pair (φ, A) with A ⊨♭′ φ, as integer counts in
/// layout order.
inline std::vector<std::int64_t> pair_counts(const Configuration& c, const Assignment& a, const Layout& L) {
  const int M = L.M();
  const auto lab = label_copies(c, a, M);
  const auto lits = c.copy_literals();
  std::vector<std::int64_t> x(static_cast<std::size_t>(L.size()), 0);
  std::vector<int> blocking_copies(static_cast<std::size_t>(c.n), 0);
  std::vector<char> in_blocking(lits.size(), 0);
  for (std::size_t t = 0; t < c.clauses.size(); ++t) {
    int ps = 0, ns = 0, pu = 0, nu = 0;
    for (int id : c.clauses[t]) {
      const bool s = lab.satisfied[id], neg = lab.negative[id];
      ps += s && !neg;
      ns += s && neg;
      pu += !s && !neg;
      nu += !s && neg;
      if (lab.blocking[t] && s) {
        in_blocking[id] = 1;
        ++blocking_copies[lits[id] / 2];
      }
    }
    if (ps + ns == 0) {
      throw std::invalid_argument("assignment does not ♭-satisfy the configuration");
    }
    ++x[L.c(class_index({ps, ns, pu, nu}))];
  }
  for (int v = 0; v < c.n; ++v) {
    if (lab.heavy[v]) {
      continue;
    }
    const int i = c.copies[2 * v], j = c.copies[2 * v + 1];
    if (a[v]) {
      ++x[L.t(i, j)];
    } else {
      const int k = blocking_copies[v];
      if (k == 0) {
        throw std::invalid_argument("light 0-variable without a blocking clause");
      }
      ++x[L.f(i, j, k)];
    }
  }
  for (std::size_t id = 0; id < lits.size(); ++id) {
    const int v = lits[id] / 2;
    const bool s = lab.satisfied[id], neg = lab.negative[id];
    if (lab.heavy[v] && neg) {
      ++x[in_blocking[id] ? L.h_nsf() : L.h_nsr()];
    }
    const int sigma = !neg ? (s ? kPs : kPu) : !s ? kNu : in_blocking[id] ? kNsf : kNsr;
    ++x[L.ell(sigma)];
  }
  return x;
}

/// Class parameters: n, the exact degree counts and the clause-type counts.
struct TinyClass {
  DegreeSequence d;
  ClauseTypeSequence c;

  std::int64_t n() const { return d.n(); }
  std::int64_t copies() const { return d.copy_count(); }
};

namespace detail {

inline void check_identities(const DegreeSequence& d, const ClauseTypeSequence& c) {
  if (c.n != d.n()) {
    throw ParameterError("degree and clause-type sequences have different n");
  }
  std::int64_t lp = 0, ln = 0;
  for (const auto& [ij, cnt] : d.counts()) {
    lp += ij.first * cnt;
    ln += ij.second * cnt;
  }
  const auto& k = c.counts;
  if (k[1] + 2 * k[2] + 3 * k[3] != lp || 3 * k[0] + 2 * k[1] + k[2] != ln) {
    throw ParameterError("clause-type counts inconsistent with the literal counts");
  }
}

inline BigInt pow_int(const BigInt& base, std::int64_t e) {
  return boost::multiprecision::pow(base, static_cast<unsigned>(e));
}

inline BigInt fact(std::int64_t k) { return factorial(static_cast<unsigned>(k)); }

inline BigInt exact_quotient(const BigInt& num, const BigInt& den) {
  if (num % den != 0) {
    throw NumericError("count formula did not divide exactly");
  }
  return num / den;
}

}  // namespace detail

/// |C_{n,d̂,ĉ}| = n!/Π(d̂n)! · (ℓ+n)!(ℓ−n)! / (2^{ĉn} 3^{(ĉ0+ĉ3)n} Π(ĉ_k n)!).
inline BigInt count_space(const DegreeSequence& d, const ClauseTypeSequence& c) {
  detail::check_identities(d, c);
  std::int64_t lp = 0, ln = 0;
  BigInt num = detail::fact(d.n()), den = 1;
  for (const auto& [ij, cnt] : d.counts()) {
    lp += ij.first * cnt;
    ln += ij.second * cnt;
    den *= detail::fact(cnt);
  }
  const auto& k = c.counts;
  num *= detail::fact(lp) * detail::fact(ln);
  den *= detail::pow_int(2, k[0] + k[1] + k[2] + k[3]) * detail::pow_int(3, k[0] + k[3]);
  for (auto v : k) {
    den *= detail::fact(v);
  }
  return detail::exact_quotient(num, den);
}

/// Integer counts n·x of a lattice point; throws std::domain_error otherwise.
inline std::vector<std::int64_t> lattice_counts(const PolytopePoint<Rational>& x, std::int64_t n) {
  std::vector<std::int64_t> out;
  out.reserve(x.x.size());
  for (const auto& v : x.x) {
    const Rational s = v * n;
    if (denominator(s) != 1 || s < 0) {
      throw std::domain_error("not a point of (N/n)^K");
    }
    out.push_back(static_cast<std::int64_t>(numerator(s)));
  }
  return out;
}

/// W(α) = (w c n)! (c n)!^{2−w} / (w!)^{c n}, w = number of zeros of α.
inline BigInt W_alpha(const ClauseClass& a, std::int64_t cn) {
  const int w = a.zeros();
  const BigInt num = detail::fact(w * cn) * (w <= 2 ? detail::pow_int(detail::fact(cn), 2 - w) : BigInt(1));
  const BigInt den = detail::pow_int(detail::fact(w), cn) * (w == 3 ? detail::fact(cn) : BigInt(1));
  return detail::exact_quotient(num, den);
}

/// Number of pairs (φ, A), φ ∈ C_{n,d̂,ĉ}, A ⊨♭′ φ, with parameters x̄.
inline BigInt count_T(const std::vector<std::int64_t>& x, const DegreeSequence& d, const ClauseTypeSequence& c,
                      int M) {
  const Layout L(M);
  if (static_cast<int>(x.size()) != L.size()) {
    throw std::invalid_argument("lattice point has the wrong dimension");
  }
  detail::check_identities(d, c);
  BigInt num = detail::fact(d.n()), den = 1;
  std::int64_t heavy_vars = 0, h_ns = 0;
  for (const auto& [ij, cnt] : d.counts()) {
    if (ij.first > M || ij.second > M) {
      heavy_vars += cnt;
      h_ns += ij.second * cnt;
      den *= detail::fact(cnt);
    }
  }
  num *= detail::pow_int(2, heavy_vars);
  for (int i = 0; i <= M; ++i) {
    for (int j = 0; j <= M; ++j) {
      den *= detail::fact(x[L.t(i, j)]);
      for (int k = 1; k <= j; ++k) {
        const auto f = x[L.f(i, j, k)];
        den *= detail::fact(f);
        num *= detail::pow_int(binomial(j, k), f);
      }
    }
  }
  if (x[L.h_nsf()] + x[L.h_nsr()] != h_ns) {
    return 0;
  }
  num *= detail::fact(h_ns);
  den *= detail::fact(x[L.h_nsf()]) * detail::fact(x[L.h_nsr()]);
  const auto& cls = clause_classes();
  for (int s = 0; s < 5; ++s) {
    std::int64_t used = 0;
    for (std::size_t al = 0; al < cls.size(); ++al) {
      const auto& a = cls[al];
      const int m = s == kPs ? a.ps : s == kPu ? a.pu : s == kNsf ? a.nsf() : s == kNsr ? a.nsr() : a.nu;
      const std::int64_t part = m * x[L.c(static_cast<int>(al))];
      used += part;
      den *= detail::fact(part);
    }
    if (used != x[L.ell(s)]) {
      return 0;  // ℓ_σ not expressible through c
    }
    num *= detail::fact(x[L.ell(s)]);
  }
  for (std::size_t al = 0; al < cls.size(); ++al) {
    num *= W_alpha(cls[al], x[L.c(static_cast<int>(al))]);
  }
  return detail::exact_quotient(num, den);
}

inline BigInt count_T(const PolytopePoint<Rational>& x, const DegreeSequence& d, const ClauseTypeSequence& c, int M) {
  const ConstraintSystem sys = build_constraints(constraint_params(d, c, M));
  const auto r = residuals(sys, x);
  if (std::any_of(r.begin(), r.end(), [](const Rational& v) { return v != 0; })) {
    throw std::domain_error("point is not in P");
  }
  return count_T(lattice_counts(x, d.n()), d, c, M);
}

namespace detail {

// Calls fn for every way of writing `total` as an ordered sum of `parts`
// nonnegative integers.
inline void compositions(std::int64_t total, int parts, const std::function<void(const std::vector<std::int64_t>&)>& fn) {
  std::vector<std::int64_t> v(static_cast<std::size_t>(parts), 0);
  std::function<void(int, std::int64_t)> rec = [&](int k, std::int64_t left) {
    if (k == parts - 1) {
      v[k] = left;
      fn(v);
      return;
    }
    for (std::int64_t a = 0; a <= left; ++a) {
      v[k] = a;
      rec(k + 1, left - a);
    }
  };
  if (parts == 0) {
    if (total == 0) {
      fn(v);
    }
    return;
  }
  rec(0, total);
}

}  // namespace detail

/// All points of I(n, d̂, ĉ) = P ∩ (N/n)^K, as integer counts.
inline std::vector<std::vector<std::int64_t>> lattice_points(const DegreeSequence& d, const ClauseTypeSequence& c,
                                                             int M) {
  detail::check_identities(d, c);
  const Layout L(M);
  const int K = L.size();
  std::int64_t h_ps = 0, h_ns = 0, lp = 0, ln = 0;
  std::vector<std::pair<std::pair<int, int>, std::int64_t>> light;
  for (const auto& [ij, cnt] : d.counts()) {
    lp += ij.first * cnt;
    ln += ij.second * cnt;
    if (ij.first > M || ij.second > M) {
      h_ps += ij.first * cnt;
      h_ns += ij.second * cnt;
    } else {
      light.emplace_back(ij, cnt);
    }
  }
  using Key = std::array<std::int64_t, 3>;
  // Variable side: (ℓ_ps, ℓ_nsf, ℓ_nsr) -> partial vectors over t, f, h.
  std::map<Key, std::vector<std::vector<std::int64_t>>> var_side;
  std::vector<std::int64_t> x(static_cast<std::size_t>(K), 0);
  std::function<void(std::size_t, Key)> rec_var = [&](std::size_t g, Key acc) {
    if (g == light.size()) {
      for (std::int64_t hf = 0; hf <= h_ns; ++hf) {
        x[L.h_nsf()] = hf;
        x[L.h_nsr()] = h_ns - hf;
        var_side[{acc[0] + h_ps, acc[1] + hf, acc[2] + h_ns - hf}].push_back(x);
      }
      return;
    }
    const auto [i, j] = light[g].first;
    detail::compositions(light[g].second, j + 1, [&](const std::vector<std::int64_t>& parts) {
      Key next = acc;
      x[L.t(i, j)] = parts[0];
      next[0] += i * parts[0];
      for (int k = 1; k <= j; ++k) {
        x[L.f(i, j, k)] = parts[k];
        next[1] += k * parts[k];
        next[2] += (j - k) * parts[k];
      }
      rec_var(g + 1, next);
    });
    x[L.t(i, j)] = 0;
    for (int k = 1; k <= j; ++k) {
      x[L.f(i, j, k)] = 0;
    }
  };
  rec_var(0, {0, 0, 0});

  const auto& cls = clause_classes();
  std::array<std::vector<int>, 4> by_type;
  for (std::size_t al = 0; al < cls.size(); ++al) {
    by_type[cls[al].tp()].push_back(static_cast<int>(al));
  }
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cvec(cls.size(), 0);
  std::function<void(int)> rec_c = [&](int k) {
    if (k == 4) {
      Key key{0, 0, 0};
      for (std::size_t al = 0; al < cls.size(); ++al) {
        key[0] += cls[al].ps * cvec[al];
        key[1] += cls[al].nsf() * cvec[al];
        key[2] += cls[al].nsr() * cvec[al];
      }
      auto it = var_side.find(key);
      if (it == var_side.end() || key[0] > lp || key[1] + key[2] > ln) {
        return;
      }
      for (auto pt : it->second) {
        for (std::size_t al = 0; al < cls.size(); ++al) {
          pt[L.c(static_cast<int>(al))] = cvec[al];
        }
        pt[L.ell(kPs)] = key[0];
        pt[L.ell(kPu)] = lp - key[0];
        pt[L.ell(kNsf)] = key[1];
        pt[L.ell(kNsr)] = key[2];
        pt[L.ell(kNu)] = ln - key[1] - key[2];
        out.push_back(std::move(pt));
      }
      return;
    }
    const auto& ids = by_type[k];
    detail::compositions(c.counts[k], static_cast<int>(ids.size()), [&](const std::vector<std::int64_t>& parts) {
      for (std::size_t q = 0; q < ids.size(); ++q) {
        cvec[ids[q]] = parts[q];
      }
      rec_c(k + 1);
    });
    for (int id : ids) {
      cvec[id] = 0;
    }
  };
  rec_c(0);
  std::sort(out.begin(), out.end());
  return out;
}

/// E X = Σ_{x̄ ∈ I} T(x̄) / |C_{n,d̂,ĉ}|.
inline Rational expected_X_exact(const DegreeSequence& d, const ClauseTypeSequence& c, int M = kTinyM) {
  if (d.copy_count() > kMaxEnumCopies) {
    throw GuardError("lattice enumeration limited to " + std::to_string(kMaxEnumCopies) + " copies");
  }
  BigInt total = 0;
  for (const auto& x : lattice_points(d, c, M)) {
    total += count_T(x, d, c, M);
  }
  return Rational(total, count_space(d, c));
}

/// Calls fn on every configuration of C_{n,d̂,ĉ}: every assignment of the
/// degrees to variables and every partition of the copies into triples with
/// the prescribed clause types.
inline void for_each_configuration(const DegreeSequence& d, const ClauseTypeSequence& c,
                                   const std::function<void(const Configuration&)>& fn) {
  detail::check_identities(d, c);
  if (d.copy_count() > kMaxEnumCopies) {
    throw GuardError("configuration enumeration limited to " + std::to_string(kMaxEnumCopies) + " copies");
  }
  std::vector<std::pair<int, int>> degrees;
  for (const auto& [ij, cnt] : d.counts()) {
    degrees.insert(degrees.end(), static_cast<std::size_t>(cnt), ij);
  }
  std::sort(degrees.begin(), degrees.end());
  do {
    Configuration conf;
    conf.n = static_cast<int>(d.n());
    for (const auto& [i, j] : degrees) {
      conf.copies.push_back(i);
      conf.copies.push_back(j);
    }
    const auto lits = conf.copy_literals();
    const int total = static_cast<int>(lits.size());
    std::vector<char> used(static_cast<std::size_t>(total), 0);
    std::array<std::int64_t, 4> types{};
    std::function<void()> rec = [&] {
      int first = 0;
      while (first < total && used[first]) {
        ++first;
      }
      if (first == total) {
        if (types == c.counts) {
          Configuration out = conf;
          out.canonicalize();
          fn(out);
        }
        return;
      }
      used[first] = 1;
      for (int b = first + 1; b < total; ++b) {
        if (used[b]) {
          continue;
        }
        used[b] = 1;
        for (int e = b + 1; e < total; ++e) {
          if (used[e]) {
            continue;
          }
          used[e] = 1;
          const int k = !(lits[first] & 1) + !(lits[b] & 1) + !(lits[e] & 1);
          if (types[k] < c.counts[k]) {
            ++types[k];
            conf.clauses.push_back({first, b, e});
            rec();
            conf.clauses.pop_back();
            --types[k];
          }
          used[e] = 0;
        }
        used[b] = 0;
      }
      used[first] = 0;
    };
    rec();
  } while (std::next_permutation(degrees.begin(), degrees.end()));
}

/// Brute-force tallies of a class: |C|, the number of ♭′ pairs, and the pairs
/// per lattice point.
struct ClassEnumeration {
  BigInt configurations = 0;
  BigInt pairs = 0;
  std::map<std::vector<std::int64_t>, BigInt> per_point;
};

inline ClassEnumeration enumerate_class(const DegreeSequence& d, const ClauseTypeSequence& c, int M = kTinyM) {
  const Layout L(M);
  ClassEnumeration out;
  for_each_configuration(d, c, [&](const Configuration& conf) {
    out.configurations += 1;
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << conf.n); ++bits) {
      const auto a = assignment_from_bits(conf.n, bits);
      if (flat_prime_sat(conf, a, M)) {
        out.pairs += 1;
        out.per_point[pair_counts(conf, a, L)] += 1;
      }
    }
  });
  return out;
}

/// Every class with n <= max_n variables, at most max_copies copies (a
/// multiple of 3) and every consistent clause-type vector.
inline std::vector<TinyClass> tiny_classes(int max_n, int max_copies = kMaxEnumCopies) {
  std::vector<TinyClass> out;
  std::vector<std::pair<int, int>> degs;
  for (int s = 0; s <= max_copies; ++s) {
    for (int i = 0; i <= s; ++i) {
      degs.emplace_back(i, s - i);
    }
  }
  std::vector<int> pick;
  std::function<void(int, int, int)> rec = [&](int n_left, std::size_t from, int copies) {
    if (!pick.empty() && copies % 3 == 0) {
      std::map<DegreeSequence::Key, std::int64_t> counts;
      std::int64_t lp = 0, ln = 0;
      for (int id : pick) {
        ++counts[degs[id]];
        lp += degs[id].first;
        ln += degs[id].second;
      }
      DegreeSequence d(static_cast<std::int64_t>(pick.size()), counts);
      const std::int64_t m = (lp + ln) / 3;
      for (std::int64_t c3 = 0; c3 <= m; ++c3) {
        for (std::int64_t c2 = 0; c2 + c3 <= m; ++c2) {
          for (std::int64_t c1 = 0; c1 + c2 + c3 <= m; ++c1) {
            const std::int64_t c0 = m - c1 - c2 - c3;
            if (c1 + 2 * c2 + 3 * c3 == lp && 3 * c0 + 2 * c1 + c2 == ln) {
              out.push_back({d, ClauseTypeSequence{d.n(), {c0, c1, c2, c3}}});
            }
          }
        }
      }
    }
    if (n_left == 0) {
      return;
    }
    for (std::size_t k = from; k < degs.size(); ++k) {
      const int add = degs[k].first + degs[k].second;
      if (copies + add > max_copies) {
        continue;
      }
      pick.push_back(static_cast<int>(k));
      rec(n_left - 1, k, copies + add);
      pick.pop_back();
    }
  };
  rec(max_n, 0, 0);
  return out;
}

}  // namespace ksat
