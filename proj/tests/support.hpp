#pragma once

#include "ksat/verify.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksat::test {

struct Fixture {
  TinyClass cls;
  int M = 2;
  BigInt configurations, pairs;
  Rational expected_X;
  std::size_t lattice_points = 0;
};

inline std::vector<Fixture> load_fixtures() {
  std::ifstream is(std::string(KSAT_FIXTURES_DIR) + "/tiny_classes.json");
  if (!is) {
    throw std::runtime_error("missing fixture file");
  }
  nlohmann::json j;
  is >> j;
  std::vector<Fixture> out;
  for (const auto& c : j.at("classes")) {
    std::map<DegreeSequence::Key, std::int64_t> counts;
    for (const auto& e : c.at("degrees")) {
      counts[{e[0].get<int>(), e[1].get<int>()}] = e[2].get<std::int64_t>();
    }
    Fixture f;
    const auto n = c.at("n").get<std::int64_t>();
    f.cls = {DegreeSequence(n, counts), ClauseTypeSequence{n, c.at("clause_types").get<std::array<std::int64_t, 4>>()}};
    f.M = c.at("M").get<int>();
    f.configurations = BigInt(c.at("configurations").get<std::string>());
    f.pairs = BigInt(c.at("pairs").get<std::string>());
    f.expected_X = Rational(c.at("expected_X").get<std::string>());
    f.lattice_points = c.at("lattice_points").get<std::size_t>();
    out.push_back(f);
  }
  return out;
}

// Shorthand for single-clause configurations in tests.
inline Configuration conf(int n, std::vector<Clause> clauses) { return configuration_from_clauses(n, clauses); }

}  // namespace ksat::test
