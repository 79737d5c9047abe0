#include <doctest.h>

#include "oracles.hpp"
#include "treecs/errors.hpp"
#include "treecs/random.hpp"
#include "treecs/tree_projection.hpp"

using namespace treecs;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v)
    x[i++] = e;
  return x;
}

std::vector<double> to_std(const Eigen::VectorXd &x) { return {x.data(), x.data() + x.size()}; }

// Lexicographically first maximiser over a subset scan; energies summed in
// index order like the library.
std::vector<std::size_t> oracle_projection(const oracle::Parents &p, const std::vector<double> &x,
                                           std::size_t k) {
  std::vector<std::size_t> best;
  double best_e = -1;
  for (const auto &s : oracle::rooted_subsets(p, k)) {
    const double e = oracle::energy(x, s);
    if (e > best_e) {
      best_e = e;
      best = s;
    }
  }
  return best;
}

} // namespace

TEST_CASE("worked example") {
  const TreeTopology t = build_complete_tree(7, 2);
  const Eigen::VectorXd x = vec({1, 0.1, 5, 0, 0, 9, 0});
  const ProjectionResult r = project(t, x, 3);
  CHECK(r.support.indices() == std::vector<NodeIndex>{0, 2, 5});
  CHECK(r.captured_energy == 107.0);
  CHECK(r.projected == vec({1, 0, 5, 0, 0, 9, 0}));
  CHECK_FALSE(r.clipped);
  CHECK(project_bruteforce(t, x, 3).support == r.support);
}

TEST_CASE("root is always selected") {
  const TreeTopology t = build_complete_tree(7, 2);
  const Eigen::VectorXd x = vec({0, 0, 0, 10, 20, 30, 40});
  const ProjectionResult r = project(t, x, 3);
  CHECK(r.support.contains(0));
  CHECK(r.support.indices() == std::vector<NodeIndex>{0, 2, 6});
  CHECK(r.captured_energy == 1600.0);
}

TEST_CASE("feasible points and full trees are fixed") {
  const TreeTopology t = build_complete_tree(7, 2);
  const Eigen::VectorXd feasible = vec({2, -1, 0, 3, 0, 0, 0});
  const ProjectionResult r = project(t, feasible, 3);
  CHECK(r.projected == feasible);
  CHECK(r.captured_energy == feasible.squaredNorm());

  const Eigen::VectorXd x = vec({1, 2, 3, 4, 5, 6, 7});
  CHECK(project(t, x, 7).projected == x);
  const ProjectionResult over = project(t, x, 9);
  CHECK(over.clipped);
  CHECK(over.projected == x);
  CHECK(over.support.cardinality() == 7);
}

TEST_CASE("ties go to the lexicographically smallest support") {
  const TreeTopology t = build_complete_tree(7, 2);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
  const ProjectionResult r = project(t, ones, 3);
  CHECK(r.support.indices() == std::vector<NodeIndex>{0, 1, 2});
  CHECK(r.captured_energy == 3.0);
  CHECK(project_bruteforce(t, ones, 3).support == r.support);

  // Mirror-image tie deep in the tree.
  const Eigen::VectorXd x = vec({1, 0, 0, 2, 0, 0, 2});
  CHECK(project(t, x, 3).support.indices() == std::vector<NodeIndex>{0, 1, 3});

  // Quantised entries produce many ties; compare with the subset oracle.
  CounterRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const TreeTopology tt = build_complete_tree(15, 2);
    Eigen::VectorXd q(15);
    for (Eigen::Index i = 0; i < 15; ++i)
      q[i] = static_cast<double>(rng.uniform_index(3));
    const std::size_t k = 1 + rng.uniform_index(6);
    const auto expected = oracle_projection(oracle::heap_parents(15, 2), to_std(q), k);
    CHECK(project(tt, q, k).support.indices() == expected);
  }
}

TEST_CASE("dynamic programme agrees with the subset oracle") {
  CounterRng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 2 + static_cast<int>(rng.uniform_index(2));
    const std::size_t n = 1 + rng.uniform_index(15);
    const TreeTopology t = build_complete_tree(n, d);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x[i] = rng.gaussian();
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(n, 6));
    const ProjectionResult r = project(t, x, k);
    const auto expected = oracle_projection(oracle::heap_parents(n, d), to_std(x), k);
    REQUIRE(r.support.indices() == expected);
    CHECK(r.captured_energy == oracle::energy(to_std(x), expected));
    CHECK(r.captured_energy == project_bruteforce(t, x, k).captured_energy);
  }
}

TEST_CASE("projection properties") {
  CounterRng rng(3);
  const TreeTopology t = build_complete_tree(15, 2);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(15);
    for (Eigen::Index i = 0; i < 15; ++i)
      x[i] = rng.gaussian();
    const std::size_t k = 1 + rng.uniform_index(8);
    const ProjectionResult r = project(t, x, k);

    CHECK(project(t, r.projected, k).projected == r.projected);
    CHECK(r.projected.norm() <= x.norm());
    if (k < 15)
      CHECK(project(t, x, k + 1).captured_energy >= r.captured_energy);
    for (Eigen::Index i = 0; i < 15; ++i)
      if (r.projected[i] != 0.0)
        CHECK(r.projected[i] == x[i]);

    // Best approximation among every feasible z on a k-support.
    const double dist = (x - r.projected).norm();
    for (const TreeSupport &s : enumerate_supports(t, k)) {
      Eigen::VectorXd z = Eigen::VectorXd::Zero(15);
      for (NodeIndex i : s.indices())
        z[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i)];
      CHECK(dist <= (x - z).norm() + 1e-12);
    }
  }
}

TEST_CASE("larger trees against brute force") {
  CounterRng rng(17);
  const TreeTopology t = build_complete_tree(63, 2);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(63);
    for (Eigen::Index i = 0; i < 63; ++i)
      x[i] = rng.gaussian();
    for (std::size_t k : {4u, 8u}) {
      const ProjectionResult a = project(t, x, k);
      const ProjectionResult b = project_bruteforce(t, x, k);
      CHECK(a.support == b.support);
      CHECK(a.captured_energy == b.captured_energy);
    }
  }
}

TEST_CASE("argument errors") {
  const TreeTopology t = build_complete_tree(7, 2);
  CHECK_THROWS_AS(project(t, Eigen::VectorXd::Zero(6), 2), InvalidArgument);
  CHECK_THROWS_AS(project(t, Eigen::VectorXd::Zero(7), 0), InvalidArgument);
  const TreeTopology big = build_complete_tree(4095, 2);
  CHECK_THROWS_AS(project_bruteforce(big, Eigen::VectorXd::Zero(4095), 30), InvalidArgument);
}
