#include <doctest.h>

#include <cmath>

#include "treecs/asymptotic_theory.hpp"
#include "treecs/errors.hpp"
#include "treecs/experiments.hpp"
#include "treecs/itp_solvers.hpp"
#include "treecs/tree_projection.hpp"

using namespace treecs;

namespace {

ProblemInstance instance(std::size_t n, std::size_t N, std::size_t k, double sigma,
                         std::uint64_t seed) {
  InstanceSpec spec;
  spec.n = n;
  spec.k = k;
  spec.sigma = sigma;
  spec.seed = seed;
  return make_instance(build_complete_tree(N, 2), spec);
}

SolverConfig itp(double alpha) {
  SolverConfig c;
  c.alpha = alpha;
  return c;
}

SolverConfig nitp() {
  SolverConfig c;
  c.variant = SolverVariant::nitp;
  return c;
}

} // namespace

TEST_CASE("config validation") {
  SolverConfig c = nitp();
  c.kappa = 1.1;
  c.c = 0.1; // kappa (1 - c) = 0.99: shrinking would grow alpha
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.c = 0.05;
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(itp(-1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(itp(0.0).validate(), InvalidArgument);
}

TEST_CASE("single step") {
  // 3 x 7 hand matrix on the 7-node binary tree.
  Eigen::MatrixXd a(3, 7);
  a << 1, 0, 0, 1, 0, 0, 1,
       0, 1, 0, 0, 1, 0, 1,
       0, 0, 1, 0, 0, 1, 1;
  Eigen::VectorXd b(3);
  b << 1, 2, 3;
  const TreeTopology t = build_complete_tree(7, 2);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(7);
  // A^T b = (1, 2, 3, 1, 2, 3, 6); squared: 1 4 9 1 4 9 36. With k = 3 the
  // best rooted support is {0, 2, 6}: 1 + 9 + 36.
  const Eigen::VectorXd x1 = itp_step(t, a, b, x0, 0.5, 3);
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(7);
  expected[0] = 0.5;
  expected[2] = 1.5;
  expected[6] = 3.0;
  CHECK(x1 == expected);
  CHECK(x1 == project_bruteforce(t, 0.5 * a.transpose() * b, 3).projected);

  // Second step against the same oracle.
  const Eigen::VectorXd g = a.transpose() * (b - a * x1);
  CHECK(itp_step(t, a, b, x1, 0.5, 3) == project_bruteforce(t, x1 + 0.5 * g, 3).projected);
  CHECK_THROWS_AS(itp_step(t, a, b, x0, 0.0, 3), InvalidArgument);
}

TEST_CASE("truth is a fixed point without noise") {
  const ProblemInstance inst = instance(100, 255, 4, 0.0, 1);
  for (double alpha : {0.3, 1.0, 1.7}) {
    const Eigen::VectorXd next =
        itp_step(inst.topology, inst.matrix_a, inst.b, inst.x_star, alpha, 4);
    CHECK((next - inst.x_star).norm() <= 1e-14 * inst.x_star.norm());
  }
}

TEST_CASE("zero problem") {
  const TreeTopology t = build_complete_tree(63, 2);
  const Eigen::MatrixXd a = sample_gaussian_matrix(30, 63, 1);
  const ProblemInstance inst =
      assemble_instance(a, Eigen::VectorXd::Zero(63), Eigen::VectorXd::Zero(30), 0.0, t,
                        validate_support(t, {0, 1, 2}), 0);
  const SolverReport r = solve_itp(inst, itp(0.9));
  CHECK(r.x_hat.isZero(0.0));
  CHECK(r.iterations == 1);
  CHECK(r.termination == Termination::gradient_stationary);

  const SolverReport rn = solve_nitp(inst, nitp());
  CHECK(rn.x_hat.isZero(0.0));
  CHECK(rn.termination == Termination::gradient_stationary);
}

TEST_CASE("noiseless recovery, ITP and NITP") {
  int itp_ok = 0, nitp_ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemInstance inst = instance(500, 1023, 5, 0.0, seed);
    SolverConfig c;
    const SolverReport r = solve_itp(inst, c);
    CHECK(r.stepsize_trace.front() == theory::optimal_alpha(2, 0.01));
    itp_ok += recovered(r.x_hat, inst.x_star, 1e-6);
    const SolverReport rn = solve_nitp(inst, nitp());
    nitp_ok += recovered(rn.x_hat, inst.x_star, 1e-6);
    for (const SolverReport *rep : {&r, &rn}) {
      CHECK(rep->termination != Termination::max_iters);
      CHECK(rep->objective_trace.size() == rep->iterations + 1);
      CHECK(rep->stepsize_trace.size() == rep->iterations);
      CHECK(rep->support.cardinality() == 5);
      CHECK(rep->stable_point_check.exhaustive);
      CHECK(rep->stable_point_check.passes(1e-8 * inst.b.norm(), 1e-8));
    }
  }
  CHECK(itp_ok >= 19);
  CHECK(nitp_ok >= 19);
}

TEST_CASE("NITP stepsize contracts") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const ProblemInstance inst = instance(120, 511, 8, 0.05, 100 + seed);
    const SolverConfig cfg = nitp();
    const SolverReport r = solve_nitp(inst, cfg);
    REQUIRE(r.nitp_steps.size() == r.iterations);
    double min_alpha = INFINITY;
    for (std::size_t m = 0; m < r.nitp_steps.size(); ++m) {
      const NitpStepRecord &s = r.nitp_steps[m];
      CHECK(s.accepted_alpha == r.stepsize_trace[m]);
      if (s.support_kept) {
        CHECK(s.accepted_alpha == s.linesearch_alpha);
        CHECK(s.shrinks == 0);
      } else {
        CHECK(s.accepted_alpha < s.exit_bound);
        const double expected =
            s.linesearch_alpha / std::pow(cfg.kappa * (1.0 - cfg.c), static_cast<double>(s.shrinks));
        CHECK(s.accepted_alpha == doctest::Approx(expected).epsilon(1e-12));
      }
      min_alpha = std::min(min_alpha, s.accepted_alpha);
    }
    CHECK(r.stable_point_check.alpha_lower == min_alpha);
  }
}

TEST_CASE("iterates stay on rooted supports of size k") {
  const ProblemInstance inst = instance(60, 255, 6, 0.1, 4);
  const TreeTopology &t = inst.topology;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(255);
  for (int m = 0; m < 30; ++m) {
    x = itp_step(t, inst.matrix_a, inst.b, x, 0.5, 6);
    std::vector<NodeIndex> nz;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x[i] != 0.0)
        nz.push_back(static_cast<NodeIndex>(i));
    CHECK(nz.size() <= 6);
    CHECK_NOTHROW(validate_support(t, nz));
  }
}

TEST_CASE("monotone descent below the empirical step cap") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ProblemInstance inst = instance(60, 255, 3, 0.1, 300 + seed);
    const RipEstimate e = estimate_tree_rip(inst.matrix_a, inst.topology, 6, 100000, seed);
    REQUIRE(e.exhaustive);
    const SolverReport r = solve_itp(inst, itp(0.99 / (1.0 + e.upper_hat)));
    for (std::size_t m = 1; m < r.objective_trace.size(); ++m)
      CHECK(r.objective_trace[m] <= r.objective_trace[m - 1] + 1e-12);
  }
}

TEST_CASE("stable point verification") {
  const ProblemInstance inst = instance(200, 511, 4, 0.0, 8);
  const StablePointCheck truth = verify_stable_point(inst, inst.x_star, 5.0, 1000, 1);
  CHECK(truth.gradient_on_support_norm < 1e-12);
  CHECK(truth.swap_margin >= 0.0);
  CHECK(truth.pinv_gap < 1e-10);
  CHECK(truth.exhaustive);

  // A minimum-norm fit on a far-away support fails the swap test and the
  // necessary condition for any step in the admissible window.
  const TreeTopology &t = inst.topology;
  std::vector<NodeIndex> far = {0};
  for (NodeIndex v = 0; far.size() < 4;) {
    const auto kids = t.children(v);
    NodeIndex pick = kids[0];
    for (NodeIndex c : kids)
      if (!inst.support.contains(c))
        pick = c;
    far.push_back(pick);
    v = pick;
  }
  std::sort(far.begin(), far.end());
  const TreeSupport gamma = validate_support(t, far);
  if (gamma != inst.support) {
    const ColumnLeastSquares ls(gather_columns(inst.matrix_a, gamma.indices()));
    const Eigen::VectorXd coef = ls.solve(inst.b);
    Eigen::VectorXd x_bar = Eigen::VectorXd::Zero(511);
    for (std::size_t j = 0; j < far.size(); ++j)
      x_bar[static_cast<Eigen::Index>(far[j])] = coef[static_cast<Eigen::Index>(j)];
    const double rho = 4.0 / 200.0;
    const theory::AlphaWindow w = theory::sp_alpha_window(2, rho);
    const double alpha = w.empty() ? 1.0 : 0.5 * (w.lower + w.upper);
    const StablePointCheck check =
        verify_stable_point(inst.matrix_a, inst.b, t, gamma, x_bar, alpha, 4, 1000, 1);
    CHECK(check.gradient_on_support_norm < 1e-10);
    CHECK(check.swap_margin < 0.0);
    const StablePointTerms terms = stable_point_condition_terms(inst, gamma);
    CHECK_FALSE(terms.admits_stable_point(alpha));
  }
}

TEST_CASE("noisy runs respect the stable-point error bound") {
  const double rho = 0.01;
  const double xi = theory::stability_factor_sp(2, rho, theory::AlgorithmParams::itp_optimal()).xi;
  int within = 0;
  const int trials = 20;
  for (int seed = 0; seed < trials; ++seed) {
    const ProblemInstance inst = instance(500, 1023, 5, 0.1, 700 + seed);
    const SolverReport r = solve_itp(inst, SolverConfig{});
    within += (r.x_hat - inst.x_star).norm() <= xi * 0.1;
    CHECK(r.stable_point_check.gradient_on_support_norm <= 1e-8 * inst.b.norm());
    CHECK(r.stable_point_check.pinv_gap <= 1e-8);
  }
  CHECK(within >= 19);
}
