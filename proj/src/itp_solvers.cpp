#include "treecs/itp_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <set>

#include "treecs/asymptotic_theory.hpp"
#include "treecs/errors.hpp"
#include "treecs/tree_projection.hpp"

namespace treecs {

namespace {

// Consecutive iterations with an unchanged support before the tolerance
// tests may stop the run.
constexpr std::size_t kSettledIterations = 3;
constexpr double kDenominatorFloor = 1e-300;
constexpr std::size_t kMaxShrinks = 2000;

Eigen::VectorXd restrict(const Eigen::VectorXd &v, const std::vector<NodeIndex> &idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = v[static_cast<Eigen::Index>(idx[j])];
  return out;
}

// A * x touching only the nonzero entries of x.
Eigen::VectorXd sparse_apply(const Eigen::MatrixXd &a, const Eigen::VectorXd &x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(a.rows());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0)
      out.noalias() += x[i] * a.col(i);
  return out;
}

std::vector<NodeIndex> set_minus(const std::vector<NodeIndex> &a, const std::vector<NodeIndex> &b) {
  std::vector<NodeIndex> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::size_t effective_k(const ProblemInstance &instance, const SolverConfig &config) {
  const std::size_t k = config.k ? config.k : instance.k;
  if (k == 0)
    throw InvalidArgument("solver: k must be at least 1");
  return k;
}

void check_instance(const ProblemInstance &instance) {
  if (instance.b.size() != instance.matrix_a.rows() ||
      static_cast<std::size_t>(instance.matrix_a.cols()) != instance.topology.size())
    throw InvalidArgument("solver: instance dimensions are inconsistent");
}

/// Shared iteration; `choose_step` fills x_next/support_next for iterate m
/// and returns false to declare stationarity.
class IterationDriver {
public:
  IterationDriver(const ProblemInstance &inst, const SolverConfig &cfg, std::size_t k)
      : inst_(inst), cfg_(cfg), k_(k), b_norm_(inst.b.norm()) {
    x_ = Eigen::VectorXd::Zero(inst.matrix_a.cols());
    r_ = inst.b;
    g_ = inst.matrix_a.transpose() * r_;
    objective_trace_.push_back(0.5 * r_.squaredNorm());
  }

  const Eigen::VectorXd &x() const { return x_; }
  const Eigen::VectorXd &gradient() const { return g_; }
  const std::optional<TreeSupport> &support() const { return support_; }
  std::vector<NitpStepRecord> &nitp_steps() { return nitp_steps_; }

  /// True when the tolerance tests stop the run at the current iterate.
  bool settled() const {
    if (!support_ || settled_run_ < kSettledIterations)
      return false;
    const double grad = restrict(g_, support_->indices()).norm();
    return grad <= cfg_.tol_gradient * b_norm_ ||
           last_residual_change_ <= cfg_.tol_residual_change * b_norm_;
  }

  /// Installs x^{m+1}; returns false when it equals x^m exactly.
  bool advance(Eigen::VectorXd x_next, TreeSupport support_next, double alpha) {
    if (support_) {
      if (support_next == *support_) {
        ++settled_run_;
      } else {
        settled_run_ = 0;
        ++support_changes_;
      }
    }
    support_ = std::move(support_next);
    stepsize_trace_.push_back(alpha);
    ++iterations_;
    const bool moved = x_next != x_;
    x_ = std::move(x_next);
    Eigen::VectorXd r_next = inst_.b - sparse_apply(inst_.matrix_a, x_);
    last_residual_change_ = (r_next - r_).norm();
    r_ = std::move(r_next);
    g_.noalias() = inst_.matrix_a.transpose() * r_;
    objective_trace_.push_back(0.5 * r_.squaredNorm());
    return moved;
  }

  SolverReport finish(Termination why, double alpha_lower) {
    if (!support_)
      support_ = project(inst_.topology, x_, k_).support;
    StablePointCheck check =
        verify_stable_point(inst_.matrix_a, inst_.b, inst_.topology, *support_, x_, alpha_lower,
                            k_, cfg_.omega_budget, cfg_.seed, {inst_.support});
    return SolverReport{x_,
                        *support_,
                        iterations_,
                        std::move(objective_trace_),
                        std::move(stepsize_trace_),
                        support_changes_,
                        why,
                        check,
                        std::move(nitp_steps_)};
  }

private:
  const ProblemInstance &inst_;
  const SolverConfig &cfg_;
  std::size_t k_;
  double b_norm_;
  Eigen::VectorXd x_, r_, g_;
  std::optional<TreeSupport> support_;
  std::size_t settled_run_ = 0;
  double last_residual_change_ = std::numeric_limits<double>::infinity();
  std::size_t iterations_ = 0;
  std::size_t support_changes_ = 0;
  std::vector<double> objective_trace_, stepsize_trace_;
  std::vector<NitpStepRecord> nitp_steps_;
};

} // namespace

std::string to_string(SolverVariant v) {
  return v == SolverVariant::itp_constant ? "itp" : "nitp";
}

SolverVariant solver_variant_from_string(const std::string &name) {
  if (name == "itp" || name == "itp_constant")
    return SolverVariant::itp_constant;
  if (name == "nitp")
    return SolverVariant::nitp;
  throw InvalidArgument("unknown solver variant '" + name + "'");
}

std::string to_string(Termination t) {
  switch (t) {
  case Termination::gradient_stationary:
    return "gradient_stationary";
  case Termination::support_stable:
    return "support_stable";
  case Termination::max_iters:
    return "max_iters";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (variant == SolverVariant::itp_constant) {
    if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha)))
      throw InvalidArgument("ITP step alpha must be positive");
  } else {
    if (!(c > 0.0 && c < 1.0))
      throw InvalidArgument("NITP parameter c must lie in (0,1)");
    if (!(kappa * (1.0 - c) > 1.0))
      throw InvalidArgument("NITP requires kappa (1 - c) > 1");
  }
  if (max_iters == 0)
    throw InvalidArgument("max_iters must be at least 1");
  if (!(tol_gradient >= 0.0) || !(tol_residual_change >= 0.0) || !(stable_slack >= 0.0))
    throw InvalidArgument("tolerances must be nonnegative");
}

Eigen::VectorXd itp_step(const TreeTopology &topology, const Eigen::MatrixXd &a,
                         const Eigen::VectorXd &b, const Eigen::VectorXd &x_m, double alpha,
                         std::size_t k) {
  if (!(alpha > 0.0))
    throw InvalidArgument("itp_step: alpha must be positive");
  if (b.size() != a.rows() || x_m.size() != a.cols())
    throw InvalidArgument("itp_step: dimension mismatch");
  const Eigen::VectorXd g = a.transpose() * (b - a * x_m);
  return project(topology, x_m + alpha * g, k).projected;
}

double resolve_itp_alpha(const ProblemInstance &instance, const SolverConfig &config) {
  if (config.alpha)
    return *config.alpha;
  const double rho =
      static_cast<double>(effective_k(instance, config)) / static_cast<double>(instance.rows());
  return theory::optimal_alpha(instance.topology.order(), rho);
}

SolverReport solve_itp(const ProblemInstance &instance, const SolverConfig &config) {
  config.validate();
  check_instance(instance);
  if (config.variant != SolverVariant::itp_constant)
    throw InvalidArgument("solve_itp: config variant is not ITP");
  const std::size_t k = effective_k(instance, config);
  const double alpha = resolve_itp_alpha(instance, config);

  IterationDriver run(instance, config, k);
  for (std::size_t m = 0; m < config.max_iters; ++m) {
    if (run.settled())
      return run.finish(Termination::support_stable, alpha);
    ProjectionResult p = project(instance.topology, run.x() + alpha * run.gradient(), k);
    if (!run.advance(std::move(p.projected), std::move(p.support), alpha))
      return run.finish(Termination::gradient_stationary, alpha);
  }
  return run.finish(Termination::max_iters, alpha);
}

SolverReport solve_nitp(const ProblemInstance &instance, const SolverConfig &config) {
  config.validate();
  check_instance(instance);
  if (config.variant != SolverVariant::nitp)
    throw InvalidArgument("solve_nitp: config variant is not NITP");
  const std::size_t k = effective_k(instance, config);
  const Eigen::MatrixXd &a = instance.matrix_a;
  const double shrink = config.kappa * (1.0 - config.c);

  IterationDriver run(instance, config, k);
  double alpha_min = std::numeric_limits<double>::infinity();
  auto lower = [&] { return std::isfinite(alpha_min) ? alpha_min : 0.0; };

  for (std::size_t m = 0; m < config.max_iters; ++m) {
    if (run.settled())
      return run.finish(Termination::support_stable, lower());
    const Eigen::VectorXd &x = run.x();
    const Eigen::VectorXd &g = run.gradient();

    // x^0 = 0 has no support; start from the support of P_k(A^T b).
    const TreeSupport gamma =
        run.support() ? *run.support() : project(instance.topology, g, k).support;
    const Eigen::VectorXd g_gamma = restrict(g, gamma.indices());
    const double num = g_gamma.squaredNorm();
    const double den = (gather_columns(a, gamma.indices()) * g_gamma).squaredNorm();
    if (den < kDenominatorFloor || num == 0.0)
      return run.finish(Termination::gradient_stationary, lower());

    NitpStepRecord rec;
    rec.linesearch_alpha = num / den;
    double alpha = rec.linesearch_alpha;
    ProjectionResult trial = project(instance.topology, x + alpha * g, k);
    rec.support_kept = trial.support == gamma;

    auto exit_bound = [&](const ProjectionResult &t) {
      const Eigen::VectorXd dx = t.projected - x;
      const double dx2 = dx.squaredNorm();
      const double adx2 = sparse_apply(a, dx).squaredNorm();
      if (dx2 == 0.0 || adx2 == 0.0)
        return std::numeric_limits<double>::infinity();
      return (1.0 - config.c) * dx2 / adx2;
    };
    if (rec.support_kept) {
      rec.exit_bound = exit_bound(trial);
    } else {
      double bound = exit_bound(trial);
      while (alpha >= bound) {
        if (rec.shrinks == kMaxShrinks)
          throw NumericalError("NITP backtracking did not terminate");
        alpha /= shrink;
        ++rec.shrinks;
        trial = project(instance.topology, x + alpha * g, k);
        bound = exit_bound(trial);
      }
      rec.exit_bound = bound;
    }
    rec.accepted_alpha = alpha;
    alpha_min = std::min(alpha_min, alpha);
    run.nitp_steps().push_back(rec);
    if (!run.advance(std::move(trial.projected), std::move(trial.support), alpha))
      return run.finish(Termination::gradient_stationary, lower());
  }
  return run.finish(Termination::max_iters, lower());
}

SolverReport solve(const ProblemInstance &instance, const SolverConfig &config) {
  return config.variant == SolverVariant::nitp ? solve_nitp(instance, config)
                                               : solve_itp(instance, config);
}

StablePointCheck verify_stable_point(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                                     const TreeTopology &topology, const TreeSupport &gamma,
                                     const Eigen::VectorXd &x_bar, double alpha_lower,
                                     std::size_t k, std::uint64_t omega_budget,
                                     std::uint64_t seed,
                                     const std::vector<TreeSupport> &extra_omegas) {
  StablePointCheck out;
  out.alpha_lower = alpha_lower;
  const Eigen::VectorXd g = a.transpose() * (b - a * x_bar);
  const auto &gi = gamma.indices();
  out.gradient_on_support_norm = restrict(g, gi).norm();

  try {
    const ColumnLeastSquares ls(gather_columns(a, gi));
    out.pinv_gap = (restrict(x_bar, gi) - ls.solve(b)).norm();
  } catch (const NumericalError &) {
    out.pinv_gap = std::numeric_limits<double>::infinity();
  }

  auto test = [&](const std::vector<NodeIndex> &omega) {
    double lhs = 0.0;
    for (NodeIndex i : set_minus(gi, omega))
      lhs += x_bar[static_cast<Eigen::Index>(i)] * x_bar[static_cast<Eigen::Index>(i)];
    double rhs = 0.0;
    for (NodeIndex i : set_minus(omega, gi))
      rhs += g[static_cast<Eigen::Index>(i)] * g[static_cast<Eigen::Index>(i)];
    out.swap_margin = std::min(out.swap_margin, std::sqrt(lhs) - alpha_lower * std::sqrt(rhs));
    ++out.omegas_tested;
  };

  const std::size_t kk = std::min(k, topology.size());
  if (count_supports(topology, kk) <= omega_budget) {
    for (const TreeSupport &omega : enumerate_supports(topology, kk))
      test(omega.indices());
    out.exhaustive = true;
  } else {
    SupportSampler sampler(topology, kk);
    CounterRng rng(seed, 0x5eed);
    for (std::uint64_t s = 0; s < omega_budget; ++s)
      test(sampler.sample(rng).indices());

    // Single-leaf swaps: drop a leaf of Γ, add a node on the boundary of
    // what remains.
    const std::set<NodeIndex> in(gi.begin(), gi.end());
    for (NodeIndex leaf : gi) {
      if (leaf == topology.root())
        continue;
      const auto kids = topology.children(leaf);
      if (std::any_of(kids.begin(), kids.end(), [&](NodeIndex c) { return in.count(c); }))
        continue;
      std::vector<NodeIndex> base;
      std::copy_if(gi.begin(), gi.end(), std::back_inserter(base),
                   [&](NodeIndex v) { return v != leaf; });
      for (NodeIndex v : base)
        for (NodeIndex c : topology.children(v)) {
          if (in.count(c))
            continue;
          std::vector<NodeIndex> omega = base;
          omega.insert(std::upper_bound(omega.begin(), omega.end(), c), c);
          test(omega);
        }
    }
  }
  for (const TreeSupport &omega : extra_omegas)
    test(omega.indices());
  return out;
}

StablePointCheck verify_stable_point(const ProblemInstance &instance,
                                     const Eigen::VectorXd &x_bar, double alpha_lower,
                                     std::uint64_t omega_budget, std::uint64_t seed) {
  std::vector<NodeIndex> nz;
  for (Eigen::Index i = 0; i < x_bar.size(); ++i)
    if (x_bar[i] != 0.0)
      nz.push_back(static_cast<NodeIndex>(i));
  const TreeSupport gamma = validate_support(instance.topology, nz);
  return verify_stable_point(instance.matrix_a, instance.b, instance.topology, gamma, x_bar,
                             alpha_lower, instance.k, omega_budget, seed, {instance.support});
}

} // namespace treecs
