#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "treecs/measurement_sim.hpp"
#include "treecs/tree_model.hpp"

namespace treecs {

enum class SolverVariant { itp_constant, nitp };

std::string to_string(SolverVariant v);
SolverVariant solver_variant_from_string(const std::string &name);

struct SolverConfig {
  SolverVariant variant = SolverVariant::itp_constant;
  /// Constant ITP step. Empty: the asymptotically optimal step at rho = k/n.
  std::optional<double> alpha;
  /// NITP backtracking parameter in (0,1). With kappa = 1.1 it must stay
  /// below 1/11 for the shrink step to reduce alpha.
  double c = 0.05;
  double kappa = 1.1; ///< NITP shrink parameter, kappa (1 - c) > 1
  std::size_t max_iters = 2000;
  /// Stop once ||r^{m+1} - r^m|| <= tol_residual_change ||b|| on a settled support.
  double tol_residual_change = 1e-12;
  /// Stop once ||A_G^T r|| <= tol_gradient ||b|| on a settled support.
  double tol_gradient = 1e-10;
  /// Sparsity; 0 takes the instance's k.
  std::size_t k = 0;
  double stable_slack = 1e-8;
  /// Supports examined by the stable-point check when 𝒯_k is too large to scan.
  std::uint64_t omega_budget = 20'000;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on an inadmissible combination.
  void validate() const;
};

enum class Termination { gradient_stationary, support_stable, max_iters };
std::string to_string(Termination t);

/// Evidence that x̄ is an ᾱ-stable point on Γ.
struct StablePointCheck {
  double gradient_on_support_norm = 0.0; ///< ||{A^T (b - A x̄)}_Γ||
  double alpha_lower = 0.0;
  /// min over tested Ω of ||x̄_{Γ\Ω}|| - ᾱ ||{A^T (b - A x̄)}_{Ω\Γ}||
  double swap_margin = std::numeric_limits<double>::infinity();
  std::uint64_t omegas_tested = 0;
  bool exhaustive = false;
  /// ||x̄_Γ - A_Γ^+ b||; infinite when A_Γ is rank deficient.
  double pinv_gap = 0.0;

  bool passes(double gradient_tol, double margin_tol) const {
    return gradient_on_support_norm <= gradient_tol && swap_margin >= -margin_tol;
  }
};

/// One NITP iteration's stepsize bookkeeping.
struct NitpStepRecord {
  double linesearch_alpha = 0.0;
  double accepted_alpha = 0.0;
  std::size_t shrinks = 0;
  /// The first trial kept the previous support, so no backtracking ran.
  bool support_kept = false;
  /// (1 - c) ||Δx||^2 / ||A Δx||^2 for the accepted trial point (infinite
  /// when Δx = 0 or A Δx = 0).
  double exit_bound = 0.0;
};

struct SolverReport {
  Eigen::VectorXd x_hat;
  TreeSupport support; ///< support of the final projection
  std::size_t iterations = 0;
  /// Ψ(x^m) = ||b - A x^m||^2 / 2 for m = 0..iterations.
  std::vector<double> objective_trace;
  /// Accepted step of every iteration.
  std::vector<double> stepsize_trace;
  std::size_t support_changes = 0;
  Termination termination = Termination::max_iters;
  StablePointCheck stable_point_check;
  std::vector<NitpStepRecord> nitp_steps; ///< empty for ITP
};

/// x^{m+1} = P_k(x^m + alpha A^T (b - A x^m)).
Eigen::VectorXd itp_step(const TreeTopology &topology, const Eigen::MatrixXd &a,
                         const Eigen::VectorXd &b, const Eigen::VectorXd &x_m, double alpha,
                         std::size_t k);

/// Constant-step iterative tree projection from x^0 = 0.
SolverReport solve_itp(const ProblemInstance &instance, const SolverConfig &config);

/// Normalised variant: exact linesearch on the current support, with
/// shrinking backtracking whenever the trial point changes support.
SolverReport solve_nitp(const ProblemInstance &instance, const SolverConfig &config);

/// Dispatches on config.variant.
SolverReport solve(const ProblemInstance &instance, const SolverConfig &config);

/// Step used by solve_itp for this instance and config.
double resolve_itp_alpha(const ProblemInstance &instance, const SolverConfig &config);

/**
 * Checks the two stable-point conditions for x̄ on Γ.
 *
 * The swap condition ranges over all rooted k-subtrees Ω; when their number
 * exceeds omega_budget, omega_budget of them are sampled and every
 * single-leaf swap of Γ is added, and `exhaustive` is false. Supports in
 * `extra_omegas` are always tested.
 */
StablePointCheck verify_stable_point(const Eigen::MatrixXd &a, const Eigen::VectorXd &b,
                                     const TreeTopology &topology, const TreeSupport &gamma,
                                     const Eigen::VectorXd &x_bar, double alpha_lower,
                                     std::size_t k, std::uint64_t omega_budget,
                                     std::uint64_t seed,
                                     const std::vector<TreeSupport> &extra_omegas = {});

/// Instance overload; Γ is the support of x̄ and the true support is tested
/// as an extra Ω. Throws SupportError when supp(x̄) is not a rooted tree.
StablePointCheck verify_stable_point(const ProblemInstance &instance,
                                     const Eigen::VectorXd &x_bar, double alpha_lower,
                                     std::uint64_t omega_budget, std::uint64_t seed);

} // namespace treecs
