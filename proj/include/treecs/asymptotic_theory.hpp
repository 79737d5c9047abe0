#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "treecs/entropy.hpp"

/// Large-deviation bounds, convergence/stability factors and oversampling
/// thresholds for tree-sparse recovery with Gaussian matrices, in the limit
/// k/n -> rho with the signal length unrestricted.
///
/// Every implicitly defined quantity is located by bisection on an interval
/// where its defining function is monotone; the matching *_residual function
/// evaluates that defining equation so callers can audit a returned value.
namespace treecs::theory {

enum class Variant { itp, nitp };
enum class Analysis { rip, stable_point, prior };

std::string to_string(Variant v);
std::string to_string(Analysis a);

/// Step-size description shared by the factor and threshold routines. For
/// ITP an empty alpha means "use the optimal step at each rho".
struct AlgorithmParams {
  Variant variant = Variant::itp;
  std::optional<double> alpha;
  double kappa = 1.1;

  static AlgorithmParams itp_optimal() { return {Variant::itp, std::nullopt, 1.1}; }
  static AlgorithmParams itp(double alpha) { return {Variant::itp, alpha, 1.1}; }
  static AlgorithmParams nitp(double kappa = 1.1) { return {Variant::nitp, std::nullopt, kappa}; }
};

inline constexpr double kDefaultKappa = 1.1;

/// Exponent of the union bound over rooted d-ary trees: d*rho*H(1/d).
double union_exponent(int d, double rho);

double psi_max(double lambda, double rho);
double psi_min(double lambda, double rho);

// --- tree-RIP bounds -------------------------------------------------------

/// TU(rho) = lambda_max(rho) - 1, lambda_max > 1 + rho solving
/// psi_max(lambda, rho) + d*rho*H(1/d) = 0.
double rip_bound_upper(int d, double rho);
/// TL(rho) = 1 - lambda_min(rho), lambda_min < 1 - rho solving
/// psi_min(lambda, rho) + d*rho*H(1/d) = 0.
double rip_bound_lower(int d, double rho);

double rip_bound_upper_residual(int d, double rho, double tu);
double rip_bound_lower_residual(int d, double rho, double tl);

/// Symmetric tree-RIP bound from the earlier subspace-union analysis (binary
/// trees only): smallest r > 0 with r^2 (9 - r) = 1296 rho [1 + ln(72/r)].
/// DomainError when no root exists (rho above roughly 0.02407).
double prior_bound_tr(double rho);
double prior_bound_tr_residual(double rho, double r);

// --- chi-squared and F tail bounds ------------------------------------------

/// nu > 0 with nu - ln(1 + nu) = 2 d rho H(1/d) / lambda.
double tail_bound_tiu(int d, double rho, double lambda);
/// nu in (0,1) with -nu - ln(1 - nu) = 2 d rho H(1/d) / lambda.
double tail_bound_til(int d, double rho, double lambda);
/// f > rho/(1-rho) with ln(1 + f) - rho ln f = 2 d rho H(1/d) + H(rho).
/// Requires rho in (0, 1/2].
double tail_bound_tif(int d, double rho);

double tail_bound_tiu_residual(int d, double rho, double lambda, double nu);
double tail_bound_til_residual(int d, double rho, double lambda, double nu);
double tail_bound_tif_residual(int d, double rho, double f);

// --- tree-RIP analysis ------------------------------------------------------

struct Factors {
  double mu; ///< convergence factor
  double xi; ///< stability factor
};

/// Optimal constant step 2 / [2 + TU(3 rho) - TL(3 rho)].
double optimal_alpha(int d, double rho);

/// The two arguments of the max in the ITP convergence factor (before the
/// sqrt(3) scaling): alpha[1 + TU(3 rho)] - 1 and 1 - alpha[1 - TL(3 rho)].
std::pair<double, double> itp_mu_branches(int d, double rho, double alpha);

/// Asymptotic convergence and stability factors; rho in (0, 1/3).
Factors rip_factors(int d, double rho, const AlgorithmParams &params);

/// xi / (1 - mu); DomainError when mu >= 1.
double rip_noise_amplification(int d, double rho, const AlgorithmParams &params);

/// rho at which the asymptotic convergence factor reaches 1. For ITP without
/// a fixed alpha the optimal step is recomputed at every trial rho.
double threshold_rip(int d, const AlgorithmParams &params);

// --- stable-point analysis ---------------------------------------------------

/// sqrt(TIF(rho)) / ((1 - rho)[1 - TIL(rho, 1 - rho)]); also the lower end
/// of the admissible ITP step window.
double stable_point_lhs(int d, double rho);
/// 1/(1 + TU(2 rho)) for ITP, 1/(kappa [1 + TU(2 rho)]) for NITP.
double stable_point_rhs(int d, double rho, Variant variant, double kappa = kDefaultKappa);

/// Open interval of constant steps for which stable-point recovery holds.
struct AlphaWindow {
  double lower;
  double upper;
  bool empty() const { return !(lower < upper); }
};
AlphaWindow sp_alpha_window(int d, double rho);

/// Threshold where stable_point_lhs meets stable_point_rhs, rho in (0, 1/2).
double threshold_stable_point(int d, Variant variant, double kappa = kDefaultKappa);

struct SpStability {
  double a;
  double xi;
};

/// Stability factor from the stable-point analysis. For ITP the step is
/// params.alpha, or the upper end of sp_alpha_window when absent. Throws
/// DomainError (denominator nonpositive) at or beyond the threshold.
SpStability stability_factor_sp(int d, double rho, const AlgorithmParams &params);

// --- prior analysis (binary trees) -------------------------------------------

/// Symmetric RIP level under which the earlier analysis guarantees recovery:
/// 1/sqrt(3) for ITP, (11 - sqrt 3)/(11 + 21 sqrt 3) for NITP with kappa 1.1.
double prior_rip_condition(Variant variant, double kappa = kDefaultKappa);

/// rho with TR(3 rho) equal to prior_rip_condition.
double threshold_prior(Variant variant, double kappa = kDefaultKappa);

// --- tables -----------------------------------------------------------------

/// A value together with the oversampling argument it was evaluated at.
struct Evaluated {
  double value;
  double at_rho;
  std::optional<double> at_lambda;
};

struct TheoryQuery {
  int d = 2;
  Variant variant = Variant::itp;
  Analysis analysis = Analysis::rip;
  std::optional<double> alpha; ///< ITP only; empty means optimal
  double kappa = kDefaultKappa;
};

/// One row of theory_table. Cells outside their domain are empty.
struct TheoryResult {
  double rho;
  std::optional<Evaluated> tu, tl, tr, tiu, til, tif;
  std::optional<double> mu, xi, alpha_hat, rho_hat;
};

std::vector<TheoryResult> theory_table(const TheoryQuery &query,
                                       const std::vector<double> &rho_grid);

/// Row of the `bounds` CSV: every quantity at the same rho (the factors
/// internally use 2 rho and 3 rho as their definitions require).
struct BoundsRow {
  double rho;
  std::optional<double> tu, tl, tr, tiu, til, tif, mu_itp, xi_itp, mu_nitp, xi_nitp,
      alpha_hat;
};

BoundsRow bounds_row(int d, double rho, double kappa = kDefaultKappa);

} // namespace treecs::theory
