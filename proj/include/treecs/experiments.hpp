#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treecs/asymptotic_theory.hpp"
#include "treecs/itp_solvers.hpp"
#include "treecs/measurement_sim.hpp"

namespace treecs {

inline constexpr const char *kVersion = "0.1.0";

struct ExperimentSpec {
  int d = 2;
  std::size_t n = 0;
  /// Exactly one of rho_grid and k_grid is non-empty; k = round(rho n).
  std::vector<double> rho_grid;
  std::vector<std::size_t> k_grid;
  std::size_t trials = 1;
  double sigma = 0.0;
  SolverVariant variant = SolverVariant::itp_constant;
  std::optional<double> alpha;
  double kappa = 1.1;
  double c = 0.05;
  std::size_t max_iters = 2000;
  std::uint64_t seed = 0;
  /// ||x̂ - x*|| / ||x*|| at or below this counts as recovered.
  double success_tol = 1e-6;
  /// Signal length override; default from default_signal_length.
  std::optional<std::size_t> n_signal;
  CoeffLaw law = CoeffLaw::unit_gaussian;

  void validate() const;
};

struct PhaseMapRow {
  double rho = 0.0; ///< requested grid value; k = round(rho n)
  std::size_t k = 0;
  std::size_t n_signal = 0;
  double success_rate = 0.0;
  double mean_rel_error = 0.0;
  double mean_iters = 0.0;
  std::size_t trials = 0;
};

/// Node count of the smallest complete d-ary tree (all levels full) with at
/// least max(20 k, 2 n) nodes.
std::size_t default_signal_length(int d, std::size_t n, std::size_t k);

/// Runs every grid point; trials run in parallel with per-trial seeds and
/// are reduced in trial order, so the rows depend only on the spec.
std::vector<PhaseMapRow> run_phase_experiment(const ExperimentSpec &spec);

/// Relative error; for x* = 0 it is ||x̂|| and success means ||x̂|| <= 1e-12.
double relative_error(const Eigen::VectorXd &x_hat, const Eigen::VectorXd &x_star);
bool recovered(const Eigen::VectorXd &x_hat, const Eigen::VectorXd &x_star, double tol);

struct ThresholdRow {
  int d;
  theory::Variant variant;
  theory::Analysis analysis;
  double rho_hat;
  long long reciprocal; ///< ceil(1 / rho_hat), the measurements-per-sparsity ratio
};

/// Thresholds for every admissible (d, variant, analysis); the prior
/// analysis exists for binary trees only and is skipped for other d.
std::vector<ThresholdRow> threshold_table(const std::vector<int> &d_list,
                                          const std::vector<theory::Variant> &variants,
                                          const std::vector<theory::Analysis> &analyses,
                                          double kappa = theory::kDefaultKappa);

/// Binary-tree comparison of the present and prior RIP analyses.
struct ComparisonRow {
  theory::Variant variant;
  double rho_rip;
  long long recip_rip;
  double rho_prior;
  long long recip_prior;
  long long factor; ///< floor(recip_prior / recip_rip)
};

std::vector<ComparisonRow> comparison_table(double kappa = theory::kDefaultKappa);

std::string phase_csv(const ExperimentSpec &spec, const std::vector<PhaseMapRow> &rows);
std::string threshold_csv(const std::vector<ThresholdRow> &rows, const std::string &params);
std::string comparison_csv(const std::vector<ComparisonRow> &rows, const std::string &params);
std::string bounds_csv(const std::vector<theory::BoundsRow> &rows, const std::string &params);

/// "# treecs <version> <params>" followed by a newline.
std::string header_comment(const std::string &params);

/// Shortest round-trip formatting, used for every number in CSV output.
std::string csv_number(double v);

} // namespace treecs
