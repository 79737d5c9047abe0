#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "treecs/random.hpp"
#include "treecs/tree_model.hpp"

namespace treecs {

enum class CoeffLaw { unit_gaussian, rademacher, flat_ones };

std::string to_string(CoeffLaw law);
CoeffLaw coeff_law_from_string(const std::string &name);

/// n x N matrix with i.i.d. N(0, 1/n) entries. Requires 1 <= n <= N.
Eigen::MatrixXd sample_gaussian_matrix(std::size_t n, std::size_t N, std::uint64_t seed);

/// Supports at or below this count are sampled uniformly from an explicit
/// enumeration; larger families fall back to random tree growth.
inline constexpr std::uint64_t kUniformSamplingBudget = 100'000;

/**
 * Draws rooted k-subtrees of a topology.
 *
 * Small families are enumerated once and sampled uniformly. Otherwise the
 * tree is grown from the root by repeatedly adding a uniformly chosen
 * boundary node; that law is not uniform over supports.
 */
class SupportSampler {
public:
  SupportSampler(const TreeTopology &topology, std::size_t k,
                 std::uint64_t uniform_budget = kUniformSamplingBudget);
  /// The sampler keeps a reference to the topology.
  SupportSampler(TreeTopology &&, std::size_t, std::uint64_t = kUniformSamplingBudget) = delete;

  TreeSupport sample(CounterRng &rng) const;
  bool is_uniform() const noexcept { return !enumerated_.empty(); }
  /// Exact family size (saturating).
  std::uint64_t family_size() const noexcept { return family_size_; }

private:
  const TreeTopology &topology_;
  std::size_t k_;
  std::uint64_t family_size_;
  std::vector<TreeSupport> enumerated_;
};

struct TreeSparseSignal {
  Eigen::VectorXd x;
  TreeSupport support;
};

/// k-tree-sparse vector; coefficients on the support follow `law`.
/// InvalidArgument when the topology has fewer than k nodes.
TreeSparseSignal sample_tree_sparse_signal(const TreeTopology &topology, std::size_t k,
                                           CoeffLaw law, std::uint64_t seed);

/// e_i ~ N(0, sigma^2/n), so E||e||^2 = sigma^2. sigma = 0 gives zeros.
Eigen::VectorXd sample_noise(std::size_t n, double sigma, std::uint64_t seed);

/// b = A x* + e together with everything that produced it.
struct ProblemInstance {
  Eigen::MatrixXd matrix_a;
  Eigen::VectorXd x_star;
  Eigen::VectorXd noise_e;
  Eigen::VectorXd b;
  double sigma;
  TreeTopology topology;
  TreeSupport support; ///< Lambda, the support x* was drawn on
  std::size_t k;
  std::uint64_t seed;
  CoeffLaw law;

  std::size_t rows() const { return static_cast<std::size_t>(matrix_a.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix_a.cols()); }
};

struct InstanceSpec {
  std::size_t n = 0;
  std::size_t k = 0;
  double sigma = 0.0;
  CoeffLaw law = CoeffLaw::unit_gaussian;
  std::uint64_t seed = 0;
};

/// Draws A, x* and e from independent sub-streams of spec.seed.
ProblemInstance make_instance(const TreeTopology &topology, const InstanceSpec &spec);

/// Bundles caller-provided data; checks shapes and that `support` is a
/// rooted tree covering the nonzeros of x*.
ProblemInstance assemble_instance(Eigen::MatrixXd a, Eigen::VectorXd x_star,
                                  Eigen::VectorXd e, double sigma, TreeTopology topology,
                                  TreeSupport support, std::uint64_t seed = 0);

/// Monte Carlo lower estimates of the tree-RIP constants of order s.
struct RipEstimate {
  std::size_t order_s = 0;
  double lower_hat = 0.0; ///< max over sampled supports of 1 - lambda_min
  double upper_hat = 0.0; ///< max over sampled supports of lambda_max - 1
  std::size_t n_supports_sampled = 0;
  bool exhaustive = false;       ///< every support of order s was visited
  bool order_exceeds_rows = false; ///< s > n, Gram matrices are singular
};

/// Extreme Gram eigenvalues over supports of order s. When the family has
/// at most n_samples members it is scanned exhaustively instead of sampled.
RipEstimate estimate_tree_rip(const Eigen::MatrixXd &a, const TreeTopology &topology,
                              std::size_t s, std::size_t n_samples, std::uint64_t seed);

/// Columns of `a` listed in `indices`, in that order.
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd &a, const std::vector<NodeIndex> &indices);

/// Least squares on a fixed set of columns through column-pivoted QR. Throws
/// NumericalError when the columns are numerically rank deficient (pivot
/// below 1e-12 of the largest).
class ColumnLeastSquares {
public:
  explicit ColumnLeastSquares(Eigen::MatrixXd columns);

  /// A^+ v
  Eigen::VectorXd solve(const Eigen::VectorXd &v) const;
  /// (I - A A^+) v
  Eigen::VectorXd residual(const Eigen::VectorXd &v) const;
  const Eigen::MatrixXd &columns() const { return columns_; }

private:
  Eigen::MatrixXd columns_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

/// The four norms in the necessary condition for a stable point on Gamma:
///   ||A_G^+ A_D x_D||, ||A_G^+ e||, ||A_D^T (I - A_G A_G^+) A_D x_D||,
///   ||A_D^T (I - A_G A_G^+) e||   with D = Lambda \ Gamma.
struct StablePointTerms {
  double signal_pinv = 0.0;
  double noise_pinv = 0.0;
  double signal_residual = 0.0;
  double noise_residual = 0.0;

  /// Whether a stable point with step lower bound alpha can exist on Gamma.
  bool admits_stable_point(double alpha) const {
    return signal_pinv + noise_pinv >= alpha * (signal_residual - noise_residual);
  }
};

StablePointTerms stable_point_terms(const Eigen::MatrixXd &a_gamma, const Eigen::MatrixXd &a_diff,
                                    const Eigen::VectorXd &x_diff, const Eigen::VectorXd &e);

/// Evaluates the terms for Gamma against the instance's own support.
/// InvalidArgument when Gamma equals Lambda.
StablePointTerms stable_point_condition_terms(const ProblemInstance &instance,
                                              const TreeSupport &gamma);

} // namespace treecs
