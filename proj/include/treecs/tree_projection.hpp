#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "treecs/tree_model.hpp"

namespace treecs {

/// Output of a projection onto vectors supported on a rooted k-subtree.
struct ProjectionResult {
  TreeSupport support;
  /// x on the support, zero elsewhere.
  Eigen::VectorXd projected;
  /// Sum of x_i^2 over the support, accumulated in increasing index order.
  double captured_energy;
  /// True when the tree has fewer than k nodes; the whole tree is returned.
  bool clipped;
};

/// Exact Euclidean projection by tree dynamic programming.
///
/// The support maximises the captured energy over all rooted subtrees with
/// exactly min(k, N) nodes. Exact ties go to the support whose sorted index
/// tuple is lexicographically smallest.
ProjectionResult project(const TreeTopology &topology, const Eigen::VectorXd &x,
                         std::size_t k);

/// Largest number of supports project_bruteforce will enumerate.
inline constexpr std::uint64_t kEnumerationBudget = 2'000'000;

/// Same contract as project, by scanning every support. Throws
/// InvalidArgument when the support count exceeds kEnumerationBudget.
ProjectionResult project_bruteforce(const TreeTopology &topology, const Eigen::VectorXd &x,
                                    std::size_t k);

/// Energy of x on a support, summed in increasing index order.
double support_energy(const Eigen::VectorXd &x, const TreeSupport &support);

} // namespace treecs
