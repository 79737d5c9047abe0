#include "treecs/measurement_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "treecs/errors.hpp"
#include "treecs/parallel.hpp"

namespace treecs {

namespace {

// Sub-streams of an instance seed.
constexpr std::uint64_t kMatrixStream = 1;
constexpr std::uint64_t kSignalStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

// Fixed number of sampling chunks, so estimates do not depend on the
// machine's thread count.
constexpr std::size_t kRipChunks = 16;

double draw(CoeffLaw law, CounterRng &rng) {
  switch (law) {
  case CoeffLaw::unit_gaussian:
    return rng.gaussian();
  case CoeffLaw::rademacher:
    return rng.rademacher();
  case CoeffLaw::flat_ones:
    return 1.0;
  }
  return 0.0;
}

struct Extremes {
  double lower = 0.0;
  double upper = 0.0;
  void merge(const Extremes &o) {
    lower = std::max(lower, o.lower);
    upper = std::max(upper, o.upper);
  }
};

Extremes gram_extremes(const Eigen::MatrixXd &a, const std::vector<NodeIndex> &cols) {
  const Eigen::MatrixXd sub = gather_columns(a, cols);
  const Eigen::MatrixXd gram = sub.transpose() * sub;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw NumericalError("estimate_tree_rip: eigenvalue solver failed");
  const auto &ev = eig.eigenvalues();
  return {std::max(0.0, 1.0 - ev.minCoeff()), std::max(0.0, ev.maxCoeff() - 1.0)};
}

} // namespace

std::string to_string(CoeffLaw law) {
  switch (law) {
  case CoeffLaw::unit_gaussian:
    return "unit_gaussian";
  case CoeffLaw::rademacher:
    return "rademacher";
  case CoeffLaw::flat_ones:
    return "flat_ones";
  }
  return "?";
}

CoeffLaw coeff_law_from_string(const std::string &name) {
  if (name == "unit_gaussian" || name == "gaussian")
    return CoeffLaw::unit_gaussian;
  if (name == "rademacher")
    return CoeffLaw::rademacher;
  if (name == "flat_ones" || name == "ones")
    return CoeffLaw::flat_ones;
  throw InvalidArgument("unknown coefficient law '" + name + "'");
}

Eigen::MatrixXd sample_gaussian_matrix(std::size_t n, std::size_t N, std::uint64_t seed) {
  if (n == 0)
    throw InvalidArgument("sample_gaussian_matrix: n must be at least 1");
  if (n > N)
    throw InvalidArgument("sample_gaussian_matrix: need n <= N, got n=" + std::to_string(n) +
                          " N=" + std::to_string(N));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd a(n, N);
  CounterRng rng(seed);
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      a(i, j) = scale * rng.gaussian();
  return a;
}

SupportSampler::SupportSampler(const TreeTopology &topology, std::size_t k,
                               std::uint64_t uniform_budget)
    : topology_(topology), k_(k) {
  if (k == 0 || k > topology.size())
    throw InvalidArgument("support sampler: k=" + std::to_string(k) +
                          " infeasible for a tree with " + std::to_string(topology.size()) +
                          " nodes");
  family_size_ = count_supports(topology, k);
  if (family_size_ <= uniform_budget)
    enumerated_ = enumerate_supports(topology, k);
}

TreeSupport SupportSampler::sample(CounterRng &rng) const {
  if (!enumerated_.empty())
    return enumerated_[rng.uniform_index(enumerated_.size())];

  std::vector<NodeIndex> chosen{topology_.root()};
  chosen.reserve(k_);
  std::vector<NodeIndex> boundary(topology_.children(topology_.root()).begin(),
                                  topology_.children(topology_.root()).end());
  while (chosen.size() < k_) {
    const std::size_t pick = rng.uniform_index(boundary.size());
    const NodeIndex v = boundary[pick];
    boundary[pick] = boundary.back();
    boundary.pop_back();
    chosen.push_back(v);
    for (NodeIndex c : topology_.children(v))
      boundary.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end());
  return SupportBuilder::from_sorted(std::move(chosen));
}

TreeSparseSignal sample_tree_sparse_signal(const TreeTopology &topology, std::size_t k,
                                           CoeffLaw law, std::uint64_t seed) {
  SupportSampler sampler(topology, k);
  CounterRng rng(seed);
  TreeSupport support = sampler.sample(rng);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(topology.size()));
  for (NodeIndex i : support.indices()) {
    double v = draw(law, rng);
    // A zero Gaussian draw would shrink the support; redraw (probability ~0).
    while (v == 0.0)
      v = draw(law, rng);
    x[static_cast<Eigen::Index>(i)] = v;
  }
  return {std::move(x), std::move(support)};
}

Eigen::VectorXd sample_noise(std::size_t n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("sample_noise: sigma must be a finite nonnegative number");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (sigma == 0.0)
    return e;
  const double scale = sigma / std::sqrt(static_cast<double>(n));
  CounterRng rng(seed);
  for (Eigen::Index i = 0; i < e.size(); ++i)
    e[i] = scale * rng.gaussian();
  return e;
}

ProblemInstance make_instance(const TreeTopology &topology, const InstanceSpec &spec) {
  Eigen::MatrixXd a =
      sample_gaussian_matrix(spec.n, topology.size(), derive_seed(spec.seed, kMatrixStream));
  TreeSparseSignal signal =
      sample_tree_sparse_signal(topology, spec.k, spec.law, derive_seed(spec.seed, kSignalStream));
  Eigen::VectorXd e = sample_noise(spec.n, spec.sigma, derive_seed(spec.seed, kNoiseStream));
  ProblemInstance inst = assemble_instance(std::move(a), std::move(signal.x), std::move(e),
                                           spec.sigma, topology, std::move(signal.support),
                                           spec.seed);
  inst.law = spec.law;
  return inst;
}

ProblemInstance assemble_instance(Eigen::MatrixXd a, Eigen::VectorXd x_star, Eigen::VectorXd e,
                                  double sigma, TreeTopology topology, TreeSupport support,
                                  std::uint64_t seed) {
  if (static_cast<std::size_t>(a.cols()) != topology.size() ||
      static_cast<std::size_t>(x_star.size()) != topology.size())
    throw InvalidArgument("instance: matrix columns and signal length must equal tree size");
  if (e.size() != a.rows())
    throw InvalidArgument("instance: noise length must equal the number of rows");
  if (support.indices().empty() || support.indices().back() >= topology.size())
    throw InvalidArgument("instance: support outside the tree");
  for (Eigen::Index i = 0; i < x_star.size(); ++i)
    if (x_star[i] != 0.0 && !support.contains(static_cast<NodeIndex>(i)))
      throw InvalidArgument("instance: x* has a nonzero at " + std::to_string(i) +
                            " outside its support");
  validate_support(topology, support.indices());

  Eigen::VectorXd b = a * x_star + e;
  const std::size_t k = support.cardinality();
  return ProblemInstance{std::move(a), std::move(x_star), std::move(e), std::move(b), sigma,
                         std::move(topology), std::move(support), k, seed,
                         CoeffLaw::unit_gaussian};
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd &a, const std::vector<NodeIndex> &indices) {
  Eigen::MatrixXd out(a.rows(), static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    out.col(static_cast<Eigen::Index>(j)) = a.col(static_cast<Eigen::Index>(indices[j]));
  return out;
}

RipEstimate estimate_tree_rip(const Eigen::MatrixXd &a, const TreeTopology &topology,
                              std::size_t s, std::size_t n_samples, std::uint64_t seed) {
  if (static_cast<std::size_t>(a.cols()) != topology.size())
    throw InvalidArgument("estimate_tree_rip: matrix columns must equal tree size");
  if (s == 0 || s > topology.size())
    throw InvalidArgument("estimate_tree_rip: order s infeasible for this tree");
  if (n_samples == 0)
    throw InvalidArgument("estimate_tree_rip: n_samples must be at least 1");

  RipEstimate out;
  out.order_s = s;
  out.order_exceeds_rows = s > static_cast<std::size_t>(a.rows());

  const std::uint64_t family = count_supports(topology, s);
  std::vector<Extremes> partial(kRipChunks);
  if (family <= n_samples) {
    const std::vector<TreeSupport> all = enumerate_supports(topology, s);
    parallel_for(kRipChunks, [&](std::size_t c) {
      for (std::size_t i = c; i < all.size(); i += kRipChunks)
        partial[c].merge(gram_extremes(a, all[i].indices()));
    });
    out.n_supports_sampled = all.size();
    out.exhaustive = true;
  } else {
    SupportSampler sampler(topology, s);
    parallel_for(kRipChunks, [&](std::size_t c) {
      CounterRng rng(seed, c);
      const std::size_t share = n_samples / kRipChunks + (c < n_samples % kRipChunks ? 1 : 0);
      for (std::size_t i = 0; i < share; ++i)
        partial[c].merge(gram_extremes(a, sampler.sample(rng).indices()));
    });
    out.n_supports_sampled = n_samples;
  }
  Extremes total;
  for (const Extremes &p : partial)
    total.merge(p);
  out.lower_hat = total.lower;
  out.upper_hat = total.upper;
  return out;
}

ColumnLeastSquares::ColumnLeastSquares(Eigen::MatrixXd columns) : columns_(std::move(columns)) {
  qr_.setThreshold(1e-12);
  qr_.compute(columns_);
  if (qr_.rank() < columns_.cols())
    throw NumericalError("least squares: selected columns are rank deficient (rank " +
                         std::to_string(qr_.rank()) + " of " +
                         std::to_string(columns_.cols()) + ")");
}

Eigen::VectorXd ColumnLeastSquares::solve(const Eigen::VectorXd &v) const {
  if (columns_.cols() == 0)
    return Eigen::VectorXd();
  return qr_.solve(v);
}

Eigen::VectorXd ColumnLeastSquares::residual(const Eigen::VectorXd &v) const {
  if (columns_.cols() == 0)
    return v;
  return v - columns_ * qr_.solve(v);
}

StablePointTerms stable_point_terms(const Eigen::MatrixXd &a_gamma, const Eigen::MatrixXd &a_diff,
                                    const Eigen::VectorXd &x_diff, const Eigen::VectorXd &e) {
  if (a_diff.cols() != x_diff.size() || a_gamma.rows() != a_diff.rows() ||
      a_gamma.rows() != e.size())
    throw InvalidArgument("stable_point_terms: dimension mismatch");
  const ColumnLeastSquares ls(a_gamma);
  const Eigen::VectorXd v = a_diff * x_diff;
  StablePointTerms t;
  t.signal_pinv = ls.solve(v).norm();
  t.noise_pinv = ls.solve(e).norm();
  t.signal_residual = (a_diff.transpose() * ls.residual(v)).norm();
  t.noise_residual = (a_diff.transpose() * ls.residual(e)).norm();
  return t;
}

StablePointTerms stable_point_condition_terms(const ProblemInstance &instance,
                                              const TreeSupport &gamma) {
  if (gamma == instance.support)
    throw InvalidArgument("stable_point_condition_terms: Gamma equals the true support");
  validate_support(instance.topology, gamma.indices());
  std::vector<NodeIndex> diff;
  std::set_difference(instance.support.indices().begin(), instance.support.indices().end(),
                      gamma.indices().begin(), gamma.indices().end(), std::back_inserter(diff));
  Eigen::VectorXd x_diff(static_cast<Eigen::Index>(diff.size()));
  for (std::size_t j = 0; j < diff.size(); ++j)
    x_diff[static_cast<Eigen::Index>(j)] = instance.x_star[static_cast<Eigen::Index>(diff[j])];
  return stable_point_terms(gather_columns(instance.matrix_a, gamma.indices()),
                            gather_columns(instance.matrix_a, diff), x_diff, instance.noise_e);
}

} // namespace treecs
