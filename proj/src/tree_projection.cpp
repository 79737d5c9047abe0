#include "treecs/tree_projection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "treecs/errors.hpp"

namespace treecs {

namespace {

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

enum class Force : std::uint8_t { free, in, out };

/// Bottom-up tree knapsack. best[v][j] is the largest energy of a subtree
/// rooted at v with j nodes (index 0 unused); split[v][c][j] records how
/// many of those j nodes came from the c-th child after merging it.
class KnapsackDp {
public:
  KnapsackDp(const TreeTopology &t, const std::vector<double> &weight, std::size_t k)
      : topology_(t), weight_(weight), k_(k) {}

  /// Returns best root value for exactly k nodes under the given forcing.
  double solve(const std::vector<Force> *force, bool record_splits) {
    const std::size_t n = topology_.size();
    best_.assign(n, {});
    must_take_.assign(n, 0);
    if (record_splits)
      split_.assign(n, {});
    tie_seen_ = false;

    const auto &order = topology_.bfs_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeIndex v = *it;
      const Force fv = force ? (*force)[v] : Force::free;
      std::vector<double> acc(2, kInfeasible);
      if (fv != Force::out)
        acc[1] = weight_[v];
      bool must = fv == Force::in;

      const auto kids = topology_.children(v);
      if (record_splits)
        split_[v].resize(kids.size());
      for (std::size_t ci = 0; ci < kids.size(); ++ci) {
        const NodeIndex c = kids[ci];
        const std::vector<double> &child = best_[c];
        const bool may_skip = !must_take_[c];
        must = must || must_take_[c];
        const std::size_t a = acc.size() - 1;
        const std::size_t b = child.size() - 1;
        const std::size_t size = std::min(k_, a + b);

        std::vector<double> next(size + 1, kInfeasible);
        std::vector<std::uint32_t> choice(size + 1, 0);
        if (may_skip)
          std::copy(acc.begin(), acc.end(), next.begin());
        for (std::size_t ja = 1; ja <= a; ++ja) {
          if (acc[ja] == kInfeasible)
            continue;
          for (std::size_t t = 1; t <= b && ja + t <= size; ++t) {
            if (child[t] == kInfeasible)
              continue;
            const double cand = acc[ja] + child[t];
            double &slot = next[ja + t];
            if (cand > slot) {
              slot = cand;
              choice[ja + t] = static_cast<std::uint32_t>(t);
            } else if (cand == slot) {
              tie_seen_ = true;
            }
          }
        }
        acc = std::move(next);
        if (record_splits)
          split_[v][ci] = std::move(choice);
        std::vector<double>().swap(best_[c]);
      }
      best_[v] = std::move(acc);
      must_take_[v] = must;
    }
    const auto &root = best_[topology_.root()];
    return k_ < root.size() ? root[k_] : kInfeasible;
  }

  bool tie_seen() const { return tie_seen_; }

  std::vector<NodeIndex> reconstruct() const {
    std::vector<NodeIndex> out;
    out.reserve(k_);
    std::vector<std::pair<NodeIndex, std::size_t>> stack{{topology_.root(), k_}};
    while (!stack.empty()) {
      auto [v, j] = stack.back();
      stack.pop_back();
      out.push_back(v);
      const auto kids = topology_.children(v);
      for (std::size_t ci = kids.size(); ci-- > 0;) {
        const std::uint32_t t = split_[v][ci][j];
        if (t > 0) {
          stack.emplace_back(kids[ci], t);
          j -= t;
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  const TreeTopology &topology_;
  const std::vector<double> &weight_;
  std::size_t k_;
  std::vector<std::vector<double>> best_;
  std::vector<std::uint8_t> must_take_;
  std::vector<std::vector<std::vector<std::uint32_t>>> split_;
  bool tie_seen_ = false;
};

// Among all optimal supports, pick the lexicographically smallest sorted
// tuple: walk indices upwards and keep each one whenever some optimal
// support still contains it.
std::vector<NodeIndex> lexicographic_optimum(const TreeTopology &t, KnapsackDp &dp,
                                             double optimum, std::size_t k) {
  const std::size_t n = t.size();
  std::vector<Force> force(n, Force::free);
  std::vector<std::uint8_t> in(n, 0);
  std::size_t count = 0;
  for (NodeIndex i = 0; i < n && count < k; ++i) {
    if (in[i])
      continue;
    bool blocked = false;
    for (auto p = t.parent(i); p; p = t.parent(*p))
      if (force[*p] == Force::out) {
        blocked = true;
        break;
      }
    if (blocked) {
      force[i] = Force::out;
      continue;
    }
    force[i] = Force::in;
    if (dp.solve(&force, false) == optimum) {
      for (std::optional<NodeIndex> a = i; a && !in[*a]; a = t.parent(*a)) {
        in[*a] = 1;
        ++count;
      }
    } else {
      force[i] = Force::out;
    }
  }
  if (count != k)
    throw NumericalError("projection: lexicographic reconstruction lost the optimum");
  std::vector<NodeIndex> out;
  out.reserve(k);
  for (NodeIndex i = 0; i < n; ++i)
    if (in[i])
      out.push_back(i);
  return out;
}

ProjectionResult finish(const Eigen::VectorXd &x, std::vector<NodeIndex> sorted, bool clipped) {
  TreeSupport support = SupportBuilder::from_sorted(std::move(sorted));
  Eigen::VectorXd projected = Eigen::VectorXd::Zero(x.size());
  for (NodeIndex i : support.indices())
    projected[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(i)];
  const double energy = support_energy(x, support);
  return {std::move(support), std::move(projected), energy, clipped};
}

void check_args(const TreeTopology &topology, const Eigen::VectorXd &x, std::size_t k) {
  if (static_cast<std::size_t>(x.size()) != topology.size())
    throw InvalidArgument("projection: vector length " + std::to_string(x.size()) +
                          " does not match tree size " + std::to_string(topology.size()));
  if (k == 0)
    throw InvalidArgument("projection: k must be at least 1");
}

std::vector<NodeIndex> all_nodes(std::size_t n) {
  std::vector<NodeIndex> v(n);
  std::iota(v.begin(), v.end(), NodeIndex{0});
  return v;
}

} // namespace

double support_energy(const Eigen::VectorXd &x, const TreeSupport &support) {
  double e = 0.0;
  for (NodeIndex i : support.indices()) {
    const double xi = x[static_cast<Eigen::Index>(i)];
    e += xi * xi;
  }
  return e;
}

ProjectionResult project(const TreeTopology &topology, const Eigen::VectorXd &x,
                         std::size_t k) {
  check_args(topology, x, k);
  const std::size_t n = topology.size();
  if (k >= n)
    return finish(x, all_nodes(n), k > n);

  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i)
    weight[i] = x[static_cast<Eigen::Index>(i)] * x[static_cast<Eigen::Index>(i)];

  KnapsackDp dp(topology, weight, k);
  const double optimum = dp.solve(nullptr, true);
  if (!dp.tie_seen())
    return finish(x, dp.reconstruct(), false);
  return finish(x, lexicographic_optimum(topology, dp, optimum, k), false);
}

ProjectionResult project_bruteforce(const TreeTopology &topology, const Eigen::VectorXd &x,
                                    std::size_t k) {
  check_args(topology, x, k);
  const std::size_t n = topology.size();
  if (k >= n)
    return finish(x, all_nodes(n), k > n);
  if (count_supports(topology, k) > kEnumerationBudget)
    throw InvalidArgument("project_bruteforce: support count exceeds the enumeration budget");

  const std::vector<TreeSupport> supports = enumerate_supports(topology, k);
  std::size_t best = 0;
  double best_energy = -1.0;
  for (std::size_t s = 0; s < supports.size(); ++s) {
    const double e = support_energy(x, supports[s]);
    if (e > best_energy) {
      best_energy = e;
      best = s;
    }
  }
  return finish(x, supports[best].indices(), false);
}

} // namespace treecs
