#include "treecs/tree_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "treecs/errors.hpp"

namespace treecs {

TreeTopology::TreeTopology(std::vector<std::optional<NodeIndex>> parent, int order_d)
    : parent_(std::move(parent)), order_(order_d) {
  if (order_ < 2)
    throw InvalidArgument("tree order must be at least 2, got " + std::to_string(order_));
  const std::size_t n = parent_.size();
  if (n == 0)
    throw InvalidArgument("a tree needs at least one node");

  std::size_t roots = 0;
  std::vector<std::size_t> n_children(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!parent_[i]) {
      root_ = i;
      ++roots;
      continue;
    }
    const NodeIndex p = *parent_[i];
    if (p >= n)
      throw InvalidArgument("parent of node " + std::to_string(i) + " is out of range");
    if (p == i)
      throw InvalidArgument("node " + std::to_string(i) + " is its own parent");
    if (++n_children[p] > static_cast<std::size_t>(order_))
      throw InvalidArgument("node " + std::to_string(p) + " has more than " +
                            std::to_string(order_) + " children");
  }
  if (roots != 1)
    throw InvalidArgument("expected exactly one root, found " + std::to_string(roots));

  child_offset_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    child_offset_[i + 1] = child_offset_[i] + n_children[i];
  children_.resize(n - 1);
  std::vector<std::size_t> fill(child_offset_.begin(), child_offset_.end() - 1);
  for (std::size_t i = 0; i < n; ++i)
    if (parent_[i])
      children_[fill[*parent_[i]]++] = i;

  // Every node must be reachable from the root, which also rules out cycles.
  bfs_.reserve(n);
  bfs_.push_back(root_);
  for (std::size_t head = 0; head < bfs_.size(); ++head)
    for (NodeIndex c : children(bfs_[head]))
      bfs_.push_back(c);
  if (bfs_.size() != n)
    throw InvalidArgument("parent links contain a cycle; " +
                          std::to_string(n - bfs_.size()) + " nodes do not reach the root");
}

TreeTopology build_complete_tree(std::size_t n_nodes, int order_d) {
  if (order_d < 2)
    throw InvalidArgument("tree order must be at least 2, got " + std::to_string(order_d));
  if (n_nodes == 0)
    throw InvalidArgument("a tree needs at least one node");
  std::vector<std::optional<NodeIndex>> parent(n_nodes);
  const auto d = static_cast<std::size_t>(order_d);
  for (std::size_t i = 1; i < n_nodes; ++i)
    parent[i] = (i - 1) / d;
  return TreeTopology(std::move(parent), order_d);
}

bool TreeSupport::contains(NodeIndex node) const {
  return std::binary_search(indices_.begin(), indices_.end(), node);
}

TreeSupport validate_support(const TreeTopology &topology,
                             std::span<const NodeIndex> indices) {
  std::vector<NodeIndex> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (!sorted.empty() && sorted.back() >= topology.size())
    throw SupportError(SupportError::Kind::out_of_range, sorted.back(),
                       "node " + std::to_string(sorted.back()) + " is out of range");
  if (!std::binary_search(sorted.begin(), sorted.end(), topology.root()))
    throw SupportError(SupportError::Kind::missing_root, topology.root(),
                       "support does not contain the root");
  for (NodeIndex i : sorted) {
    const auto p = topology.parent(i);
    if (p && !std::binary_search(sorted.begin(), sorted.end(), *p))
      throw SupportError(SupportError::Kind::orphan_node, i,
                         "parent of node " + std::to_string(i) + " is not in the support");
  }
  return TreeSupport(std::move(sorted));
}

namespace {

// Each frontier node is either taken (its children join the frontier) or
// excluded for good, so every subtree is produced exactly once.
class SubtreeWalker {
public:
  SubtreeWalker(const TreeTopology &t, std::size_t k, std::vector<TreeSupport> &out)
      : topology_(t), k_(k), out_(out) {}

  void run() {
    chosen_.push_back(topology_.root());
    std::vector<NodeIndex> frontier(topology_.children(topology_.root()).begin(),
                                    topology_.children(topology_.root()).end());
    walk(frontier);
  }

private:
  void walk(std::vector<NodeIndex> &frontier) {
    if (chosen_.size() == k_) {
      std::vector<NodeIndex> s = chosen_;
      std::sort(s.begin(), s.end());
      out_.push_back(SupportBuilder::from_sorted(std::move(s)));
      return;
    }
    if (frontier.empty())
      return;
    const NodeIndex v = frontier.back();
    frontier.pop_back();
    walk(frontier);

    chosen_.push_back(v);
    const auto kids = topology_.children(v);
    frontier.insert(frontier.end(), kids.begin(), kids.end());
    walk(frontier);
    frontier.resize(frontier.size() - kids.size());
    chosen_.pop_back();
    frontier.push_back(v);
  }

  const TreeTopology &topology_;
  std::size_t k_;
  std::vector<TreeSupport> &out_;
  std::vector<NodeIndex> chosen_;
};

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b
             ? std::numeric_limits<std::uint64_t>::max()
             : a + b;
}

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0)
    return 0;
  return a > std::numeric_limits<std::uint64_t>::max() / b
             ? std::numeric_limits<std::uint64_t>::max()
             : a * b;
}

} // namespace

std::vector<TreeSupport> enumerate_supports(const TreeTopology &topology, std::size_t k) {
  std::vector<TreeSupport> out;
  if (k == 0 || k > topology.size())
    return out;
  SubtreeWalker(topology, k, out).run();
  std::sort(out.begin(), out.end());
  return out;
}

std::uint64_t count_supports(const TreeTopology &topology, std::size_t k) {
  if (k == 0 || k > topology.size())
    return 0;
  // ways[v][j]: rooted-at-v subtrees with j nodes, j = 1..k (index 0 unused).
  std::vector<std::vector<std::uint64_t>> ways(topology.size());
  const auto &order = topology.bfs_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeIndex v = *it;
    std::vector<std::uint64_t> acc(2, 0);
    acc[1] = 1;
    for (NodeIndex c : topology.children(v)) {
      const auto &child = ways[c];
      const std::size_t size = std::min(k, acc.size() - 1 + child.size() - 1);
      std::vector<std::uint64_t> next(acc.begin(), acc.end());
      next.resize(size + 1, 0);
      for (std::size_t a = 1; a < acc.size(); ++a)
        for (std::size_t t = 1; t < child.size() && a + t <= size; ++t)
          next[a + t] = sat_add(next[a + t], sat_mul(acc[a], child[t]));
      acc = std::move(next);
      std::vector<std::uint64_t>().swap(ways[c]);
    }
    ways[v] = std::move(acc);
  }
  const auto &root = ways[topology.root()];
  return k < root.size() ? root[k] : 0;
}

BigInt tree_count(int order_d, std::size_t k) {
  if (order_d < 2)
    throw InvalidArgument("tree order must be at least 2");
  if (k == 0)
    throw InvalidArgument("tree_count needs k >= 1");
  const auto d = static_cast<std::size_t>(order_d);
  BigInt binom = 1;
  // C(dk, k) built incrementally; each partial product is itself a binomial.
  for (std::size_t i = 1; i <= k; ++i) {
    binom *= (d - 1) * k + i;
    binom /= i;
  }
  return binom / ((d - 1) * k + 1);
}

double log_tree_count(int order_d, std::size_t k) {
  if (order_d < 2)
    throw InvalidArgument("tree order must be at least 2");
  if (k == 0)
    throw InvalidArgument("log_tree_count needs k >= 1");
  const double d = order_d;
  const double kk = static_cast<double>(k);
  return std::lgamma(d * kk + 1.0) - std::lgamma(kk + 1.0) -
         std::lgamma((d - 1.0) * kk + 1.0) - std::log((d - 1.0) * kk + 1.0);
}

} // namespace treecs
