#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace treecs {

using NodeIndex = std::size_t;
using BigInt = boost::multiprecision::cpp_int;

/**
 * A d-ary tree over signal coefficients, described by a parent array.
 *
 * Node indices are 0..size()-1. Exactly one node has no parent, every node
 * reaches it by following parent links, and no node has more than order()
 * children. Instances are immutable once built.
 */
class TreeTopology {
public:
  /// Validates the parent array; throws InvalidArgument on any violation.
  TreeTopology(std::vector<std::optional<NodeIndex>> parent, int order_d);

  std::size_t size() const noexcept { return parent_.size(); }
  int order() const noexcept { return order_; }
  NodeIndex root() const noexcept { return root_; }

  std::optional<NodeIndex> parent(NodeIndex node) const { return parent_.at(node); }
  std::span<const NodeIndex> children(NodeIndex node) const {
    return {children_.data() + child_offset_.at(node),
            child_offset_.at(node + 1) - child_offset_.at(node)};
  }
  const std::vector<std::optional<NodeIndex>> &parents() const noexcept {
    return parent_;
  }

  /// Nodes in breadth-first order from the root; parents precede children.
  const std::vector<NodeIndex> &bfs_order() const noexcept { return bfs_; }

  bool operator==(const TreeTopology &other) const {
    return order_ == other.order_ && parent_ == other.parent_;
  }

private:
  std::vector<std::optional<NodeIndex>> parent_;
  int order_;
  NodeIndex root_ = 0;
  std::vector<NodeIndex> children_;
  std::vector<std::size_t> child_offset_;
  std::vector<NodeIndex> bfs_;
};

/// Canonical heap layout: node 0 is the root and the children of node i are
/// d*i+1 .. d*i+d, clipped to n_nodes.
TreeTopology build_complete_tree(std::size_t n_nodes, int order_d);

/// A rooted, parent-closed set of node indices. Only validate_support and
/// the enumeration/projection routines construct these.
class TreeSupport {
public:
  const std::vector<NodeIndex> &indices() const noexcept { return indices_; }
  std::size_t cardinality() const noexcept { return indices_.size(); }
  bool contains(NodeIndex node) const;

  bool operator==(const TreeSupport &) const = default;
  auto operator<=>(const TreeSupport &) const = default;

private:
  explicit TreeSupport(std::vector<NodeIndex> sorted) : indices_(std::move(sorted)) {}
  std::vector<NodeIndex> indices_;

  friend TreeSupport validate_support(const TreeTopology &, std::span<const NodeIndex>);
  friend class SupportBuilder;
};

/// Trusted construction for library internals that already guarantee the
/// tree property (enumeration, projection, sampling). Input must be sorted.
class SupportBuilder {
public:
  static TreeSupport from_sorted(std::vector<NodeIndex> sorted) {
    return TreeSupport(std::move(sorted));
  }
};

/// Checks that `indices` contains the root and is closed under parent.
/// Duplicates are ignored. Throws SupportError (missing_root, orphan_node,
/// out_of_range).
TreeSupport validate_support(const TreeTopology &topology,
                             std::span<const NodeIndex> indices);

inline TreeSupport validate_support(const TreeTopology &topology,
                                    std::initializer_list<NodeIndex> indices) {
  return validate_support(topology,
                          std::span<const NodeIndex>(indices.begin(), indices.size()));
}

/// Every rooted subtree with exactly k nodes, each once, in lexicographic
/// order of the sorted index tuples. Exponential cost; meant for small trees.
std::vector<TreeSupport> enumerate_supports(const TreeTopology &topology, std::size_t k);

/// Number of rooted subtrees with exactly k nodes in this topology,
/// saturating at UINT64_MAX.
std::uint64_t count_supports(const TreeTopology &topology, std::size_t k);

/// T(k) = C(dk, k) / ((d-1)k + 1), the number of ordered rooted d-ary trees
/// with k nodes. Exact.
BigInt tree_count(int order_d, std::size_t k);

/// ln T(k) through log-gamma, for k too large for exact arithmetic to be
/// convenient.
double log_tree_count(int order_d, std::size_t k);

} // namespace treecs
