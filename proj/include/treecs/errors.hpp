#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treecs {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied an argument outside the documented domain.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// A real-valued argument lies outside the domain of a theory quantity.
class DomainError : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

/// Root bracketing failed, a matrix was rank deficient, or similar.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// An index set is not a rooted, parent-closed subtree.
class SupportError : public InvalidArgument {
public:
  enum class Kind { missing_root, orphan_node, out_of_range };

  SupportError(Kind kind, std::size_t node, const std::string &what)
      : InvalidArgument(what), kind_(kind), node_(node) {}

  Kind kind() const noexcept { return kind_; }
  /// Offending node; the root index for missing_root.
  std::size_t node() const noexcept { return node_; }

private:
  Kind kind_;
  std::size_t node_;
};

} // namespace treecs
