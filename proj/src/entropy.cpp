#include "treecs/entropy.hpp"

#include <cmath>
#include <string>

#include "treecs/errors.hpp"

namespace treecs {

double shannon_entropy(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw DomainError("shannon_entropy: p must lie in (0,1), got " +
                      std::to_string(p));
  return -p * std::log(p) - (1.0 - p) * std::log1p(-p);
}

double tree_count_exponent(int order_d) {
  if (order_d < 2)
    throw InvalidArgument("tree order must be at least 2");
  const double d = order_d;
  return d * shannon_entropy(1.0 / d);
}

} // namespace treecs
