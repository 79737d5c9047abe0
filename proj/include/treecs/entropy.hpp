#pragma once

namespace treecs {

/// Shannon entropy with natural logarithms, -p ln p - (1-p) ln(1-p).
/// Throws DomainError unless 0 < p < 1.
double shannon_entropy(double p);

/// Limit of (1/k) ln T(k) for d-ary trees: d * H(1/d).
double tree_count_exponent(int order_d);

} // namespace treecs
