#pragma once

#include <functional>

namespace treecs {

struct BisectOptions {
  /// Stop once |f(x)| falls to this level.
  double f_tol = 0.0;
  /// Stop once the bracket is narrower than x_tol_abs + x_tol_rel*|x|.
  double x_tol_abs = 0.0;
  double x_tol_rel = 4.0 * 2.220446049250313e-16;
  int max_iters = 2000;
};

struct Root {
  double x;
  double residual; ///< f(x)
  int iterations;
};

/// Plain bisection on [lo, hi]. f(lo) and f(hi) must differ in sign (a zero
/// at an end point is returned directly); otherwise NumericalError. The end
/// point or midpoint with the smallest |f| is returned.
Root bisect(const std::function<double(double)> &f, double lo, double hi,
            const BisectOptions &opts = {});

/// Doubles `hi` (starting from the given value) until f changes sign relative
/// to f(lo). At most 1000 doublings; NumericalError when none is found.
double expand_upper(const std::function<double(double)> &f, double lo, double hi);

} // namespace treecs
