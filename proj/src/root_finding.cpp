#include "treecs/root_finding.hpp"

#include <cmath>

#include "treecs/errors.hpp"

namespace treecs {

namespace {
bool opposite(double a, double b) { return (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0); }
} // namespace

Root bisect(const std::function<double(double)> &f, double lo, double hi,
            const BisectOptions &opts) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0)
    return {lo, 0.0, 0};
  if (fhi == 0.0)
    return {hi, 0.0, 0};
  if (std::isnan(flo) || std::isnan(fhi) || !opposite(flo, fhi))
    throw NumericalError("bisect: no sign change on the bracket");

  Root best = std::abs(flo) < std::abs(fhi) ? Root{lo, flo, 0} : Root{hi, fhi, 0};
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi)
      break;
    const double fm = f(mid);
    if (std::abs(fm) < std::abs(best.residual) || std::isnan(best.residual))
      best = {mid, fm, it + 1};
    if (fm == 0.0 || std::abs(fm) <= opts.f_tol)
      break;
    if (opposite(fm, flo)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
    if (hi - lo <= opts.x_tol_abs + opts.x_tol_rel * std::abs(mid))
      break;
  }
  best.iterations = it;
  return best;
}

double expand_upper(const std::function<double(double)> &f, double lo, double hi) {
  const double flo = f(lo);
  for (int i = 0; i < 1000; ++i) {
    const double fhi = f(hi);
    if (fhi == 0.0 || opposite(flo, fhi))
      return hi;
    hi *= 2.0;
    if (!std::isfinite(hi))
      break;
  }
  throw NumericalError("expand_upper: no sign change found");
}

} // namespace treecs
