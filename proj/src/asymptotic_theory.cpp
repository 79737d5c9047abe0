#include "treecs/asymptotic_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "treecs/errors.hpp"
#include "treecs/root_finding.hpp"

namespace treecs::theory {

namespace {

const double kSqrt3 = std::sqrt(3.0);

std::string num(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void require_order(int d) {
  if (d < 2)
    throw InvalidArgument("tree order must be at least 2");
}

void require_open_unit(double rho, const char *what) {
  if (!(rho > 0.0 && rho < 1.0))
    throw DomainError(std::string(what) + ": rho must lie in (0,1), got " + num(rho));
}

void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw DomainError("tail bound: lambda must lie in (0,1], got " + num(lambda));
}

void require_factor_domain(double rho) {
  if (!(rho > 0.0 && rho < 1.0 / 3.0))
    throw DomainError("factor: rho must lie in (0,1/3), got " + num(rho));
}

// Bisection to machine precision; the defining residuals stay far below
// 1e-10 this way.
BisectOptions tight() {
  BisectOptions o;
  o.f_tol = 0.0;
  o.x_tol_abs = 0.0;
  o.x_tol_rel = 2.0 * std::numeric_limits<double>::epsilon();
  return o;
}

double tr_equation(double rho, double r) {
  return r * r * (9.0 - r) - 1296.0 * rho * (1.0 + std::log(72.0 / r));
}

} // namespace

std::string to_string(Variant v) { return v == Variant::itp ? "itp" : "nitp"; }

std::string to_string(Analysis a) {
  switch (a) {
  case Analysis::rip:
    return "rip";
  case Analysis::stable_point:
    return "sp";
  case Analysis::prior:
    return "prior";
  }
  return "?";
}

double union_exponent(int d, double rho) {
  require_order(d);
  return rho * tree_count_exponent(d);
}

double psi_max(double lambda, double rho) {
  return 0.5 * ((1.0 + rho) * std::log(lambda) + 1.0 + rho - rho * std::log(rho) - lambda);
}

double psi_min(double lambda, double rho) {
  return shannon_entropy(rho) +
         0.5 * ((1.0 - rho) * std::log(lambda) + 1.0 - rho + rho * std::log(rho) - lambda);
}

double rip_bound_upper_residual(int d, double rho, double tu) {
  return psi_max(1.0 + tu, rho) + union_exponent(d, rho);
}

double rip_bound_lower_residual(int d, double rho, double tl) {
  return psi_min(1.0 - tl, rho) + union_exponent(d, rho);
}

double rip_bound_upper(int d, double rho) {
  require_order(d);
  require_open_unit(rho, "rip_bound_upper");
  const double ex = union_exponent(d, rho);
  auto f = [&](double lambda) { return psi_max(lambda, rho) + ex; };
  const double lo = 1.0 + rho;
  const double hi = expand_upper(f, lo, 2.0 * lo);
  return bisect(f, lo, hi, tight()).x - 1.0;
}

double rip_bound_lower(int d, double rho) {
  require_order(d);
  require_open_unit(rho, "rip_bound_lower");
  const double ex = union_exponent(d, rho);
  auto f = [&](double lambda) { return psi_min(lambda, rho) + ex; };
  const double hi = 1.0 - rho;
  double lo = 0.5 * hi;
  for (int i = 0; f(lo) >= 0.0; ++i) {
    if (i == 1000 || lo == 0.0)
      throw NumericalError("rip_bound_lower: no lower bracket");
    lo *= 0.5;
  }
  return 1.0 - bisect(f, lo, hi, tight()).x;
}

double prior_bound_tr_residual(double rho, double r) { return tr_equation(rho, r); }

double prior_bound_tr(double rho) {
  if (!(rho > 0.0))
    throw DomainError("prior_bound_tr: rho must be positive, got " + num(rho));
  // The equation is not monotone in r; take the first sign change on a
  // logarithmic scan, which is the branch that vanishes as rho -> 0.
  constexpr int kScan = 4000;
  const double log_lo = std::log(1e-6);
  const double log_hi = std::log(9.0);
  double prev_r = 1e-6;
  double prev_g = tr_equation(rho, prev_r);
  for (int i = 1; i <= kScan; ++i) {
    const double r = std::exp(log_lo + (log_hi - log_lo) * i / kScan);
    const double g = tr_equation(rho, r);
    if (prev_g < 0.0 && g >= 0.0)
      return bisect([&](double x) { return tr_equation(rho, x); }, prev_r, r, tight()).x;
    prev_r = r;
    prev_g = g;
  }
  throw DomainError("prior_bound_tr: no solution for rho = " + num(rho) +
                    " (defined only below about 0.02407)");
}

double tail_bound_tiu_residual(int d, double rho, double lambda, double nu) {
  return nu - std::log1p(nu) - 2.0 * union_exponent(d, rho) / lambda;
}

double tail_bound_til_residual(int d, double rho, double lambda, double nu) {
  return -nu - std::log1p(-nu) - 2.0 * union_exponent(d, rho) / lambda;
}

double tail_bound_tif_residual(int d, double rho, double f) {
  return std::log1p(f) - rho * std::log(f) - 2.0 * union_exponent(d, rho) -
         shannon_entropy(rho);
}

double tail_bound_tiu(int d, double rho, double lambda) {
  require_order(d);
  require_open_unit(rho, "tail_bound_tiu");
  require_lambda(lambda);
  auto f = [&](double nu) { return tail_bound_tiu_residual(d, rho, lambda, nu); };
  const double hi = expand_upper(f, 0.0, 1.0);
  return bisect(f, 0.0, hi, tight()).x;
}

double tail_bound_til(int d, double rho, double lambda) {
  require_order(d);
  require_open_unit(rho, "tail_bound_til");
  require_lambda(lambda);
  auto f = [&](double nu) { return tail_bound_til_residual(d, rho, lambda, nu); };
  const double hi = std::nextafter(1.0, 0.0);
  if (f(hi) <= 0.0)
    throw NumericalError("tail_bound_til: root is not representable below 1");
  return bisect(f, 0.0, hi, tight()).x;
}

double tail_bound_tif(int d, double rho) {
  require_order(d);
  if (!(rho > 0.0 && rho <= 0.5))
    throw DomainError("tail_bound_tif: rho must lie in (0,1/2], got " + num(rho));
  auto f = [&](double x) { return tail_bound_tif_residual(d, rho, x); };
  const double lo = rho / (1.0 - rho);
  const double hi = expand_upper(f, lo, 2.0 * lo + 1.0);
  return bisect(f, lo, hi, tight()).x;
}

double optimal_alpha(int d, double rho) {
  require_factor_domain(rho);
  return 2.0 / (2.0 + rip_bound_upper(d, 3.0 * rho) - rip_bound_lower(d, 3.0 * rho));
}

std::pair<double, double> itp_mu_branches(int d, double rho, double alpha) {
  require_factor_domain(rho);
  const double tu3 = rip_bound_upper(d, 3.0 * rho);
  const double tl3 = rip_bound_lower(d, 3.0 * rho);
  return {alpha * (1.0 + tu3) - 1.0, 1.0 - alpha * (1.0 - tl3)};
}

Factors rip_factors(int d, double rho, const AlgorithmParams &params) {
  require_factor_domain(rho);
  const double tu2 = rip_bound_upper(d, 2.0 * rho);
  const double tu3 = rip_bound_upper(d, 3.0 * rho);
  const double tl3 = rip_bound_lower(d, 3.0 * rho);
  if (params.variant == Variant::itp) {
    const double alpha = params.alpha ? *params.alpha : 2.0 / (2.0 + tu3 - tl3);
    if (!(alpha > 0.0))
      throw InvalidArgument("ITP step must be positive");
    const double mu =
        kSqrt3 * std::max(alpha * (1.0 + tu3) - 1.0, 1.0 - alpha * (1.0 - tl3));
    return {mu, alpha * std::sqrt(3.0 * (1.0 + tu2))};
  }
  if (!(params.kappa > 1.0))
    throw InvalidArgument("NITP kappa must exceed 1");
  const double tl1 = rip_bound_lower(d, rho);
  if (!(tl1 < 1.0))
    throw DomainError("NITP factor: TL(rho) must be below 1");
  const double mu = kSqrt3 * std::max((1.0 + tu3) / (1.0 - tl1) - 1.0,
                                      1.0 - (1.0 - tl3) / (params.kappa * (1.0 + tu2)));
  return {mu, std::sqrt(3.0 * (1.0 + tu2)) / (1.0 - tl1)};
}

double rip_noise_amplification(int d, double rho, const AlgorithmParams &params) {
  const Factors f = rip_factors(d, rho, params);
  if (!(f.mu < 1.0))
    throw DomainError("noise amplification undefined: mu >= 1 at rho = " + num(rho));
  return f.xi / (1.0 - f.mu);
}

double threshold_rip(int d, const AlgorithmParams &params) {
  auto g = [&](double rho) { return rip_factors(d, rho, params).mu - 1.0; };
  const double lo = 1e-9;
  const double hi = 0.3;
  if (!(g(lo) < 0.0 && g(hi) > 0.0))
    throw NumericalError("threshold_rip: convergence factor does not cross 1");
  return bisect(g, lo, hi, tight()).x;
}

double stable_point_lhs(int d, double rho) {
  const double tif = tail_bound_tif(d, rho);
  const double til = tail_bound_til(d, rho, 1.0 - rho);
  return std::sqrt(tif) / ((1.0 - rho) * (1.0 - til));
}

double stable_point_rhs(int d, double rho, Variant variant, double kappa) {
  const double scale = variant == Variant::itp ? 1.0 : kappa;
  if (variant == Variant::nitp && !(kappa > 1.0))
    throw InvalidArgument("NITP kappa must exceed 1");
  return 1.0 / (scale * (1.0 + rip_bound_upper(d, 2.0 * rho)));
}

AlphaWindow sp_alpha_window(int d, double rho) {
  return {stable_point_lhs(d, rho), stable_point_rhs(d, rho, Variant::itp)};
}

double threshold_stable_point(int d, Variant variant, double kappa) {
  auto g = [&](double rho) {
    return stable_point_lhs(d, rho) - stable_point_rhs(d, rho, variant, kappa);
  };
  const double lo = 1e-9;
  const double hi = 0.5 - 1e-9;
  if (!(g(lo) < 0.0 && g(hi) > 0.0))
    throw NumericalError("threshold_stable_point: no sign change on (0, 1/2)");
  return bisect(g, lo, hi, tight()).x;
}

SpStability stability_factor_sp(int d, double rho, const AlgorithmParams &params) {
  if (!(rho > 0.0 && rho < 0.5))
    throw DomainError("stability_factor_sp: rho must lie in (0,1/2), got " + num(rho));
  const double tif = tail_bound_tif(d, rho);
  const double til = tail_bound_til(d, rho, 1.0 - rho);
  const double tiu_a = tail_bound_tiu(d, rho, 1.0 - rho);
  const double tiu_b = tail_bound_tiu(d, rho, rho);
  double step;
  if (params.variant == Variant::itp) {
    step = params.alpha ? *params.alpha : stable_point_rhs(d, rho, Variant::itp);
    if (!(step > 0.0))
      throw InvalidArgument("ITP step must be positive");
  } else {
    step = stable_point_rhs(d, rho, Variant::nitp, params.kappa);
  }
  const double root_tif = std::sqrt(tif);
  const double denom = step * (1.0 - rho) * (1.0 - til) - root_tif;
  if (!(denom > 0.0))
    throw DomainError("stability_factor_sp: denominator nonpositive at rho = " + num(rho));
  const double a =
      (root_tif + step * std::sqrt(rho * (1.0 - rho) * (1.0 + tiu_a) * (1.0 + tiu_b))) /
      denom;
  return {a, std::sqrt(tif * (1.0 + a) * (1.0 + a) + a * a)};
}

double prior_rip_condition(Variant variant, double kappa) {
  if (variant == Variant::itp)
    return 1.0 / kSqrt3;
  if (std::abs(kappa - kDefaultKappa) > 1e-12)
    throw InvalidArgument("the prior NITP condition is only available for kappa = 1.1");
  return (11.0 - kSqrt3) / (11.0 + 21.0 * kSqrt3);
}

double threshold_prior(Variant variant, double kappa) {
  const double target = prior_rip_condition(variant, kappa);
  auto g = [&](double rho) { return prior_bound_tr(3.0 * rho) - target; };
  const double lo = 1e-9;
  const double hi = 0.024 / 3.0;
  if (!(g(lo) < 0.0 && g(hi) > 0.0))
    throw NumericalError("threshold_prior: TR(3 rho) does not cross the condition");
  return bisect(g, lo, hi, tight()).x;
}

namespace {

template <class F> std::optional<double> guarded(F &&f) {
  try {
    return f();
  } catch (const Error &) {
    return std::nullopt;
  }
}

std::optional<Factors> try_factors(int d, double rho, const AlgorithmParams &params) {
  try {
    return rip_factors(d, rho, params);
  } catch (const Error &) {
    return std::nullopt;
  }
}

template <class F> std::optional<Evaluated> at(double rho, F &&f,
                                                std::optional<double> lambda = {}) {
  auto v = guarded(std::forward<F>(f));
  if (!v)
    return std::nullopt;
  return Evaluated{*v, rho, lambda};
}

} // namespace

std::vector<TheoryResult> theory_table(const TheoryQuery &q, const std::vector<double> &grid) {
  AlgorithmParams params{q.variant, q.variant == Variant::itp ? q.alpha : std::nullopt,
                         q.kappa};
  std::optional<double> rho_hat;
  switch (q.analysis) {
  case Analysis::rip:
    rho_hat = guarded([&] { return threshold_rip(q.d, params); });
    break;
  case Analysis::stable_point:
    rho_hat = guarded([&] { return threshold_stable_point(q.d, q.variant, q.kappa); });
    break;
  case Analysis::prior:
    if (q.d == 2)
      rho_hat = guarded([&] { return threshold_prior(q.variant, q.kappa); });
    break;
  }

  std::vector<TheoryResult> rows;
  rows.reserve(grid.size());
  for (double rho : grid) {
    TheoryResult r{};
    r.rho = rho;
    r.rho_hat = rho_hat;
    if (q.d == 2)
      r.tr = at(rho, [&] { return prior_bound_tr(rho); });
    switch (q.analysis) {
    case Analysis::rip: {
      r.tu = at(3 * rho, [&] { return rip_bound_upper(q.d, 3 * rho); });
      r.tl = at(3 * rho, [&] { return rip_bound_lower(q.d, 3 * rho); });
      if (q.variant == Variant::itp)
        r.alpha_hat = guarded([&] { return optimal_alpha(q.d, rho); });
      if (const auto f = try_factors(q.d, rho, params)) {
        r.mu = f->mu;
        r.xi = f->xi;
      }
      break;
    }
    case Analysis::stable_point: {
      r.tu = at(2 * rho, [&] { return rip_bound_upper(q.d, 2 * rho); });
      r.tiu = at(rho, [&] { return tail_bound_tiu(q.d, rho, 1 - rho); }, 1 - rho);
      r.til = at(rho, [&] { return tail_bound_til(q.d, rho, 1 - rho); }, 1 - rho);
      r.tif = at(rho, [&] { return tail_bound_tif(q.d, rho); });
      r.xi = guarded([&] { return stability_factor_sp(q.d, rho, params).xi; });
      break;
    }
    case Analysis::prior: {
      if (q.d == 2) {
        r.tr = at(3 * rho, [&] { return prior_bound_tr(3 * rho); });
        if (q.variant == Variant::itp && r.tr)
          r.mu = kSqrt3 * r.tr->value;
      }
      break;
    }
    }
    rows.push_back(r);
  }
  return rows;
}

BoundsRow bounds_row(int d, double rho, double kappa) {
  BoundsRow r{};
  r.rho = rho;
  r.tu = guarded([&] { return rip_bound_upper(d, rho); });
  r.tl = guarded([&] { return rip_bound_lower(d, rho); });
  if (d == 2)
    r.tr = guarded([&] { return prior_bound_tr(rho); });
  r.tiu = guarded([&] { return tail_bound_tiu(d, rho, 1 - rho); });
  r.til = guarded([&] { return tail_bound_til(d, rho, 1 - rho); });
  r.tif = guarded([&] { return tail_bound_tif(d, rho); });
  if (const auto itp = try_factors(d, rho, AlgorithmParams::itp_optimal())) {
    r.mu_itp = itp->mu;
    r.xi_itp = itp->xi;
    r.alpha_hat = optimal_alpha(d, rho);
  }
  if (const auto nitp = try_factors(d, rho, AlgorithmParams::nitp(kappa))) {
    r.mu_nitp = nitp->mu;
    r.xi_nitp = nitp->xi;
  }
  return r;
}

} // namespace treecs::theory
