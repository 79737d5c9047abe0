#include "treecs/experiments.hpp"

#include <cmath>
#include <sstream>

#include "treecs/errors.hpp"
#include "treecs/io.hpp"
#include "treecs/parallel.hpp"
#include "treecs/random.hpp"

namespace treecs {

namespace {

struct TrialOutcome {
  double rel_error = 0.0;
  bool success = false;
  std::size_t iterations = 0;
};

std::string cell(const std::optional<double> &v) { return v ? csv_number(*v) : std::string(); }

} // namespace

std::string csv_number(double v) { return io::format_double(v); }

std::string header_comment(const std::string &params) {
  return std::string("# treecs ") + kVersion + " " + params + "\n";
}

void ExperimentSpec::validate() const {
  if (d < 2)
    throw InvalidArgument("experiment: tree order d must be at least 2");
  if (n == 0)
    throw InvalidArgument("experiment: n must be at least 1");
  if (trials == 0)
    throw InvalidArgument("experiment: trials must be at least 1");
  if (!(success_tol > 0.0))
    throw InvalidArgument("experiment: success_tol must be positive");
  if (!(sigma >= 0.0))
    throw InvalidArgument("experiment: sigma must be nonnegative");
  if (rho_grid.empty() == k_grid.empty())
    throw InvalidArgument("experiment: give exactly one of a rho grid and a k grid");
  for (double rho : rho_grid)
    if (!(rho > 0.0) || std::lround(rho * static_cast<double>(n)) < 1)
      throw InvalidArgument("experiment: rho = " + csv_number(rho) + " gives k < 1");
  for (std::size_t k : k_grid)
    if (k == 0)
      throw InvalidArgument("experiment: k must be at least 1");
  SolverConfig cfg;
  cfg.variant = variant;
  cfg.alpha = alpha;
  cfg.kappa = kappa;
  cfg.c = c;
  cfg.max_iters = max_iters;
  cfg.validate();
}

std::size_t default_signal_length(int d, std::size_t n, std::size_t k) {
  const std::size_t target = std::max(20 * k, 2 * n);
  std::size_t size = 1, level = 1;
  while (size < target) {
    level *= static_cast<std::size_t>(d);
    size += level;
  }
  return size;
}

double relative_error(const Eigen::VectorXd &x_hat, const Eigen::VectorXd &x_star) {
  const double ref = x_star.norm();
  const double diff = (x_hat - x_star).norm();
  return ref > 0.0 ? diff / ref : diff;
}

bool recovered(const Eigen::VectorXd &x_hat, const Eigen::VectorXd &x_star, double tol) {
  if (x_star.norm() == 0.0)
    return x_hat.norm() <= 1e-12;
  return relative_error(x_hat, x_star) <= tol;
}

std::vector<PhaseMapRow> run_phase_experiment(const ExperimentSpec &spec) {
  spec.validate();
  std::vector<std::size_t> ks = spec.k_grid;
  std::vector<double> rhos = spec.rho_grid;
  if (ks.empty())
    for (double rho : spec.rho_grid)
      ks.push_back(static_cast<std::size_t>(std::lround(rho * static_cast<double>(spec.n))));
  else
    for (std::size_t k : ks)
      rhos.push_back(static_cast<double>(k) / static_cast<double>(spec.n));

  std::vector<PhaseMapRow> rows;
  for (std::size_t g = 0; g < ks.size(); ++g) {
    const std::size_t k = ks[g];
    const std::size_t n_signal = spec.n_signal.value_or(default_signal_length(spec.d, spec.n, k));
    if (n_signal < spec.n)
      throw InvalidArgument("experiment: signal length " + std::to_string(n_signal) +
                            " is below n = " + std::to_string(spec.n));
    if (k > n_signal)
      throw InvalidArgument("experiment: k = " + std::to_string(k) + " exceeds the tree size");
    const TreeTopology topology = build_complete_tree(n_signal, spec.d);

    SolverConfig cfg;
    cfg.variant = spec.variant;
    cfg.alpha = spec.alpha;
    cfg.kappa = spec.kappa;
    cfg.c = spec.c;
    cfg.max_iters = spec.max_iters;
    cfg.k = k;

    const std::uint64_t point_seed = derive_seed(spec.seed, g);
    std::vector<TrialOutcome> outcomes(spec.trials);
    parallel_for(spec.trials, [&](std::size_t t) {
      InstanceSpec is;
      is.n = spec.n;
      is.k = k;
      is.sigma = spec.sigma;
      is.law = spec.law;
      is.seed = derive_seed(point_seed, t);
      const ProblemInstance inst = make_instance(topology, is);
      SolverConfig trial_cfg = cfg;
      trial_cfg.seed = is.seed;
      const SolverReport rep = solve(inst, trial_cfg);
      outcomes[t] = {relative_error(rep.x_hat, inst.x_star),
                     recovered(rep.x_hat, inst.x_star, spec.success_tol), rep.iterations};
    });

    PhaseMapRow row;
    row.k = k;
    row.rho = rhos[g];
    row.n_signal = n_signal;
    row.trials = spec.trials;
    std::size_t successes = 0;
    double err = 0.0, iters = 0.0;
    for (const TrialOutcome &o : outcomes) {
      successes += o.success;
      err += o.rel_error;
      iters += static_cast<double>(o.iterations);
    }
    const double count = static_cast<double>(spec.trials);
    row.success_rate = static_cast<double>(successes) / count;
    row.mean_rel_error = err / count;
    row.mean_iters = iters / count;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ThresholdRow> threshold_table(const std::vector<int> &d_list,
                                          const std::vector<theory::Variant> &variants,
                                          const std::vector<theory::Analysis> &analyses,
                                          double kappa) {
  using namespace theory;
  std::vector<ThresholdRow> rows;
  for (int d : d_list)
    for (Variant v : variants)
      for (Analysis a : analyses) {
        if (a == Analysis::prior && d != 2)
          continue;
        double rho = 0.0;
        switch (a) {
        case Analysis::rip:
          rho = threshold_rip(d, v == Variant::itp ? AlgorithmParams::itp_optimal()
                                                   : AlgorithmParams::nitp(kappa));
          break;
        case Analysis::stable_point:
          rho = threshold_stable_point(d, v, kappa);
          break;
        case Analysis::prior:
          rho = threshold_prior(v, kappa);
          break;
        }
        rows.push_back({d, v, a, rho, static_cast<long long>(std::ceil(1.0 / rho))});
      }
  return rows;
}

std::vector<ComparisonRow> comparison_table(double kappa) {
  using namespace theory;
  std::vector<ComparisonRow> rows;
  for (Variant v : {Variant::itp, Variant::nitp}) {
    ComparisonRow r;
    r.variant = v;
    r.rho_rip = threshold_rip(2, v == Variant::itp ? AlgorithmParams::itp_optimal()
                                                   : AlgorithmParams::nitp(kappa));
    r.recip_rip = static_cast<long long>(std::ceil(1.0 / r.rho_rip));
    r.rho_prior = threshold_prior(v, kappa);
    r.recip_prior = static_cast<long long>(std::ceil(1.0 / r.rho_prior));
    r.factor = r.recip_prior / r.recip_rip;
    rows.push_back(r);
  }
  return rows;
}

std::string phase_csv(const ExperimentSpec &spec, const std::vector<PhaseMapRow> &rows) {
  std::ostringstream params;
  params << "seed=" << spec.seed << " d=" << spec.d << " n=" << spec.n
         << " trials=" << spec.trials << " sigma=" << csv_number(spec.sigma)
         << " variant=" << to_string(spec.variant);
  if (spec.variant == SolverVariant::itp_constant)
    params << " alpha=" << (spec.alpha ? csv_number(*spec.alpha) : std::string("optimal"));
  else
    params << " kappa=" << csv_number(spec.kappa) << " c=" << csv_number(spec.c);
  params << " max_iters=" << spec.max_iters << " success_tol=" << csv_number(spec.success_tol)
         << " coeff_law=" << to_string(spec.law);
  if (spec.n_signal)
    params << " n_signal=" << *spec.n_signal;

  std::ostringstream out;
  out << header_comment(params.str());
  out << "rho,k,n_signal,success_rate,mean_rel_error,mean_iters,trials\n";
  for (const PhaseMapRow &r : rows)
    out << csv_number(r.rho) << ',' << r.k << ',' << r.n_signal << ','
        << csv_number(r.success_rate) << ',' << csv_number(r.mean_rel_error) << ','
        << csv_number(r.mean_iters) << ',' << r.trials << '\n';
  return out.str();
}

std::string threshold_csv(const std::vector<ThresholdRow> &rows, const std::string &params) {
  std::ostringstream out;
  out << header_comment(params);
  out << "d,variant,analysis,rho_hat,reciprocal\n";
  for (const ThresholdRow &r : rows)
    out << r.d << ',' << theory::to_string(r.variant) << ',' << theory::to_string(r.analysis)
        << ',' << csv_number(r.rho_hat) << ',' << r.reciprocal << '\n';
  return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow> &rows, const std::string &params) {
  std::ostringstream out;
  out << header_comment(params);
  out << "variant,rho_rip,recip_rip,rho_prior,recip_prior,factor\n";
  for (const ComparisonRow &r : rows)
    out << theory::to_string(r.variant) << ',' << csv_number(r.rho_rip) << ',' << r.recip_rip
        << ',' << csv_number(r.rho_prior) << ',' << r.recip_prior << ',' << r.factor << '\n';
  return out.str();
}

std::string bounds_csv(const std::vector<theory::BoundsRow> &rows, const std::string &params) {
  std::ostringstream out;
  out << header_comment(params);
  out << "rho,tu,tl,tr,tiu,til,tif,mu_itp,xi_itp,mu_nitp,xi_nitp,alpha_hat\n";
  for (const theory::BoundsRow &r : rows)
    out << csv_number(r.rho) << ',' << cell(r.tu) << ',' << cell(r.tl) << ',' << cell(r.tr)
        << ',' << cell(r.tiu) << ',' << cell(r.til) << ',' << cell(r.tif) << ','
        << cell(r.mu_itp) << ',' << cell(r.xi_itp) << ',' << cell(r.mu_nitp) << ','
        << cell(r.xi_nitp) << ',' << cell(r.alpha_hat) << '\n';
  return out.str();
}

} // namespace treecs
