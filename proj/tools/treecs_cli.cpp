#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treecs/asymptotic_theory.hpp"
#include "treecs/errors.hpp"
#include "treecs/experiments.hpp"
#include "treecs/io.hpp"
#include "treecs/itp_solvers.hpp"
#include "treecs/measurement_sim.hpp"
#include "treecs/tree_projection.hpp"

using namespace treecs;
using nlohmann::json;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct Global {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
};

void emit(const Global &g, const std::string &text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(g.out, std::ios::binary);
  if (!f)
    throw InvalidArgument("cannot write '" + g.out + "'");
  f << text;
}

std::string dump(const json &j) { return j.dump(2) + "\n"; }

theory::Variant parse_theory_variant(const std::string &s) {
  if (s == "itp")
    return theory::Variant::itp;
  if (s == "nitp")
    return theory::Variant::nitp;
  throw InvalidArgument("unknown variant '" + s + "'");
}

theory::Analysis parse_analysis(const std::string &s) {
  if (s == "rip")
    return theory::Analysis::rip;
  if (s == "sp" || s == "stable_point")
    return theory::Analysis::stable_point;
  if (s == "prior")
    return theory::Analysis::prior;
  throw InvalidArgument("unknown analysis '" + s + "'");
}

json optional_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

// --- thresholds ---------------------------------------------------------------

struct ThresholdArgs {
  std::vector<int> d{2, 4};
  std::vector<std::string> variants{"itp", "nitp"};
  std::vector<std::string> analyses{"rip", "sp", "prior"};
  double kappa = theory::kDefaultKappa;
  bool compare = false;
};

void run_thresholds(const Global &g, const ThresholdArgs &a) {
  std::ostringstream params;
  params << "seed=" << g.seed << " kappa=" << csv_number(a.kappa);
  if (a.compare) {
    const auto rows = comparison_table(a.kappa);
    if (g.format == "json") {
      json arr = json::array();
      for (const auto &r : rows)
        arr.push_back({{"variant", theory::to_string(r.variant)},
                       {"rho_rip", r.rho_rip},
                       {"recip_rip", r.recip_rip},
                       {"rho_prior", r.rho_prior},
                       {"recip_prior", r.recip_prior},
                       {"factor", r.factor}});
      emit(g, dump({{"tool", "treecs"}, {"version", kVersion}, {"kappa", a.kappa},
                    {"rows", arr}}));
    } else {
      emit(g, comparison_csv(rows, params.str()));
    }
    return;
  }
  std::vector<theory::Variant> variants;
  for (const auto &v : a.variants)
    variants.push_back(parse_theory_variant(v));
  std::vector<theory::Analysis> analyses;
  for (const auto &s : a.analyses)
    analyses.push_back(parse_analysis(s));
  const auto rows = threshold_table(a.d, variants, analyses, a.kappa);
  if (g.format == "json") {
    json arr = json::array();
    for (const auto &r : rows)
      arr.push_back({{"d", r.d},
                     {"variant", theory::to_string(r.variant)},
                     {"analysis", theory::to_string(r.analysis)},
                     {"rho_hat", r.rho_hat},
                     {"reciprocal", r.reciprocal}});
    emit(g, dump({{"tool", "treecs"}, {"version", kVersion}, {"kappa", a.kappa},
                  {"rows", arr}}));
  } else {
    emit(g, threshold_csv(rows, params.str()));
  }
}

// --- bounds -------------------------------------------------------------------

struct BoundsArgs {
  int d = 2;
  double rho_min = 1e-4;
  double rho_max = 0.3;
  std::size_t points = 50;
  double kappa = theory::kDefaultKappa;
  std::string spacing = "log";
};

void run_bounds(const Global &g, const BoundsArgs &a) {
  if (!(a.rho_min > 0.0 && a.rho_min <= a.rho_max && a.rho_max < 1.0))
    throw InvalidArgument("bounds: need 0 < rho-min <= rho-max < 1");
  if (a.points == 0)
    throw InvalidArgument("bounds: points must be at least 1");
  std::vector<theory::BoundsRow> rows;
  for (std::size_t i = 0; i < a.points; ++i) {
    const double t = a.points == 1 ? 0.0 : static_cast<double>(i) / (a.points - 1);
    double rho = a.spacing == "lin"
                     ? a.rho_min + t * (a.rho_max - a.rho_min)
                     : std::exp(std::log(a.rho_min) +
                                t * (std::log(a.rho_max) - std::log(a.rho_min)));
    if (i == 0)
      rho = a.rho_min;
    else if (i + 1 == a.points)
      rho = a.rho_max;
    rows.push_back(theory::bounds_row(a.d, rho, a.kappa));
  }
  std::ostringstream params;
  params << "seed=" << g.seed << " d=" << a.d << " rho_min=" << csv_number(a.rho_min)
         << " rho_max=" << csv_number(a.rho_max) << " points=" << a.points
         << " spacing=" << a.spacing << " kappa=" << csv_number(a.kappa);
  if (g.format == "json") {
    json arr = json::array();
    for (const auto &r : rows)
      arr.push_back({{"rho", r.rho},
                     {"tu", optional_json(r.tu)},
                     {"tl", optional_json(r.tl)},
                     {"tr", optional_json(r.tr)},
                     {"tiu", optional_json(r.tiu)},
                     {"til", optional_json(r.til)},
                     {"tif", optional_json(r.tif)},
                     {"mu_itp", optional_json(r.mu_itp)},
                     {"xi_itp", optional_json(r.xi_itp)},
                     {"mu_nitp", optional_json(r.mu_nitp)},
                     {"xi_nitp", optional_json(r.xi_nitp)},
                     {"alpha_hat", optional_json(r.alpha_hat)}});
    emit(g, dump({{"tool", "treecs"}, {"version", kVersion}, {"params", params.str()},
                  {"rows", arr}}));
  } else {
    emit(g, bounds_csv(rows, params.str()));
  }
}

// --- recover ------------------------------------------------------------------

struct RecoverArgs {
  std::string instance;
  std::string variant = "itp";
  std::optional<double> alpha;
  double kappa = 1.1;
  double c = 0.05;
  std::size_t k = 0;
  std::size_t max_iters = 2000;
  std::string vector_out;
};

void run_recover(const Global &g, const RecoverArgs &a) {
  const ProblemInstance inst = io::instance_from_json(io::load_json(a.instance));
  SolverConfig cfg;
  cfg.variant = solver_variant_from_string(a.variant);
  cfg.alpha = a.alpha;
  cfg.kappa = a.kappa;
  cfg.c = a.c;
  cfg.k = a.k;
  cfg.max_iters = a.max_iters;
  cfg.seed = g.seed;
  const SolverReport rep = solve(inst, cfg);
  json j = io::report_to_json(rep);
  j["tool"] = "treecs";
  j["version"] = kVersion;
  j["seed"] = g.seed;
  j["variant"] = to_string(cfg.variant);
  if (cfg.variant == SolverVariant::itp_constant)
    j["alpha"] = resolve_itp_alpha(inst, cfg);
  else {
    j["kappa"] = cfg.kappa;
    j["c"] = cfg.c;
  }
  j["relative_error"] = relative_error(rep.x_hat, inst.x_star);
  emit(g, dump(j));
  if (!a.vector_out.empty()) {
    std::ofstream f(a.vector_out, std::ios::binary);
    if (!f)
      throw InvalidArgument("cannot write '" + a.vector_out + "'");
    io::write_vector_text(f, rep.x_hat);
  }
}

// --- phase --------------------------------------------------------------------

struct PhaseArgs {
  int d = 2;
  std::size_t n = 500;
  std::vector<double> rho;
  std::vector<std::size_t> k;
  std::size_t trials = 10;
  double sigma = 0.0;
  std::string variant = "itp";
  std::optional<double> alpha;
  double kappa = 1.1;
  double c = 0.05;
  std::size_t max_iters = 2000;
  double success_tol = 1e-6;
  std::optional<std::size_t> n_signal;
  std::string coeff_law = "unit_gaussian";
};

void run_phase(const Global &g, const PhaseArgs &a) {
  ExperimentSpec spec;
  spec.d = a.d;
  spec.n = a.n;
  spec.rho_grid = a.rho;
  spec.k_grid = a.k;
  spec.trials = a.trials;
  spec.sigma = a.sigma;
  spec.variant = solver_variant_from_string(a.variant);
  spec.alpha = a.alpha;
  spec.kappa = a.kappa;
  spec.c = a.c;
  spec.max_iters = a.max_iters;
  spec.seed = g.seed;
  spec.success_tol = a.success_tol;
  spec.n_signal = a.n_signal;
  spec.law = coeff_law_from_string(a.coeff_law);
  const auto rows = run_phase_experiment(spec);
  if (g.format == "json") {
    json arr = json::array();
    for (const auto &r : rows)
      arr.push_back({{"rho", r.rho},
                     {"k", r.k},
                     {"n_signal", r.n_signal},
                     {"success_rate", r.success_rate},
                     {"mean_rel_error", r.mean_rel_error},
                     {"mean_iters", r.mean_iters},
                     {"trials", r.trials}});
    const std::string csv = phase_csv(spec, rows);
    emit(g, dump({{"tool", "treecs"},
                  {"version", kVersion},
                  {"params", csv.substr(0, csv.find('\n'))},
                  {"rows", arr}}));
  } else {
    emit(g, phase_csv(spec, rows));
  }
}

// --- project ------------------------------------------------------------------

struct ProjectArgs {
  std::string topology;
  std::string vector;
  std::size_t k = 1;
};

void run_project(const Global &g, const ProjectArgs &a) {
  const TreeTopology topology = io::topology_from_json(io::load_json(a.topology));
  Eigen::VectorXd x;
  if (a.vector == "-") {
    x = io::read_vector_text(std::cin);
  } else {
    std::ifstream in(a.vector);
    if (!in)
      throw InvalidArgument("cannot open '" + a.vector + "'");
    x = io::read_vector_text(in);
  }
  const ProjectionResult p = project(topology, x, a.k);
  if (g.format == "json") {
    emit(g, dump(io::projection_to_json(p)));
  } else {
    std::ostringstream out;
    out << "# support:";
    for (NodeIndex i : p.support.indices())
      out << ' ' << i;
    out << "\n# captured_energy: " << csv_number(p.captured_energy) << '\n';
    if (p.clipped)
      out << "# clipped: tree has fewer than k nodes\n";
    io::write_vector_text(out, p.projected);
    emit(g, out.str());
  }
}

// --- rip-estimate -------------------------------------------------------------

struct RipArgs {
  std::string instance;
  int d = 2;
  std::size_t n = 400;
  std::optional<std::size_t> n_signal;
  std::vector<std::size_t> s{1};
  std::size_t samples = 10'000;
  std::size_t matrices = 1;
};

void run_rip(const Global &g, const RipArgs &a) {
  if (a.matrices == 0)
    throw InvalidArgument("rip-estimate: matrices must be at least 1");
  std::optional<ProblemInstance> inst;
  if (!a.instance.empty())
    inst = io::instance_from_json(io::load_json(a.instance));
  const std::size_t n_signal =
      inst ? inst->cols() : a.n_signal.value_or(default_signal_length(a.d, a.n, 1));
  const TreeTopology topology = inst ? inst->topology : build_complete_tree(n_signal, a.d);
  const std::size_t n = inst ? inst->rows() : a.n;
  const std::size_t matrices = inst ? 1 : a.matrices;

  std::ostringstream params;
  params << "seed=" << g.seed << " n=" << n << " n_signal=" << n_signal
         << " d=" << topology.order() << " samples=" << a.samples << " matrices=" << matrices;
  if (inst)
    params << " instance=" << a.instance;

  std::ostringstream csv;
  csv << header_comment(params.str());
  csv << "matrix,s,rho,lower_hat,upper_hat,n_supports_sampled,exhaustive,order_exceeds_rows\n";
  json arr = json::array();
  for (std::size_t m = 0; m < matrices; ++m) {
    const Eigen::MatrixXd generated =
        inst ? Eigen::MatrixXd() : sample_gaussian_matrix(n, n_signal, derive_seed(g.seed, m));
    const Eigen::MatrixXd &a_mat = inst ? inst->matrix_a : generated;
    for (std::size_t s : a.s) {
      const RipEstimate e =
          estimate_tree_rip(a_mat, topology, s, a.samples, derive_seed(g.seed, 1000 + m));
      const double rho = static_cast<double>(s) / static_cast<double>(n);
      csv << m << ',' << s << ',' << csv_number(rho) << ',' << csv_number(e.lower_hat) << ','
          << csv_number(e.upper_hat) << ',' << e.n_supports_sampled << ','
          << (e.exhaustive ? 1 : 0) << ',' << (e.order_exceeds_rows ? 1 : 0) << '\n';
      json row = io::rip_estimate_to_json(e);
      row["matrix"] = m;
      row["rho"] = rho;
      arr.push_back(row);
    }
  }
  if (g.format == "json")
    emit(g, dump({{"tool", "treecs"}, {"version", kVersion}, {"params", params.str()},
                  {"rows", arr}}));
  else
    emit(g, csv.str());
}

// --- instance / topology ------------------------------------------------------

struct InstanceArgs {
  int d = 2;
  std::size_t n = 100;
  std::optional<std::size_t> n_signal;
  std::size_t k = 5;
  double sigma = 0.0;
  std::string coeff_law = "unit_gaussian";
};

void run_instance(const Global &g, const InstanceArgs &a) {
  const std::size_t N = a.n_signal.value_or(default_signal_length(a.d, a.n, a.k));
  InstanceSpec spec;
  spec.n = a.n;
  spec.k = a.k;
  spec.sigma = a.sigma;
  spec.law = coeff_law_from_string(a.coeff_law);
  spec.seed = g.seed;
  emit(g, io::instance_to_json(make_instance(build_complete_tree(N, a.d), spec)).dump() + "\n");
}

struct TopologyArgs {
  int d = 2;
  std::size_t n_nodes = 15;
};

void run_topology(const Global &g, const TopologyArgs &a) {
  emit(g, io::topology_to_json(build_complete_tree(a.n_nodes, a.d)).dump() + "\n");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Tree-sparse recovery by iterative tree projection, and the asymptotic "
               "recovery thresholds for Gaussian measurements."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Global g;
  app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--out", g.out, "Output file (default: standard output)");
  app.add_option("--format", g.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto *thr = app.add_subcommand("thresholds", "Oversampling thresholds and their reciprocals");
  ThresholdArgs ta;
  thr->add_option("--d", ta.d, "Tree orders")->capture_default_str();
  thr->add_option("--variant", ta.variants, "itp and/or nitp")->capture_default_str();
  thr->add_option("--analysis", ta.analyses, "rip, sp and/or prior")->capture_default_str();
  thr->add_option("--kappa", ta.kappa, "NITP shrink parameter")->capture_default_str();
  thr->add_flag("--compare", ta.compare,
                "Binary-tree comparison of the RIP analysis against the prior bound");

  auto *bnd = app.add_subcommand("bounds", "Bound, factor and step curves on a rho grid");
  BoundsArgs ba;
  bnd->add_option("--d", ba.d, "Tree order")->capture_default_str();
  bnd->add_option("--rho-min", ba.rho_min)->capture_default_str();
  bnd->add_option("--rho-max", ba.rho_max)->capture_default_str();
  bnd->add_option("--points", ba.points)->capture_default_str();
  bnd->add_option("--spacing", ba.spacing)
      ->check(CLI::IsMember({"lin", "log"}))
      ->capture_default_str();
  bnd->add_option("--kappa", ba.kappa)->capture_default_str();

  auto *rec = app.add_subcommand("recover", "Solve one instance with ITP or NITP");
  RecoverArgs ra;
  rec->add_option("--instance", ra.instance, "Instance JSON file")->required();
  rec->add_option("--variant", ra.variant)
      ->check(CLI::IsMember({"itp", "nitp"}))
      ->capture_default_str();
  auto *alpha_opt = rec->add_option("--alpha", ra.alpha, "ITP step (default: optimal at k/n)");
  rec->add_option("--kappa", ra.kappa)->capture_default_str()->excludes(alpha_opt);
  rec->add_option("--c", ra.c)->capture_default_str();
  rec->add_option("--k", ra.k, "Sparsity (default: the instance's)");
  rec->add_option("--max-iters", ra.max_iters)->capture_default_str();
  rec->add_option("--vector-out", ra.vector_out, "Write the recovered vector as text");

  auto *ph = app.add_subcommand("phase", "Monte Carlo recovery rates over a rho or k grid");
  PhaseArgs pa;
  ph->add_option("--d", pa.d)->capture_default_str();
  ph->add_option("--n", pa.n, "Measurements")->capture_default_str();
  auto *rho_opt = ph->add_option("--rho", pa.rho, "Grid of k/n values");
  ph->add_option("--k", pa.k, "Grid of sparsities")->excludes(rho_opt);
  ph->add_option("--trials", pa.trials)->capture_default_str();
  ph->add_option("--sigma", pa.sigma)->capture_default_str();
  ph->add_option("--variant", pa.variant)
      ->check(CLI::IsMember({"itp", "nitp"}))
      ->capture_default_str();
  ph->add_option("--alpha", pa.alpha);
  ph->add_option("--kappa", pa.kappa)->capture_default_str();
  ph->add_option("--c", pa.c)->capture_default_str();
  ph->add_option("--max-iters", pa.max_iters)->capture_default_str();
  ph->add_option("--success-tol", pa.success_tol)->capture_default_str();
  ph->add_option("--n-signal", pa.n_signal, "Signal length (default: complete tree)");
  ph->add_option("--coeff-law", pa.coeff_law)
      ->check(CLI::IsMember({"unit_gaussian", "rademacher", "flat_ones"}))
      ->capture_default_str();

  auto *prj = app.add_subcommand("project", "Exact tree projection of a vector");
  ProjectArgs pj;
  prj->add_option("--topology", pj.topology, "Topology JSON file")->required();
  prj->add_option("--vector", pj.vector, "Vector text file, or - for stdin")->required();
  prj->add_option("--k", pj.k)->required();

  auto *rip = app.add_subcommand("rip-estimate", "Empirical tree-RIP constants");
  RipArgs ria;
  rip->add_option("--instance", ria.instance, "Use this instance's matrix");
  rip->add_option("--d", ria.d)->capture_default_str();
  rip->add_option("--n", ria.n)->capture_default_str();
  rip->add_option("--n-signal", ria.n_signal);
  rip->add_option("--s", ria.s, "Orders")->capture_default_str();
  rip->add_option("--samples", ria.samples)->capture_default_str();
  rip->add_option("--matrices", ria.matrices)->capture_default_str();

  auto *ins = app.add_subcommand("instance", "Draw a problem instance as JSON");
  InstanceArgs ia;
  ins->add_option("--d", ia.d)->capture_default_str();
  ins->add_option("--n", ia.n)->capture_default_str();
  ins->add_option("--n-signal", ia.n_signal);
  ins->add_option("--k", ia.k)->capture_default_str();
  ins->add_option("--sigma", ia.sigma)->capture_default_str();
  ins->add_option("--coeff-law", ia.coeff_law)
      ->check(CLI::IsMember({"unit_gaussian", "rademacher", "flat_ones"}))
      ->capture_default_str();

  auto *top = app.add_subcommand("topology", "Complete d-ary tree as JSON");
  TopologyArgs to;
  top->add_option("--d", to.d)->capture_default_str();
  top->add_option("--nodes", to.n_nodes)->capture_default_str();

  for (CLI::App *sub : app.get_subcommands({}))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*thr)
      run_thresholds(g, ta);
    else if (*bnd)
      run_bounds(g, ba);
    else if (*rec)
      run_recover(g, ra);
    else if (*ph)
      run_phase(g, pa);
    else if (*prj)
      run_project(g, pj);
    else if (*rip)
      run_rip(g, ria);
    else if (*ins)
      run_instance(g, ia);
    else if (*top)
      run_topology(g, to);
  } catch (const NumericalError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
