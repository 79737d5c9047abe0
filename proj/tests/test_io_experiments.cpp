#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "treecs/errors.hpp"
#include "treecs/experiments.hpp"
#include "treecs/io.hpp"

using namespace treecs;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status;
  std::string out;
};

Run run_cli(const std::string &args) {
  const std::string cmd = std::string(TREECS_CLI) + " " + args + " 2>/dev/null";
  FILE *pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  std::size_t got;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0)
    out.append(buf.data(), got);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "treecs_io_tests";
  fs::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 3.141592653589793, 123456789.123})
    CHECK(std::stod(io::format_double(v)) == v);
  CHECK(io::format_double(0.5) == "0.5");
}

TEST_CASE("topology JSON") {
  const TreeTopology t = build_complete_tree(10, 3);
  const io::json j = io::topology_to_json(t);
  CHECK(j["n"] == 10);
  CHECK(j["d"] == 3);
  CHECK(j["parent"][0].is_null());
  CHECK(io::topology_from_json(j) == t);

  io::json bad = j;
  bad["parent"][4] = 4;
  CHECK_THROWS_AS(io::topology_from_json(bad), InvalidArgument);
  bad = j;
  bad["n"] = 11;
  CHECK_THROWS_AS(io::topology_from_json(bad), InvalidArgument);
}

TEST_CASE("vector text") {
  Eigen::VectorXd v(4);
  v << 1.0, -0.1, 1e-20, 12345.678901234567;
  std::stringstream s;
  io::write_vector_text(s, v);
  CHECK(io::read_vector_text(s) == v);

  std::istringstream commented("# header\n1 2\n3 # trailing\n\n4e0\n");
  const Eigen::VectorXd r = io::read_vector_text(commented);
  REQUIRE(r.size() == 4);
  CHECK(r[3] == 4.0);

  std::istringstream junk("1 2 x");
  CHECK_THROWS_AS(io::read_vector_text(junk), InvalidArgument);
}

TEST_CASE("instance JSON") {
  const TreeTopology t = build_complete_tree(31, 2);
  const ProblemInstance inst = make_instance(t, {12, 4, 0.05, CoeffLaw::rademacher, 9});
  const io::json j = io::instance_to_json(inst);
  const ProblemInstance back = io::instance_from_json(j);
  CHECK(back.matrix_a == inst.matrix_a);
  CHECK(back.x_star == inst.x_star);
  CHECK(back.noise_e == inst.noise_e);
  CHECK(back.b == inst.b);
  CHECK(back.support == inst.support);
  CHECK(back.k == 4);
  CHECK(back.seed == 9);
  CHECK(back.law == CoeffLaw::rademacher);

  // Text round trip too.
  const ProblemInstance again = io::instance_from_json(io::json::parse(j.dump()));
  CHECK(again.matrix_a == inst.matrix_a);

  io::json bad = j;
  bad["b"][0] = bad["b"][0].get<double>() + 1.0;
  CHECK_THROWS_AS(io::instance_from_json(bad), InvalidArgument);
}

TEST_CASE("report and projection JSON") {
  const TreeTopology t = build_complete_tree(63, 2);
  const ProblemInstance inst = make_instance(t, {30, 3, 0.0, CoeffLaw::unit_gaussian, 2});
  const SolverReport rep = solve(inst, SolverConfig{});
  const io::json j = io::report_to_json(rep);
  CHECK(j["iterations"] == rep.iterations);
  CHECK(j["objective_trace"].size() == rep.iterations + 1);
  CHECK(j["support"].size() == 3);
  CHECK(j.contains("termination"));

  Eigen::VectorXd x = Eigen::VectorXd::Zero(7);
  x << 1, 2, 3, 4, 5, 6, 7;
  const io::json p = io::projection_to_json(project(build_complete_tree(7, 2), x, 3));
  CHECK(p["support"] == io::json::array({0, 2, 6}));
  CHECK(p["captured_energy"].get<double>() == 59.0);
}

TEST_CASE("signal length default") {
  CHECK(default_signal_length(2, 500, 5) == 1023);
  CHECK(default_signal_length(2, 10, 1) == 31);
  CHECK(default_signal_length(2, 100, 10) == 255);
  CHECK(default_signal_length(4, 500, 5) == 1365);
  CHECK(default_signal_length(3, 400, 4) == 1093);
}

TEST_CASE("experiment settings validation") {
  ExperimentSpec s;
  s.n = 50;
  CHECK_THROWS_AS(s.validate(), InvalidArgument); // empty grid
  s.rho_grid = {0.1};
  s.k_grid = {3};
  CHECK_THROWS_AS(s.validate(), InvalidArgument); // both grids
  s.k_grid.clear();
  CHECK_NOTHROW(s.validate());
  s.trials = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("phase experiment regimes and determinism") {
  ExperimentSpec s;
  s.n = 120;
  s.rho_grid = {0.02, 0.05, 0.7, 0.9};
  s.trials = 10;
  s.seed = 5;
  s.n_signal = 255;
  s.variant = SolverVariant::nitp; // no optimal constant step exists for k/n >= 1/3
  const auto rows = run_phase_experiment(s);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].k == 2);
  CHECK(rows[1].k == 6);
  CHECK(rows[0].success_rate == 1.0);
  CHECK(rows[1].success_rate >= 0.9);
  CHECK(rows[2].success_rate == 0.0);
  CHECK(rows[3].success_rate == 0.0);
  CHECK(rows[0].success_rate + 0.2 >= rows[1].success_rate);
  CHECK(rows[1].success_rate + 0.2 >= rows[2].success_rate);

  const auto again = run_phase_experiment(s);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(again[i].success_rate == rows[i].success_rate);
    CHECK(again[i].mean_rel_error == rows[i].mean_rel_error);
    CHECK(again[i].mean_iters == rows[i].mean_iters);
  }

  const std::string csv = phase_csv(s, rows);
  CHECK(csv.rfind("# treecs 0.1.0", 0) == 0);
  CHECK(csv == phase_csv(s, again));
}

TEST_CASE("threshold tables") {
  const auto rows = threshold_table({2, 4}, {theory::Variant::itp, theory::Variant::nitp},
                                    {theory::Analysis::rip, theory::Analysis::stable_point,
                                     theory::Analysis::prior});
  CHECK(rows.size() == 10); // prior only for d = 2
  for (const auto &r : rows)
    CHECK(r.reciprocal == static_cast<long long>(std::ceil(1 / r.rho_hat)));
  const auto cmp = comparison_table();
  REQUIRE(cmp.size() == 2);
  CHECK(cmp[0].factor == cmp[0].recip_prior / cmp[0].recip_rip);
}

TEST_CASE("command line") {
  const fs::path dir = scratch_dir();
  const std::string topo = (dir / "t.json").string();
  const std::string vec = (dir / "v.txt").string();
  const std::string inst = (dir / "i.json").string();

  CHECK(run_cli("topology --d 2 --nodes 7 --out " + topo).status == 0);
  {
    std::ofstream v(vec);
    v << "1 2 3 4 5 6 7\n";
  }
  const Run proj = run_cli("project --topology " + topo + " --vector " + vec + " --k 3");
  CHECK(proj.status == 0);
  CHECK(proj.out.find("# support: 0 2 6") != std::string::npos);

  const Run pj = run_cli("--format json project --topology " + topo + " --vector " + vec +
                         " --k 3");
  CHECK(pj.status == 0);
  CHECK(io::json::parse(pj.out)["support"] == io::json::array({0, 2, 6}));

  CHECK(run_cli("instance --d 2 --n 40 --n-signal 63 --k 3 --seed 4 --out " + inst).status == 0);
  const Run rec = run_cli("recover --instance " + inst + " --variant nitp");
  CHECK(rec.status == 0);
  const io::json report = io::json::parse(rec.out);
  CHECK(report["relative_error"].get<double>() < 1e-6);

  const Run thr = run_cli("thresholds --d 2 --variant itp --analysis rip");
  CHECK(thr.status == 0);
  CHECK(thr.out.find("115") != std::string::npos);

  const Run b1 = run_cli("bounds --d 2 --points 5");
  const Run b2 = run_cli("bounds --d 2 --points 5");
  CHECK(b1.status == 0);
  CHECK(b1.out == b2.out);

  CHECK(run_cli("phase --n 30 --rho 0.1 --trials 2 --seed 1").status == 0);
  CHECK(run_cli("rip-estimate --d 2 --n 20 --n-signal 31 --s 2 --samples 50").status == 0);

  // Usage and argument errors.
  CHECK(run_cli("no-such-command").status == 2);
  CHECK(run_cli("project --topology " + topo + " --vector " + vec + " --k 0").status == 2);
  CHECK(run_cli("recover --instance " + inst + " --alpha 0.5 --kappa 1.2").status == 2);
  CHECK(run_cli("recover --instance " + (dir / "missing.json").string()).status == 2);
}
