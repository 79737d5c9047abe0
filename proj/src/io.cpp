#include "treecs/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "treecs/errors.hpp"

namespace treecs::io {

namespace {

json vector_to_json(const Eigen::VectorXd &v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json &j, const char *what) {
  if (!j.is_array())
    throw InvalidArgument(std::string("instance: field '") + what + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const json &field(const json &j, const char *name) {
  if (!j.is_object() || !j.contains(name))
    throw InvalidArgument(std::string("missing field '") + name + "'");
  return j.at(name);
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json topology_to_json(const TreeTopology &topology) {
  json parents = json::array();
  for (const auto &p : topology.parents())
    parents.push_back(p ? json(*p) : json(nullptr));
  return {{"n", topology.size()}, {"d", topology.order()}, {"parent", parents}};
}

TreeTopology topology_from_json(const json &j) {
  try {
    const json &arr = field(j, "parent");
    std::vector<std::optional<NodeIndex>> parent;
    parent.reserve(arr.size());
    for (const json &p : arr)
      parent.push_back(p.is_null() ? std::nullopt
                                   : std::optional<NodeIndex>(p.get<NodeIndex>()));
    if (j.contains("n") && j.at("n").get<std::size_t>() != parent.size())
      throw InvalidArgument("topology: 'n' disagrees with the parent array length");
    return TreeTopology(std::move(parent), field(j, "d").get<int>());
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("topology: malformed JSON: ") + e.what());
  }
}

void write_vector_text(std::ostream &out, const Eigen::VectorXd &v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out << format_double(v[i]) << '\n';
}

Eigen::VectorXd read_vector_text(std::istream &in) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size())
        throw InvalidArgument("vector text: cannot parse '" + token + "'");
      values.push_back(v);
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json instance_to_json(const ProblemInstance &inst) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < inst.matrix_a.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < inst.matrix_a.cols(); ++j)
      row.push_back(inst.matrix_a(i, j));
    rows.push_back(std::move(row));
  }
  return {{"format", "treecs-instance"},
          {"version", 1},
          {"n", inst.rows()},
          {"N", inst.cols()},
          {"k", inst.k},
          {"d", inst.topology.order()},
          {"sigma", inst.sigma},
          {"seed", inst.seed},
          {"coeff_law", to_string(inst.law)},
          {"topology", topology_to_json(inst.topology)},
          {"support", inst.support.indices()},
          {"matrix", std::move(rows)},
          {"x_star", vector_to_json(inst.x_star)},
          {"noise", vector_to_json(inst.noise_e)},
          {"b", vector_to_json(inst.b)}};
}

ProblemInstance instance_from_json(const json &j) {
  try {
    TreeTopology topology = topology_from_json(field(j, "topology"));
    const json &rows = field(j, "matrix");
    const std::size_t n = field(j, "n").get<std::size_t>();
    const std::size_t N = field(j, "N").get<std::size_t>();
    if (!rows.is_array() || rows.size() != n)
      throw InvalidArgument("instance: matrix must have n rows");
    Eigen::MatrixXd a(n, N);
    for (std::size_t i = 0; i < n; ++i) {
      if (!rows[i].is_array() || rows[i].size() != N)
        throw InvalidArgument("instance: matrix rows must have N entries");
      for (std::size_t c = 0; c < N; ++c)
        a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
    }
    Eigen::VectorXd x = vector_from_json(field(j, "x_star"), "x_star");
    Eigen::VectorXd e = vector_from_json(field(j, "noise"), "noise");
    const auto support_idx = field(j, "support").get<std::vector<NodeIndex>>();
    TreeSupport support = validate_support(topology, support_idx);
    ProblemInstance inst = assemble_instance(std::move(a), std::move(x), std::move(e),
                                             field(j, "sigma").get<double>(), std::move(topology),
                                             std::move(support), j.value("seed", std::uint64_t{0}));
    if (j.contains("coeff_law"))
      inst.law = coeff_law_from_string(j.at("coeff_law").get<std::string>());
    if (j.contains("k") && j.at("k").get<std::size_t>() != inst.k)
      throw InvalidArgument("instance: 'k' disagrees with the support size");
    if (j.contains("b")) {
      const Eigen::VectorXd stored = vector_from_json(j.at("b"), "b");
      if (stored.size() != inst.b.size() ||
          (stored - inst.b).norm() > 1e-12 * std::max(1.0, inst.b.norm()))
        throw InvalidArgument("instance: stored b differs from A x* + e");
    }
    return inst;
  } catch (const json::exception &e) {
    throw InvalidArgument(std::string("instance: malformed JSON: ") + e.what());
  }
}

json report_to_json(const SolverReport &r) {
  const StablePointCheck &s = r.stable_point_check;
  json steps = json::array();
  for (const NitpStepRecord &rec : r.nitp_steps)
    steps.push_back({{"linesearch_alpha", rec.linesearch_alpha},
                     {"accepted_alpha", rec.accepted_alpha},
                     {"shrinks", rec.shrinks},
                     {"support_kept", rec.support_kept},
                     {"exit_bound", finite_or_null(rec.exit_bound)}});
  return {{"iterations", r.iterations},
          {"termination", to_string(r.termination)},
          {"support", r.support.indices()},
          {"support_changes", r.support_changes},
          {"objective_trace", r.objective_trace},
          {"stepsize_trace", r.stepsize_trace},
          {"nitp_steps", std::move(steps)},
          {"stable_point_check",
           {{"gradient_on_support_norm", s.gradient_on_support_norm},
            {"alpha_lower", s.alpha_lower},
            {"swap_margin", finite_or_null(s.swap_margin)},
            {"omegas_tested", s.omegas_tested},
            {"exhaustive", s.exhaustive},
            {"pinv_gap", finite_or_null(s.pinv_gap)}}},
          {"x_hat", vector_to_json(r.x_hat)}};
}

json projection_to_json(const ProjectionResult &p) {
  return {{"support", p.support.indices()},
          {"captured_energy", p.captured_energy},
          {"clipped", p.clipped},
          {"projected", vector_to_json(p.projected)}};
}

json rip_estimate_to_json(const RipEstimate &e) {
  return {{"order_s", e.order_s},
          {"lower_hat", e.lower_hat},
          {"upper_hat", e.upper_hat},
          {"n_supports_sampled", e.n_supports_sampled},
          {"exhaustive", e.exhaustive},
          {"order_exceeds_rows", e.order_exceeds_rows}};
}

std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json load_json(const std::filesystem::path &path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error &e) {
    throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

} // namespace treecs::io
