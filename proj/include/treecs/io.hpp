#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "treecs/itp_solvers.hpp"
#include "treecs/measurement_sim.hpp"
#include "treecs/tree_model.hpp"
#include "treecs/tree_projection.hpp"

namespace treecs::io {

using nlohmann::json;

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// {"n": N, "d": d, "parent": [null, 0, 0, ...]}
json topology_to_json(const TreeTopology &topology);
TreeTopology topology_from_json(const json &j);

/// One value per line, 17 significant digits.
void write_vector_text(std::ostream &out, const Eigen::VectorXd &v);
/// Whitespace-separated reals; '#' starts a comment that runs to end of line.
Eigen::VectorXd read_vector_text(std::istream &in);

/// Header fields (n, N, k, d, sigma, seed, coeff_law) followed by the
/// topology, true support, matrix rows, x*, e and b.
json instance_to_json(const ProblemInstance &instance);
/// Rebuilds the instance; b is recomputed and must match the stored copy.
ProblemInstance instance_from_json(const json &j);

json report_to_json(const SolverReport &report);
json projection_to_json(const ProjectionResult &result);
json rip_estimate_to_json(const RipEstimate &estimate);

std::string read_file(const std::filesystem::path &path);
json load_json(const std::filesystem::path &path);

} // namespace treecs::io
