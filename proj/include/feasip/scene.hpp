#pragma once

#include "feasip/oracle.hpp"
#include "feasip/problem.hpp"
#include "feasip/solver.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace feasip {

/// Schema violation; `path` names the offending field, e.g. chain.joints[1].axis.
class SceneError : public std::runtime_error {
public:
    SceneError(const std::string& path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

struct Scene {
    Problem problem;
    SolverConfig solver;
    std::uint64_t seed = 0;
    double dt_audit = 1e-3;
    std::vector<double> exchange_eps{0.1, 0.01};
    int exchange_max_rounds = 50;
    bool exchange_limit_barriers = false;
};

Scene parse_scene(const std::string& text, const std::string& source = "scene");
Scene load_scene(const std::filesystem::path& path);

struct TrajectoryMetadata {
    std::string scene;
    std::string method = "feasible";
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t subdivisions = 0;
    double objective = 0.0;
    double mu = 0.0;
};

std::string trajectory_json(const TrajectoryParams& params, const TrajectoryMetadata& meta);
/// Throws SceneError on malformed input.
TrajectoryParams parse_trajectory(const std::string& text);
TrajectoryParams load_trajectory(const std::filesystem::path& path);

/// One record per line: an `audit` summary followed by `violation` records.
std::string audit_records(const FeasibilityReport& report, double dt, double d0, std::size_t max_violations = 50);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace feasip
