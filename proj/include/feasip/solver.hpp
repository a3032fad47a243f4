#pragma once

#include "feasip/constraints.hpp"
#include "feasip/objective.hpp"
#include "feasip/parallel.hpp"
#include "feasip/problem.hpp"

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace feasip {

/// How the step floor eps_alpha evolves between line searches.
enum class StepFloorPolicy {
    carry,   ///< every subdivision shrinks it for the rest of the solve
    reset,   ///< each line search starts again from BarrierSpec::eps_alpha
};

struct SolverConfig {
    Order order = Order::second;
    StepFloorPolicy step_floor = StepFloorPolicy::reset;
    double beta_min = 1e-6;   ///< lower eigenvalue clamp of the modulated Hessian
    double beta_max = 1e6;    ///< upper eigenvalue clamp
    int max_inner_iterations = 500;
    long max_line_search_events = 1'000'000;
    int max_presubdivide_rounds = 32;
    double eps_d_decay = 1.0;  ///< eps_d multiplier per outer iteration; 1 keeps it fixed
    Exec exec = Exec::parallel;
    bool record_theta = true;
};

struct IterationRecord {
    int iteration = 0;
    double energy = 0.0;
    double grad_inf = 0.0;
    double alpha = 0.0;
    std::size_t subdivisions = 0;
    std::size_t active_terms = 0;
    double mu = 0.0;
    double wall_ms = 0.0;  ///< not part of the reproducible log
};

/// Append-only record of accepted iterates; row 0 is the initial point.
struct ConvergenceLog {
    std::vector<IterationRecord> rows;
    std::vector<Eigen::VectorXd> thetas;  ///< per row when recorded

    /// Reproducible CSV: every column except wall time.
    std::string csv() const;
    std::string timing_csv() const;
};

struct SolverState {
    TrajectoryParams params;
    double mu = 0.0;
    double eps_alpha = 0.0;
    StBvh bvh;
    ConvergenceLog log;
    long events = 0;
};

class InfeasibleStartError : public std::runtime_error {
public:
    InfeasibleStartError(const std::string& what, int pair, double t)
        : std::runtime_error(what), pair_(pair), t_(t) {}
    int pair() const { return pair_; }
    double time() const { return t_; }

private:
    int pair_;
    double t_;
};

class StallError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// d1 = -grad; d2 = -M(H)^-1 grad with eigenvalues of H clamped to
/// [beta_min, beta_max]. Throws std::domain_error on a non-finite gradient.
Eigen::VectorXd search_direction(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian, Order order,
                                 const SolverConfig& config);

struct LineSearchResult {
    double alpha = 0.0;
    Eigen::VectorXd direction;  ///< the direction finally used (recomputed after subdivisions)
    EnergyResult energy;        ///< at the accepted point
    std::size_t subdivisions = 0;
    std::size_t safety_rejections = 0;
    std::size_t wolfe_rejections = 0;
    bool stalled = false;       ///< alpha underflowed to a zero step
};

/// Wolfe line search with safety check and subdivision. `current` is E at
/// state.params and is refreshed when a subdivision re-evaluates it.
LineSearchResult line_search(const Problem& problem, const Objective& objective, SolverState& state,
                             EnergyResult& current, Eigen::VectorXd direction, const SolverConfig& config);

struct SolveResult {
    TrajectoryParams params;
    StBvh bvh;
    ConvergenceLog log;
    bool converged = false;
    int inner_caps_hit = 0;
    int precision_stalls = 0;
    double final_grad_inf = 0.0;
    double final_mu = 0.0;
    double objective = 0.0;
};

/// Subdivides every violating leaf until params is safe. Throws
/// InfeasibleStartError when the configuration itself is infeasible or the
/// round cap is reached.
void presubdivide(const Problem& problem, const TrajectoryParams& params, StBvh& bvh, int max_rounds,
                  Exec exec = Exec::parallel);

SolveResult solve(const Problem& problem, const SolverConfig& config);
SolveResult solve(const Problem& problem, const SolverConfig& config, const TrajectoryParams& initial);

}  // namespace feasip
