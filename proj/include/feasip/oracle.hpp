#pragma once

#include "feasip/constraints.hpp"
#include "feasip/parallel.hpp"
#include "feasip/problem.hpp"
#include "feasip/solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace feasip {

struct Violation {
    int pair = 0;
    double t = 0.0;
    double distance = 0.0;
};

struct FeasibilityReport {
    std::size_t sampled_instants = 0;
    double min_distance = 0.0;
    double min_distance_time = 0.0;
    int min_distance_pair = -1;
    std::vector<Violation> violations;

    bool feasible() const { return violations.empty(); }
};

/// Sampling instants 0, dt, 2 dt, ... up to T, with T always included.
std::vector<double> audit_times(double horizon, double dt);

/// Distance of one collision pair at one configuration.
double pair_distance(const Problem& problem, const CollisionPair& pair, const ChainPose& pose);

/// Exhaustive dense audit of every pair. Throws std::invalid_argument when
/// dt <= 0 or the trajectory does not match the chain.
FeasibilityReport verify_feasibility(const Problem& problem, const TrajectoryParams& params, double dt,
                                     Exec exec = Exec::parallel);

struct LipschitzSample {
    double bound = 0.0;            ///< analytic lipschitz_bound
    double l1_star = 0.0;          ///< max observed speed over all trials
    std::vector<double> per_trial; ///< max observed speed per trial
};

/// Largest finite-difference speed of any vertex of the primitive along
/// q(t) = q0 + rate * t, t in [0, duration].
double observed_speed(const KinematicChain& chain, int link, int index, const Eigen::VectorXd& q0,
                      const Eigen::VectorXd& rate, double duration, double dt);

/// Random linear joint trajectories with max |rate_k| = 1 kept inside the
/// joint limits for `duration` seconds.
LipschitzSample lipschitz_ground_truth(const KinematicChain& chain, int link, int index, int trials, double dt,
                                       std::uint64_t seed, double duration = 1.0);

struct ExchangeConfig {
    double eps = 1e-3;             ///< sampling interval of the violation scan
    int max_rounds = 50;
    bool limit_barriers = false;
    double extension_ratio = 0.1;  ///< P is continued quadratically below extension_ratio * x0
    /// Start every round after the first from the initial trajectory when it
    /// is feasible at all sampled instants; otherwise warm-start from the
    /// previous round.
    bool restart_from_feasible = true;
    SolverConfig solver;
};

struct ExchangeResult {
    TrajectoryParams params;
    ConvergenceLog log;
    bool converged = false;          ///< NLP converged and the last scan found nothing new
    bool sampled_feasible = false;   ///< no violation at the sampled instants
    int rounds = 0;
    std::size_t instants = 0;        ///< size of the index set
    double objective = 0.0;
    std::string message;
};

/// P continued below xs by its second-order Taylor expansion, finite everywhere.
PenaltyValue extended_penalty(double x, double x0, double xs);

/// Classical exchange method: alternate a violation scan at spacing eps with
/// a barrier-Newton solve on the sampled instants. No safety check, no
/// subdivision.
ExchangeResult exchange_solve(const Problem& problem, const ExchangeConfig& config);

}  // namespace feasip
