#include "feasip/solver.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace feasip {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double inf_norm(const Eigen::VectorXd& v)
{
    return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

}  // namespace

std::string ConvergenceLog::csv() const
{
    std::ostringstream out;
    out << "iteration,E,grad_inf,alpha,subdivisions,active_terms,mu\n";
    for (const auto& r : rows)
        out << r.iteration << ',' << fmt(r.energy) << ',' << fmt(r.grad_inf) << ',' << fmt(r.alpha) << ','
            << r.subdivisions << ',' << r.active_terms << ',' << fmt(r.mu) << '\n';
    return out.str();
}

std::string ConvergenceLog::timing_csv() const
{
    std::ostringstream out;
    out << "iteration,wall_ms\n";
    for (const auto& r : rows)
        out << r.iteration << ',' << fmt(r.wall_ms) << '\n';
    return out.str();
}

Eigen::VectorXd search_direction(const Eigen::VectorXd& gradient, const Eigen::MatrixXd& hessian, Order order,
                                 const SolverConfig& config)
{
    if (!gradient.allFinite())
        throw std::domain_error("search_direction: gradient is not finite");
    if (order == Order::first || gradient.isZero(0.0))
        return -gradient;
    if (hessian.rows() != gradient.size() || hessian.cols() != gradient.size())
        throw std::invalid_argument("search_direction: Hessian has the wrong shape");
    if (!hessian.allFinite())
        throw std::domain_error("search_direction: Hessian is not finite");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(config.beta_min).cwiseMin(config.beta_max);
    const Eigen::MatrixXd& v = eig.eigenvectors();
    return -(v * (v.transpose() * gradient).cwiseQuotient(lambda));
}

LineSearchResult line_search(const Problem& problem, const Objective& objective, SolverState& state,
                             EnergyResult& current, Eigen::VectorXd direction, const SolverConfig& config)
{
    const BarrierSpec& spec = problem.barrier;
    LineSearchResult out;
    double alpha = spec.alpha0;
    const Eigen::VectorXd& theta = state.params.theta();

    for (;;) {
        if (++state.events > config.max_line_search_events)
            throw StallError("line search exceeded " + std::to_string(config.max_line_search_events) +
                             " shrink/subdivide events");
        const Eigen::VectorXd trial_theta = theta + alpha * direction;
        if (trial_theta == theta && !direction.isZero(0.0)) {
            // the step no longer changes theta; nothing left to gain at this precision
            out.alpha = 0.0;
            out.direction = direction;
            out.energy = current;
            out.stalled = true;
            return out;
        }
        const TrajectoryParams trial = state.params.with_theta(trial_theta);
        const ConstraintEvaluator eval(problem, state.bvh, trial, config.exec);

        if (const auto violation = eval.safety_check()) {
            ++out.safety_rejections;
            if (alpha <= state.eps_alpha) {
                state.eps_alpha *= spec.gamma;
                state.bvh.subdivide(violation->leaf);
                ++out.subdivisions;
                current = assemble_energy(problem, state.bvh, state.params, objective, state.mu, config.order,
                                          config.exec);
                direction = search_direction(current.gradient, current.hessian, config.order, config);
            } else {
                alpha *= spec.gamma;
            }
            continue;
        }

        EnergyResult e = eval.energy(objective, state.mu, config.order);
        const double slope = direction.dot(current.gradient);
        if (!std::isfinite(e.value) || !(e.value <= current.value + spec.c_wolfe * alpha * slope)) {
            ++out.wolfe_rejections;
            alpha *= spec.gamma;
            continue;
        }
        out.alpha = alpha;
        out.direction = std::move(direction);
        out.energy = std::move(e);
        return out;
    }
}

void presubdivide(const Problem& problem, const TrajectoryParams& params, StBvh& bvh, int max_rounds, Exec exec)
{
    const BarrierSpec& spec = problem.barrier;
    if (problem.limit_barriers && !std::isfinite(limit_barrier(params, problem.chain, spec).value))
        throw InfeasibleStartError("initial trajectory touches a joint-limit or rate bound", -1, 0.0);

    for (int round = 0;; ++round) {
        const ConstraintEvaluator eval(problem, bvh, params, exec);
        const std::vector<LeafDistance> violations = eval.safety_violations();
        if (violations.empty())
            return;
        for (const auto& v : violations)
            if (v.distance <= spec.d0)
                throw InfeasibleStartError("initial trajectory violates clearance: pair " +
                                               std::to_string(v.leaf.pair) + " at t = " + fmt(v.leaf.midpoint()) +
                                               " has distance " + fmt(v.distance),
                                           v.leaf.pair, v.leaf.midpoint());
        if (round == max_rounds) {
            const auto& v = violations.front();
            throw InfeasibleStartError("initial trajectory still fails the safety check after " +
                                           std::to_string(max_rounds) + " subdivision rounds: pair " +
                                           std::to_string(v.leaf.pair) + " at t = " + fmt(v.leaf.midpoint()),
                                       v.leaf.pair, v.leaf.midpoint());
        }
        for (const auto& v : violations)
            bvh.subdivide(v.leaf);
    }
}

SolveResult solve(const Problem& problem, const SolverConfig& config)
{
    return solve(problem, config, TrajectoryParams(problem.layout, problem.start));
}

SolveResult solve(const Problem& problem, const SolverConfig& config, const TrajectoryParams& initial)
{
    problem.validate();
    const BarrierSpec& spec = problem.barrier;
    const Objective objective = make_objective(problem.chain, problem.objective);
    const auto clock_start = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - clock_start).count();
    };

    SolverState state;
    state.params = initial;
    state.mu = spec.mu;
    state.eps_alpha = spec.eps_alpha;
    state.bvh = init_intervals(problem, problem.initial_splits);
    presubdivide(problem, state.params, state.bvh, config.max_presubdivide_rounds, config.exec);

    SolveResult result;
    int iteration = 0;
    auto record = [&](const EnergyResult& e, double alpha) {
        IterationRecord r;
        r.iteration = iteration;
        r.energy = e.value;
        r.grad_inf = inf_norm(e.gradient);
        r.alpha = alpha;
        r.subdivisions = state.bvh.subdivisions();
        r.active_terms = e.active_terms;
        r.mu = state.mu;
        r.wall_ms = elapsed_ms();
        state.log.rows.push_back(r);
        if (config.record_theta)
            state.log.thetas.push_back(state.params.theta());
    };

    EnergyResult current =
        assemble_energy(problem, state.bvh, state.params, objective, state.mu, config.order, config.exec);
    if (!current.finite())
        throw InfeasibleStartError("initial energy is not finite", -1, 0.0);
    record(current, 0.0);

    double eps_d = spec.eps_d;
    bool last_inner_converged = false;
    while (state.mu > spec.eps_mu) {
        current = assemble_energy(problem, state.bvh, state.params, objective, state.mu, config.order, config.exec);
        int inner = 0;
        last_inner_converged = false;
        for (;;) {
            if (inf_norm(current.gradient) <= eps_d) {
                last_inner_converged = true;
                break;
            }
            if (inner == config.max_inner_iterations) {
                ++result.inner_caps_hit;
                break;
            }
            if (config.step_floor == StepFloorPolicy::reset)
                state.eps_alpha = spec.eps_alpha;
            const Eigen::VectorXd d = search_direction(current.gradient, current.hessian, config.order, config);
            LineSearchResult ls = line_search(problem, objective, state, current, d, config);
            if (ls.stalled) {
                ++result.precision_stalls;
                break;
            }
            state.params.set_theta(state.params.theta() + ls.alpha * ls.direction);
            current = std::move(ls.energy);
            ++iteration;
            ++inner;
            record(current, ls.alpha);
        }
        state.mu *= spec.gamma;
        eps_d *= config.eps_d_decay;
    }

    result.final_grad_inf = inf_norm(current.gradient);
    result.final_mu = state.mu;
    result.converged = last_inner_converged;
    result.objective = objective(state.params, false).value;
    result.params = std::move(state.params);
    result.bvh = std::move(state.bvh);
    result.log = std::move(state.log);
    return result;
}

}  // namespace feasip
