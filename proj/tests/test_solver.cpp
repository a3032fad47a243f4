#include "feasip/oracle.hpp"
#include "feasip/solver.hpp"

#include "support.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>

#include <random>
#include <stdexcept>

using namespace feasip;
using feasip::test::planar_point_chain;
using feasip::test::point_obstacle;

namespace {

Problem body_problem(const Eigen::Vector2d& start, double horizon, int splits)
{
    Problem p;
    p.chain = planar_point_chain(0.1);
    p.obstacles = {point_obstacle(Vec3::Zero(), 0.1)};
    p.start = start;
    p.layout.horizon = horizon;
    p.limit_barriers = false;
    p.initial_splits = splits;
    return p;
}

SolverState make_state(const Problem& p, const TrajectoryParams& params)
{
    SolverState s;
    s.params = params;
    s.mu = p.barrier.mu;
    s.eps_alpha = p.barrier.eps_alpha;
    s.bvh = init_intervals(p, p.initial_splits);
    return s;
}

// Body passing a disc obstacle on its way from (-1, 0) to (1, 0).
Problem detour_problem()
{
    Problem p;
    p.chain = planar_point_chain(0.1);
    p.obstacles = {point_obstacle(Vec3(0.0, 0.05, 0.0), 0.3)};
    p.start = Eigen::Vector2d(-1.0, 0.0);
    p.objective.end_effectors = {{1, Vec3::Zero(), Vec3(1.0, 0.0, 0.0), 1.0}};
    p.objective.smoothness_weight = 1e-3;
    return p;
}

}  // namespace

TEST_CASE("search directions")
{
    const SolverConfig config;
    CHECK(search_direction(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), Order::second, config).norm() ==
          0.0);
    const Eigen::Vector2d g(1.0, 0.0);  // gradient of |theta|^2 / 2 at (1, 0)
    CHECK((search_direction(g, Eigen::MatrixXd(), Order::first, config) - Eigen::Vector2d(-1, 0)).norm() == 0.0);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(6, 6);
        for (int i = 0; i < 36; ++i)
            a.data()[i] = u(rng);
        const Eigen::MatrixXd spd = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(6, 6);
        Eigen::VectorXd grad(6);
        for (int i = 0; i < 6; ++i)
            grad[i] = u(rng);
        const Eigen::VectorXd newton = -spd.llt().solve(grad);
        const Eigen::VectorXd d = search_direction(grad, spd, Order::second, config);
        CHECK((d - newton).norm() <= 1e-10 * newton.norm());

        // indefinite matrices still give descent directions
        const Eigen::MatrixXd indefinite = a + a.transpose();
        CHECK(search_direction(grad, indefinite, Order::second, config).dot(grad) < 0.0);
    }

    Eigen::VectorXd bad = Eigen::VectorXd::Ones(2);
    bad[1] = std::nan("");
    CHECK_THROWS_AS(search_direction(bad, Eigen::MatrixXd::Identity(2, 2), Order::first, config), std::domain_error);
}

TEST_CASE("full Newton step on a quadratic")
{
    Problem p = body_problem(Eigen::Vector2d(1.5, 1.0), 5.0, 8);
    p.objective.joint_target = JointTarget{Eigen::Vector2d(1.2, 1.3), 1.0};
    p.objective.smoothness_weight = 1e-2;
    const SolverConfig config;
    const Objective obj = make_objective(p.chain, p.objective);
    SolverState state = make_state(p, TrajectoryParams(p.layout, p.start));
    EnergyResult current = assemble_energy(p, state.bvh, state.params, obj, state.mu, Order::second);
    REQUIRE(current.active_terms == 0);
    const Eigen::VectorXd d = search_direction(current.gradient, current.hessian, Order::second, config);
    const LineSearchResult ls = line_search(p, obj, state, current, d, config);
    CHECK(ls.alpha == 1.0);
    CHECK(ls.safety_rejections == 0);
    CHECK(ls.wolfe_rejections == 0);
    CHECK(ls.energy.gradient.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("a step into the obstacle is shortened and stays safe")
{
    // the target lies on the far side of the obstacle
    Problem p = body_problem(Eigen::Vector2d(1.0, 0.0), 5.0, 8);
    p.objective.joint_target = JointTarget{Eigen::Vector2d(-1.0, 0.0), 1.0};
    p.objective.smoothness_weight = 1e-2;
    const SolverConfig config;
    const Objective obj = make_objective(p.chain, p.objective);
    SolverState state = make_state(p, TrajectoryParams(p.layout, p.start));
    presubdivide(p, state.params, state.bvh, 32);
    EnergyResult current = assemble_energy(p, state.bvh, state.params, obj, state.mu, Order::second);
    const Eigen::VectorXd d = search_direction(current.gradient, current.hessian, Order::second, config);
    REQUIRE(safety_check(p, state.bvh, state.params.with_theta(state.params.theta() + d)).has_value());

    const LineSearchResult ls = line_search(p, obj, state, current, d, config);
    CHECK(ls.safety_rejections >= 1);
    CHECK(ls.alpha < 1.0);
    CHECK(ls.alpha > 0.0);
    const TrajectoryParams next = state.params.with_theta(state.params.theta() + ls.alpha * ls.direction);
    CHECK_FALSE(safety_check(p, state.bvh, next).has_value());
    CHECK(ls.energy.value < current.value);
}

TEST_CASE("a safety failure at the step floor subdivides exactly once")
{
    // one leaf [0, 1], L = 2: psi(1) ~ 1.0001, psi(0.5) ~ 0.5009
    Problem p = body_problem(Eigen::Vector2d(1.4, 0.0), 1.0, 1);
    p.objective.joint_target = JointTarget{Eigen::Vector2d(1.0, 0.0), 1.0};
    const SolverConfig config;
    const Objective obj = make_objective(p.chain, p.objective);
    SolverState state = make_state(p, TrajectoryParams(p.layout, p.start));
    state.eps_alpha = 1.0;
    REQUIRE_FALSE(safety_check(p, state.bvh, state.params).has_value());

    // shift every x control point by -0.4: midpoint distance 0.8 fails psi(1) but passes psi(0.5)
    Eigen::VectorXd d = Eigen::VectorXd::Zero(state.params.size());
    d.head(p.layout.free_count()).setConstant(-0.4);
    EnergyResult current = assemble_energy(p, state.bvh, state.params, obj, state.mu, Order::second);
    REQUIRE(d.dot(current.gradient) < 0.0);

    const LineSearchResult ls = line_search(p, obj, state, current, d, config);
    CHECK(ls.subdivisions == 1);
    CHECK(state.bvh.subdivisions() == 1);
    REQUIRE(state.bvh.leaf_count() == 2);
    for (const auto& leaf : state.bvh.leaves())
        CHECK(leaf.duration() == 0.5);
    CHECK(state.eps_alpha == 0.5);
    CHECK(ls.alpha == 1.0);
}

TEST_CASE("obstacle-free reach converges to the target")
{
    Problem p = body_problem(Eigen::Vector2d(0.0, 0.0), 5.0, 8);
    p.obstacles.clear();
    p.limit_barriers = true;
    p.objective.end_effectors = {{1, Vec3::Zero(), Vec3(0.5, -0.4, 0.0), 1.0}};
    p.objective.smoothness_weight = 1e-3;
    const SolveResult r = solve(p, SolverConfig{});
    CHECK(r.converged);
    CHECK(r.final_grad_inf <= p.barrier.eps_d);
    CHECK(r.final_mu <= p.barrier.eps_mu);
    CHECK(r.bvh.subdivisions() == 0);
    CHECK((r.params.eval(5.0) - Eigen::Vector2d(0.5, -0.4)).norm() < 1e-3);
}

TEST_CASE("detour around an obstacle: every iterate feasible, energy decreasing")
{
    const Problem p = detour_problem();
    const SolveResult r = solve(p, SolverConfig{});
    CHECK(r.converged);
    CHECK((r.params.eval(p.layout.horizon) - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-2);
    REQUIRE(r.log.thetas.size() == r.log.rows.size());
    for (const auto& theta : r.log.thetas) {
        const FeasibilityReport audit = verify_feasibility(p, r.params.with_theta(theta), 1e-3);
        CHECK(audit.feasible());
    }

    const auto& rows = r.log.rows;
    CHECK(rows.front().iteration == 0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].subdivisions >= rows[i - 1].subdivisions);
        if (rows[i].mu == rows[i - 1].mu && rows[i].subdivisions == rows[i - 1].subdivisions && rows[i].alpha > 0)
            CHECK(rows[i].energy < rows[i - 1].energy);
    }
}

TEST_CASE("serial and parallel solves are identical")
{
    const Problem p = detour_problem();
    SolverConfig serial;
    serial.exec = Exec::serial;
    const SolveResult a = solve(p, serial);
    const SolveResult b = solve(p, SolverConfig{});
    CHECK(a.log.csv() == b.log.csv());
    CHECK(a.params.theta() == b.params.theta());
}

TEST_CASE("carrying the step floor still gives feasible iterates")
{
    const Problem p = detour_problem();
    SolverConfig config;
    config.step_floor = StepFloorPolicy::carry;
    config.max_inner_iterations = 100;
    const SolveResult r = solve(p, config);
    CHECK(verify_feasibility(p, r.params, 1e-3).feasible());
}

TEST_CASE("solver rejects bad constants and infeasible starts")
{
    Problem p = detour_problem();
    p.barrier.eta = 1.0 / 6.0;
    CHECK_THROWS_AS(solve(p, SolverConfig{}), std::invalid_argument);

    Problem inside = body_problem(Eigen::Vector2d(0.1, 0.0), 5.0, 8);
    try {
        solve(inside, SolverConfig{});
        FAIL("expected InfeasibleStartError");
    } catch (const InfeasibleStartError& e) {
        CHECK(e.pair() == 0);
        CHECK(e.time() >= 0.0);
        CHECK(std::string(e.what()).find("pair 0") != std::string::npos);
    }

    Problem limits = body_problem(Eigen::Vector2d(1.0, 0.0), 5.0, 8);
    limits.limit_barriers = true;
    const TrajectoryParams fast(limits.layout, limits.start,
                                Eigen::VectorXd::Constant(2 * limits.layout.free_count(), 1.9));
    CHECK_THROWS_AS(solve(limits, SolverConfig{}, fast), InfeasibleStartError);
}
