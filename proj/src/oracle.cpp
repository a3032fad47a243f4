#include "feasip/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <optional>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace feasip {

std::vector<double> audit_times(double horizon, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("audit interval must be > 0");
    std::vector<double> out;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (t >= horizon)
            break;
        out.push_back(t);
    }
    out.push_back(horizon);
    return out;
}

double pair_distance(const Problem& problem, const CollisionPair& pair, const ChainPose& pose)
{
    const Primitive& a = problem.chain.primitive(pair.moving.link, pair.moving.index);
    const PointList va = a.world_vertices(pose.link[pair.moving.link]);
    if (pair.is_self()) {
        const Primitive& b = problem.chain.primitive(pair.other->link, pair.other->index);
        const PointList vb = b.world_vertices(pose.link[pair.other->link]);
        return hull_distance(va, a.sweep_radius(), vb, b.sweep_radius()).distance;
    }
    const Obstacle& o = problem.obstacles.at(pair.obstacle);
    return hull_distance(va, a.sweep_radius(), o.world, o.primitive.sweep_radius()).distance;
}

FeasibilityReport verify_feasibility(const Problem& problem, const TrajectoryParams& params, double dt, Exec exec)
{
    if (params.joints() != problem.chain.dof())
        throw std::invalid_argument("verify: trajectory has " + std::to_string(params.joints()) +
                                    " joints, chain has " + std::to_string(problem.chain.dof()));
    const std::vector<double> times = audit_times(problem.layout.horizon, dt);
    const std::vector<CollisionPair> pairs = enumerate_pairs(problem);
    const double d0 = problem.barrier.d0;

    std::vector<Aabb> obstacle_boxes(std::max<std::size_t>(problem.obstacles.size(), 1));
    for (std::size_t k = 0; k < problem.obstacles.size(); ++k)
        obstacle_boxes[k] = bounding_box(problem.obstacles[k].world, problem.obstacles[k].primitive.sweep_radius());

    struct Slot {
        double min = std::numeric_limits<double>::infinity();
        int min_pair = -1;
        std::vector<Violation> violations;
    };
    std::vector<Slot> slots(times.size());
    for_each_index(exec, times.size(), [&](std::size_t i) {
        const double t = times[i];
        const ChainPose pose = forward_kinematics(problem.chain, params.eval(t));
        Slot& s = slots[i];
        for (const auto& pair : pairs) {
            // boxes bound the distance from below; skip pairs that can neither
            // violate nor lower this instant's minimum
            const Primitive& a = problem.chain.primitive(pair.moving.link, pair.moving.index);
            const Aabb box_a = bounding_box(a.world_vertices(pose.link[pair.moving.link]), a.sweep_radius());
            Aabb box_b = obstacle_boxes[std::max(pair.obstacle, 0)];
            if (pair.is_self()) {
                const Primitive& b = problem.chain.primitive(pair.other->link, pair.other->index);
                box_b = bounding_box(b.world_vertices(pose.link[pair.other->link]), b.sweep_radius());
            }
            const double gap = box_gap(box_a, box_b);
            if (gap > d0 && gap > s.min)
                continue;
            const double d = pair_distance(problem, pair, pose);
            if (d < s.min) {
                s.min = d;
                s.min_pair = pair.id;
            }
            if (d <= d0)
                s.violations.push_back({pair.id, t, d});
        }
    });

    FeasibilityReport report;
    report.sampled_instants = times.size();
    report.min_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (slots[i].min < report.min_distance) {
            report.min_distance = slots[i].min;
            report.min_distance_time = times[i];
            report.min_distance_pair = slots[i].min_pair;
        }
        report.violations.insert(report.violations.end(), slots[i].violations.begin(), slots[i].violations.end());
    }
    return report;
}

double observed_speed(const KinematicChain& chain, int link, int index, const Eigen::VectorXd& q0,
                      const Eigen::VectorXd& rate, double duration, double dt)
{
    const Primitive& prim = chain.primitive(link, index);
    const long steps = std::max(1L, static_cast<long>(std::floor(duration / dt)));
    double best = 0.0;
    PointList prev = prim.world_vertices(forward_kinematics(chain, q0).link[link]);
    for (long k = 1; k <= steps; ++k) {
        const PointList cur =
            prim.world_vertices(forward_kinematics(chain, q0 + rate * (static_cast<double>(k) * dt)).link[link]);
        for (std::size_t v = 0; v < cur.size(); ++v)
            best = std::max(best, (cur[v] - prev[v]).norm() / dt);
        prev = cur;
    }
    return best;
}

LipschitzSample lipschitz_ground_truth(const KinematicChain& chain, int link, int index, int trials, double dt,
                                       std::uint64_t seed, double duration)
{
    if (trials < 1)
        throw std::invalid_argument("lipschitz_ground_truth: trials must be >= 1");
    const int n = chain.dof();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> frac(0.0, 1.0);

    LipschitzSample out;
    out.bound = lipschitz_bound(chain, link, index);
    out.per_trial.reserve(static_cast<std::size_t>(trials));
    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd rate(n);
        for (int k = 0; k < n; ++k)
            rate[k] = unit(rng);
        const double peak = rate.lpNorm<Eigen::Infinity>();
        rate /= peak > 0.0 ? peak : 1.0;

        double span = duration;
        for (int k = 0; k < n; ++k)
            if (rate[k] != 0.0)
                span = std::min(span, (chain.upper()[k] - chain.lower()[k]) / std::abs(rate[k]));
        Eigen::VectorXd q0(n);
        for (int k = 0; k < n; ++k) {
            const double lo = chain.lower()[k] + std::max(0.0, -rate[k] * span);
            const double hi = chain.upper()[k] - std::max(0.0, rate[k] * span);
            q0[k] = lo + frac(rng) * std::max(0.0, hi - lo);
        }
        const double speed = observed_speed(chain, link, index, q0, rate, span, dt);
        out.per_trial.push_back(speed);
        out.l1_star = std::max(out.l1_star, speed);
    }
    return out;
}

PenaltyValue extended_penalty(double x, double x0, double xs)
{
    if (x >= xs)
        return penalty(x, x0);
    const PenaltyValue at = penalty(xs, x0);
    const double dx = x - xs;
    return {at.value + at.d1 * dx + 0.5 * at.d2 * dx * dx, at.d1 + at.d2 * dx, at.d2};
}

namespace {

struct Instant {
    int pair = 0;
    double t = 0.0;
};

class SampledProblem {
public:
    SampledProblem(const Problem& problem, const ExchangeConfig& config)
        : problem_(problem), config_(config), pairs_(enumerate_pairs(problem)),
          objective_(make_objective(problem.chain, problem.objective))
    {
    }

    const std::vector<CollisionPair>& pairs() const { return pairs_; }
    const Objective& objective() const { return objective_; }
    std::vector<Instant>& instants() { return instants_; }
    /// Finite continuation of P below the extension point, needed when an
    /// instant enters the set already violated.
    void set_extended(bool on) { extend_ = on; }

    EnergyResult energy(const TrajectoryParams& params, double mu, Order order) const
    {
        const bool second = order == Order::second;
        const BarrierSpec& spec = problem_.barrier;
        const int n = params.size();
        const int nf = params.layout().free_count();
        const double xs = config_.extension_ratio * spec.x0;

        EnergyResult out;
        const ObjectiveValue obj = objective_(params, second);
        out.objective = obj.value;
        out.gradient = obj.gradient;
        if (second)
            out.hessian = obj.hessian;
        if (config_.limit_barriers) {
            const BarrierTerms lim = limit_barrier(params, problem_.chain, spec, second);
            out.limits = mu * lim.value;
            if (!std::isfinite(lim.value)) {
                out.value = kInfeasible;
                return out;
            }
            out.gradient += mu * lim.gradient;
            if (second)
                out.hessian += mu * lim.hessian;
        }

        struct Term {
            PenaltyValue pv;
            Eigen::VectorXd gx;
        };
        std::vector<Term> terms(instants_.size());
        for_each_index(config_.solver.exec, instants_.size(), [&](std::size_t i) {
            const Instant& in = instants_[i];
            const CollisionPair& pair = pairs_[in.pair];
            const ChainPose pose = forward_kinematics(problem_.chain, params.eval(in.t));
            const Primitive& a = problem_.chain.primitive(pair.moving.link, pair.moving.index);
            const PointList va = a.world_vertices(pose.link[pair.moving.link]);
            DistanceResult d;
            PointList vb;
            if (pair.is_self()) {
                const Primitive& b = problem_.chain.primitive(pair.other->link, pair.other->index);
                vb = b.world_vertices(pose.link[pair.other->link]);
                d = hull_distance(va, a.sweep_radius(), vb, b.sweep_radius());
            } else {
                const Obstacle& o = problem_.obstacles[pair.obstacle];
                d = hull_distance(va, a.sweep_radius(), o.world, o.primitive.sweep_radius());
            }
            Term& term = terms[i];
            term.pv = extend_ ? extended_penalty(d.distance - spec.d0, spec.x0, xs) : penalty(d.distance - spec.d0, spec.x0);
            if (term.pv.value == 0.0 && term.pv.d1 == 0.0)
                return;
            Eigen::VectorXd gq = Eigen::VectorXd::Zero(params.joints());
            for (std::size_t v = 0; v < va.size(); ++v)
                add_point_gradient(problem_.chain, pose, pair.moving.link, va[v], d.grad_vertices_a[v], gq);
            for (std::size_t v = 0; v < vb.size(); ++v)
                add_point_gradient(problem_.chain, pose, pair.other->link, vb[v], d.grad_vertices_b[v], gq);
            term.gx = expand_gradient(gq, params.basis_gradient(in.t), nf);
        });

        const double w = config_.eps;
        double collision = 0.0;
        for (const Term& term : terms) {
            if (!std::isfinite(term.pv.value)) {
                out.value = kInfeasible;
                return out;
            }
            if (term.gx.size() == 0)
                continue;
            collision += w * term.pv.value;
            out.gradient.noalias() += (mu * w * term.pv.d1) * term.gx;
            if (second)
                out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(term.gx, mu * w * term.pv.d2);
        }
        if (second)
            for (int c = 1; c < n; ++c)
                for (int r = 0; r < c; ++r)
                    out.hessian(r, c) = out.hessian(c, r);
        out.active_terms = instants_.size();
        out.collision = mu * collision;
        out.value = out.objective + out.collision + out.limits;
        return out;
    }

private:
    const Problem& problem_;
    const ExchangeConfig& config_;
    std::vector<CollisionPair> pairs_;
    Objective objective_;
    std::vector<Instant> instants_;
    bool extend_ = true;
};

double grad_inf(const EnergyResult& e)
{
    return e.gradient.size() == 0 ? 0.0 : e.gradient.lpNorm<Eigen::Infinity>();
}

}  // namespace

ExchangeResult exchange_solve(const Problem& problem, const ExchangeConfig& config)
{
    problem.validate();
    if (!(config.eps > 0.0))
        throw std::invalid_argument("exchange: eps must be > 0");
    const BarrierSpec& spec = problem.barrier;
    const SolverConfig& sc = config.solver;
    SampledProblem sampled(problem, config);

    ExchangeResult result;
    result.params = TrajectoryParams(problem.layout, problem.start);
    int iteration = 0;
    long events = 0;
    auto record = [&](const EnergyResult& e, double alpha, double mu) {
        IterationRecord r;
        r.iteration = iteration;
        r.energy = e.value;
        r.grad_inf = grad_inf(e);
        r.alpha = alpha;
        r.active_terms = e.active_terms;
        r.mu = mu;
        result.log.rows.push_back(r);
        if (sc.record_theta)
            result.log.thetas.push_back(result.params.theta());
    };

    // barrier-Newton on the sampled NLP with the same mu continuation as solve()
    auto solve_nlp = [&]() {
        bool converged = false;
        double eps_d = spec.eps_d;
        for (double mu = spec.mu; mu > spec.eps_mu; mu *= spec.gamma, eps_d *= sc.eps_d_decay) {
            EnergyResult current = sampled.energy(result.params, mu, sc.order);
            converged = false;
            for (int inner = 0;; ++inner) {
                if (grad_inf(current) <= eps_d) {
                    converged = true;
                    break;
                }
                if (inner == sc.max_inner_iterations)
                    break;
                const Eigen::VectorXd d = search_direction(current.gradient, current.hessian, sc.order, sc);
                const double slope = d.dot(current.gradient);
                double alpha = spec.alpha0;
                bool accepted = false;
                while (!accepted) {
                    if (++events > sc.max_line_search_events)
                        throw StallError("exchange line search exceeded the event cap");
                    const Eigen::VectorXd trial = result.params.theta() + alpha * d;
                    if (trial == result.params.theta())
                        break;
                    const TrajectoryParams tp = result.params.with_theta(trial);
                    EnergyResult e = sampled.energy(tp, mu, sc.order);
                    if (std::isfinite(e.value) && e.value <= current.value + spec.c_wolfe * alpha * slope) {
                        result.params = tp;
                        current = std::move(e);
                        accepted = true;
                    } else {
                        alpha *= spec.gamma;
                    }
                }
                if (!accepted)
                    break;
                ++iteration;
                record(current, alpha, mu);
            }
        }
        return converged;
    };

    {
        const EnergyResult e0 = sampled.energy(result.params, spec.mu, sc.order);
        record(e0, 0.0, spec.mu);
    }
    const std::vector<double> times = audit_times(problem.layout.horizon, config.eps);
    const auto& pairs = sampled.pairs();
    auto scan = [&](const TrajectoryParams& params) {
        std::vector<std::vector<double>> dist(times.size());
        for_each_index(sc.exec, times.size(), [&](std::size_t i) {
            const ChainPose pose = forward_kinematics(problem.chain, params.eval(times[i]));
            dist[i].resize(pairs.size());
            for (std::size_t p = 0; p < pairs.size(); ++p)
                dist[i][p] = pair_distance(problem, pairs[p], pose);
        });
        return dist;
    };
    auto clean = [&](const std::vector<std::vector<double>>& dist) {
        for (const auto& row : dist)
            for (double d : row)
                if (d <= spec.d0)
                    return false;
        return true;
    };

    std::optional<TrajectoryParams> restart;
    if (config.restart_from_feasible && clean(scan(result.params))) {
        restart = result.params;
        sampled.set_extended(false);
    }
    bool nlp_ok = solve_nlp();

    for (;;) {
        // scan: deepest violation per pair at the sampled instants
        const std::vector<std::vector<double>> dist = scan(result.params);
        bool violated = false;
        int inserted = 0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            double deepest = spec.d0;
            int at = -1;
            for (std::size_t i = 0; i < times.size(); ++i) {
                if (dist[i][p] <= deepest) {
                    if (at < 0 || dist[i][p] < deepest) {
                        deepest = dist[i][p];
                        at = static_cast<int>(i);
                    }
                }
            }
            if (at < 0)
                continue;
            violated = true;
            auto& set = sampled.instants();
            const bool known = std::any_of(set.begin(), set.end(), [&](const Instant& in) {
                return in.pair == static_cast<int>(p) && in.t == times[at];
            });
            if (!known) {
                set.push_back({static_cast<int>(p), times[at]});
                ++inserted;
            }
        }
        result.sampled_feasible = !violated;
        if (!violated) {
            result.converged = nlp_ok;
            result.message = nlp_ok ? "converged" : "sampled instants feasible; NLP did not reach eps_d";
            break;
        }
        if (inserted == 0) {
            result.message = "violations persist at instants already in the index set";
            break;
        }
        if (result.rounds == config.max_rounds) {
            result.message = "infeasible at sampled instants after " + std::to_string(config.max_rounds) + " rounds";
            break;
        }
        ++result.rounds;
        if (restart)
            result.params = *restart;
        nlp_ok = solve_nlp();
    }
    result.instants = sampled.instants().size();
    result.objective = sampled.objective()(result.params, false).value;
    return result;
}

}  // namespace feasip
