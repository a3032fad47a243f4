#include "feasip/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace feasip {

namespace {

constexpr int kMaxLevel = 50;

double dyadic_fraction(std::int64_t k, int level)
{
    return std::ldexp(static_cast<double>(k), -level);
}

}  // namespace

std::vector<CollisionPair> enumerate_pairs(const Problem& problem)
{
    const KinematicChain& chain = problem.chain;
    std::vector<PrimitiveRef> moving;
    for (int l = 0; l < chain.dof(); ++l)
        for (int i = 0; i < static_cast<int>(chain.links()[l].primitives.size()); ++i)
            moving.push_back({l, i});

    std::vector<CollisionPair> pairs;
    for (const auto& m : moving) {
        const double lip = lipschitz_bound(chain, m.link, m.index);
        for (int o = 0; o < static_cast<int>(problem.obstacles.size()); ++o) {
            CollisionPair p;
            p.id = static_cast<int>(pairs.size());
            p.moving = m;
            p.obstacle = o;
            p.lipschitz = lip;
            pairs.push_back(p);
        }
    }
    if (problem.self_collision) {
        for (std::size_t a = 0; a < moving.size(); ++a) {
            for (std::size_t b = a + 1; b < moving.size(); ++b) {
                const auto& ma = moving[a];
                const auto& mb = moving[b];
                if (ma.link == mb.link)
                    continue;
                if (!problem.include_adjacent && chain.adjacent(ma.link, mb.link))
                    continue;
                CollisionPair p;
                p.id = static_cast<int>(pairs.size());
                p.moving = ma;
                p.other = mb;
                p.lipschitz = lipschitz_bound(chain, ma.link, ma.index) + lipschitz_bound(chain, mb.link, mb.index);
                pairs.push_back(p);
            }
        }
    }
    return pairs;
}

double DyadicInterval::t0(int splits, double horizon) const
{
    return horizon * (dyadic_fraction(index, level) / splits);
}

double DyadicInterval::t1(int splits, double horizon) const
{
    return horizon * (dyadic_fraction(index + 1, level) / splits);
}

double DyadicInterval::midpoint(int splits, double horizon) const
{
    return horizon * (dyadic_fraction(2 * index + 1, level + 1) / splits);
}

bool IntervalPartition::covers_horizon() const
{
    if (intervals.empty())
        return false;
    if (intervals.front().t0(splits, horizon) != 0.0 || intervals.back().t1(splits, horizon) != horizon)
        return false;
    for (std::size_t i = 1; i < intervals.size(); ++i)
        if (intervals[i - 1].t1(splits, horizon) != intervals[i].t0(splits, horizon))
            return false;
    return true;
}

std::vector<std::pair<double, double>> IntervalPartition::bounds() const
{
    std::vector<std::pair<double, double>> out;
    out.reserve(intervals.size());
    for (const auto& d : intervals)
        out.emplace_back(d.t0(splits, horizon), d.t1(splits, horizon));
    return out;
}

void reconcile_partitions(IntervalPartition& a, IntervalPartition& b)
{
    if (a.splits != b.splits || a.horizon != b.horizon)
        throw std::invalid_argument("reconcile_partitions: partitions use different base grids");
    if (!a.covers_horizon() || !b.covers_horizon())
        throw std::invalid_argument("reconcile_partitions: partitions must cover the horizon");

    auto& ia = a.intervals;
    auto& ib = b.intervals;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ia.size() && j < ib.size()) {
        if (ia[i] == ib[j]) {
            ++i;
            ++j;
            continue;
        }
        auto& list = ia[i].level < ib[j].level ? ia : ib;
        const std::size_t at = ia[i].level < ib[j].level ? i : j;
        if (ia[i].level == ib[j].level)
            throw std::invalid_argument("reconcile_partitions: misaligned intervals");
        const auto [lo, hi] = list[at].children();
        list[at] = lo;
        list.insert(list.begin() + static_cast<std::ptrdiff_t>(at) + 1, hi);
    }
}

PairTree::PairTree(int splits, double horizon)
{
    if (splits < 1)
        throw std::invalid_argument("initial splits must be >= 1");
    nodes_.reserve(static_cast<std::size_t>(2 * splits));
    root_ = build(0, splits, -1, splits, horizon);
    leaf_count_ = splits;
}

int PairTree::build(int lo, int hi, int parent, int splits, double horizon)
{
    const int id = static_cast<int>(nodes_.size());
    Node n;
    n.parent = parent;
    n.t0 = DyadicInterval{0, lo}.t0(splits, horizon);
    n.t1 = DyadicInterval{0, hi - 1}.t1(splits, horizon);
    if (hi - lo == 1) {
        n.dyadic = true;
        n.span = {0, lo};
        nodes_.push_back(n);
        return id;
    }
    nodes_.push_back(n);
    const int mid = lo + (hi - lo) / 2;
    const int left = build(lo, mid, id, splits, horizon);
    const int right = build(mid, hi, id, splits, horizon);
    nodes_[id].child[0] = left;
    nodes_[id].child[1] = right;
    return id;
}

std::vector<int> PairTree::leaves() const
{
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(leaf_count_));
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const Node& n = nodes_[id];
        if (n.leaf()) {
            out.push_back(id);
        } else {
            stack.push_back(n.child[1]);
            stack.push_back(n.child[0]);
        }
    }
    return out;
}

std::pair<int, int> PairTree::split(int node)
{
    if (node < 0 || node >= static_cast<int>(nodes_.size()) || !nodes_[node].leaf())
        throw std::invalid_argument("split: node " + std::to_string(node) + " is not a leaf");
    const Node parent = nodes_[node];
    if (parent.span.level >= kMaxLevel)
        throw std::runtime_error("split: interval depth limit reached at t = " + std::to_string(parent.t0));
    const auto [lo, hi] = parent.span.children();
    const double mid = 0.5 * (parent.t0 + parent.t1);

    Node a;
    a.t0 = parent.t0;
    a.t1 = mid;
    a.span = lo;
    a.dyadic = true;
    a.parent = node;
    Node b = a;
    b.t0 = mid;
    b.t1 = parent.t1;
    b.span = hi;

    const int ia = static_cast<int>(nodes_.size());
    nodes_.push_back(a);
    nodes_.push_back(b);
    nodes_[node].child[0] = ia;
    nodes_[node].child[1] = ia + 1;
    ++leaf_count_;
    return {ia, ia + 1};
}

StBvh::StBvh(std::vector<CollisionPair> pairs, int splits, double horizon)
    : pairs_(std::move(pairs)), splits_(splits), horizon_(horizon)
{
    trees_.reserve(pairs_.size());
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
        if (pairs_[i].id != static_cast<int>(i))
            throw std::invalid_argument("StBvh: pair ids must be 0..n-1 in order");
        trees_.emplace_back(splits, horizon);
    }
}

IntervalLeaf StBvh::leaf(int pair, int node) const
{
    const auto& n = trees_.at(pair).nodes().at(node);
    IntervalLeaf out;
    out.pair = pair;
    out.node = node;
    out.span = n.span;
    out.t0 = n.t0;
    out.t1 = n.t1;
    out.lipschitz = pairs_[pair].lipschitz;
    return out;
}

std::vector<IntervalLeaf> StBvh::leaves() const
{
    std::vector<IntervalLeaf> out;
    out.reserve(leaf_count());
    for (std::size_t p = 0; p < trees_.size(); ++p)
        for (int id : trees_[p].leaves())
            out.push_back(leaf(static_cast<int>(p), id));
    return out;
}

std::size_t StBvh::leaf_count() const
{
    std::size_t n = 0;
    for (const auto& t : trees_)
        n += static_cast<std::size_t>(t.leaf_count());
    return n;
}

IntervalPartition StBvh::partition(int pair) const
{
    IntervalPartition out;
    out.splits = splits_;
    out.horizon = horizon_;
    const auto& tree = trees_.at(pair);
    for (int id : tree.leaves())
        out.intervals.push_back(tree.nodes()[id].span);
    return out;
}

std::pair<IntervalLeaf, IntervalLeaf> StBvh::subdivide(const IntervalLeaf& leaf)
{
    if (leaf.pair < 0 || leaf.pair >= static_cast<int>(trees_.size()))
        throw std::invalid_argument("subdivide: unknown pair " + std::to_string(leaf.pair));
    auto& tree = trees_[leaf.pair];
    if (leaf.node < 0 || leaf.node >= static_cast<int>(tree.nodes().size()) || !tree.nodes()[leaf.node].leaf() ||
        !(tree.nodes()[leaf.node].span == leaf.span))
        throw std::invalid_argument("subdivide: leaf is not current");
    const auto [a, b] = tree.split(leaf.node);
    ++subdivisions_;
    return {this->leaf(leaf.pair, a), this->leaf(leaf.pair, b)};
}

IntervalPartition StBvh::reconcile_self_pair(int pair, IntervalPartition side_a, IntervalPartition side_b)
{
    if (!pairs_.at(pair).is_self())
        throw std::invalid_argument("reconcile_self_pair: pair " + std::to_string(pair) + " is not a self pair");
    reconcile_partitions(side_a, side_b);
    IntervalPartition own = partition(pair);
    IntervalPartition target = side_a;
    reconcile_partitions(own, target);
    // own is now the common refinement; split leaves until the tree matches it.
    for (bool changed = true; changed;) {
        changed = false;
        const auto& tree = trees_[pair];
        for (int id : tree.leaves()) {
            const auto& span = tree.nodes()[id].span;
            if (std::find(own.intervals.begin(), own.intervals.end(), span) == own.intervals.end()) {
                subdivide(leaf(pair, id));
                changed = true;
                break;
            }
        }
    }
    return side_a;
}

StBvh init_intervals(const Problem& problem, int initial_splits)
{
    return StBvh(enumerate_pairs(problem), initial_splits, problem.layout.horizon);
}

ConstraintEvaluator::ConstraintEvaluator(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                                         Exec exec)
    : problem_(problem), bvh_(bvh), params_(params), exec_(exec)
{
    std::vector<double> times;
    for (std::size_t p = 0; p < bvh.pairs().size(); ++p) {
        const auto& tree = bvh.tree(static_cast<int>(p));
        for (int id : tree.leaves()) {
            const auto& n = tree.nodes()[id];
            times.push_back(0.5 * (n.t0 + n.t1));
        }
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    samples_.resize(times.size());
    for_each_index(exec_, times.size(), [&](std::size_t i) {
        Sample& s = samples_[i];
        s.t = times[i];
        s.q = params_.eval(s.t);
        s.pose = forward_kinematics(problem_.chain, s.q);
        s.basis = params_.basis_gradient(s.t);
    });

    const std::size_t np = bvh.pairs().size();
    moving_boxes_.resize(np);
    counter_boxes_.resize(np);
    for_each_index(exec_, np, [&](std::size_t p) {
        const CollisionPair& pair = bvh_.pairs()[p];
        const auto& nodes = bvh_.tree(static_cast<int>(p)).nodes();
        auto& mv = moving_boxes_[p];
        auto& cb = counter_boxes_[p];
        mv.assign(nodes.size(), Aabb{});
        cb.assign(nodes.size(), Aabb{});
        Aabb obstacle_box;
        if (!pair.is_self()) {
            const Obstacle& o = problem_.obstacles[pair.obstacle];
            obstacle_box = bounding_box(o.world, o.primitive.sweep_radius());
        }
        // children always follow their parent, so a reverse sweep is bottom-up
        for (std::size_t k = nodes.size(); k-- > 0;) {
            const auto& n = nodes[k];
            if (n.leaf()) {
                const Sample& s = samples_[sample_index(0.5 * (n.t0 + n.t1))];
                const Primitive& prim = problem_.chain.primitive(pair.moving.link, pair.moving.index);
                mv[k] = bounding_box(moving_vertices(pair.moving, s), prim.sweep_radius());
                if (pair.is_self()) {
                    const Primitive& other = problem_.chain.primitive(pair.other->link, pair.other->index);
                    cb[k] = bounding_box(moving_vertices(*pair.other, s), other.sweep_radius());
                } else {
                    cb[k] = obstacle_box;
                }
            } else {
                mv[k] = mv[n.child[0]];
                mv[k].extend(mv[n.child[1]]);
                cb[k] = cb[n.child[0]];
                cb[k].extend(cb[n.child[1]]);
            }
        }
    });
}

int ConstraintEvaluator::sample_index(double t) const
{
    const auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                                     [](const Sample& s, double v) { return s.t < v; });
    if (it == samples_.end() || it->t != t)
        throw std::logic_error("constraint snapshot has no sample at t = " + std::to_string(t));
    return static_cast<int>(it - samples_.begin());
}

PointList ConstraintEvaluator::moving_vertices(const PrimitiveRef& ref, const Sample& s) const
{
    return problem_.chain.primitive(ref.link, ref.index).world_vertices(s.pose.link[ref.link]);
}

double ConstraintEvaluator::distance_and_gradient(const CollisionPair& pair, const ChainPose& pose,
                                                 Eigen::VectorXd& grad_q) const
{
    const Primitive& prim = problem_.chain.primitive(pair.moving.link, pair.moving.index);
    const PointList a = prim.world_vertices(pose.link[pair.moving.link]);
    grad_q = Eigen::VectorXd::Zero(problem_.chain.dof());
    DistanceResult d;
    PointList b;
    if (pair.is_self()) {
        const Primitive& other = problem_.chain.primitive(pair.other->link, pair.other->index);
        b = other.world_vertices(pose.link[pair.other->link]);
        d = hull_distance(a, prim.sweep_radius(), b, other.sweep_radius());
    } else {
        const Obstacle& o = problem_.obstacles[pair.obstacle];
        d = hull_distance(a, prim.sweep_radius(), o.world, o.primitive.sweep_radius());
    }
    for (std::size_t v = 0; v < a.size(); ++v)
        add_point_gradient(problem_.chain, pose, pair.moving.link, a[v], d.grad_vertices_a[v], grad_q);
    for (std::size_t v = 0; v < b.size(); ++v)
        add_point_gradient(problem_.chain, pose, pair.other->link, b[v], d.grad_vertices_b[v], grad_q);
    return d.distance;
}

DistanceResult ConstraintEvaluator::leaf_distance(const IntervalLeaf& leaf) const
{
    const CollisionPair& pair = bvh_.pairs().at(leaf.pair);
    const Sample& s = samples_[sample_index(leaf.midpoint())];
    const Primitive& prim = problem_.chain.primitive(pair.moving.link, pair.moving.index);
    const PointList a = moving_vertices(pair.moving, s);
    if (pair.is_self()) {
        const Primitive& other = problem_.chain.primitive(pair.other->link, pair.other->index);
        const PointList b = moving_vertices(*pair.other, s);
        return hull_distance(a, prim.sweep_radius(), b, other.sweep_radius());
    }
    const Obstacle& o = problem_.obstacles[pair.obstacle];
    return hull_distance(a, prim.sweep_radius(), o.world, o.primitive.sweep_radius());
}

// Leaves whose boxes are not provably farther apart than tau + slack(len),
// where slack is L * len / 2 (activity) or psi(len) (safety).
std::vector<IntervalLeaf> ConstraintEvaluator::query(double tau, bool safety) const
{
    const std::size_t np = bvh_.pairs().size();
    std::vector<std::vector<IntervalLeaf>> found(np);
    for_each_index(exec_, np, [&](std::size_t p) {
        const CollisionPair& pair = bvh_.pairs()[p];
        const auto& nodes = bvh_.tree(static_cast<int>(p)).nodes();
        const auto& mv = moving_boxes_[p];
        const auto& cb = counter_boxes_[p];
        std::vector<int> stack{bvh_.tree(static_cast<int>(p)).root()};
        while (!stack.empty()) {
            const int id = stack.back();
            stack.pop_back();
            const auto& n = nodes[id];
            const double len = n.t1 - n.t0;
            const double slack = safety ? safety_margin(len, pair.lipschitz, problem_.barrier) : 0.5 * pair.lipschitz * len;
            if (box_gap(mv[id], cb[id]) > tau + slack)
                continue;
            if (n.leaf()) {
                found[p].push_back(bvh_.leaf(static_cast<int>(p), id));
            } else {
                stack.push_back(n.child[1]);
                stack.push_back(n.child[0]);
            }
        }
    });
    std::vector<IntervalLeaf> out;
    for (auto& f : found)
        out.insert(out.end(), f.begin(), f.end());
    return out;
}

std::vector<LeafDistance> ConstraintEvaluator::active_terms() const
{
    const auto& spec = problem_.barrier;
    const std::vector<IntervalLeaf> candidates = query(spec.x0 + spec.d0, false);
    std::vector<double> dist(candidates.size());
    for_each_index(exec_, candidates.size(), [&](std::size_t i) { dist[i] = leaf_distance(candidates[i]).distance; });

    std::vector<LeafDistance> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& l = candidates[i];
        if (dist[i] - 0.5 * l.lipschitz * l.duration() < spec.x0 + spec.d0)
            out.push_back({l, dist[i]});
    }
    return out;
}

std::vector<LeafDistance> ConstraintEvaluator::safety_violations() const
{
    const auto& spec = problem_.barrier;
    const std::vector<IntervalLeaf> candidates = query(spec.d0, true);
    std::vector<double> dist(candidates.size());
    for_each_index(exec_, candidates.size(), [&](std::size_t i) { dist[i] = leaf_distance(candidates[i]).distance; });

    std::vector<LeafDistance> out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& l = candidates[i];
        if (dist[i] <= spec.d0 + safety_margin(l.duration(), l.lipschitz, spec))
            out.push_back({l, dist[i]});
    }
    return out;
}

std::optional<LeafDistance> ConstraintEvaluator::safety_check() const
{
    auto v = safety_violations();
    if (v.empty())
        return std::nullopt;
    return v.front();
}

EnergyResult ConstraintEvaluator::energy(const Objective& objective, double mu, Order order) const
{
    const bool second = order == Order::second;
    const auto& spec = problem_.barrier;
    const int n = params_.size();
    const int dof = params_.joints();
    const int nf = params_.layout().free_count();

    EnergyResult out;
    const ObjectiveValue obj = objective(params_, second);
    out.objective = obj.value;
    out.gradient = obj.gradient;
    if (second)
        out.hessian = obj.hessian;

    if (problem_.limit_barriers) {
        const BarrierTerms lim = limit_barrier(params_, problem_.chain, spec, second);
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
        double value = 0.0;
        Eigen::VectorXd grad_q;  // d x / d q at the midpoint
        double d1 = 0.0;
        double d2 = 0.0;
        int sample = 0;
        bool contributes = false;
    };

    const std::vector<LeafDistance> active = active_terms();
    out.active_terms = active.size();
    std::vector<Term> terms(active.size());
    for_each_index(exec_, active.size(), [&](std::size_t i) {
        const IntervalLeaf& leaf = active[i].leaf;
        const CollisionPair& pair = bvh_.pairs()[leaf.pair];
        Term& term = terms[i];
        term.sample = sample_index(leaf.midpoint());
        const Sample& s = samples_[term.sample];
        const double dist = distance_and_gradient(pair, s.pose, term.grad_q);
        const PenaltyValue pv = penalty(dist - spec.d0, spec.x0);
        if (!std::isfinite(pv.value)) {
            term.value = kInfeasible;
            return;
        }
        if (pv.value == 0.0 && pv.d1 == 0.0)
            return;
        const double w = leaf.duration();
        term.contributes = true;
        term.value = w * pv.value;
        term.d1 = w * pv.d1;
        term.d2 = w * pv.d2;
    });

    double collision = 0.0;
    Eigen::VectorXd gx(n);
    for (const Term& term : terms) {
        if (!std::isfinite(term.value)) {
            out.collision = kInfeasible;
            out.value = kInfeasible;
            return out;
        }
        if (!term.contributes)
            continue;
        collision += term.value;
        gx = expand_gradient(term.grad_q, samples_[term.sample].basis, nf);
        out.gradient.noalias() += (mu * term.d1) * gx;
        // Gauss-Newton: the P' * d2x term is dropped, keeping the matrix PSD
        if (second && term.d2 != 0.0)
            out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(gx, mu * term.d2);
    }
    if (second) {
        // rankUpdate fills the lower triangle only
        for (int c = 1; c < n; ++c)
            for (int r = 0; r < c; ++r)
                out.hessian(r, c) = out.hessian(c, r);
    }
    out.collision = mu * collision;
    out.value = out.objective + out.collision + out.limits;
    return out;
}

std::vector<LeafDistance> active_terms(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                                       Exec exec)
{
    return ConstraintEvaluator(problem, bvh, params, exec).active_terms();
}

std::optional<LeafDistance> safety_check(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                                         Exec exec)
{
    return ConstraintEvaluator(problem, bvh, params, exec).safety_check();
}

EnergyResult assemble_energy(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                             const Objective& objective, double mu, Order order, Exec exec)
{
    return ConstraintEvaluator(problem, bvh, params, exec).energy(objective, mu, order);
}

}  // namespace feasip
