#pragma once

#include "feasip/geometry.hpp"
#include "feasip/objective.hpp"
#include "feasip/parallel.hpp"
#include "feasip/problem.hpp"
#include "feasip/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace feasip {

struct PrimitiveRef {
    int link = 0;
    int index = 0;
    bool operator==(const PrimitiveRef&) const = default;
};

/// One moving primitive against a static obstacle or a second moving primitive.
struct CollisionPair {
    int id = 0;
    PrimitiveRef moving;
    int obstacle = -1;                   ///< >= 0 for an obstacle pair
    std::optional<PrimitiveRef> other;   ///< set for a self pair
    double lipschitz = 0.0;              ///< bound on |d dist / dt|; summed over both sides for self pairs

    bool is_self() const { return other.has_value(); }
};

std::vector<CollisionPair> enumerate_pairs(const Problem& problem);

/// [T * index / (splits * 2^level), T * (index + 1) / (splits * 2^level)]
struct DyadicInterval {
    int level = 0;
    std::int64_t index = 0;

    bool operator==(const DyadicInterval&) const = default;
    double t0(int splits, double horizon) const;
    double t1(int splits, double horizon) const;
    double midpoint(int splits, double horizon) const;
    std::pair<DyadicInterval, DyadicInterval> children() const { return {{level + 1, 2 * index}, {level + 1, 2 * index + 1}}; }
};

/// Sorted, gap-free dyadic cover of [0, T] for one pair.
struct IntervalPartition {
    int splits = 1;
    double horizon = 1.0;
    std::vector<DyadicInterval> intervals;

    bool covers_horizon() const;
    std::vector<std::pair<double, double>> bounds() const;
};

/// Refines both partitions to their common refinement. Both must share the
/// base grid (splits, horizon).
void reconcile_partitions(IntervalPartition& a, IntervalPartition& b);

struct IntervalLeaf {
    int pair = 0;
    int node = 0;  ///< node in the pair's tree
    DyadicInterval span;
    double t0 = 0.0;
    double t1 = 0.0;
    double lipschitz = 0.0;

    double duration() const { return t1 - t0; }
    double midpoint() const { return 0.5 * (t0 + t1); }
};

/// Temporal binary tree of one pair. The top levels are a balanced split of
/// the initial intervals; below them every internal node is a subdivided leaf.
class PairTree {
public:
    struct Node {
        double t0 = 0.0;
        double t1 = 0.0;
        DyadicInterval span;  ///< meaningful when `dyadic`
        bool dyadic = false;
        int child[2] = {-1, -1};
        int parent = -1;
        bool leaf() const { return child[0] < 0; }
    };

    PairTree() = default;
    PairTree(int splits, double horizon);

    int root() const { return root_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    /// Leaf node ids in time order.
    std::vector<int> leaves() const;
    int leaf_count() const { return leaf_count_; }
    /// Replaces leaf `node` by two halves; returns the new child ids.
    std::pair<int, int> split(int node);

private:
    int build(int lo, int hi, int parent, int splits, double horizon);

    std::vector<Node> nodes_;
    int root_ = -1;
    int leaf_count_ = 0;
};

/// Per-pair interval partitions organised as space-time bounding-volume trees.
/// Node boxes depend on theta and live in a ConstraintEvaluator; the topology
/// lives here.
class StBvh {
public:
    StBvh() = default;
    StBvh(std::vector<CollisionPair> pairs, int splits, double horizon);

    const std::vector<CollisionPair>& pairs() const { return pairs_; }
    const PairTree& tree(int pair) const { return trees_.at(pair); }
    int splits() const { return splits_; }
    double horizon() const { return horizon_; }

    /// Every leaf, ordered by (pair id, t0).
    std::vector<IntervalLeaf> leaves() const;
    IntervalLeaf leaf(int pair, int node) const;
    std::size_t leaf_count() const;
    IntervalPartition partition(int pair) const;

    /// Splits the leaf at its midpoint. Throws std::invalid_argument when the
    /// leaf is not current.
    std::pair<IntervalLeaf, IntervalLeaf> subdivide(const IntervalLeaf& leaf);
    std::size_t subdivisions() const { return subdivisions_; }

    /// Reconciles two partitions and refines `pair` so that its leaves are at
    /// least as fine as the result. Returns the reconciled partition.
    IntervalPartition reconcile_self_pair(int pair, IntervalPartition side_a, IntervalPartition side_b);

private:
    std::vector<CollisionPair> pairs_;
    std::vector<PairTree> trees_;
    int splits_ = 1;
    double horizon_ = 1.0;
    std::size_t subdivisions_ = 0;
};

StBvh init_intervals(const Problem& problem, int initial_splits);

enum class Order { first, second };

struct EnergyResult {
    double value = 0.0;
    double objective = 0.0;
    double collision = 0.0;  ///< mu-weighted
    double limits = 0.0;     ///< mu-weighted
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;  ///< empty unless Order::second
    std::size_t active_terms = 0;

    bool finite() const { return std::isfinite(value); }
};

struct LeafDistance {
    IntervalLeaf leaf;
    double distance = 0.0;  ///< distance at the leaf midpoint
};

/// Snapshot of every quantity needed at one theta: configurations at all
/// distinct leaf midpoints and refitted node boxes.
class ConstraintEvaluator {
public:
    ConstraintEvaluator(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                        Exec exec = Exec::parallel);

    /// Leaves whose midpoint distance minus L * len / 2 lies below x0 + d0.
    std::vector<LeafDistance> active_terms() const;
    /// First leaf, in (pair id, t0) order, with dist_mid <= d0 + psi(len).
    std::optional<LeafDistance> safety_check() const;
    std::vector<LeafDistance> safety_violations() const;
    EnergyResult energy(const Objective& objective, double mu, Order order) const;

    /// Node boxes of the pair's tree: moving side, counterpart side.
    const std::vector<Aabb>& moving_boxes(int pair) const { return moving_boxes_.at(pair); }
    const std::vector<Aabb>& counterpart_boxes(int pair) const { return counter_boxes_.at(pair); }

    /// Exact distance of a pair at one of the snapshot's sample times.
    DistanceResult leaf_distance(const IntervalLeaf& leaf) const;

private:
    struct Sample {
        double t = 0.0;
        Eigen::VectorXd q;
        ChainPose pose;
        BasisRow basis;
    };

    /// Distance of a pair at one configuration and its gradient in joint space.
    double distance_and_gradient(const CollisionPair& pair, const ChainPose& pose, Eigen::VectorXd& grad_q) const;

    int sample_index(double t) const;
    PointList moving_vertices(const PrimitiveRef& ref, const Sample& s) const;
    std::vector<IntervalLeaf> query(double tau, bool safety) const;

    const Problem& problem_;
    const StBvh& bvh_;
    const TrajectoryParams& params_;
    Exec exec_;
    std::vector<Sample> samples_;
    std::vector<std::vector<Aabb>> moving_boxes_;
    std::vector<std::vector<Aabb>> counter_boxes_;
};

std::vector<LeafDistance> active_terms(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                                       Exec exec = Exec::parallel);
std::optional<LeafDistance> safety_check(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                                         Exec exec = Exec::parallel);
EnergyResult assemble_energy(const Problem& problem, const StBvh& bvh, const TrajectoryParams& params,
                             const Objective& objective, double mu, Order order, Exec exec = Exec::parallel);

}  // namespace feasip
