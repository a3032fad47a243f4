#pragma once

#include "feasip/barrier.hpp"
#include "feasip/geometry.hpp"
#include "feasip/kinematics.hpp"
#include "feasip/trajectory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace feasip {

struct Obstacle {
    Primitive primitive;
    Pose pose = Pose::Identity();
    PointList world;  ///< vertices in the world frame

    Obstacle() = default;
    Obstacle(Primitive prim, const Pose& p) : primitive(std::move(prim)), pose(p), world(primitive.world_vertices(p)) {}
};

struct EndEffectorTarget {
    int link = 0;
    Vec3 point = Vec3::Zero();  ///< link-local
    Vec3 target = Vec3::Zero();
    double weight = 1.0;
};

struct JointTarget {
    Eigen::VectorXd q;
    double weight = 1.0;
};

/// O(theta): weighted sum of end-point targets (evaluated at t = T) and a
/// Laplacian smoothness term on the control points.
struct ObjectiveSpec {
    std::vector<EndEffectorTarget> end_effectors;
    std::optional<JointTarget> joint_target;
    double smoothness_weight = 0.0;
};

/// Axis-aligned region a designated point must stay inside at t = T.
struct ContainmentProbe {
    int link = 0;
    Vec3 point = Vec3::Zero();
    Vec3 center = Vec3::Zero();
    Vec3 half_extents = Vec3::Ones();
};

struct Problem {
    std::string name;
    KinematicChain chain;
    std::vector<Obstacle> obstacles;
    Eigen::VectorXd start;
    TrajectoryLayout layout;
    ObjectiveSpec objective;
    BarrierSpec barrier;
    bool self_collision = false;
    bool include_adjacent = false;
    bool limit_barriers = true;
    int initial_splits = 8;
    std::optional<ContainmentProbe> containment;

    /// Throws std::invalid_argument on inconsistent dimensions or constants.
    void validate() const;
};

/// true when the probe point at t = T lies inside the probe region.
bool contained(const Problem& problem, const TrajectoryParams& params);

}  // namespace feasip
