#pragma once

#include "feasip/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace feasip {

enum class JointKind { hinge, prismatic };

struct Joint {
    JointKind kind = JointKind::hinge;
    Vec3 axis = Vec3::UnitZ();
    /// Transform from the parent link frame (or world, for roots) to the joint frame.
    Pose parent_offset = Pose::Identity();
    /// Index of the parent joint/link, -1 for a root attached to the world.
    int parent = -1;
};

struct Link {
    std::vector<Primitive> primitives;
};

/// World placement of every joint and link for one configuration.
struct ChainPose {
    std::vector<Pose, Eigen::aligned_allocator<Pose>> link;
    PointList joint_origin;
    PointList joint_axis;
};

/// Open articulated tree. Joint i drives link i; a joint's parent is always
/// an earlier index.
class KinematicChain {
public:
    KinematicChain() = default;
    KinematicChain(std::vector<Joint> joints, std::vector<Link> links, Eigen::VectorXd lower, Eigen::VectorXd upper);

    int dof() const { return static_cast<int>(joints_.size()); }
    const std::vector<Joint>& joints() const { return joints_; }
    const std::vector<Link>& links() const { return links_; }
    const Primitive& primitive(int link, int index) const { return links_.at(link).primitives.at(index); }
    const Eigen::VectorXd& lower() const { return lower_; }
    const Eigen::VectorXd& upper() const { return upper_; }
    const std::vector<double>& link_lengths() const { return link_lengths_; }

    /// Joints from the root down to `link`, inclusive, in root-to-tip order.
    const std::vector<int>& path(int link) const { return paths_.at(link); }
    bool is_ancestor(int joint, int link) const;
    bool adjacent(int link_a, int link_b) const;

private:
    std::vector<Joint> joints_;
    std::vector<Link> links_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
    std::vector<double> link_lengths_;
    std::vector<std::vector<int>> paths_;
};

ChainPose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q);

/// 3 x dof velocity Jacobian of a link-local point.
Eigen::Matrix3Xd point_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q, int link, const Vec3& local_point);
Eigen::Matrix3Xd point_jacobian(const KinematicChain& chain, const ChainPose& pose, int link, const Vec3& world_point);

/// Accumulates g^T J for a world point on `link` into `out` (length dof).
void add_point_gradient(const KinematicChain& chain, const ChainPose& pose, int link, const Vec3& world_point,
                        const Vec3& g, Eigen::Ref<Eigen::VectorXd> out);

/// Upper bound on the speed of any point of primitive (link, index), and hence
/// on the rate of its distance to anything, when every |dq_k/dt| <= 1.
double lipschitz_bound(const KinematicChain& chain, int link, int index);

}  // namespace feasip
