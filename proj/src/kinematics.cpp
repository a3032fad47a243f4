#include "feasip/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace feasip {

KinematicChain::KinematicChain(std::vector<Joint> joints, std::vector<Link> links, Eigen::VectorXd lower,
                               Eigen::VectorXd upper)
    : joints_(std::move(joints)), links_(std::move(links)), lower_(std::move(lower)), upper_(std::move(upper))
{
    const auto n = joints_.size();
    if (links_.size() != n)
        throw std::invalid_argument("chain: link count must equal joint count");
    if (static_cast<std::size_t>(lower_.size()) != n || static_cast<std::size_t>(upper_.size()) != n)
        throw std::invalid_argument("chain: joint limit vectors must match joint count");

    paths_.resize(n);
    link_lengths_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& j = joints_[i];
        if (j.parent >= static_cast<int>(i) || j.parent < -1)
            throw std::invalid_argument("chain: joint " + std::to_string(i) + " parent must be an earlier joint or -1");
        const double len = j.axis.norm();
        if (!(len > 0.0) || !std::isfinite(len))
            throw std::invalid_argument("chain: joint " + std::to_string(i) + " axis must be nonzero");
        j.axis /= len;
        if (!(lower_[i] < upper_[i]))
            throw std::invalid_argument("chain: joint " + std::to_string(i) + " needs lower < upper");

        if (j.parent >= 0)
            paths_[i] = paths_[j.parent];
        paths_[i].push_back(static_cast<int>(i));

        double reach = 0.0;
        for (const auto& p : links_[i].primitives)
            for (const auto& v : p.vertices())
                reach = std::max(reach, v.norm() + p.sweep_radius());
        link_lengths_[i] = reach;
    }
}

bool KinematicChain::is_ancestor(int joint, int link) const
{
    const auto& p = paths_.at(link);
    return std::find(p.begin(), p.end(), joint) != p.end();
}

bool KinematicChain::adjacent(int link_a, int link_b) const
{
    return joints_.at(link_a).parent == link_b || joints_.at(link_b).parent == link_a;
}

ChainPose forward_kinematics(const KinematicChain& chain, const Eigen::VectorXd& q)
{
    const int n = chain.dof();
    if (q.size() != n)
        throw std::invalid_argument("forward_kinematics: expected " + std::to_string(n) + " joint values, got " +
                                    std::to_string(q.size()));
    ChainPose out;
    out.link.resize(n);
    out.joint_origin.resize(n);
    out.joint_axis.resize(n);
    for (int i = 0; i < n; ++i) {
        const Joint& j = chain.joints()[i];
        const Pose frame = (j.parent < 0 ? Pose::Identity() : out.link[j.parent]) * j.parent_offset;
        out.joint_origin[i] = frame.translation();
        out.joint_axis[i] = frame.linear() * j.axis;
        Pose motion = Pose::Identity();
        if (j.kind == JointKind::hinge)
            motion.linear() = Eigen::AngleAxisd(q[i], j.axis).toRotationMatrix();
        else
            motion.translation() = q[i] * j.axis;
        out.link[i] = frame * motion;
    }
    return out;
}

Eigen::Matrix3Xd point_jacobian(const KinematicChain& chain, const ChainPose& pose, int link, const Vec3& world_point)
{
    if (link < 0 || link >= chain.dof())
        throw std::out_of_range("point_jacobian: invalid link index " + std::to_string(link));
    Eigen::Matrix3Xd jac = Eigen::Matrix3Xd::Zero(3, chain.dof());
    for (int k : chain.path(link)) {
        const Vec3& axis = pose.joint_axis[k];
        if (chain.joints()[k].kind == JointKind::hinge)
            jac.col(k) = axis.cross(world_point - pose.joint_origin[k]);
        else
            jac.col(k) = axis;
    }
    return jac;
}

Eigen::Matrix3Xd point_jacobian(const KinematicChain& chain, const Eigen::VectorXd& q, int link, const Vec3& local_point)
{
    if (link < 0 || link >= chain.dof())
        throw std::out_of_range("point_jacobian: invalid link index " + std::to_string(link));
    const ChainPose pose = forward_kinematics(chain, q);
    return point_jacobian(chain, pose, link, pose.link[link] * local_point);
}

void add_point_gradient(const KinematicChain& chain, const ChainPose& pose, int link, const Vec3& world_point,
                        const Vec3& g, Eigen::Ref<Eigen::VectorXd> out)
{
    for (int k : chain.path(link)) {
        const Vec3& axis = pose.joint_axis[k];
        if (chain.joints()[k].kind == JointKind::hinge)
            out[k] += g.dot(axis.cross(world_point - pose.joint_origin[k]));
        else
            out[k] += g.dot(axis);
    }
}

namespace {

double max_abs_travel(const KinematicChain& chain, int joint)
{
    return std::max(std::abs(chain.lower()[joint]), std::abs(chain.upper()[joint]));
}

}  // namespace

// Column k of the point Jacobian is the unit axis for a prismatic joint, and
// for a hinge its norm is the lever from the axis, bounded by the straightened
// length of the chain between joint k and the point. Joint-to-joint spans are
// configuration independent except for prismatic travel along the way.
double lipschitz_bound(const KinematicChain& chain, int link, int index)
{
    const Primitive& prim = chain.primitive(link, index);
    const std::vector<int>& path = chain.path(link);
    const auto& joints = chain.joints();

    // span[p]: bound on |origin(path[p+1]) - origin(path[p])|
    std::vector<double> span(path.size(), 0.0);
    for (std::size_t p = 0; p + 1 < path.size(); ++p) {
        const int k = path[p];
        span[p] = joints[path[p + 1]].parent_offset.translation().norm();
        if (joints[k].kind == JointKind::prismatic)
            span[p] += max_abs_travel(chain, k);
    }
    const double own_travel = joints[link].kind == JointKind::prismatic ? max_abs_travel(chain, link) : 0.0;

    double best = 0.0;
    for (const auto& v : prim.vertices()) {
        const double local = v.norm() + own_travel;
        double total = 0.0;
        double tail = local;
        for (std::size_t p = path.size(); p-- > 0;) {
            if (joints[path[p]].kind == JointKind::prismatic)
                total += 1.0;
            else
                total += tail;
            if (p > 0)
                tail += span[p - 1];
        }
        best = std::max(best, total);
    }
    return best;
}

}  // namespace feasip
