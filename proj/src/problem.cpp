#include "feasip/problem.hpp"

#include <stdexcept>
#include <string>

namespace feasip {

void Problem::validate() const
{
    barrier.validate();
    layout.validate();
    const int n = chain.dof();
    if (n == 0)
        throw std::invalid_argument("chain: no joints");
    if (start.size() != n)
        throw std::invalid_argument("start: expected " + std::to_string(n) + " values, got " +
                                    std::to_string(start.size()));
    for (int k = 0; k < n; ++k)
        if (!(start[k] > chain.lower()[k] && start[k] < chain.upper()[k]))
            throw std::invalid_argument("start[" + std::to_string(k) + "]: outside the joint limits");
    if (initial_splits < 1)
        throw std::invalid_argument("initial_splits: must be >= 1");
    for (std::size_t i = 0; i < objective.end_effectors.size(); ++i) {
        const auto& ee = objective.end_effectors[i];
        if (ee.link < 0 || ee.link >= n)
            throw std::invalid_argument("objective.end_effectors[" + std::to_string(i) + "].link: out of range");
        if (!(ee.weight >= 0.0))
            throw std::invalid_argument("objective.end_effectors[" + std::to_string(i) + "].weight: must be >= 0");
    }
    if (objective.joint_target && objective.joint_target->q.size() != n)
        throw std::invalid_argument("objective.joint_target.q: expected " + std::to_string(n) + " values");
    if (!(objective.smoothness_weight >= 0.0))
        throw std::invalid_argument("objective.smoothness_weight: must be >= 0");
    if (containment && (containment->link < 0 || containment->link >= n))
        throw std::invalid_argument("containment.link: out of range");
}

bool contained(const Problem& problem, const TrajectoryParams& params)
{
    if (!problem.containment)
        return true;
    const auto& probe = *problem.containment;
    const ChainPose pose = forward_kinematics(problem.chain, params.eval(problem.layout.horizon));
    const Vec3 p = pose.link[probe.link] * probe.point;
    return ((p - probe.center).cwiseAbs().array() <= probe.half_extents.array()).all();
}

}  // namespace feasip
