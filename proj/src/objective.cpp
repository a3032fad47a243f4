#include "feasip/objective.hpp"

#include <algorithm>

namespace feasip {

Eigen::VectorXd expand_gradient(const Eigen::VectorXd& g, const BasisRow& basis, int free_count)
{
    Eigen::VectorXd out(g.size() * free_count);
    for (Eigen::Index k = 0; k < g.size(); ++k)
        out.segment(k * free_count, free_count) = g[k] * basis.theta;
    return out;
}

Eigen::MatrixXd expand_hessian(const Eigen::MatrixXd& h, const BasisRow& basis, int free_count)
{
    const Eigen::MatrixXd bb = basis.theta * basis.theta.transpose();
    const Eigen::Index n = h.rows();
    Eigen::MatrixXd out(n * free_count, n * free_count);
    for (Eigen::Index k = 0; k < n; ++k)
        for (Eigen::Index l = 0; l < n; ++l)
            out.block(k * free_count, l * free_count, free_count, free_count) = h(k, l) * bb;
    return out;
}

namespace {

// Second differences of the unique control-point sequence, as a map on theta_k.
struct Laplacian {
    Eigen::MatrixXd op;      // (nc - 2) x nf
    Eigen::VectorXd offset;  // multiplied by the joint's start value
};

Laplacian laplacian(const ExtractionMatrices& m)
{
    const Eigen::Index nc = m.ctrl.rows();
    Laplacian lap;
    lap.op = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(nc - 2, 0), m.ctrl.cols());
    lap.offset = Eigen::VectorXd::Zero(lap.op.rows());
    for (Eigen::Index i = 1; i + 1 < nc; ++i) {
        lap.op.row(i - 1) = m.ctrl.row(i - 1) - 2.0 * m.ctrl.row(i) + m.ctrl.row(i + 1);
        lap.offset[i - 1] = m.ctrl_start[i - 1] - 2.0 * m.ctrl_start[i] + m.ctrl_start[i + 1];
    }
    return lap;
}

}  // namespace

Objective make_objective(const KinematicChain& chain, const ObjectiveSpec& spec)
{
    return [chain, spec](const TrajectoryParams& params, bool with_hessian) {
        const int n = params.joints();
        const int nf = params.layout().free_count();
        const double horizon = params.layout().horizon;

        ObjectiveValue out;
        out.gradient = Eigen::VectorXd::Zero(params.size());
        if (with_hessian)
            out.hessian = Eigen::MatrixXd::Zero(params.size(), params.size());

        if (!spec.end_effectors.empty() || spec.joint_target) {
            const Eigen::VectorXd q = params.eval(horizon);
            const BasisRow basis = params.basis_gradient(horizon);
            Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
            Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);

            if (!spec.end_effectors.empty()) {
                const ChainPose pose = forward_kinematics(chain, q);
                for (const auto& ee : spec.end_effectors) {
                    const Vec3 p = pose.link[ee.link] * ee.point;
                    const Vec3 r = p - ee.target;
                    const Eigen::Matrix3Xd jac = point_jacobian(chain, pose, ee.link, p);
                    out.value += ee.weight * r.squaredNorm();
                    g += 2.0 * ee.weight * jac.transpose() * r;
                    if (with_hessian)
                        h += 2.0 * ee.weight * jac.transpose() * jac;
                }
            }
            if (spec.joint_target) {
                const Eigen::VectorXd r = q - spec.joint_target->q;
                const double w = spec.joint_target->weight;
                out.value += w * r.squaredNorm();
                g += 2.0 * w * r;
                if (with_hessian)
                    h.diagonal().array() += 2.0 * w;
            }
            out.gradient += expand_gradient(g, basis, nf);
            if (with_hessian)
                out.hessian += expand_hessian(h, basis, nf);
        }

        if (spec.smoothness_weight > 0.0) {
            const Laplacian lap = laplacian(params.extraction());
            const double w = spec.smoothness_weight;
            const Eigen::MatrixXd ltl = lap.op.transpose() * lap.op;
            for (int k = 0; k < n; ++k) {
                const Eigen::VectorXd second = lap.op * params.theta().segment(k * nf, nf) + lap.offset * params.start()[k];
                out.value += w * second.squaredNorm();
                out.gradient.segment(k * nf, nf) += 2.0 * w * lap.op.transpose() * second;
                if (with_hessian)
                    out.hessian.block(k * nf, k * nf, nf, nf) += 2.0 * w * ltl;
            }
        }
        return out;
    };
}

}  // namespace feasip
