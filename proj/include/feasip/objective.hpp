#pragma once

#include "feasip/problem.hpp"
#include "feasip/trajectory.hpp"

#include <Eigen/Core>

#include <functional>

namespace feasip {

struct ObjectiveValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;  ///< empty unless requested; Gauss-Newton for end-effector terms
};

using Objective = std::function<ObjectiveValue(const TrajectoryParams&, bool with_hessian)>;

Objective make_objective(const KinematicChain& chain, const ObjectiveSpec& spec);

/// Expands a per-joint sensitivity g (dof) into theta space via a basis row.
Eigen::VectorXd expand_gradient(const Eigen::VectorXd& g, const BasisRow& basis, int free_count);
/// Expands a dof x dof matrix H into theta space: H_kl * b b^T blocks.
Eigen::MatrixXd expand_hessian(const Eigen::MatrixXd& h, const BasisRow& basis, int free_count);

}  // namespace feasip
