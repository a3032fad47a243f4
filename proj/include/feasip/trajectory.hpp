#pragma once

#include "feasip/barrier.hpp"
#include "feasip/kinematics.hpp"

#include <Eigen/Core>

#include <memory>

namespace feasip {

enum class Continuity { c0, c1 };

/// Shape of a composite Bezier trajectory; every joint shares it.
struct TrajectoryLayout {
    int degree = 5;
    int segments = 5;
    double horizon = 5.0;
    Continuity continuity = Continuity::c1;

    void validate() const;
    double segment_duration() const { return horizon / segments; }
    /// Distinct control points per joint; segment boundaries are shared.
    int control_count() const { return segments * degree + 1; }
    /// Free parameters per joint (the first control point is pinned to the start).
    int free_count() const;
};

/// Affine maps from one joint's free parameters (and its pinned start value)
/// to its control points and to the control points of its derivative curve.
/// Rows of `ctrl` are ordered by segment then index, boundaries stored once.
struct ExtractionMatrices {
    Eigen::MatrixXd ctrl;
    Eigen::VectorXd ctrl_start;
    Eigen::MatrixXd rate;
    Eigen::VectorXd rate_start;
};

ExtractionMatrices extraction_matrices(const TrajectoryLayout& layout);

/// d Theta_k(t) / d theta_k, identical for every joint k.
struct BasisRow {
    int segment = 0;
    double u = 0.0;
    Eigen::VectorXd bernstein;  ///< weights of the active segment's control points
    Eigen::VectorXd theta;      ///< weights of the joint's free parameters
    double start = 0.0;         ///< weight of the pinned start value
};

/// theta layout: joint-major, `free_count()` entries per joint.
class TrajectoryParams {
public:
    TrajectoryParams() = default;
    /// Stationary trajectory holding `start` for the whole horizon.
    TrajectoryParams(const TrajectoryLayout& layout, Eigen::VectorXd start);
    TrajectoryParams(const TrajectoryLayout& layout, Eigen::VectorXd start, Eigen::VectorXd theta);

    const TrajectoryLayout& layout() const { return layout_; }
    int joints() const { return static_cast<int>(start_.size()); }
    int size() const { return static_cast<int>(theta_.size()); }
    const Eigen::VectorXd& start() const { return start_; }
    const Eigen::VectorXd& theta() const { return theta_; }
    void set_theta(const Eigen::VectorXd& theta);
    TrajectoryParams with_theta(const Eigen::VectorXd& theta) const;
    const ExtractionMatrices& extraction() const { return *matrices_; }

    Eigen::VectorXd eval(double t) const;
    Eigen::VectorXd eval_rate(double t) const;
    BasisRow basis_gradient(double t) const;

    /// Control points of joint k (control_count() entries).
    Eigen::VectorXd control_points(int joint) const { return ctrl_.row(joint).transpose(); }
    /// Control points of dTheta_k/dt (segments * degree entries).
    Eigen::VectorXd rate_control_points(int joint) const { return rate_.row(joint).transpose(); }

private:
    void refresh();
    void check_time(double t) const;
    std::pair<int, double> locate(double t) const;

    TrajectoryLayout layout_;
    std::shared_ptr<const ExtractionMatrices> matrices_;
    Eigen::VectorXd start_;
    Eigen::VectorXd theta_;
    Eigen::MatrixXd ctrl_;
    Eigen::MatrixXd rate_;
};

struct BarrierTerms {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;  ///< empty unless requested
};

/// Conservative joint-limit and unit-rate barrier on the control points.
/// value is kInfeasible when any control point touches or leaves its bound.
BarrierTerms limit_barrier(const TrajectoryParams& params, const KinematicChain& chain, const BarrierSpec& spec,
                           bool with_hessian = false);

}  // namespace feasip
