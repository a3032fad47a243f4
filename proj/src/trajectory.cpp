#include "feasip/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace feasip {

void TrajectoryLayout::validate() const
{
    if (degree < 1)
        throw std::invalid_argument("degree: must be >= 1");
    if (segments < 1)
        throw std::invalid_argument("segments: must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw std::invalid_argument("horizon: must be > 0");
}

int TrajectoryLayout::free_count() const
{
    const int per_later = continuity == Continuity::c1 ? degree - 1 : degree;
    return degree + (segments - 1) * per_later;
}

ExtractionMatrices extraction_matrices(const TrajectoryLayout& layout)
{
    layout.validate();
    const int p = layout.degree;
    const int nc = layout.control_count();
    const int nf = layout.free_count();

    ExtractionMatrices m;
    m.ctrl = Eigen::MatrixXd::Zero(nc, nf);
    m.ctrl_start = Eigen::VectorXd::Zero(nc);
    m.ctrl_start[0] = 1.0;

    int next_free = 0;
    for (int s = 0; s < layout.segments; ++s) {
        for (int i = 1; i <= p; ++i) {
            const int row = s * p + i;
            const bool mirrored = s > 0 && i == 1 && layout.continuity == Continuity::c1;
            if (mirrored) {
                // equal segment durations: c_{s,1} = 2 c_{s-1,p} - c_{s-1,p-1}
                m.ctrl.row(row) = 2.0 * m.ctrl.row(row - 1) - m.ctrl.row(row - 2);
                m.ctrl_start[row] = 2.0 * m.ctrl_start[row - 1] - m.ctrl_start[row - 2];
            } else {
                m.ctrl(row, next_free++) = 1.0;
            }
        }
    }

    const int nr = layout.segments * p;
    const double scale = p / layout.segment_duration();
    m.rate = Eigen::MatrixXd::Zero(nr, nf);
    m.rate_start = Eigen::VectorXd::Zero(nr);
    for (int r = 0; r < nr; ++r) {
        m.rate.row(r) = scale * (m.ctrl.row(r + 1) - m.ctrl.row(r));
        m.rate_start[r] = scale * (m.ctrl_start[r + 1] - m.ctrl_start[r]);
    }
    return m;
}

TrajectoryParams::TrajectoryParams(const TrajectoryLayout& layout, Eigen::VectorXd start)
    : layout_(layout), matrices_(std::make_shared<ExtractionMatrices>(extraction_matrices(layout))),
      start_(std::move(start))
{
    const int nf = layout_.free_count();
    theta_.resize(static_cast<Eigen::Index>(joints()) * nf);
    for (int k = 0; k < joints(); ++k)
        theta_.segment(k * nf, nf).setConstant(start_[k]);
    refresh();
}

TrajectoryParams::TrajectoryParams(const TrajectoryLayout& layout, Eigen::VectorXd start, Eigen::VectorXd theta)
    : layout_(layout), matrices_(std::make_shared<ExtractionMatrices>(extraction_matrices(layout))),
      start_(std::move(start)), theta_(std::move(theta))
{
    if (theta_.size() != static_cast<Eigen::Index>(joints()) * layout_.free_count())
        throw std::invalid_argument("trajectory: theta has " + std::to_string(theta_.size()) + " entries, expected " +
                                    std::to_string(joints() * layout_.free_count()));
    refresh();
}

void TrajectoryParams::set_theta(const Eigen::VectorXd& theta)
{
    if (theta.size() != theta_.size())
        throw std::invalid_argument("trajectory: theta size mismatch");
    theta_ = theta;
    refresh();
}

TrajectoryParams TrajectoryParams::with_theta(const Eigen::VectorXd& theta) const
{
    TrajectoryParams out = *this;
    out.set_theta(theta);
    return out;
}

void TrajectoryParams::refresh()
{
    const int nf = layout_.free_count();
    const auto& m = *matrices_;
    ctrl_.resize(joints(), m.ctrl.rows());
    rate_.resize(joints(), m.rate.rows());
    for (int k = 0; k < joints(); ++k) {
        const auto th = theta_.segment(k * nf, nf);
        ctrl_.row(k) = (m.ctrl * th + m.ctrl_start * start_[k]).transpose();
        rate_.row(k) = (m.rate * th + m.rate_start * start_[k]).transpose();
    }
}

void TrajectoryParams::check_time(double t) const
{
    if (!(t >= 0.0 && t <= layout_.horizon))
        throw std::out_of_range("trajectory: t = " + std::to_string(t) + " outside [0, " +
                                std::to_string(layout_.horizon) + "]");
}

std::pair<int, double> TrajectoryParams::locate(double t) const
{
    check_time(t);
    const double h = layout_.segment_duration();
    const int s = std::min(layout_.segments - 1, static_cast<int>(std::floor(t / h)));
    const double u = std::clamp((t - s * h) / h, 0.0, 1.0);
    return {s, u};
}

namespace {

double de_casteljau(std::vector<double> pts, double u)
{
    for (std::size_t level = pts.size(); level-- > 1;)
        for (std::size_t i = 0; i < level; ++i)
            pts[i] = (1.0 - u) * pts[i] + u * pts[i + 1];
    return pts[0];
}

Eigen::VectorXd bernstein(int degree, double u)
{
    Eigen::VectorXd b = Eigen::VectorXd::Zero(degree + 1);
    b[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        double saved = 0.0;
        for (int i = 0; i < j; ++i) {
            const double tmp = b[i];
            b[i] = saved + (1.0 - u) * tmp;
            saved = u * tmp;
        }
        b[j] = saved;
    }
    return b;
}

}  // namespace

Eigen::VectorXd TrajectoryParams::eval(double t) const
{
    const auto [s, u] = locate(t);
    const int p = layout_.degree;
    Eigen::VectorXd q(joints());
    std::vector<double> pts(p + 1);
    for (int k = 0; k < joints(); ++k) {
        for (int i = 0; i <= p; ++i)
            pts[i] = ctrl_(k, s * p + i);
        q[k] = de_casteljau(pts, u);
    }
    return q;
}

Eigen::VectorXd TrajectoryParams::eval_rate(double t) const
{
    const auto [s, u] = locate(t);
    const int p = layout_.degree;
    Eigen::VectorXd dq(joints());
    std::vector<double> pts(p);
    for (int k = 0; k < joints(); ++k) {
        for (int i = 0; i < p; ++i)
            pts[i] = rate_(k, s * p + i);
        dq[k] = de_casteljau(pts, u);
    }
    return dq;
}

BasisRow TrajectoryParams::basis_gradient(double t) const
{
    const auto [s, u] = locate(t);
    const int p = layout_.degree;
    const auto& m = *matrices_;
    BasisRow row;
    row.segment = s;
    row.u = u;
    row.bernstein = bernstein(p, u);
    row.theta = Eigen::VectorXd::Zero(m.ctrl.cols());
    for (int i = 0; i <= p; ++i) {
        row.theta += row.bernstein[i] * m.ctrl.row(s * p + i).transpose();
        row.start += row.bernstein[i] * m.ctrl_start[s * p + i];
    }
    return row;
}

BarrierTerms limit_barrier(const TrajectoryParams& params, const KinematicChain& chain, const BarrierSpec& spec,
                           bool with_hessian)
{
    const int n = params.joints();
    if (chain.dof() != n)
        throw std::invalid_argument("limit_barrier: chain and trajectory joint counts differ");
    const int nf = params.layout().free_count();
    const auto& m = params.extraction();

    BarrierTerms out;
    out.gradient = Eigen::VectorXd::Zero(params.size());
    if (with_hessian)
        out.hessian = Eigen::MatrixXd::Zero(params.size(), params.size());

    // Each term is P(sign * (row . theta_k + offset) + bound).
    auto add = [&](int k, const Eigen::Ref<const Eigen::RowVectorXd>& row, double value, double sign, double bound) {
        const double gap = bound + sign * value;
        const PenaltyValue pv = penalty(gap, spec.x0);
        if (!std::isfinite(pv.value)) {
            out.value = kInfeasible;
            return;
        }
        if (pv.value == 0.0 && pv.d1 == 0.0)
            return;
        out.value += pv.value;
        out.gradient.segment(k * nf, nf) += sign * pv.d1 * row.transpose();
        if (with_hessian)
            out.hessian.block(k * nf, k * nf, nf, nf) += pv.d2 * row.transpose() * row;
    };

    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd c = params.control_points(k);
        const Eigen::VectorXd r = params.rate_control_points(k);
        for (int i = 0; i < c.size(); ++i) {
            add(k, m.ctrl.row(i), c[i], -1.0, chain.upper()[k]);
            add(k, m.ctrl.row(i), c[i], 1.0, -chain.lower()[k]);
        }
        for (int i = 0; i < r.size(); ++i) {
            add(k, m.rate.row(i), r[i], -1.0, 1.0);
            add(k, m.rate.row(i), r[i], 1.0, 1.0);
        }
    }
    if (!std::isfinite(out.value)) {
        out.value = kInfeasible;
        out.gradient.setZero();
        if (with_hessian)
            out.hessian.setZero();
    }
    return out;
}

}  // namespace feasip
