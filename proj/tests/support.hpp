#pragma once

#include "feasip/kinematics.hpp"
#include "feasip/problem.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace feasip::test {

inline std::string scene_path(const std::string& name)
{
    return std::string(FEASIP_SCENE_DIR) + "/" + name + ".json";
}

/// Planar hinge chain about z with segment links of the given lengths.
inline KinematicChain planar_chain(const std::vector<double>& lengths, double sweep = 0.05, double limit = 3.1)
{
    std::vector<Joint> joints;
    std::vector<Link> links;
    double offset = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        Joint j;
        j.kind = JointKind::hinge;
        j.axis = Vec3::UnitZ();
        j.parent = static_cast<int>(i) - 1;
        j.parent_offset = Pose::Identity();
        j.parent_offset.translation() = Vec3(offset, 0, 0);
        joints.push_back(j);
        Link l;
        l.primitives.push_back(Primitive::segment(Vec3::Zero(), Vec3(lengths[i], 0, 0), sweep));
        links.push_back(l);
        offset = lengths[i];
    }
    const int n = static_cast<int>(lengths.size());
    return KinematicChain(joints, links, Eigen::VectorXd::Constant(n, -limit), Eigen::VectorXd::Constant(n, limit));
}

/// Body translating in the plane: prismatic x then prismatic y, point primitive on link 1.
inline KinematicChain planar_point_chain(double sweep = 0.1, double limit = 2.0)
{
    Joint jx;
    jx.kind = JointKind::prismatic;
    jx.axis = Vec3::UnitX();
    Joint jy;
    jy.kind = JointKind::prismatic;
    jy.axis = Vec3::UnitY();
    jy.parent = 0;
    Link lx;
    Link ly;
    ly.primitives.push_back(Primitive::point(Vec3::Zero(), sweep));
    return KinematicChain({jx, jy}, {lx, ly}, Eigen::VectorXd::Constant(2, -limit), Eigen::VectorXd::Constant(2, limit));
}

inline Obstacle point_obstacle(const Vec3& at, double sweep)
{
    Pose pose = Pose::Identity();
    pose.translation() = at;
    return Obstacle(Primitive::point(Vec3::Zero(), sweep), pose);
}

/// Central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h)
{
    Eigen::VectorXd g(x.size());
    for (int i = 0; i < x.size(); ++i) {
        Eigen::VectorXd a = x, b = x;
        a[i] += h;
        b[i] -= h;
        g[i] = (f(a) - f(b)) / (2.0 * h);
    }
    return g;
}

/// max_i |a_i - b_i| / max(|b|_inf, floor)
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8)
{
    const double scale = std::max(b.lpNorm<Eigen::Infinity>(), floor);
    return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

inline double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

}  // namespace feasip::test
