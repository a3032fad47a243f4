#include "feasip/kinematics.hpp"
#include "feasip/oracle.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace feasip;
using feasip::test::planar_chain;

namespace {

Vec3 tip(const KinematicChain& chain, const Eigen::VectorXd& q, int link, const Vec3& local)
{
    return forward_kinematics(chain, q).link[link] * local;
}

// Independent product of 4x4 homogeneous matrices for a serial chain.
Eigen::Matrix4d oracle_transform(const KinematicChain& chain, const Eigen::VectorXd& q, int link)
{
    std::vector<int> order;
    for (int k = link; k >= 0; k = chain.joints()[k].parent)
        order.insert(order.begin(), k);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int k : order) {
        const Joint& j = chain.joints()[k];
        m = m * j.parent_offset.matrix();
        Eigen::Matrix4d motion = Eigen::Matrix4d::Identity();
        if (j.kind == JointKind::hinge) {
            const Eigen::Vector3d a = j.axis.normalized();
            const double c = std::cos(q[k]), s = std::sin(q[k]);
            Eigen::Matrix3d K;
            K << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
            motion.topLeftCorner<3, 3>() = Eigen::Matrix3d::Identity() + s * K + (1 - c) * K * K;
        } else {
            motion.topRightCorner<3, 1>() = j.axis.normalized() * q[k];
        }
        m = m * motion;
    }
    return m;
}

KinematicChain spatial_chain(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Joint> joints;
    std::vector<Link> links;
    for (int i = 0; i < n; ++i) {
        Joint j;
        j.kind = (i % 3 == 2) ? JointKind::prismatic : JointKind::hinge;
        j.axis = Vec3(u(rng), u(rng), u(rng)).normalized();
        j.parent = i - 1;
        j.parent_offset = Pose::Identity();
        j.parent_offset.linear() = Eigen::AngleAxisd(u(rng), Vec3(u(rng), u(rng), u(rng)).normalized()).toRotationMatrix();
        j.parent_offset.translation() = i == 0 ? Vec3::Zero() : Vec3(u(rng), u(rng), u(rng));
        joints.push_back(j);
        Link l;
        l.primitives.push_back(Primitive::segment(Vec3::Zero(), Vec3(u(rng), u(rng), u(rng)), 0.01));
        links.push_back(l);
    }
    return KinematicChain(joints, links, Eigen::VectorXd::Constant(n, -1.5), Eigen::VectorXd::Constant(n, 1.5));
}

}  // namespace

TEST_CASE("straight and quarter-turn planar configurations")
{
    const auto chain = planar_chain({1.0, 1.0});
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
    CHECK((tip(chain, zero, 0, Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm() < 1e-15);
    CHECK((tip(chain, zero, 1, Vec3(1, 0, 0)) - Vec3(2, 0, 0)).norm() < 1e-15);

    const Eigen::Vector2d quarter(M_PI / 2, 0.0);
    CHECK((tip(chain, quarter, 0, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-15);
    CHECK((tip(chain, quarter, 1, Vec3(1, 0, 0)) - Vec3(0, 2, 0)).norm() < 1e-15);
}

TEST_CASE("forward kinematics matches a matrix-product oracle")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.4, 1.4);
    for (int trial = 0; trial < 50; ++trial) {
        const auto chain = spatial_chain(rng, 5);
        Eigen::VectorXd q(5);
        for (int k = 0; k < 5; ++k)
            q[k] = u(rng);
        const ChainPose pose = forward_kinematics(chain, q);
        for (int link = 0; link < 5; ++link)
            CHECK((pose.link[link].matrix() - oracle_transform(chain, q, link)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("single hinge and prismatic Jacobian columns")
{
    const auto hinge = planar_chain({1.0});
    const Eigen::Matrix3Xd j = point_jacobian(hinge, Eigen::VectorXd::Zero(1), 0, Vec3(1, 0, 0));
    CHECK((j.col(0) - Vec3(0, 1, 0)).norm() < 1e-15);

    Joint p;
    p.kind = JointKind::prismatic;
    p.axis = Vec3::UnitX();
    Link l;
    l.primitives.push_back(Primitive::point(Vec3::Zero()));
    const KinematicChain slider({p}, {l}, Eigen::VectorXd::Constant(1, -2), Eigen::VectorXd::Constant(1, 2));
    for (double q : {-1.0, 0.0, 0.7}) {
        const Eigen::Matrix3Xd js = point_jacobian(slider, Eigen::VectorXd::Constant(1, q), 0, Vec3(0.3, 0.2, 0));
        CHECK((js.col(0) - Vec3(1, 0, 0)).norm() < 1e-15);
    }
}

TEST_CASE("point Jacobian matches central differences")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.4, 1.4);
    const double h = 1e-6;
    for (int trial = 0; trial < 50; ++trial) {
        const auto chain = spatial_chain(rng, 5);
        Eigen::VectorXd q(5);
        for (int k = 0; k < 5; ++k)
            q[k] = u(rng);
        const Vec3 local(0.3, -0.2, 0.5);
        const int link = 4;
        const Eigen::Matrix3Xd j = point_jacobian(chain, q, link, local);
        Eigen::Matrix3Xd fd(3, 5);
        for (int k = 0; k < 5; ++k) {
            Eigen::VectorXd a = q, b = q;
            a[k] += h;
            b[k] -= h;
            fd.col(k) = (tip(chain, a, link, local) - tip(chain, b, link, local)) / (2 * h);
        }
        CHECK((j - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("Jacobian columns of non-ancestor joints are zero")
{
    // two independent arms rooted at the world
    auto chain = planar_chain({1.0, 1.0});
    std::vector<Joint> joints = chain.joints();
    std::vector<Link> links = chain.links();
    Joint other;
    other.parent = -1;
    other.parent_offset.translation() = Vec3(3, 0, 0);
    joints.push_back(other);
    links.push_back(links[0]);
    const KinematicChain tree(joints, links, Eigen::VectorXd::Constant(3, -3), Eigen::VectorXd::Constant(3, 3));
    const Eigen::Vector3d q(0.3, -0.4, 0.9);
    const Eigen::Matrix3Xd a = point_jacobian(tree, q, 1, Vec3(1, 0, 0));
    CHECK(a.col(2).norm() == 0.0);
    const Eigen::Matrix3Xd b = point_jacobian(tree, q, 2, Vec3(1, 0, 0));
    CHECK(b.col(0).norm() == 0.0);
    CHECK(b.col(1).norm() == 0.0);
    CHECK_FALSE(tree.adjacent(0, 2));
    CHECK(tree.adjacent(0, 1));
}

TEST_CASE("Lipschitz bounds of simple chains")
{
    const auto one = planar_chain({1.0});
    CHECK(lipschitz_bound(one, 0, 0) == doctest::Approx(1.0));

    // tip of the second unit link: (l1 + l2) + l2
    const auto two = planar_chain({1.0, 1.0});
    CHECK(lipschitz_bound(two, 1, 0) == doctest::Approx(3.0));

    // triangle at the tip of a one-link chain with its farthest vertex at radius 1.5
    Joint j;
    Link l;
    l.primitives.push_back(Primitive::polytope({Vec3(1, 0, 0), Vec3(1.5, 0, 0), Vec3(1, 0.5, 0)}));
    const KinematicChain tri({j}, {l}, Eigen::VectorXd::Constant(1, -3), Eigen::VectorXd::Constant(1, 3));
    CHECK(lipschitz_bound(tri, 0, 0) == doctest::Approx(1.5));
    const LipschitzSample s = lipschitz_ground_truth(tri, 0, 0, 200, 1e-3, 17);
    CHECK(s.l1_star <= 1.5 + 1e-9);
    CHECK(s.l1_star > 1.49);
}

TEST_CASE("sampled distance changes respect the Lipschitz bound")
{
    const auto chain = planar_chain({1.0, 0.8, 0.6}, 0.05);
    const Obstacle obstacle = feasip::test::point_obstacle(Vec3(1.2, 0.9, 0.0), 0.1);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double dt = 1e-3;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd rate(3), q0(3);
        for (int k = 0; k < 3; ++k) {
            rate[k] = u(rng);
            q0[k] = u(rng);
        }
        rate /= rate.lpNorm<Eigen::Infinity>();
        for (int link = 0; link < 3; ++link) {
            const Primitive& prim = chain.primitive(link, 0);
            const double bound = lipschitz_bound(chain, link, 0);
            double prev = 0.0;
            for (int k = 0; k <= 200; ++k) {
                const ChainPose pose = forward_kinematics(chain, q0 + rate * (k * dt));
                const double d = hull_distance(prim.world_vertices(pose.link[link]), prim.sweep_radius(),
                                               obstacle.world, obstacle.primitive.sweep_radius())
                                     .distance;
                if (k > 0)
                    CHECK(std::abs(d - prev) <= bound * dt + 1e-12);
                prev = d;
            }
        }
        // self pair: links 0 and 2 move together, the bounds add up
        const double self_bound = lipschitz_bound(chain, 0, 0) + lipschitz_bound(chain, 2, 0);
        double prev = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const ChainPose pose = forward_kinematics(chain, q0 + rate * (k * dt));
            const double d = hull_distance(chain.primitive(0, 0).world_vertices(pose.link[0]), 0.05,
                                           chain.primitive(2, 0).world_vertices(pose.link[2]), 0.05)
                                 .distance;
            if (k > 0)
                CHECK(std::abs(d - prev) <= self_bound * dt + 1e-12);
            prev = d;
        }
    }
}

TEST_CASE("ground truth speeds for prismatic and two-link chains")
{
    Joint p;
    p.kind = JointKind::prismatic;
    Link l;
    l.primitives.push_back(Primitive::point(Vec3::Zero()));
    const KinematicChain slider({p}, {l}, Eigen::VectorXd::Constant(1, -5), Eigen::VectorXd::Constant(1, 5));
    const LipschitzSample s = lipschitz_ground_truth(slider, 0, 0, 50, 1e-3, 1);
    CHECK(s.l1_star == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.bound == doctest::Approx(1.0));

    // straight arm, both joints spinning at rate 1: the tip speed starts at exactly 3
    const auto two = planar_chain({1.0, 1.0});
    const double straight = observed_speed(two, 1, 0, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2), 1e-3, 1e-6);
    CHECK(straight == doctest::Approx(3.0).epsilon(1e-5));
    CHECK(straight <= 3.0);
    const LipschitzSample r = lipschitz_ground_truth(two, 1, 0, 1000, 1e-3, 2);
    CHECK(r.l1_star <= 3.0);
    for (double v : r.per_trial)
        CHECK(r.bound / v >= 1.0);
}
