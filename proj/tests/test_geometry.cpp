#include "feasip/geometry.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace feasip;

namespace {

PointList unit_square()
{
    return {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
}

Pose translation(const Vec3& t)
{
    Pose p = Pose::Identity();
    p.translation() = t;
    return p;
}

Pose random_pose(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
    q.normalize();
    Pose p = Pose::Identity();
    p.linear() = q.toRotationMatrix();
    p.translation() = Vec3(u(rng), u(rng), u(rng)) * 3.0;
    return p;
}

PointList random_cloud(std::mt19937_64& rng, int n, const Vec3& centre)
{
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    PointList out;
    for (int i = 0; i < n; ++i)
        out.push_back(centre + Vec3(u(rng), u(rng), u(rng)));
    return out;
}

// Points along the boundary of a polygon, spaced at most `step` apart.
PointList boundary_samples(const PointList& poly, double step)
{
    PointList out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3& a = poly[i];
        const Vec3& b = poly[(i + 1) % poly.size()];
        const int n = static_cast<int>(std::ceil((b - a).norm() / step));
        for (int k = 0; k < n; ++k)
            out.push_back(a + (b - a) * (static_cast<double>(k) / n));
    }
    return out;
}

}  // namespace

TEST_CASE("distance between two points")
{
    const auto a = Primitive::point(Vec3::Zero());
    const auto b = Primitive::point(Vec3(3, 4, 0));
    CHECK(distance(a, Pose::Identity(), b, Pose::Identity()).distance == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("identical polytopes overlap")
{
    const auto p = Primitive::polytope(unit_square());
    CHECK(distance(p, Pose::Identity(), p, Pose::Identity()).distance <= 0.0);
}

TEST_CASE("translated unit squares against a boundary sampling oracle")
{
    const auto sq = Primitive::polytope(unit_square());
    const double d = distance(sq, Pose::Identity(), sq, translation(Vec3(2.5, 0, 0))).distance;

    PointList moved = unit_square();
    for (auto& v : moved)
        v += Vec3(2.5, 0, 0);
    const PointList sa = boundary_samples(unit_square(), 1e-3);
    const PointList sb = boundary_samples(moved, 1e-3);
    double brute = std::numeric_limits<double>::infinity();
    for (const auto& p : sa)
        for (const auto& q : sb)
            brute = std::min(brute, (p - q).norm());
    CHECK(brute == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(d == doctest::Approx(brute).epsilon(1e-9));
}

TEST_CASE("sweep radius is subtracted from the core distance")
{
    const auto a = Primitive::segment(Vec3(0, 0, 0), Vec3(1, 0, 0), 0.1);
    const auto b = Primitive::point(Vec3(0.5, 1, 0), 0.2);
    CHECK(distance(a, Pose::Identity(), b, Pose::Identity()).distance == doctest::Approx(0.7).epsilon(1e-14));
    const auto c = Primitive::point(Vec3(0.5, 0.25, 0), 0.2);
    CHECK(distance(a, Pose::Identity(), c, Pose::Identity()).distance < 0.0);
}

TEST_CASE("support points")
{
    const auto seg = Primitive::segment(Vec3(0, 0, 0), Vec3(1, 0, 0));
    CHECK((support(seg, Pose::Identity(), Vec3(1, 0, 0)) - Vec3(1, 0, 0)).norm() == 0.0);

    const auto pt = Primitive::point(Vec3(0.3, -2, 1));
    for (const Vec3& d : {Vec3(1, 0, 0), Vec3(0, -1, 0), Vec3(1, 1, 1)})
        CHECK((support(pt, Pose::Identity(), d) - Vec3(0.3, -2, 1)).norm() == 0.0);

    // enumerate vertices: the top edge ties, the lowest index (1,1,0) wins
    const auto sq = Primitive::polytope(unit_square(), 0.1);
    const PointList& v = sq.vertices();
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i].y() > v[best].y())
            best = i;
    const Vec3 expected = v[best] + Vec3(0, 0.1, 0);
    CHECK((support(sq, Pose::Identity(), Vec3(0, 1, 0)) - expected).norm() < 1e-15);
    CHECK((expected - Vec3(1, 1.1, 0)).norm() < 1e-15);
}

TEST_CASE("distance is symmetric and invariant under a common rigid motion")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = Primitive::polytope(random_cloud(rng, 6, Vec3::Zero()), 0.05);
        const auto b = Primitive::polytope(random_cloud(rng, 5, Vec3::Zero()), 0.02);
        const Pose pa = random_pose(rng);
        const Pose pb = random_pose(rng);
        const double dab = distance(a, pa, b, pb).distance;
        const double dba = distance(b, pb, a, pa).distance;
        CHECK(std::abs(dab - dba) <= 1e-12);
        const Pose g = random_pose(rng);
        const double moved = distance(a, g * pa, b, g * pb).distance;
        CHECK(std::abs(moved - dab) <= 1e-10);
    }
}

TEST_CASE("vertex gradients match central differences")
{
    std::mt19937_64 rng(11);
    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const PointList a = random_cloud(rng, 5, Vec3::Zero());
        const PointList b = random_cloud(rng, 4, Vec3(2.0, 0.3, -0.2));
        const DistanceResult r = hull_distance(a, 0.05, b, 0.01);
        REQUIRE(r.distance > 0.0);

        auto grad_error = [&](const PointList& base, bool first) {
            double worst = 0.0;
            double scale = 0.0;
            for (std::size_t v = 0; v < base.size(); ++v) {
                for (int k = 0; k < 3; ++k) {
                    PointList plus = base, minus = base;
                    plus[v][k] += h;
                    minus[v][k] -= h;
                    const double fp = first ? hull_distance(plus, 0.05, b, 0.01).distance
                                            : hull_distance(a, 0.05, plus, 0.01).distance;
                    const double fm = first ? hull_distance(minus, 0.05, b, 0.01).distance
                                            : hull_distance(a, 0.05, minus, 0.01).distance;
                    const double fd = (fp - fm) / (2 * h);
                    const double an = first ? r.grad_vertices_a[v][k] : r.grad_vertices_b[v][k];
                    worst = std::max(worst, std::abs(fd - an));
                    scale = std::max(scale, std::abs(an));
                }
            }
            return worst / std::max(scale, 1e-12);
        };
        CHECK(grad_error(a, true) < 1e-5);
        CHECK(grad_error(b, false) < 1e-5);
        ++checked;
    }
    CHECK(checked == 100);
}

TEST_CASE("witnesses are closest among sampled hull points")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const PointList a = random_cloud(rng, 6, Vec3::Zero());
        const PointList b = random_cloud(rng, 6, Vec3(1.5, 0.5, 0.0));
        const DistanceResult r = hull_distance(a, 0.0, b, 0.0);
        const double best = (r.witness_a - r.witness_b).norm();
        for (int s = 0; s < 200; ++s) {
            Vec3 pa = Vec3::Zero();
            double total = 0.0;
            for (const auto& v : a) {
                const double w = u(rng);
                pa += w * v;
                total += w;
            }
            pa /= total;
            // a convex combination moved towards the witness stays in the hull
            const Vec3 towards = r.witness_a + 0.01 * (pa - r.witness_a);
            CHECK((towards - r.witness_b).norm() >= best - 1e-12);
            CHECK((pa - r.witness_b).norm() >= best - 1e-12);
        }
    }
}

TEST_CASE("distance is 1-Lipschitz under translation")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = Primitive::polytope(random_cloud(rng, 4, Vec3::Zero()), 0.03);
        const auto b = Primitive::segment(Vec3(1, -1, 0), Vec3(1, 1, 0.5), 0.02);
        const Pose pa = random_pose(rng);
        const Vec3 delta(u(rng), u(rng), u(rng));
        const double d0 = distance(a, pa, b, Pose::Identity()).distance;
        const double d1 = distance(a, translation(delta) * pa, b, Pose::Identity()).distance;
        CHECK(std::abs(d1 - d0) <= delta.norm() + 1e-12);
    }
}

TEST_CASE("box gap never exceeds the distance of contained sets")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const PointList a = random_cloud(rng, 5, Vec3::Zero());
        const PointList b = random_cloud(rng, 5, Vec3(1.0, 0.7, 0.2));
        const double d = hull_distance(a, 0.05, b, 0.02).distance;
        CHECK(box_gap(bounding_box(a, 0.05), bounding_box(b, 0.02)) <= d + 1e-12);
    }
}

TEST_CASE("empty vertex sets are rejected")
{
    PointList none;
    PointList one{Vec3::Zero()};
    CHECK_THROWS_AS(hull_distance(none, 0.0, one, 0.0), std::invalid_argument);
}
