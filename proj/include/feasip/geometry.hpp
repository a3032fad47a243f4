#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <limits>
#include <span>
#include <vector>

namespace feasip {

using Vec3 = Eigen::Vector3d;
using Pose = Eigen::Isometry3d;
using PointList = std::vector<Vec3, Eigen::aligned_allocator<Vec3>>;

enum class PrimitiveKind { point, segment, polytope };

const char* to_string(PrimitiveKind kind);

/// Convex primitive: convex hull of a local-frame vertex set, optionally
/// inflated by a ball of radius `sweep_radius` (Minkowski sum).
class Primitive {
public:
    Primitive() = default;
    Primitive(PrimitiveKind kind, PointList vertices, double sweep_radius = 0.0);

    static Primitive point(const Vec3& p, double sweep_radius = 0.0);
    static Primitive segment(const Vec3& a, const Vec3& b, double sweep_radius = 0.0);
    static Primitive polytope(PointList vertices, double sweep_radius = 0.0);

    PrimitiveKind kind() const { return kind_; }
    const PointList& vertices() const { return vertices_; }
    double sweep_radius() const { return sweep_radius_; }

    PointList world_vertices(const Pose& pose) const;

private:
    PrimitiveKind kind_ = PrimitiveKind::point;
    PointList vertices_;
    double sweep_radius_ = 0.0;
};

struct DistanceResult {
    /// |witness_a - witness_b| - sweep_a - sweep_b; negative when inflated shapes overlap.
    double distance = 0.0;
    /// Closest points on the (uninflated) hulls.
    Vec3 witness_a = Vec3::Zero();
    Vec3 witness_b = Vec3::Zero();
    /// d distance / d (world vertex), one entry per vertex.
    PointList grad_vertices_a;
    PointList grad_vertices_b;
    /// Convex weights expressing the witnesses over each vertex set.
    std::vector<double> weights_a;
    std::vector<double> weights_b;
};

DistanceResult distance(const Primitive& a, const Pose& pose_a, const Primitive& b, const Pose& pose_b);

/// Same as above on vertex sets already placed in the world frame.
DistanceResult hull_distance(std::span<const Vec3> a, double sweep_a, std::span<const Vec3> b, double sweep_b);

/// Farthest point of the inflated hull along `direction` (need not be normalized, must be nonzero).
/// Ties between vertices resolve to the lowest index.
Vec3 support(const Primitive& p, const Pose& pose, const Vec3& direction);

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p);
    void extend(const Aabb& other);
    Aabb inflated(double r) const;
    bool empty() const { return (lo.array() > hi.array()).any(); }
};

Aabb bounding_box(std::span<const Vec3> pts, double radius);

/// Euclidean gap between two boxes, 0 when they overlap. Never exceeds the
/// distance between any two sets the boxes contain.
double box_gap(const Aabb& a, const Aabb& b);

}  // namespace feasip
