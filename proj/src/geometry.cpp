#include "feasip/geometry.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace feasip {

const char* to_string(PrimitiveKind kind)
{
    switch (kind) {
    case PrimitiveKind::point: return "point";
    case PrimitiveKind::segment: return "segment";
    case PrimitiveKind::polytope: return "polytope";
    }
    return "unknown";
}

Primitive::Primitive(PrimitiveKind kind, PointList vertices, double sweep_radius)
    : kind_(kind), vertices_(std::move(vertices)), sweep_radius_(sweep_radius)
{
    if (vertices_.empty())
        throw std::invalid_argument("primitive has no vertices");
    if (!(sweep_radius_ >= 0.0) || !std::isfinite(sweep_radius_))
        throw std::invalid_argument("sweep_radius must be finite and >= 0");
    for (const auto& v : vertices_)
        if (!v.allFinite())
            throw std::invalid_argument("primitive vertex is not finite");

    switch (kind_) {
    case PrimitiveKind::point:
        if (vertices_.size() != 1)
            throw std::invalid_argument("point primitive needs exactly 1 vertex");
        break;
    case PrimitiveKind::segment:
        if (vertices_.size() != 2)
            throw std::invalid_argument("segment primitive needs exactly 2 vertices");
        if ((vertices_[0] - vertices_[1]).norm() == 0.0)
            throw std::invalid_argument("segment endpoints coincide");
        break;
    case PrimitiveKind::polytope:
        if (vertices_.size() < 3)
            throw std::invalid_argument("polytope primitive needs at least 3 vertices");
        break;
    }
}

Primitive Primitive::point(const Vec3& p, double sweep_radius)
{
    return Primitive(PrimitiveKind::point, PointList{p}, sweep_radius);
}

Primitive Primitive::segment(const Vec3& a, const Vec3& b, double sweep_radius)
{
    return Primitive(PrimitiveKind::segment, PointList{a, b}, sweep_radius);
}

Primitive Primitive::polytope(PointList vertices, double sweep_radius)
{
    return Primitive(PrimitiveKind::polytope, std::move(vertices), sweep_radius);
}

PointList Primitive::world_vertices(const Pose& pose) const
{
    PointList out;
    out.reserve(vertices_.size());
    for (const auto& v : vertices_)
        out.push_back(pose * v);
    return out;
}

namespace {

std::size_t argmax_dot(std::span<const Vec3> pts, const Vec3& d)
{
    std::size_t best = 0;
    double best_val = pts[0].dot(d);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double val = pts[i].dot(d);
        if (val > best_val) {
            best_val = val;
            best = i;
        }
    }
    return best;
}

struct SimplexVertex {
    Vec3 w;
    int ia;
    int ib;
};

struct SimplexSolution {
    Vec3 v = Vec3::Zero();
    std::array<double, 4> lambda{};
    unsigned mask = 0;
};

// Affine min-norm point of the subset `mask`; nullopt when the subset is
// affinely degenerate or the minimizer leaves the convex hull.
std::optional<SimplexSolution> affine_min_norm(const std::vector<SimplexVertex>& s, unsigned mask)
{
    std::array<int, 4> idx{};
    int m = 0;
    for (int i = 0; i < static_cast<int>(s.size()); ++i)
        if (mask & (1u << i))
            idx[m++] = i;

    SimplexSolution sol;
    sol.mask = mask;
    if (m == 1) {
        sol.v = s[idx[0]].w;
        sol.lambda[idx[0]] = 1.0;
        return sol;
    }

    const Vec3& w0 = s[idx[0]].w;
    const int k = m - 1;
    Eigen::Matrix<double, 3, Eigen::Dynamic> e(3, k);
    for (int j = 0; j < k; ++j)
        e.col(j) = s[idx[j + 1]].w - w0;
    const Eigen::MatrixXd g = e.transpose() * e;
    const Eigen::VectorXd rhs = -(e.transpose() * w0);

    double diag_prod = 1.0;
    for (int j = 0; j < k; ++j)
        diag_prod *= g(j, j);
    const double det = g.determinant();
    if (!(diag_prod > 0.0) || det <= 1e-12 * diag_prod)
        return std::nullopt;

    const Eigen::VectorXd mu = g.ldlt().solve(rhs);
    double l0 = 1.0;
    for (int j = 0; j < k; ++j) {
        if (!(mu(j) >= 0.0))
            return std::nullopt;
        l0 -= mu(j);
    }
    if (!(l0 >= 0.0))
        return std::nullopt;

    sol.lambda[idx[0]] = l0;
    sol.v = l0 * w0;
    for (int j = 0; j < k; ++j) {
        sol.lambda[idx[j + 1]] = mu(j);
        sol.v += mu(j) * s[idx[j + 1]].w;
    }
    if (k == 3)
        sol.v.setZero();
    return sol;
}

// Exhaustive Johnson sub-algorithm: the min-norm point of a simplex lies in the
// relative interior of exactly one face, and every other admissible face is
// at least as far from the origin. Smaller faces win ties.
SimplexSolution closest_on_simplex(const std::vector<SimplexVertex>& s)
{
    const unsigned n = static_cast<unsigned>(s.size());
    SimplexSolution best;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (unsigned count = 1; count <= n; ++count) {
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            if (static_cast<unsigned>(std::popcount(mask)) != count)
                continue;
            auto sol = affine_min_norm(s, mask);
            if (!sol)
                continue;
            const double d2 = sol->v.squaredNorm();
            if (d2 < best_d2) {
                best_d2 = d2;
                best = *sol;
            }
        }
    }
    return best;
}

struct GjkResult {
    bool overlap = false;
    std::vector<double> wa;
    std::vector<double> wb;
};

GjkResult gjk(std::span<const Vec3> a, std::span<const Vec3> b)
{
    constexpr int max_iterations = 64;
    constexpr double rel_tol = 1e-12;

    std::vector<SimplexVertex> simplex{{a[0] - b[0], 0, 0}};
    std::array<double, 4> lambda{1.0, 0.0, 0.0, 0.0};
    Vec3 v = simplex[0].w;
    double d2 = v.squaredNorm();
    bool overlap = false;

    for (int it = 0; it < max_iterations; ++it) {
        if (d2 <= 1e-30) {
            overlap = true;
            break;
        }
        const Vec3 dir = -v;
        const int ia = static_cast<int>(argmax_dot(a, dir));
        const int ib = static_cast<int>(argmax_dot(b, v));
        const Vec3 w = a[ia] - b[ib];
        if (d2 - v.dot(w) <= rel_tol * d2)
            break;
        bool seen = false;
        for (const auto& sv : simplex)
            seen = seen || (sv.ia == ia && sv.ib == ib);
        if (seen)
            break;

        auto trial = simplex;
        trial.push_back({w, ia, ib});
        const SimplexSolution sol = closest_on_simplex(trial);
        const double nd2 = sol.v.squaredNorm();
        if (!(nd2 < d2))
            break;

        simplex.clear();
        std::array<double, 4> reduced{};
        for (int i = 0; i < static_cast<int>(trial.size()); ++i) {
            if (sol.mask & (1u << i)) {
                reduced[simplex.size()] = sol.lambda[i];
                simplex.push_back(trial[i]);
            }
        }
        lambda = reduced;
        v = sol.v;
        d2 = nd2;
        if (simplex.size() == 4) {
            overlap = true;
            break;
        }
    }

    GjkResult out;
    out.overlap = overlap;
    out.wa.assign(a.size(), 0.0);
    out.wb.assign(b.size(), 0.0);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
        out.wa[simplex[i].ia] += lambda[i];
        out.wb[simplex[i].ib] += lambda[i];
    }
    return out;
}

// ---- deterministic witness selection for non-unique closest pairs ----

using Vec2 = Eigen::Vector2d;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct Pt2 {
    Vec2 p;
    int id;  // index into the owning vertex set
};

// Monotone chain; collinear and duplicate points dropped. CCW order.
std::vector<Pt2> hull2(std::vector<Pt2> pts, double tol)
{
    std::sort(pts.begin(), pts.end(), [](const Pt2& l, const Pt2& r) {
        if (l.p.x() != r.p.x()) return l.p.x() < r.p.x();
        if (l.p.y() != r.p.y()) return l.p.y() < r.p.y();
        return l.id < r.id;
    });
    std::vector<Pt2> uniq;
    for (const auto& q : pts) {
        bool dup = false;
        for (const auto& u : uniq)
            dup = dup || (u.p - q.p).norm() <= tol;
        if (!dup)
            uniq.push_back(q);
    }
    if (uniq.size() <= 2)
        return uniq;

    std::vector<Pt2> h(2 * uniq.size());
    std::size_t k = 0;
    auto turn = [&](const Pt2& o, const Pt2& a, const Pt2& b) {
        return cross2(a.p - o.p, b.p - o.p);
    };
    for (std::size_t i = 0; i < uniq.size(); ++i) {
        while (k >= 2 && turn(h[k - 2], h[k - 1], uniq[i]) <= tol * (h[k - 1].p - h[k - 2].p).norm())
            --k;
        h[k++] = uniq[i];
    }
    for (std::size_t i = uniq.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && turn(h[k - 2], h[k - 1], uniq[i - 1]) <= tol * (h[k - 1].p - h[k - 2].p).norm())
            --k;
        h[k++] = uniq[i - 1];
    }
    h.resize(k - 1);
    if (h.size() < 2) {
        // fully collinear set: keep the two extremes
        return {uniq.front(), uniq.back()};
    }
    return h;
}

using Weights = std::vector<std::pair<int, double>>;

std::optional<Weights> locate(const std::vector<Pt2>& hull, const Vec2& p, double tol)
{
    if (hull.size() == 1) {
        if ((hull[0].p - p).norm() <= tol)
            return Weights{{hull[0].id, 1.0}};
        return std::nullopt;
    }
    if (hull.size() == 2) {
        const Vec2 e = hull[1].p - hull[0].p;
        const double len2 = e.squaredNorm();
        double s = (p - hull[0].p).dot(e) / len2;
        if (s < -tol / std::sqrt(len2) || s > 1.0 + tol / std::sqrt(len2))
            return std::nullopt;
        s = std::clamp(s, 0.0, 1.0);
        if ((hull[0].p + s * e - p).norm() > tol)
            return std::nullopt;
        return Weights{{hull[0].id, 1.0 - s}, {hull[1].id, s}};
    }
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2 e = hull[(i + 1) % hull.size()].p - hull[i].p;
        if (cross2(e, p - hull[i].p) < -tol * e.norm())
            return std::nullopt;
    }
    for (std::size_t k = 1; k + 1 < hull.size(); ++k) {
        const Vec2 a = hull[0].p, b = hull[k].p, c = hull[k + 1].p;
        const double area = cross2(b - a, c - a);
        double u = cross2(b - p, c - p) / area;
        double v = cross2(c - p, a - p) / area;
        double w = 1.0 - u - v;
        const double eps = tol * 1e3 / std::sqrt(std::abs(area));
        if (u >= -eps && v >= -eps && w >= -eps) {
            u = std::max(u, 0.0);
            v = std::max(v, 0.0);
            w = std::max(w, 0.0);
            const double sum = u + v + w;
            return Weights{{hull[0].id, u / sum}, {hull[k].id, v / sum}, {hull[k + 1].id, w / sum}};
        }
    }
    return std::nullopt;
}

struct Candidate {
    Weights wa;
    Weights wb;
};

Vec3 combine(std::span<const Vec3> pts, const Weights& w)
{
    Vec3 out = Vec3::Zero();
    for (const auto& [i, x] : w)
        out += x * pts[i];
    return out;
}

bool lex_less(const Vec3& l, const Vec3& r)
{
    for (int k = 0; k < 3; ++k)
        if (l[k] != r[k])
            return l[k] < r[k];
    return false;
}

// When both supporting faces are non-trivial the closest pair may not be
// unique; choose the pair with the lexicographically smallest witnesses.
void select_witness(std::span<const Vec3> a, std::span<const Vec3> b, GjkResult& res)
{
    Vec3 wa = Vec3::Zero(), wb = Vec3::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) wa += res.wa[i] * a[i];
    for (std::size_t j = 0; j < b.size(); ++j) wb += res.wb[j] * b[j];
    const Vec3 gap = wb - wa;
    const double len = gap.norm();
    if (len <= 0.0)
        return;
    const Vec3 u = gap / len;

    double scale = 1.0;
    for (const auto& p : a) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    for (const auto& p : b) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double tol = 1e-9 * scale;

    double amax = -std::numeric_limits<double>::infinity();
    double bmin = std::numeric_limits<double>::infinity();
    for (const auto& p : a) amax = std::max(amax, p.dot(u));
    for (const auto& p : b) bmin = std::min(bmin, p.dot(u));

    const Vec3 e1 = u.unitOrthogonal();
    const Vec3 e2 = u.cross(e1);
    std::vector<Pt2> fa, fb;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].dot(u) >= amax - tol)
            fa.push_back({Vec2(a[i].dot(e1), a[i].dot(e2)), static_cast<int>(i)});
    for (std::size_t j = 0; j < b.size(); ++j)
        if (b[j].dot(u) <= bmin + tol)
            fb.push_back({Vec2(b[j].dot(e1), b[j].dot(e2)), static_cast<int>(j)});
    if (fa.size() < 2 || fb.size() < 2)
        return;

    const std::vector<Pt2> ha = hull2(fa, tol);
    const std::vector<Pt2> hb = hull2(fb, tol);

    std::vector<Candidate> cands;
    for (const auto& q : ha)
        if (auto w = locate(hb, q.p, tol))
            cands.push_back({Weights{{q.id, 1.0}}, *w});
    for (const auto& q : hb)
        if (auto w = locate(ha, q.p, tol))
            cands.push_back({*w, Weights{{q.id, 1.0}}});

    auto edges = [](const std::vector<Pt2>& h) {
        std::vector<std::pair<Pt2, Pt2>> out;
        if (h.size() == 2)
            out.emplace_back(h[0], h[1]);
        else if (h.size() > 2)
            for (std::size_t i = 0; i < h.size(); ++i)
                out.emplace_back(h[i], h[(i + 1) % h.size()]);
        return out;
    };
    for (const auto& [p1, p2] : edges(ha)) {
        for (const auto& [q1, q2] : edges(hb)) {
            const Vec2 r = p2.p - p1.p;
            const Vec2 s = q2.p - q1.p;
            const double den = cross2(r, s);
            if (std::abs(den) <= 1e-12 * r.norm() * s.norm())
                continue;
            const Vec2 qp = q1.p - p1.p;
            const double t = cross2(qp, s) / den;
            const double v = cross2(qp, r) / den;
            if (t < 0.0 || t > 1.0 || v < 0.0 || v > 1.0)
                continue;
            cands.push_back({Weights{{p1.id, 1.0 - t}, {p2.id, t}}, Weights{{q1.id, 1.0 - v}, {q2.id, v}}});
        }
    }
    if (cands.empty())
        return;

    std::size_t best = 0;
    Vec3 best_a = combine(a, cands[0].wa), best_b = combine(b, cands[0].wb);
    for (std::size_t c = 1; c < cands.size(); ++c) {
        const Vec3 ca = combine(a, cands[c].wa), cb = combine(b, cands[c].wb);
        if (lex_less(ca, best_a) || (ca == best_a && lex_less(cb, best_b))) {
            best = c;
            best_a = ca;
            best_b = cb;
        }
    }
    std::fill(res.wa.begin(), res.wa.end(), 0.0);
    std::fill(res.wb.begin(), res.wb.end(), 0.0);
    for (const auto& [i, x] : cands[best].wa) res.wa[i] += x;
    for (const auto& [j, x] : cands[best].wb) res.wb[j] += x;
}

}  // namespace

DistanceResult hull_distance(std::span<const Vec3> a, double sweep_a, std::span<const Vec3> b, double sweep_b)
{
    if (a.empty() || b.empty())
        throw std::invalid_argument("hull_distance: empty vertex set");

    GjkResult g = gjk(a, b);
    if (!g.overlap)
        select_witness(a, b, g);

    DistanceResult r;
    r.weights_a = std::move(g.wa);
    r.weights_b = std::move(g.wb);
    for (std::size_t i = 0; i < a.size(); ++i) r.witness_a += r.weights_a[i] * a[i];
    for (std::size_t j = 0; j < b.size(); ++j) r.witness_b += r.weights_b[j] * b[j];
    if (g.overlap)
        r.witness_b = r.witness_a;

    const Vec3 diff = r.witness_a - r.witness_b;
    const double core = diff.norm();
    r.distance = core - sweep_a - sweep_b;

    r.grad_vertices_a.assign(a.size(), Vec3::Zero());
    r.grad_vertices_b.assign(b.size(), Vec3::Zero());
    if (core > 0.0) {
        const Vec3 n = diff / core;
        for (std::size_t i = 0; i < a.size(); ++i) r.grad_vertices_a[i] = r.weights_a[i] * n;
        for (std::size_t j = 0; j < b.size(); ++j) r.grad_vertices_b[j] = -r.weights_b[j] * n;
    }
    return r;
}

DistanceResult distance(const Primitive& a, const Pose& pose_a, const Primitive& b, const Pose& pose_b)
{
    const PointList wa = a.world_vertices(pose_a);
    const PointList wb = b.world_vertices(pose_b);
    return hull_distance(wa, a.sweep_radius(), wb, b.sweep_radius());
}

Vec3 support(const Primitive& p, const Pose& pose, const Vec3& direction)
{
    const double len = direction.norm();
    if (!(len > 0.0) || !std::isfinite(len))
        throw std::invalid_argument("support: direction must be nonzero");
    const Vec3 dir = direction / len;
    const PointList w = p.world_vertices(pose);
    return w[argmax_dot(w, dir)] + p.sweep_radius() * dir;
}

void Aabb::extend(const Vec3& p)
{
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
}

void Aabb::extend(const Aabb& other)
{
    lo = lo.cwiseMin(other.lo);
    hi = hi.cwiseMax(other.hi);
}

Aabb Aabb::inflated(double r) const
{
    Aabb out;
    out.lo = lo - Vec3::Constant(r);
    out.hi = hi + Vec3::Constant(r);
    return out;
}

Aabb bounding_box(std::span<const Vec3> pts, double radius)
{
    Aabb box;
    for (const auto& p : pts)
        box.extend(p);
    return box.inflated(radius);
}

double box_gap(const Aabb& a, const Aabb& b)
{
    const Vec3 sep = (a.lo - b.hi).cwiseMax(b.lo - a.hi).cwiseMax(Vec3::Zero());
    return sep.norm();
}

}  // namespace feasip
