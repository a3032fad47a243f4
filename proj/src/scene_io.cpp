#include "feasip/scene.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace feasip {

namespace {

using json = nlohmann::json;

class Field {
public:
    Field(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return value_; }

    [[noreturn]] void fail(const std::string& message) const { throw SceneError(path_, message); }

    void object(std::initializer_list<const char*> allowed) const
    {
        if (!value_.is_object())
            fail("expected an object");
        const std::set<std::string> keys(allowed.begin(), allowed.end());
        for (const auto& [key, _] : value_.items())
            if (!keys.count(key))
                throw SceneError(child_path(key), "unknown key");
    }

    bool has(const char* key) const { return value_.contains(key); }

    Field operator[](const char* key) const
    {
        if (!value_.contains(key))
            throw SceneError(child_path(key), "missing required field");
        return {value_.at(key), child_path(key)};
    }

    std::size_t size() const
    {
        if (!value_.is_array())
            fail("expected an array");
        return value_.size();
    }

    Field operator[](std::size_t i) const { return {value_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    double number() const
    {
        if (!value_.is_number())
            fail("expected a number");
        const double v = value_.get<double>();
        if (!std::isfinite(v))
            fail("must be finite");
        return v;
    }

    double positive() const
    {
        const double v = number();
        if (!(v > 0.0))
            fail("must be > 0");
        return v;
    }

    int integer() const
    {
        if (!value_.is_number_integer())
            fail("expected an integer");
        return value_.get<int>();
    }

    bool boolean() const
    {
        if (!value_.is_boolean())
            fail("expected true or false");
        return value_.get<bool>();
    }

    std::string string() const
    {
        if (!value_.is_string())
            fail("expected a string");
        return value_.get<std::string>();
    }

    std::vector<double> numbers() const
    {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (*this)[i].number();
        return out;
    }

    Eigen::VectorXd vector() const
    {
        const auto v = numbers();
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Vec3 vec3() const
    {
        if (size() != 3)
            fail("expected 3 numbers");
        return {(*this)[std::size_t{0}].number(), (*this)[1].number(), (*this)[2].number()};
    }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& value_;
    std::string path_;
};

Pose parse_pose(const Field& f)
{
    f.object({"translation", "rpy"});
    Pose pose = Pose::Identity();
    if (f.has("translation"))
        pose.translation() = f["translation"].vec3();
    if (f.has("rpy")) {
        const Vec3 rpy = f["rpy"].vec3();
        pose.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                         Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
                            .toRotationMatrix();
    }
    return pose;
}

Primitive parse_primitive(const Field& f, std::initializer_list<const char*> extra = {})
{
    std::vector<const char*> keys{"type", "vertices", "sweep_radius"};
    keys.insert(keys.end(), extra.begin(), extra.end());
    if (!f.raw().is_object())
        f.fail("expected an object");
    {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [key, _] : f.raw().items())
            if (!allowed.count(key))
                throw SceneError(f.path() + "." + key, "unknown key");
    }
    const std::string type = f["type"].string();
    const Field verts = f["vertices"];
    PointList pts;
    for (std::size_t i = 0; i < verts.size(); ++i)
        pts.push_back(verts[i].vec3());
    const double sweep = f.has("sweep_radius") ? f["sweep_radius"].number() : 1e-4;
    PrimitiveKind kind;
    if (type == "point")
        kind = PrimitiveKind::point;
    else if (type == "segment")
        kind = PrimitiveKind::segment;
    else if (type == "polytope")
        kind = PrimitiveKind::polytope;
    else
        f["type"].fail("expected point, segment or polytope");
    try {
        return Primitive(kind, std::move(pts), sweep);
    } catch (const std::invalid_argument& e) {
        f.fail(e.what());
    }
}

KinematicChain parse_chain(const Field& f)
{
    f.object({"joints"});
    const Field joints = f["joints"];
    if (joints.size() == 0)
        joints.fail("at least one joint is required");
    std::vector<Joint> js;
    std::vector<Link> links;
    Eigen::VectorXd lower(static_cast<Eigen::Index>(joints.size()));
    Eigen::VectorXd upper(lower.size());
    for (std::size_t i = 0; i < joints.size(); ++i) {
        const Field j = joints[i];
        j.object({"type", "axis", "offset", "parent", "lower", "upper", "primitives"});
        Joint joint;
        const std::string type = j["type"].string();
        if (type == "hinge")
            joint.kind = JointKind::hinge;
        else if (type == "prismatic")
            joint.kind = JointKind::prismatic;
        else
            j["type"].fail("expected hinge or prismatic");
        joint.axis = j["axis"].vec3();
        if (joint.axis.norm() == 0.0)
            j["axis"].fail("must be nonzero");
        if (j.has("offset"))
            joint.parent_offset = parse_pose(j["offset"]);
        joint.parent = j.has("parent") ? j["parent"].integer() : static_cast<int>(i) - 1;
        if (joint.parent < -1 || joint.parent >= static_cast<int>(i))
            j["parent"].fail("must be -1 or an earlier joint index");
        lower[static_cast<Eigen::Index>(i)] = j["lower"].number();
        upper[static_cast<Eigen::Index>(i)] = j["upper"].number();
        if (!(lower[static_cast<Eigen::Index>(i)] < upper[static_cast<Eigen::Index>(i)]))
            j["upper"].fail("must exceed lower");
        Link link;
        if (j.has("primitives")) {
            const Field prims = j["primitives"];
            for (std::size_t p = 0; p < prims.size(); ++p)
                link.primitives.push_back(parse_primitive(prims[p]));
        }
        js.push_back(joint);
        links.push_back(std::move(link));
    }
    return KinematicChain(std::move(js), std::move(links), lower, upper);
}

Order parse_order(const Field& f)
{
    const std::string s = f.string();
    if (s == "first")
        return Order::first;
    if (s == "second")
        return Order::second;
    f.fail("expected first or second");
}

void parse_problem(const Field& f, Scene& scene)
{
    f.object({"start", "horizon", "degree", "segments", "continuity", "objective", "d0", "self_collision",
              "include_adjacent", "limit_barriers", "containment"});
    Problem& p = scene.problem;
    const Field start = f["start"];
    p.start = start.vector();
    if (p.start.size() != p.chain.dof())
        start.fail("expected " + std::to_string(p.chain.dof()) + " values");
    for (int k = 0; k < p.chain.dof(); ++k)
        if (!(p.start[k] > p.chain.lower()[k] && p.start[k] < p.chain.upper()[k]))
            start[static_cast<std::size_t>(k)].fail("must lie strictly inside the joint limits");
    if (f.has("horizon"))
        p.layout.horizon = f["horizon"].positive();
    if (f.has("degree")) {
        p.layout.degree = f["degree"].integer();
        if (p.layout.degree < 2)
            f["degree"].fail("must be >= 2");
    }
    if (f.has("segments")) {
        p.layout.segments = f["segments"].integer();
        if (p.layout.segments < 1)
            f["segments"].fail("must be >= 1");
    }
    if (f.has("continuity")) {
        const std::string c = f["continuity"].string();
        if (c == "c0")
            p.layout.continuity = Continuity::c0;
        else if (c == "c1")
            p.layout.continuity = Continuity::c1;
        else
            f["continuity"].fail("expected c0 or c1");
    }
    if (f.has("d0"))
        p.barrier.d0 = f["d0"].positive();
    if (f.has("self_collision"))
        p.self_collision = f["self_collision"].boolean();
    if (f.has("include_adjacent"))
        p.include_adjacent = f["include_adjacent"].boolean();
    if (f.has("limit_barriers"))
        p.limit_barriers = f["limit_barriers"].boolean();

    const int dof = p.chain.dof();
    auto link_index = [&](const Field& l) {
        const int v = l.integer();
        if (v < 0 || v >= dof)
            l.fail("must be a link index in [0, " + std::to_string(dof - 1) + "]");
        return v;
    };

    const Field obj = f["objective"];
    obj.object({"end_effectors", "joint_target", "smoothness_weight"});
    if (obj.has("end_effectors")) {
        const Field list = obj["end_effectors"];
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Field e = list[i];
            e.object({"link", "point", "target", "weight"});
            EndEffectorTarget t;
            t.link = link_index(e["link"]);
            t.point = e["point"].vec3();
            t.target = e["target"].vec3();
            if (e.has("weight")) {
                t.weight = e["weight"].number();
                if (t.weight < 0.0)
                    e["weight"].fail("must be >= 0");
            }
            p.objective.end_effectors.push_back(t);
        }
    }
    if (obj.has("joint_target")) {
        const Field jt = obj["joint_target"];
        jt.object({"q", "weight"});
        JointTarget t;
        t.q = jt["q"].vector();
        if (t.q.size() != dof)
            jt["q"].fail("expected " + std::to_string(dof) + " values");
        if (jt.has("weight"))
            t.weight = jt["weight"].number();
        p.objective.joint_target = t;
    }
    if (obj.has("smoothness_weight")) {
        p.objective.smoothness_weight = obj["smoothness_weight"].number();
        if (p.objective.smoothness_weight < 0.0)
            obj["smoothness_weight"].fail("must be >= 0");
    }

    if (f.has("containment")) {
        const Field c = f["containment"];
        c.object({"link", "point", "center", "half_extents"});
        ContainmentProbe probe;
        probe.link = link_index(c["link"]);
        probe.point = c["point"].vec3();
        probe.center = c["center"].vec3();
        probe.half_extents = c["half_extents"].vec3();
        p.containment = probe;
    }
}

void parse_solver(const Field& f, Scene& scene)
{
    f.object({"x0", "mu", "L2", "eta", "eps_mu", "eps_d", "gamma", "c_wolfe", "alpha0", "eps_alpha",
              "initial_splits", "order", "beta_min", "beta_max", "max_inner_iterations", "seed", "dt_audit",
              "exchange"});
    BarrierSpec& b = scene.problem.barrier;
    const std::pair<const char*, double*> numbers[] = {
        {"x0", &b.x0},         {"mu", &b.mu},          {"L2", &b.L2},
        {"eta", &b.eta},       {"eps_mu", &b.eps_mu},  {"eps_d", &b.eps_d},
        {"gamma", &b.gamma},   {"c_wolfe", &b.c_wolfe}, {"alpha0", &b.alpha0},
        {"eps_alpha", &b.eps_alpha}, {"beta_min", &scene.solver.beta_min}, {"beta_max", &scene.solver.beta_max},
        {"dt_audit", &scene.dt_audit},
    };
    for (const auto& [key, target] : numbers)
        if (f.has(key))
            *target = f[key].number();
    if (f.has("initial_splits")) {
        scene.problem.initial_splits = f["initial_splits"].integer();
        if (scene.problem.initial_splits < 1)
            f["initial_splits"].fail("must be >= 1");
    }
    if (f.has("order"))
        scene.solver.order = parse_order(f["order"]);
    if (f.has("max_inner_iterations"))
        scene.solver.max_inner_iterations = f["max_inner_iterations"].integer();
    if (f.has("seed")) {
        const int s = f["seed"].integer();
        if (s < 0)
            f["seed"].fail("must be >= 0");
        scene.seed = static_cast<std::uint64_t>(s);
    }
    if (f.has("exchange")) {
        const Field ex = f["exchange"];
        ex.object({"eps", "max_rounds", "limit_barriers"});
        if (ex.has("eps")) {
            scene.exchange_eps = ex["eps"].numbers();
            for (std::size_t i = 0; i < scene.exchange_eps.size(); ++i)
                if (!(scene.exchange_eps[i] > 0.0))
                    ex["eps"][i].fail("must be > 0");
        }
        if (ex.has("max_rounds"))
            scene.exchange_max_rounds = ex["max_rounds"].integer();
        if (ex.has("limit_barriers"))
            scene.exchange_limit_barriers = ex["limit_barriers"].boolean();
    }
    if (!(scene.dt_audit > 0.0))
        f["dt_audit"].fail("must be > 0");
    if (!(scene.solver.beta_min > 0.0 && scene.solver.beta_min <= scene.solver.beta_max))
        throw SceneError("solver.beta_min", "need 0 < beta_min <= beta_max");
    try {
        b.validate();
    } catch (const std::invalid_argument& e) {
        throw SceneError("solver", e.what());
    }
}

}  // namespace

Scene parse_scene(const std::string& text, const std::string& source)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError(source, std::string("invalid JSON: ") + e.what());
    }
    const Field root(doc, "");
    if (!doc.is_object())
        throw SceneError(source, "expected a JSON object");
    root.object({"name", "chain", "obstacles", "problem", "solver"});

    Scene scene;
    scene.problem.name = root.has("name") ? root["name"].string() : source;
    try {
        scene.problem.chain = parse_chain(root["chain"]);
    } catch (const std::invalid_argument& e) {
        throw SceneError("chain", e.what());
    }
    if (root.has("obstacles")) {
        const Field obs = root["obstacles"];
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const Field o = obs[i];
            Primitive prim = parse_primitive(o, {"pose"});
            const Pose pose = o.has("pose") ? parse_pose(o["pose"]) : Pose::Identity();
            scene.problem.obstacles.emplace_back(std::move(prim), pose);
        }
    }
    parse_problem(root["problem"], scene);
    if (root.has("solver"))
        parse_solver(root["solver"], scene);
    try {
        scene.problem.validate();
    } catch (const std::invalid_argument& e) {
        throw SceneError("problem", e.what());
    }
    return scene;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
}

Scene load_scene(const std::filesystem::path& path)
{
    return parse_scene(read_file(path), path.filename().string());
}

std::string trajectory_json(const TrajectoryParams& params, const TrajectoryMetadata& meta)
{
    const auto& layout = params.layout();
    json doc;
    doc["format"] = "feasip-trajectory";
    doc["version"] = 1;
    doc["degree"] = layout.degree;
    doc["segments"] = layout.segments;
    doc["horizon"] = layout.horizon;
    doc["continuity"] = layout.continuity == Continuity::c1 ? "c1" : "c0";
    doc["start"] = std::vector<double>(params.start().data(), params.start().data() + params.start().size());
    doc["theta"] = std::vector<double>(params.theta().data(), params.theta().data() + params.theta().size());
    json ctrl = json::array();
    for (int k = 0; k < params.joints(); ++k) {
        const Eigen::VectorXd c = params.control_points(k);
        ctrl.push_back(std::vector<double>(c.data(), c.data() + c.size()));
    }
    doc["control_points"] = ctrl;
    doc["metadata"] = {{"scene", meta.scene},           {"method", meta.method},
                       {"converged", meta.converged},   {"iterations", meta.iterations},
                       {"subdivisions", meta.subdivisions}, {"objective", meta.objective},
                       {"mu", meta.mu}};
    return doc.dump(2) + "\n";
}

TrajectoryParams parse_trajectory(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SceneError("trajectory", std::string("invalid JSON: ") + e.what());
    }
    const Field root(doc, "");
    root.object({"format", "version", "degree", "segments", "horizon", "continuity", "start", "theta",
                 "control_points", "metadata"});
    if (root["format"].string() != "feasip-trajectory")
        root["format"].fail("expected feasip-trajectory");
    TrajectoryLayout layout;
    layout.degree = root["degree"].integer();
    layout.segments = root["segments"].integer();
    layout.horizon = root["horizon"].positive();
    const std::string c = root["continuity"].string();
    if (c != "c0" && c != "c1")
        root["continuity"].fail("expected c0 or c1");
    layout.continuity = c == "c1" ? Continuity::c1 : Continuity::c0;
    try {
        layout.validate();
        return TrajectoryParams(layout, root["start"].vector(), root["theta"].vector());
    } catch (const std::invalid_argument& e) {
        throw SceneError("trajectory", e.what());
    }
}

TrajectoryParams load_trajectory(const std::filesystem::path& path)
{
    return parse_trajectory(read_file(path));
}

std::string audit_records(const FeasibilityReport& report, double dt, double d0, std::size_t max_violations)
{
    auto g = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.9g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    out << "audit instants=" << report.sampled_instants << " dt=" << g(dt) << " d0=" << g(d0)
        << " min_distance=" << g(report.min_distance) << " at_t=" << g(report.min_distance_time)
        << " pair=" << report.min_distance_pair << " violations=" << report.violations.size()
        << " verdict=" << (report.feasible() ? "feasible" : "infeasible") << '\n';
    for (std::size_t i = 0; i < report.violations.size() && i < max_violations; ++i) {
        const auto& v = report.violations[i];
        out << "violation pair=" << v.pair << " t=" << g(v.t) << " distance=" << g(v.distance) << '\n';
    }
    if (report.violations.size() > max_violations)
        out << "truncated remaining=" << report.violations.size() - max_violations << '\n';
    return out.str();
}

}  // namespace feasip
