#include "feasip/cli.hpp"
#include "feasip/scene.hpp"

#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace feasip;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "feasip");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path scratch_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("feasip_test_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Point body on two prismatic joints; `obstacles` is spliced in verbatim.
std::string body_scene(const std::string& obstacles, const std::string& extra_joint_key = "")
{
    return R"({
  "name": "body",
  "chain": {"joints": [
    {"type": "prismatic", )" + extra_joint_key + R"("axis": [1, 0, 0], "lower": -2, "upper": 2},
    {"type": "prismatic", "axis": [0, 1, 0], "lower": -2, "upper": 2,
     "primitives": [{"type": "point", "vertices": [[0, 0, 0]], "sweep_radius": 0.1}]}
  ]},
  "obstacles": [)" + obstacles + R"(],
  "problem": {
    "start": [-1, 0],
    "objective": {"end_effectors": [{"link": 1, "point": [0, 0, 0], "target": [1, 0.2, 0]}], "smoothness_weight": 1e-2}
  }
})";
}

const std::string kDisc =
    R"({"type": "point", "vertices": [[0, 0, 0]], "sweep_radius": 0.1, "pose": {"translation": [0, 1.5, 0]}})";
const std::string kBlocking =
    R"({"type": "point", "vertices": [[0, 0, 0]], "sweep_radius": 0.1, "pose": {"translation": [0, 0, 0]}})";

}  // namespace

TEST_CASE("a missing joint axis is a usage error naming the field")
{
    const fs::path dir = scratch_dir("schema");
    std::string text = body_scene(kDisc);
    const std::string axis = R"("axis": [1, 0, 0], )";
    text.erase(text.find(axis), axis.size());
    write_file(dir / "bad.json", text);
    const Run r = run({"solve", (dir / "bad.json").string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("chain.joints[0].axis") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("unknown keys and bad overrides are usage errors")
{
    const fs::path dir = scratch_dir("unknown");
    write_file(dir / "extra.json", body_scene(kDisc, R"("colour": "red", )"));
    const Run r = run({"solve", (dir / "extra.json").string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("chain.joints[0].colour") != std::string::npos);

    write_file(dir / "ok.json", body_scene(kDisc));
    const Run eta = run({"solve", (dir / "ok.json").string(), "--out", (dir / "out").string(), "--eta", "0.2"});
    CHECK(eta.code == kExitUsage);
    CHECK(eta.err.find("eta") != std::string::npos);
    CHECK(run({"frobnicate"}).code == kExitUsage);
}

TEST_CASE("solve, then verify the written trajectory")
{
    const fs::path dir = scratch_dir("pipeline");
    write_file(dir / "scene.json", body_scene(kDisc));
    const Run s = run({"solve", (dir / "scene.json").string(), "--out", (dir / "out").string()});
    CHECK(s.code == kExitOk);
    CHECK(s.out.find("converged") != std::string::npos);
    for (const char* f : {"trajectory.json", "convergence.csv", "timing.csv", "audit.txt"})
        CHECK(fs::exists(dir / "out" / f));
    CHECK(read_file(dir / "out" / "audit.txt").find("verdict=feasible") != std::string::npos);
    CHECK(read_file(dir / "out" / "convergence.csv").rfind("iteration,E,grad_inf,alpha,subdivisions", 0) == 0);

    const Run v = run({"verify", (dir / "scene.json").string(), (dir / "out" / "trajectory.json").string()});
    CHECK(v.code == kExitOk);
    CHECK(v.out.find("min_distance=") != std::string::npos);

    const Run zero =
        run({"verify", (dir / "scene.json").string(), (dir / "out" / "trajectory.json").string(), "--dt", "0"});
    CHECK(zero.code == kExitUsage);

    // identical inputs give identical files
    const Run again = run({"solve", (dir / "scene.json").string(), "--out", (dir / "again").string()});
    CHECK(again.code == kExitOk);
    for (const char* f : {"trajectory.json", "convergence.csv", "audit.txt"})
        CHECK(read_file(dir / "out" / f) == read_file(dir / "again" / f));
}

TEST_CASE("verify flags a hand-made crossing")
{
    const fs::path dir = scratch_dir("crossing");
    write_file(dir / "scene.json", body_scene(kBlocking));
    TrajectoryLayout line;
    line.degree = 1;
    line.segments = 1;
    line.continuity = Continuity::c0;
    const TrajectoryParams cross(line, Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0));
    TrajectoryMetadata meta;
    meta.scene = "body";
    write_file(dir / "cross.json", trajectory_json(cross, meta));
    const Run v = run({"verify", (dir / "scene.json").string(), (dir / "cross.json").string()});
    CHECK(v.code == kExitFailed);
    CHECK(v.out.find("violation ") != std::string::npos);

    const TrajectoryParams wrong(line, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0));
    write_file(dir / "wrong.json", trajectory_json(wrong, meta));
    CHECK(run({"verify", (dir / "scene.json").string(), (dir / "wrong.json").string()}).code == kExitUsage);
}

TEST_CASE("trajectory files round-trip exactly")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const TrajectoryLayout layout;
    Eigen::VectorXd theta(3 * layout.free_count());
    for (int i = 0; i < theta.size(); ++i)
        theta[i] = u(rng);
    const TrajectoryParams p(layout, Eigen::Vector3d(u(rng), u(rng), u(rng)), theta);
    const TrajectoryParams back = parse_trajectory(trajectory_json(p, TrajectoryMetadata{}));
    CHECK(back.theta() == p.theta());
    CHECK(back.start() == p.start());
    CHECK(back.layout().horizon == layout.horizon);
    CHECK_THROWS_AS(parse_trajectory("{"), SceneError);
}

TEST_CASE("compare")
{
    const fs::path dir = scratch_dir("compare");
    write_file(dir / "scene.json", body_scene(kDisc));

    const Run only = run({"compare", (dir / "scene.json").string(), "--eps", ""});
    CHECK(only.code == kExitOk);
    CHECK(only.out.find("feasible,-,yes,feasible") != std::string::npos);
    CHECK(only.out.find("exchange") == std::string::npos);

    // nothing near the body: both methods reach the same optimum
    write_file(dir / "free.json", body_scene(""));
    const Run both = run({"compare", (dir / "free.json").string(), "--eps", "0.1"});
    CHECK(both.code == kExitOk);
    std::istringstream lines(both.out);
    std::string header, ours, theirs;
    std::getline(lines, header);
    std::getline(lines, ours);
    std::getline(lines, theirs);
    auto field = [](const std::string& row, int k) {
        std::stringstream ss(row);
        std::string item;
        for (int i = 0; i <= k; ++i)
            std::getline(ss, item, ',');
        return item;
    };
    CHECK(field(theirs, 0) == "exchange");
    CHECK(field(ours, 3) == "feasible");
    CHECK(field(theirs, 3) == "feasible");
    CHECK(std::abs(std::stod(field(ours, 5)) - std::stod(field(theirs, 5))) < 1e-6);

    CHECK(run({"compare", (dir / "scene.json").string(), "--eps", "0.1,-1"}).code == kExitUsage);
}

TEST_CASE("cage solve ends inside the cage")
{
    const fs::path dir = scratch_dir("cage");
    const Run s = run({"solve", feasip::test::scene_path("cage"), "--out", dir.string()});
    CHECK(s.code == kExitOk);
    const std::string audit = read_file(dir / "audit.txt");
    CHECK(audit.find("verdict=feasible") != std::string::npos);
    CHECK(audit.find("containment inside=true") != std::string::npos);
}

TEST_CASE("infeasible starts exit with their own status")
{
    const fs::path dir = scratch_dir("start");
    std::string text = body_scene(kBlocking);
    text.replace(text.find("\"start\": [-1, 0]"), 16, "\"start\": [0.1, 0]");
    write_file(dir / "scene.json", text);
    const Run r = run({"solve", (dir / "scene.json").string(), "--out", (dir / "out").string()});
    CHECK(r.code == kExitInfeasibleStart);
    CHECK(r.err.find("pair 0") != std::string::npos);
}

TEST_CASE("demo prints the barrier law")
{
    const Run r = run({"demo"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("monotone increasing") != std::string::npos);
}
