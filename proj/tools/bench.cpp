// Serial vs OpenMP timings of the hot paths on the bundled scenes. Every
// parallel result is compared with its serial counterpart.

#include "feasip/oracle.hpp"
#include "feasip/parallel.hpp"
#include "feasip/scene.hpp"
#include "feasip/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

using namespace feasip;

namespace {

template <class Fn>
double best_ms(int reps, Fn fn)
{
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

bool same(const EnergyResult& a, const EnergyResult& b)
{
    return a.value == b.value && a.gradient == b.gradient && a.hessian == b.hessian;
}

bool same(const FeasibilityReport& a, const FeasibilityReport& b)
{
    if (a.min_distance != b.min_distance || a.min_distance_time != b.min_distance_time ||
        a.violations.size() != b.violations.size())
        return false;
    for (std::size_t i = 0; i < a.violations.size(); ++i)
        if (a.violations[i].pair != b.violations[i].pair || a.violations[i].distance != b.violations[i].distance)
            return false;
    return true;
}

void row(const std::string& scene, const char* path, double serial, double parallel, bool identical)
{
    std::printf("%-15s %-8s %10.2f %10.2f %7.2fx  %s\n", scene.c_str(), path, serial, parallel, serial / parallel,
                identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"serial vs parallel timings"};
    std::string dir = FEASIP_SCENE_DIR;
    std::vector<std::string> scenes{"planar_reach", "cage", "dual_arm", "self_collision"};
    int reps = 5;
    bool with_solve = false;
    app.add_option("--scenes", scenes, "scene names");
    app.add_option("--scene-dir", dir, "directory holding <name>.json");
    app.add_option("--reps", reps, "repetitions per kernel (best time is reported)")->check(CLI::PositiveNumber);
    app.add_flag("--solve", with_solve, "also time full solves");
    CLI11_PARSE(app, argc, argv);
    configure_threads_from_env();

    std::printf("threads=%d\n%-15s %-8s %10s %10s %8s\n", thread_count(), "scene", "path", "serial_ms", "omp_ms",
                "speedup");
    bool all_same = true;
    for (const auto& name : scenes) {
        const Scene scene = load_scene(dir + "/" + name + ".json");
        const Problem& p = scene.problem;
        SolverConfig config = scene.solver;
        config.record_theta = false;

        // a converged trajectory and its refined BVH give realistic active sets
        const SolveResult solved = solve(p, config);
        const Objective objective = make_objective(p.chain, p.objective);

        EnergyResult es, ep;
        const double energy_s = best_ms(reps, [&] {
            es = assemble_energy(p, solved.bvh, solved.params, objective, p.barrier.mu, Order::second, Exec::serial);
        });
        const double energy_p = best_ms(reps, [&] {
            ep = assemble_energy(p, solved.bvh, solved.params, objective, p.barrier.mu, Order::second, Exec::parallel);
        });
        row(name, "energy", energy_s, energy_p, same(es, ep));
        all_same = all_same && same(es, ep);

        FeasibilityReport vs, vp;
        const double verify_s =
            best_ms(reps, [&] { vs = verify_feasibility(p, solved.params, scene.dt_audit, Exec::serial); });
        const double verify_p =
            best_ms(reps, [&] { vp = verify_feasibility(p, solved.params, scene.dt_audit, Exec::parallel); });
        row(name, "verify", verify_s, verify_p, same(vs, vp));
        all_same = all_same && same(vs, vp);

        if (with_solve) {
            SolveResult rs, rp;
            config.exec = Exec::serial;
            const double solve_s = best_ms(1, [&] { rs = solve(p, config); });
            config.exec = Exec::parallel;
            const double solve_p = best_ms(1, [&] { rp = solve(p, config); });
            const bool identical = rs.log.csv() == rp.log.csv() && rs.params.theta() == rp.params.theta();
            row(name, "solve", solve_s, solve_p, identical);
            all_same = all_same && identical;
        }
    }
    return all_same ? 0 : 1;
}
