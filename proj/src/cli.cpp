#include "feasip/cli.hpp"

#include "feasip/barrier.hpp"
#include "feasip/oracle.hpp"
#include "feasip/parallel.hpp"
#include "feasip/scene.hpp"
#include "feasip/solver.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

namespace feasip {

namespace {

namespace fs = std::filesystem;

struct Overrides {
    std::optional<double> mu, eta, x0, d0, dt_audit;
    std::optional<std::string> order, exec;
    std::optional<int> initial_splits;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App& cmd)
    {
        cmd.add_option("--mu", mu, "initial barrier weight");
        cmd.add_option("--eta", eta, "safety-margin exponent, < 1/6");
        cmd.add_option("--x0", x0, "barrier support width");
        cmd.add_option("--d0", d0, "required clearance");
        cmd.add_option("--order", order, "search direction: first or second");
        cmd.add_option("--initial-splits", initial_splits, "initial intervals per pair");
        cmd.add_option("--dt-audit", dt_audit, "dense audit sampling interval");
        cmd.add_option("--seed", seed, "random seed");
        cmd.add_option("--exec", exec, "kernel execution: serial or parallel");
    }

    // Throws std::invalid_argument on a bad value.
    void apply(Scene& scene) const
    {
        BarrierSpec& b = scene.problem.barrier;
        if (mu)
            b.mu = *mu;
        if (eta)
            b.eta = *eta;
        if (x0)
            b.x0 = *x0;
        if (d0)
            b.d0 = *d0;
        if (dt_audit) {
            if (!(*dt_audit > 0.0))
                throw std::invalid_argument("--dt-audit must be > 0");
            scene.dt_audit = *dt_audit;
        }
        if (initial_splits)
            scene.problem.initial_splits = *initial_splits;
        if (seed)
            scene.seed = *seed;
        if (order) {
            if (*order == "first")
                scene.solver.order = Order::first;
            else if (*order == "second")
                scene.solver.order = Order::second;
            else
                throw std::invalid_argument("--order must be first or second");
        }
        if (exec) {
            if (*exec == "serial")
                scene.solver.exec = Exec::serial;
            else if (*exec == "parallel")
                scene.solver.exec = Exec::parallel;
            else
                throw std::invalid_argument("--exec must be serial or parallel");
        }
        scene.problem.validate();
    }
};

std::string g(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::optional<Scene> load(const std::string& path, const Overrides& ov, std::ostream& err)
{
    try {
        Scene scene = load_scene(path);
        ov.apply(scene);
        return scene;
    } catch (const SceneError& e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << '\n';
    }
    return std::nullopt;
}

int cmd_solve(const std::string& scene_path, const std::string& out_dir, const Overrides& ov, std::ostream& out,
              std::ostream& err)
{
    const auto scene = load(scene_path, ov, err);
    if (!scene)
        return kExitUsage;
    const Problem& problem = scene->problem;

    SolveResult result;
    try {
        result = solve(problem, scene->solver);
    } catch (const InfeasibleStartError& e) {
        err << "infeasible start: " << e.what() << '\n';
        return kExitInfeasibleStart;
    } catch (const StallError& e) {
        err << "stall: " << e.what() << '\n';
        return kExitStall;
    }

    const FeasibilityReport audit = verify_feasibility(problem, result.params, scene->dt_audit, scene->solver.exec);
    TrajectoryMetadata meta;
    meta.scene = problem.name;
    meta.converged = result.converged;
    meta.iterations = result.log.rows.empty() ? 0 : static_cast<std::size_t>(result.log.rows.back().iteration);
    meta.subdivisions = result.bvh.subdivisions();
    meta.objective = result.objective;
    meta.mu = result.final_mu;

    std::ostringstream audit_text;
    audit_text << audit_records(audit, scene->dt_audit, problem.barrier.d0);
    if (problem.containment)
        audit_text << "containment inside=" << (contained(problem, result.params) ? "true" : "false") << '\n';

    try {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "trajectory.json", trajectory_json(result.params, meta));
        write_file(fs::path(out_dir) / "convergence.csv", result.log.csv());
        write_file(fs::path(out_dir) / "timing.csv", result.log.timing_csv());
        write_file(fs::path(out_dir) / "audit.txt", audit_text.str());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    out << "scene " << problem.name << ": " << (result.converged ? "converged" : "not converged") << " after "
        << meta.iterations << " iterations, " << meta.subdivisions << " subdivisions, objective "
        << g(result.objective) << ", grad_inf " << g(result.final_grad_inf) << '\n';
    out << audit_text.str();
    return result.converged && audit.feasible() ? kExitOk : kExitFailed;
}

int cmd_verify(const std::string& scene_path, const std::string& traj_path, std::optional<double> dt,
               const Overrides& ov, std::ostream& out, std::ostream& err)
{
    if (dt && !(*dt > 0.0)) {
        err << "error: --dt must be > 0\n";
        return kExitUsage;
    }
    const auto scene = load(scene_path, ov, err);
    if (!scene)
        return kExitUsage;
    const double step = dt.value_or(scene->dt_audit);
    try {
        const TrajectoryParams params = load_trajectory(traj_path);
        if (params.joints() != scene->problem.chain.dof())
            throw std::invalid_argument("trajectory has " + std::to_string(params.joints()) + " joints, scene chain has " +
                                        std::to_string(scene->problem.chain.dof()));
        if (params.layout().horizon != scene->problem.layout.horizon)
            throw std::invalid_argument("trajectory horizon differs from the scene horizon");
        const FeasibilityReport report = verify_feasibility(scene->problem, params, step, scene->solver.exec);
        out << audit_records(report, step, scene->problem.barrier.d0);
        return report.feasible() ? kExitOk : kExitFailed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

int cmd_compare(const std::string& scene_path, const std::vector<double>& eps_list, double dt_audit,
                const std::string& out_dir, const Overrides& ov, std::ostream& out, std::ostream& err)
{
    const auto scene = load(scene_path, ov, err);
    if (!scene)
        return kExitUsage;
    const Problem& problem = scene->problem;

    std::ostringstream table;
    table << "method,eps,converged,audit_verdict,contained,objective,iterations,subdivisions,min_distance\n";
    auto row = [&](const std::string& method, const std::string& eps, bool converged, const FeasibilityReport& audit,
                   const TrajectoryParams& params, double objective, std::size_t iterations, std::size_t subdivisions) {
        table << method << ',' << eps << ',' << (converged ? "yes" : "no") << ','
              << (audit.feasible() ? "feasible" : "infeasible") << ','
              << (problem.containment ? (contained(problem, params) ? "inside" : "outside") : "n/a") << ','
              << g(objective) << ',' << iterations << ',' << subdivisions << ',' << g(audit.min_distance) << '\n';
    };

    int status = kExitOk;
    try {
        const SolveResult ours = solve(problem, scene->solver);
        const FeasibilityReport audit = verify_feasibility(problem, ours.params, dt_audit, scene->solver.exec);
        row("feasible", "-", ours.converged, audit, ours.params, ours.objective,
            static_cast<std::size_t>(ours.log.rows.back().iteration), ours.bvh.subdivisions());
        if (!audit.feasible())
            status = kExitFailed;
    } catch (const InfeasibleStartError& e) {
        err << "infeasible start: " << e.what() << '\n';
        return kExitInfeasibleStart;
    } catch (const StallError& e) {
        err << "stall: " << e.what() << '\n';
        return kExitStall;
    }

    for (double eps : eps_list) {
        ExchangeConfig cfg;
        cfg.eps = eps;
        cfg.max_rounds = scene->exchange_max_rounds;
        cfg.limit_barriers = scene->exchange_limit_barriers;
        cfg.solver = scene->solver;
        cfg.solver.record_theta = false;
        try {
            const ExchangeResult ex = exchange_solve(problem, cfg);
            const FeasibilityReport audit = verify_feasibility(problem, ex.params, dt_audit, scene->solver.exec);
            row("exchange", g(eps), ex.converged, audit, ex.params, ex.objective,
                static_cast<std::size_t>(ex.log.rows.back().iteration), 0);
        } catch (const std::exception& e) {
            table << "exchange," << g(eps) << ",error,-,-,-,-,-,-\n";
            err << "exchange eps=" << g(eps) << ": " << e.what() << '\n';
        }
    }

    out << table.str();
    if (!out_dir.empty()) {
        try {
            fs::create_directories(out_dir);
            write_file(fs::path(out_dir) / "compare.csv", table.str());
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
    }
    return status;
}

// Barrier-law demonstration: the crossing profile |t - 1/2| on [0, 1].
int cmd_demo(const Overrides& ov, std::ostream& out, std::ostream& err)
{
    BarrierSpec spec;
    if (ov.x0)
        spec.x0 = *ov.x0;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    const auto profile = [](double t) { return std::abs(t - 0.5); };
    out << "resolution,log_barrier,local_barrier\n";
    for (long n = 10; n <= 1'000'000; n *= 10) {
        const double lg = quadrature_penalty_integral(profile, 0.0, 1.0, PenaltyKind::log, spec.x0, 0.0, n);
        const double lc = quadrature_penalty_integral(profile, 0.0, 1.0, PenaltyKind::local, spec.x0, 0.0, n);
        out << n << ',' << g(lg) << ',' << g(lc) << '\n';
    }
    out << "log barrier limit 1 + log 2 = " << g(1.0 + std::log(2.0)) << '\n';
    const BarrierLawReport law = assumption3_check(spec, 40);
    out << "x * P(x) on x0 * 2^-n, n = 1..40: " << (law.monotone_increasing ? "monotone increasing" : "not monotone")
        << ", final " << g(law.final_value) << '\n';
    return kExitOk;
}

std::vector<double> parse_eps_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size() || !(v > 0.0))
            throw std::invalid_argument("--eps entries must be positive numbers");
        out.push_back(v);
    }
    return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    configure_threads_from_env();
    CLI::App app{"feasible semi-infinite trajectory optimizer", "feasip"};
    app.require_subcommand(1);

    Overrides ov;
    std::string scene_path, out_dir, traj_path, eps_text;
    std::optional<double> verify_dt;
    double compare_dt = 1e-4;
    bool eps_given = false;

    auto* solve_cmd = app.add_subcommand("solve", "optimize a scene and audit the result");
    solve_cmd->add_option("scene", scene_path, "scene file")->required();
    solve_cmd->add_option("--out", out_dir, "output directory")->required();
    ov.add_to(*solve_cmd);

    auto* verify_cmd = app.add_subcommand("verify", "densely audit a trajectory");
    verify_cmd->add_option("scene", scene_path, "scene file")->required();
    verify_cmd->add_option("trajectory", traj_path, "trajectory file")->required();
    verify_cmd->add_option("--dt", verify_dt, "sampling interval (default: the scene's dt_audit)");
    ov.add_to(*verify_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "feasible solver against the exchange baseline");
    compare_cmd->add_option("scene", scene_path, "scene file")->required();
    compare_cmd->add_option("--eps", eps_text, "comma-separated exchange sampling intervals; empty runs only ours")
        ->each([&](const std::string&) { eps_given = true; });
    compare_cmd->add_option("--audit-dt", compare_dt, "dense audit interval for every row");
    compare_cmd->add_option("--out", out_dir, "optional directory for compare.csv");
    ov.add_to(*compare_cmd);

    auto* demo_cmd = app.add_subcommand("demo", "barrier law on the crossing profile");
    demo_cmd->add_option("--x0", ov.x0, "barrier support width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*solve_cmd)
        return cmd_solve(scene_path, out_dir, ov, out, err);
    if (*verify_cmd)
        return cmd_verify(scene_path, traj_path, verify_dt, ov, out, err);
    if (*compare_cmd) {
        std::vector<double> eps;
        try {
            if (!(compare_dt > 0.0))
                throw std::invalid_argument("--audit-dt must be > 0");
            if (eps_given)
                eps = parse_eps_list(eps_text);
            else if (const auto scene = load(scene_path, ov, err))
                eps = scene->exchange_eps;
            else
                return kExitUsage;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return kExitUsage;
        }
        return cmd_compare(scene_path, eps, compare_dt, out_dir, ov, out, err);
    }
    return cmd_demo(ov, out, err);
}

}  // namespace feasip
