#include "hmflow/commands.hpp"

#include "hmflow/benchmarks.hpp"
#include "hmflow/forward_sde.hpp"
#include "hmflow/svg_plot.hpp"
#include "hmflow/verification.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace hmflow {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

void prepare_output(const RunConfig& config) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory " + config.out_dir.string() + ": " + ec.message());
    write_text(config.out_dir / "config.ini", echo_config(config.table));
}

BenchmarkCase with_horizon(BenchmarkCase c, double horizon) {
    c.horizon = horizon;
    return c;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

struct MomentCheck {
    std::string name;
    double estimate = 0.0;
    double standard_error = 0.0;
    double expected = 0.0;
};

MomentCheck moment(const std::string& name, const std::vector<double>& samples, double expected) {
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(samples.size());
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(std::max<std::size_t>(samples.size() - 1, 1));
    return {name, mean, std::sqrt(var / static_cast<double>(samples.size())), expected};
}

NodalField first_coordinate(const SourceManifold& source) {
    NodalField f(source.node_count(), 1);
    for (std::size_t j = 0; j < source.node_count(); ++j)
        f(static_cast<Eigen::Index>(j), 0) = source.unit_embedding(source.node(j))(0);
    return f;
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Config:
    case ErrorCode::Io:
    case ErrorCode::InvalidArgument:
    case ErrorCode::TimeOutOfRange:
    case ErrorCode::StepTooLarge:
    case ErrorCode::GridTooCoarse:
    case ErrorCode::TerminalNotOnTarget:
    case ErrorCode::UnsupportedReduction:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::HorizonMismatch:
        return ExitConfig;
    case ErrorCode::NoContraction:
    case ErrorCode::BlowUp:
        return ExitNoContraction;
    case ErrorCode::FieldLeftTube:
        return ExitVerification;
    default:
        return ExitInternal;
    }
}

int cmd_simulate_forward(const RunConfig& config, std::ostream& log) {
    prepare_output(config);
    const auto& f = config.forward;
    const SourcePtr source = with_horizon(config.problem, f.horizon).make_source();
    if (f.start_node >= source->node_count())
        fail(ErrorCode::Config, "config key 'forward.start_node' exceeds the grid size " + std::to_string(source->node_count()));
    const IntrinsicPoint x0 = source->node(f.start_node);
    ForwardOptions opts;
    opts.antithetic = f.antithetic;
    opts.threads = config.threads;
    const PathEnsemble ens = simulate(*source, f.start_time, x0, f.horizon, f.dt, f.n_paths, config.seed, opts);
    log << "simulated " << ens.n_paths() << " paths of " << ens.n_steps() << " steps on " << source->describe() << '\n';

    {
        std::ostringstream csv;
        if (f.dump_paths > 0) {
            // Increments are keyed by path index, so these are the first paths of the ensemble above.
            const auto dumped = simulate(*source, f.start_time, x0, f.horizon, f.dt, std::min(f.dump_paths, f.n_paths),
                                         config.seed, opts);
            write_paths_csv(dumped, csv);
        }
        write_text(config.out_dir / "paths.csv", csv.str());
    }

    const double integral = inverse_square_integral(source->radius(), f.start_time, f.horizon);
    std::vector<MomentCheck> checks;
    const std::size_t last = ens.n_steps();
    if (source->family() == SourceFamily::Circle) {
        const double a0 = std::get<CirclePoint>(x0).angle;
        std::vector<double> c, s;
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            const double a = std::get<CirclePoint>(ens.state(p, last)).angle - a0;
            c.push_back(std::cos(a));
            s.push_back(std::sin(a));
        }
        checks.push_back(moment("mean_cos_displacement", c, std::exp(-0.5 * integral)));
        checks.push_back(moment("mean_sin_displacement", s, 0.0));
    } else {
        const Vec3 u0 = std::get<SpherePoint>(x0).unit;
        std::vector<double> d;
        for (std::size_t p = 0; p < ens.n_paths(); ++p) d.push_back(std::get<SpherePoint>(ens.state(p, last)).unit.dot(u0));
        checks.push_back(moment("mean_inner_product_with_start", d, std::exp(-integral)));
    }

    Json j;
    j["command"] = "simulate-forward";
    j["source"] = source->describe();
    j["start_node"] = f.start_node;
    j["start_time"] = f.start_time;
    j["horizon"] = f.horizon;
    j["dt"] = f.dt;
    j["n_paths"] = f.n_paths;
    j["seed"] = config.seed;
    j["antithetic"] = f.antithetic;
    j["max_constraint_violation"] = ens.max_constraint_violation();
    bool all = true;
    Json arr = Json::array();
    for (const auto& c : checks) {
        const bool pass = std::abs(c.estimate - c.expected) <= 3.0 * c.standard_error;
        all = all && pass;
        arr.push_back({{"name", c.name}, {"estimate", c.estimate}, {"standard_error", c.standard_error},
                       {"expected", c.expected}, {"pass", pass}});
        log << c.name << ": " << c.estimate << " +- " << c.standard_error << " (expected " << c.expected << ")"
            << (pass ? "" : "  OUTSIDE 3 SE") << '\n';
    }
    j["checks"] = arr;
    j["pass"] = all;
    write_text(config.out_dir / "moments.json", j.dump(2) + "\n");
    return ExitSuccess;
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
    prepare_output(config);
    const BenchmarkCase& c = config.problem;
    log << "solving " << c.name << " with T0 = " << config.solver.initial_horizon << ", dt = " << config.solver.dt
        << ", backend " << to_string(config.solver.bsde.backend) << '\n';
    const BenchmarkRun run = run_benchmark(c, config.solver);
    const auto& state = run.result.state;
    for (double h : state.abandoned_horizons) log << "abandoned horizon " << h << " (halving)\n";
    log << "converged on T0 = " << state.horizon << " after " << state.n << " iterations\n";

    const MapField& u = run.result.solution;
    const bool binary = config.field_format == MapFieldFormat::Binary;
    save_map_field(u, config.out_dir / (binary ? "field.bin" : "field.csv"), config.field_format);
    write_text(config.out_dir / "iterations.jsonl", iteration_json_lines(state));
    {
        std::ostringstream csv;
        write_benchmark_csv(run.rows, csv);
        write_text(config.out_dir / "errors.csv", csv.str());
    }

    const SourcePtr source = with_horizon(c, state.horizon).make_source();
    const TargetManifold target = c.make_target();
    Json j;
    j["command"] = "solve";
    j["case"] = c.name;
    j["benchmark"] = config.is_benchmark;
    j["source"] = source->describe();
    j["target"] = target.describe();
    j["backend"] = to_string(config.solver.bsde.backend);
    j["seed"] = config.seed;
    j["initial_horizon"] = config.solver.initial_horizon;
    j["horizon"] = state.horizon;
    j["abandoned_horizons"] = state.abandoned_horizons;
    j["dt"] = config.solver.dt;
    j["converged"] = state.converged;
    j["iterations"] = state.n;
    j["first_delta"] = state.deltas.empty() ? Json(nullptr) : Json(state.deltas.front());
    j["final_delta"] = state.deltas.empty() ? Json(nullptr) : Json(state.deltas.back());
    j["terminal_is_fixed_point"] = !state.deltas.empty() && state.deltas.front() <= 1e-4;
    j["tolerance"] = state.tolerance;
    j["ball_radius"] = state.ball_radius;
    j["ball_ok"] = state.ball_ok;
    j["max_iterate_norm"] = state.max_iterate_norm;
    j["sup_error"] = run.sup_error;
    j["amplitude_error"] = optional_number(run.amplitude_error);
    j["benchmark_tolerance"] = c.tolerance;
    j["within_tolerance"] = run.pass;
    if (run.result.sample) {
        const auto& sample = *run.result.sample;
        j["sample_paths"] = sample.paths.n_paths();
        j["max_z_norm"] = sample.max_z_norm();
        j["bsde_residual"] = bsde_residual(*source, target, sample, u, config.solver.bsde.flat_override);
        j["max_distance_to_target"] = stay_on_target(target, sample).max_distance;
    }
    write_text(config.out_dir / "summary.json", j.dump(2) + "\n");
    log << "sup error against reference " << run.sup_error << " (tolerance " << c.tolerance << ")\n";

    if (config.svg) {
        PlotSeries deltas{"delta_n", {}, {}};
        for (std::size_t i = 0; i < state.deltas.size(); ++i) {
            deltas.x.push_back(static_cast<double>(i + 1));
            deltas.y.push_back(state.deltas[i]);
        }
        write_text(config.out_dir / "convergence.svg",
                   line_plot_svg("Picard increments", "iteration n", "C^{0,1} delta", {deltas}, true));
        PlotSeries err{"sup error vs reference", {}, {}};
        for (std::size_t k = 0; k < u.n_slices(); ++k) {
            err.x.push_back(u.time(k));
            err.y.push_back((u.slice(k) - run.reference.slice(k)).rowwise().norm().maxCoeff());
        }
        write_text(config.out_dir / "error.svg", line_plot_svg("Error against reference", "t", "sup error", {err}, true));
    }
    return ExitSuccess;
}

int cmd_verify(const RunConfig& config, std::ostream& log) {
    prepare_output(config);
    fs::path path = config.verify.field;
    if (path.empty()) {
        path = config.out_dir / "field.bin";
        if (!fs::exists(path) && fs::exists(config.out_dir / "field.csv")) path = config.out_dir / "field.csv";
    }
    const MapField u = load_map_field(path);
    const BenchmarkCase& c = config.problem;
    const SourcePtr source = with_horizon(c, u.horizon()).make_source();
    const TargetManifold target = c.make_target();
    if (u.n_nodes() != source->node_count() || u.value_dim() != target.ambient_dim())
        fail(ErrorCode::Config, "field " + path.string() + " has " + std::to_string(u.n_nodes()) + " nodes and " +
                                    std::to_string(u.value_dim()) + " components, the configuration expects " +
                                    std::to_string(source->node_count()) + " and " + std::to_string(target.ambient_dim()));
    const auto& v = config.verify;

    Json j;
    j["command"] = "verify";
    j["field"] = path.string();
    j["horizon"] = u.horizon();
    Json checks = Json::array();
    bool all = true;
    auto record = [&](const std::string& name, double value, double tol) {
        const bool pass = value <= tol;
        all = all && pass;
        checks.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"status", pass ? "pass" : "fail"}});
        log << name << ": " << value << " (tolerance " << tol << ") " << (pass ? "pass" : "FAIL") << '\n';
    };
    try {
        record("tension_residual", sup_of(tension_residual(*source, target, u)), v.tension_tolerance);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::FieldLeftTube) throw;
        j["checks"] = checks;
        j["error"] = e.what();
        j["pass"] = false;
        write_text(config.out_dir / "verdict.json", j.dump(2) + "\n");
        throw;
    }
    ForwardOptions fopts;
    fopts.threads = config.threads;
    const auto sample = make_solution_sample(*source, u, v.sample_paths, config.seed, fopts);
    const auto stay = stay_on_target(target, sample);
    record("stay_on_target", stay.max_distance, v.distance_tolerance);
    record("weak_form_residual", weak_form_residual(*source, target, u, first_coordinate(*source)), v.weak_tolerance);
    j["checks"] = checks;
    j["gronwall_constant"] = stay.fitted_constant;
    j["pass"] = all;
    write_text(config.out_dir / "verdict.json", j.dump(2) + "\n");
    return all ? ExitSuccess : ExitVerification;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& log) {
    try {
        if (command == "simulate-forward") return cmd_simulate_forward(config, log);
        if (command == "solve") return cmd_solve(config, log);
        if (command == "verify") return cmd_verify(config, log);
        log << "error: unknown command '" << command << "'\n";
        return ExitConfig;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return ExitInternal;
    }
}

}  // namespace hmflow
