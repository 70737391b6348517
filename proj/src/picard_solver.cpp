#include "hmflow/picard_solver.hpp"

#include "hmflow/error.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace hmflow {

namespace {

std::size_t slices_for(double horizon, double dt) {
    const double n = horizon / dt;
    const auto rounded = static_cast<std::size_t>(std::llround(n));
    if (rounded == 0 || std::abs(n - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, n))
        fail(ErrorCode::InvalidArgument, "time step does not divide the horizon");
    return rounded;
}

}  // namespace

SolveResult solve(const BsdeOperator& op, const NodalField& h, const PicardOptions& options) {
    const auto& src = op.source();
    const auto& target = op.target();
    if (!(options.initial_horizon > 0.0) || !(options.tolerance > 0.0) || !(options.dt > 0.0) || options.max_iter == 0)
        fail(ErrorCode::InvalidArgument, "solver needs positive horizon, time step, tolerance and iteration cap");
    if (static_cast<std::size_t>(h.rows()) != src.node_count() || h.cols() != target.ambient_dim())
        fail(ErrorCode::ShapeMismatch, "terminal map does not match the source grid or target dimension");
    for (Eigen::Index j = 0; j < h.rows(); ++j) {
        const double d = target.distance(h.row(j).transpose());
        if (!(d <= 1e-10))
            fail(ErrorCode::TerminalNotOnTarget, "terminal map leaves N at node " + std::to_string(j) +
                                                     " (distance " + std::to_string(d) + ")");
    }

    PicardState state;
    state.tolerance = options.tolerance;
    std::size_t n_t = slices_for(options.initial_horizon, options.dt);
    const auto clock_start = std::chrono::steady_clock::now();
    std::size_t global_n = 0;

    while (true) {
        const double horizon = static_cast<double>(n_t) * options.dt;
        if (horizon < options.min_horizon) {
            fail(ErrorCode::NoContraction, "horizon fell to " + std::to_string(horizon) + " below the minimum " +
                                               std::to_string(options.min_horizon) + " without contraction");
        }
        state.horizon = horizon;
        state.deltas.clear();
        state.ratios.clear();
        state.converged = false;
        state.n = 0;
        MapField u = MapField::constant_in_time(h, n_t, horizon);
        state.ball_radius = 2.0 * c01_norm(src, u) + 1.0;
        state.ball_ok = true;
        state.max_iterate_norm = c01_norm(src, u);

        bool halve = false;
        std::size_t above = 0;
        std::string reason;
        for (std::size_t it = 0; it < options.max_iter; ++it) {
            MapField next;
            try {
                next = op.apply(u, h);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::BlowUp) throw;
                halve = true;
                reason = e.what();
                break;
            }
            const double delta = c01_norm(src, next - u);
            const double norm = c01_norm(src, next);
            state.max_iterate_norm = std::max(state.max_iterate_norm, norm);
            if (norm > state.ball_radius) state.ball_ok = false;
            std::optional<double> ratio;
            if (!state.deltas.empty() && state.deltas.back() > 10.0 * options.tolerance)
                ratio = delta / state.deltas.back();
            state.deltas.push_back(delta);
            if (state.deltas.size() > 1) state.ratios.push_back(ratio);
            ++state.n;
            ++global_n;
            IterationRecord rec{global_n, delta, ratio, horizon, std::nullopt};
            if (options.record_wall_time) {
                rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
            }
            state.records.push_back(rec);
            u = std::move(next);
            if (delta <= options.tolerance) {
                state.converged = true;
                break;
            }
            above = (ratio && *ratio > options.ratio_trigger) ? above + 1 : 0;
            if (above >= 2) {
                halve = true;
                reason = "contraction ratio above " + std::to_string(options.ratio_trigger) + " twice in a row";
                break;
            }
        }
        if (state.converged) {
            state.u = u;
            break;
        }
        if (!halve) {
            fail(ErrorCode::NoContraction, "no convergence within " + std::to_string(options.max_iter) +
                                               " iterations at horizon " + std::to_string(horizon));
        }
        state.abandoned_horizons.push_back(horizon);
        if (n_t <= 1) fail(ErrorCode::NoContraction, "cannot shrink the horizon below one time step: " + reason);
        n_t /= 2;
    }

    SolveResult result{state.u, std::move(state), std::nullopt};
    if (options.sample_paths > 0) {
        ForwardOptions fo;
        fo.threads = op.options().threads;
        result.sample = make_solution_sample(src, result.solution, options.sample_paths, options.sample_seed, fo);
    }
    return result;
}

std::vector<ContractionRow> contraction_report(const PicardState& state) {
    if (state.deltas.size() < 2)
        fail(ErrorCode::InsufficientHistory, "contraction report needs at least two recorded iterations");
    std::vector<ContractionRow> rows;
    rows.reserve(state.deltas.size());
    for (std::size_t i = 0; i < state.deltas.size(); ++i) {
        rows.push_back({i + 1, state.deltas[i], i == 0 ? std::nullopt : state.ratios[i - 1]});
    }
    return rows;
}

std::string iteration_json_lines(const PicardState& state) {
    std::ostringstream os;
    for (const auto& r : state.records) {
        nlohmann::ordered_json j;
        j["n"] = r.n;
        j["delta"] = r.delta;
        j["ratio"] = r.ratio ? nlohmann::ordered_json(*r.ratio) : nlohmann::ordered_json(nullptr);
        j["horizon"] = r.horizon;
        j["wall_time"] = r.wall_time ? nlohmann::ordered_json(*r.wall_time) : nlohmann::ordered_json(nullptr);
        os << j.dump() << '\n';
    }
    return os.str();
}

}  // namespace hmflow
