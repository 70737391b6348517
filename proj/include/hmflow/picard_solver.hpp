#pragma once

#include "hmflow/bsde_operator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hmflow {

struct PicardOptions {
    double initial_horizon = 0.25;
    double dt = 1e-3;
    double tolerance = 1e-8;
    std::size_t max_iter = 50;
    double ratio_trigger = 0.9;      ///< halve T0 after two consecutive ratios above this
    double min_horizon = 1e-4;       ///< NoContraction below this
    std::size_t sample_paths = 1000;  ///< paths in the returned solution sample (0 = none)
    std::uint64_t sample_seed = 1;
    bool record_wall_time = false;  ///< wall-clock seconds are not reproducible, so off by default
    BsdeOptions bsde;
};

struct IterationRecord {
    std::size_t n = 0;
    double delta = 0.0;
    std::optional<double> ratio;
    double horizon = 0.0;
    std::optional<double> wall_time;
};

struct PicardState {
    std::size_t n = 0;  ///< iterations on the final horizon
    MapField u;
    std::vector<double> deltas;
    std::vector<std::optional<double>> ratios;  ///< ratios[i] = delta_{i+1} / delta_i when recorded
    double horizon = 0.0;
    bool converged = false;
    double tolerance = 0.0;
    double ball_radius = 0.0;  ///< K = 2 |h|_{C^{0,1}} + 1
    bool ball_ok = true;
    double max_iterate_norm = 0.0;
    std::vector<double> abandoned_horizons;
    std::vector<IterationRecord> records;  ///< every iteration, including abandoned horizons
};

struct ContractionRow {
    std::size_t n = 0;
    double delta = 0.0;
    std::optional<double> ratio;
};

struct SolveResult {
    MapField solution;
    PicardState state;
    std::optional<BsdeSolutionSample> sample;
};

/// Picard iteration u_{n+1} = T(u_n) from u_0 = h with adaptive halving of T0.
SolveResult solve(const BsdeOperator& op, const NodalField& h, const PicardOptions& options);

/// (n, delta_n, ratio) rows of the final horizon; needs at least two iterations.
std::vector<ContractionRow> contraction_report(const PicardState& state);

/// One JSON object per line: {"n":..,"delta":..,"ratio":..,"horizon":..,"wall_time":..}.
std::string iteration_json_lines(const PicardState& state);

}  // namespace hmflow
