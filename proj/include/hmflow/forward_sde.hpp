#pragma once

#include "hmflow/source_geometry.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace hmflow {

struct ForwardOptions {
    bool zero_noise = false;  ///< force every increment to 0
    bool antithetic = false;  ///< paths 2j and 2j+1 use opposite increments
    unsigned threads = 1;     ///< 0 = hardware concurrency
};

/// Forward g_t-Brownian paths X_s^{t,x} with the ambient increments that drove them.
class PathEnsemble {
public:
    PathEnsemble(double start_time, double dt, std::size_t n_steps, std::size_t n_paths, int chart_dim, int noise_dim);

    [[nodiscard]] double start_time() const noexcept { return start_time_; }
    [[nodiscard]] double end_time() const noexcept { return start_time_ + dt_ * static_cast<double>(n_steps_); }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] double time(std::size_t step) const noexcept { return start_time_ + dt_ * static_cast<double>(step); }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] std::size_t n_paths() const noexcept { return n_paths_; }
    [[nodiscard]] int chart_dim() const noexcept { return chart_dim_; }
    [[nodiscard]] int noise_dim() const noexcept { return noise_dim_; }

    /// State of `path` at time node `step` (0..n_steps).
    [[nodiscard]] IntrinsicPoint state(std::size_t path, std::size_t step) const;
    /// Ambient Brownian increment W_{t_{k+1}} - W_{t_k} of `path`.
    [[nodiscard]] Vec increment(std::size_t path, std::size_t step) const;

    [[nodiscard]] std::span<const double> states() const noexcept { return states_; }
    [[nodiscard]] std::span<const double> increments() const noexcept { return increments_; }
    /// Largest | |u| - 1 | seen before renormalization (always 0 on the circle).
    [[nodiscard]] double max_constraint_violation() const noexcept { return max_violation_; }

    // Mutable access for the simulator.
    void set_state(std::size_t path, std::size_t step, const IntrinsicPoint& x);
    void set_increment(std::size_t path, std::size_t step, const Vec& dw);
    void set_max_violation(double v) noexcept { max_violation_ = v; }

private:
    double start_time_;
    double dt_;
    std::size_t n_steps_;
    std::size_t n_paths_;
    int chart_dim_;
    int noise_dim_;
    std::vector<double> states_;
    std::vector<double> increments_;
    double max_violation_ = 0.0;
};

struct StepOutcome {
    IntrinsicPoint next;
    double violation = 0.0;  ///< | |u| - 1 | before renormalization
};

/// One step of the intrinsic scheme driven by an ambient increment dW (length ambient_dim).
///  circle: theta += <tau(theta), dW> / rho(t)
///  sphere: u + Pi_u dW / rho(t) - (m/2) rho(t)^{-2} u dt, then renormalized.
StepOutcome forward_step(const SourceManifold& source, double t, double dt, const IntrinsicPoint& x, const Vec& dw);

/// Number of steps for [t, horizon] with step dt; throws unless dt divides the interval.
std::size_t step_count(double t, double horizon, double dt);

/// Simulates paths_per_start paths from each start point; path index = start * paths_per_start + j.
PathEnsemble simulate(const SourceManifold& source, double t, std::span<const IntrinsicPoint> starts, double horizon,
                      double dt, std::size_t paths_per_start, std::uint64_t master_seed,
                      const ForwardOptions& options = {});

PathEnsemble simulate(const SourceManifold& source, double t, const IntrinsicPoint& start, double horizon, double dt,
                      std::size_t n_paths, std::uint64_t master_seed, const ForwardOptions& options = {});

struct WeakErrorRow {
    double h = 0.0;
    double residual = 0.0;        ///< |E f(X_{t+h}) - f(x) - (h/2) Delta f(x)|
    double standard_error = 0.0;  ///< Monte Carlo standard error (0 for quadrature)
};

struct WeakProbeOptions {
    std::size_t quadrature_order = 64;  ///< circle
    std::size_t n_paths = 1'000'000;    ///< sphere
    bool antithetic = true;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

/// One-step weak consistency table against the generator (1/2) Delta_{g_t} at grid node `node`.
std::vector<WeakErrorRow> weak_error_probe(const SourceManifold& source, double t, std::size_t node,
                                           const std::function<double(const IntrinsicPoint&)>& f,
                                           std::span<const double> h_list, const WeakProbeOptions& options = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// CSV rows (path_id, step, time, chart coordinates...) with 17 significant digits.
void write_paths_csv(const PathEnsemble& ensemble, std::ostream& out);

}  // namespace hmflow
