#pragma once

#include "hmflow/forward_sde.hpp"
#include "hmflow/map_field.hpp"
#include "hmflow/source_geometry.hpp"
#include "hmflow/target_geometry.hpp"

#include <cstdint>
#include <string>

namespace hmflow {

enum class Backend { Semigroup, MonteCarlo };

std::string to_string(Backend backend);
/// Accepts "semigroup", "monte-carlo" and "monte_carlo".
Backend parse_backend(const std::string& name);

struct BsdeOptions {
    Backend backend = Backend::Semigroup;
    bool flat_override = false;    ///< force Gamma-bar to zero
    bool implicit_driver = false;  ///< evaluate the driver at w(t_k) by fixed-point sweeps instead of at w-hat
    std::size_t implicit_sweeps = 4;
    std::size_t mc_paths = 10'000;  ///< one-step samples per node batch; 0 selects Gauss-Hermite quadrature
    std::size_t quadrature_order = 32;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

struct ApplyResult {
    MapField w;
    /// Per-component standard-error bound of w (zero for the semigroup backend and quadrature).
    MapField standard_error;
};

/// The Picard map w = T(u): backward Euler for the frozen-gradient BSDE with terminal value h.
class BsdeOperator {
public:
    BsdeOperator(SourcePtr source, TargetManifold target, BsdeOptions options = {});

    [[nodiscard]] const SourceManifold& source() const noexcept { return *source_; }
    [[nodiscard]] const SourcePtr& source_ptr() const noexcept { return source_; }
    [[nodiscard]] const TargetManifold& target() const noexcept { return target_; }
    [[nodiscard]] const BsdeOptions& options() const noexcept { return options_; }

    [[nodiscard]] MapField apply(const MapField& u, const NodalField& h) const;
    [[nodiscard]] ApplyResult apply_with_error(const MapField& u, const NodalField& h) const;

    /// (1/2) sum_a Gamma-bar(y)(g_a, g_a) over g_t-orthonormal gradient directions g_a.
    [[nodiscard]] NodalField driver(const NodalField& y, const std::vector<NodalField>& gradient) const;

    /// E[g(X_{t+dt}^{t,x})] at every node; `se` (optional) receives a standard-error estimate.
    [[nodiscard]] NodalField conditional_expectation(std::size_t slice, double t, double dt, const NodalField& g,
                                                     NodalField* se) const;

private:
    [[nodiscard]] NodalField circle_sampled(std::size_t slice, double t, double dt, const NodalField& g,
                                            NodalField* se) const;
    [[nodiscard]] NodalField sphere_sampled(std::size_t slice, double t, double dt, const NodalField& g,
                                            NodalField* se) const;

    SourcePtr source_;
    TargetManifold target_;
    BsdeOptions options_;
};

/// Forward paths together with Y_s = w(s, X_s) and Z_s = A(s, X_s) grad w(s, X_s).
struct BsdeSolutionSample {
    PathEnsemble paths;
    Eigen::MatrixXd y;  ///< row path * (n_steps + 1) + step; L2 columns
    Eigen::MatrixXd z;  ///< same rows; L1 blocks of L2 columns, block i = Z^i
    int value_dim = 0;

    [[nodiscard]] std::size_t row(std::size_t path, std::size_t step) const noexcept {
        return path * (paths.n_steps() + 1) + step;
    }
    [[nodiscard]] Vec y_at(std::size_t path, std::size_t step) const;
    /// Z^i at (path, step).
    [[nodiscard]] Vec z_at(std::size_t path, std::size_t step, int i) const;
    [[nodiscard]] double max_z_norm() const;
};

/// Paths start at t = 0 from nodes spread evenly over the grid and use w's time step.
BsdeSolutionSample make_solution_sample(const SourceManifold& source, const MapField& w, std::size_t n_paths,
                                        std::uint64_t seed, const ForwardOptions& options = {});

/// sqrt(mean over paths of | sum_k [Y_{k+1} - Y_k - (dt/2) sum_a Gamma-bar(Y_k)(grad_a u, grad_a u) - sum_i Z_k^i dW_k^i] |^2).
double bsde_residual(const SourceManifold& source, const TargetManifold& target, const BsdeSolutionSample& sample,
                     const MapField& u, bool flat_override = false);

}  // namespace hmflow
