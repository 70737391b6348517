#pragma once

#include "hmflow/bsde_operator.hpp"
#include "hmflow/map_field.hpp"
#include "hmflow/radius_profile.hpp"
#include "hmflow/source_geometry.hpp"
#include "hmflow/target_geometry.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hmflow {

/// One-dimensional reductions with an independent reference solver.
enum class Reduction {
    None,
    FlatHeat,           ///< flat target: componentwise heat equation
    CircleLift,         ///< circle into a great circle of S^d: scalar heat equation for the angle
    EquivariantSphere,  ///< sphere to sphere, u = (sin f(theta) cos phi, sin f(theta) sin phi, cos f(theta))
};

struct BenchmarkCase {
    std::string name;
    SourceFamily family = SourceFamily::Circle;
    RadiusProfile radius = RadiusProfile::constant(1.0);
    double horizon = 0.25;
    double dt = 1e-3;
    std::size_t n_theta = 256;
    std::size_t n_lat = 32;
    std::size_t n_lon = 64;
    bool flat_target = false;  ///< R^{ambient} instead of the unit sphere
    int target_ambient_dim = 2;
    Reduction reduction = Reduction::None;

    /// Plane of the target great circle; u = cos(psi) e1 + sin(psi) e2.
    Vec plane_e1;
    Vec plane_e2;
    int winding = 1;
    /// Terminal lift psi_T(theta) (circle) or colatitude profile f_T(theta) (equivariant sphere).
    std::function<double(double)> terminal_profile;
    /// Terminal map for cases without a reduction, or to override the profile.
    std::function<Vec(const IntrinsicPoint&)> terminal_map;
    /// Exact solution u(t, x) for horizon T0, called as closed_form(t, T0, x), when one is known.
    std::function<Vec(double, double, const IntrinsicPoint&)> closed_form;
    /// Single-mode lifts: psi_T = winding * theta + amplitude * sin(mode * theta).
    std::optional<std::pair<int, double>> lift_mode;

    double tube_radius = 0.2;
    double tolerance = 5e-3;

    [[nodiscard]] SourcePtr make_source() const;
    [[nodiscard]] TargetManifold make_target() const;
    [[nodiscard]] Vec terminal_value(const IntrinsicPoint& x) const;
    [[nodiscard]] NodalField terminal(const SourceManifold& source) const;
    /// Closed form sampled on the source grid at n_t + 1 slices over [0, horizon].
    [[nodiscard]] MapField sample_closed_form(const SourceManifold& source, std::size_t n_t) const;
};

/// int_a^b rho(r)^{-2} dr by adaptive Gauss-Kronrod quadrature.
double inverse_square_integral(const RadiusProfile& radius, double a, double b);

/// Reference solution of the backward harmonic map heat flow for a supported reduction.
/// n_x is the Fourier resolution (circle) or the number of interior colatitudes (sphere).
MapField pde_reference(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_t, std::size_t n_x);

/// |d_t u + (1/2)(Delta u - Gamma-bar(u)(grad u, grad u))| per node, one n x 1 field per slice.
std::vector<NodalField> tension_residual(const SourceManifold& source, const TargetManifold& target,
                                         const MapField& field);
double sup_of(const std::vector<NodalField>& fields);

/// Residual of the closed form evaluated with an exact-in-time central difference.
double closed_form_residual(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_times = 11,
                            double step = 1e-4);

struct GronwallRow {
    double s = 0.0;
    double mean_g = 0.0;
    double tail_integral = 0.0;  ///< int_s^{T0} mean G(Y_r) dr
};

struct StayOnTargetReport {
    double max_distance = 0.0;
    std::vector<GronwallRow> curve;
    double fitted_constant = 0.0;  ///< max over s of mean G(s) / tail integral
};

StayOnTargetReport stay_on_target(const TargetManifold& target, const BsdeSolutionSample& sample);

/// Norm of the integrated weak-form identity on [t, T0] against a scalar test field.
double weak_form_residual(const SourceManifold& source, const TargetManifold& target, const MapField& field,
                          const NodalField& test_fn, std::size_t start_slice = 0);

/// |int (Delta a) . b dx + int <grad a, grad b> dx| at time t.
double self_adjointness_defect(const SourceManifold& source, double t, const NodalField& a, const NodalField& b);

/// Angle of u in the (e1, e2) plane minus winding * theta, wrapped to (-pi, pi].
NodalField lift_perturbation(const SourceManifold& source, const BenchmarkCase& c, const NodalField& slice);

}  // namespace hmflow
