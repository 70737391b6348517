#pragma once

#include "hmflow/radius_profile.hpp"
#include "hmflow/types.hpp"

#include <cstddef>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace hmflow {

enum class SourceFamily { Circle, Sphere2 };

struct CirclePoint {
    double angle = 0.0;  ///< in [0, 2 pi)
};

struct SpherePoint {
    Vec3 unit = Vec3::UnitZ();  ///< unit vector of the round model sphere
};

/// Chart representation of a point x of M.
using IntrinsicPoint = std::variant<CirclePoint, SpherePoint>;

/// Evaluates one grid slice at arbitrary points of M (spectral on the circle,
/// bilinear in latitude/longitude on the sphere).
class SliceInterpolant {
public:
    virtual ~SliceInterpolant() = default;

    [[nodiscard]] virtual Vec value(const IntrinsicPoint& x) const = 0;
    /// Derivatives of every component along the orthonormal frame of the unit-radius
    /// model (dim() x components). Divide by rho(t) for the g_t-orthonormal frame.
    [[nodiscard]] virtual Eigen::MatrixXd unit_frame_derivatives(const IntrinsicPoint& x) const = 0;
};

/// Source manifold M with the round time-dependent metric g_t = rho(t)^2 g_unit,
/// isometrically embedded by Phi_t(x) = rho(t) * x_unit.
class SourceManifold {
public:
    SourceManifold(RadiusProfile radius, double horizon);
    virtual ~SourceManifold() = default;

    [[nodiscard]] virtual SourceFamily family() const noexcept = 0;
    [[nodiscard]] virtual int dim() const noexcept = 0;
    [[nodiscard]] virtual int ambient_dim() const noexcept = 0;
    [[nodiscard]] virtual std::size_t node_count() const noexcept = 0;
    [[nodiscard]] virtual IntrinsicPoint node(std::size_t index) const = 0;
    [[nodiscard]] virtual std::string describe() const = 0;
    /// Number of doubles used to store one chart point (1 for angles, 3 for unit vectors).
    [[nodiscard]] virtual int chart_dim() const noexcept = 0;

    [[nodiscard]] const RadiusProfile& radius() const noexcept { return radius_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    void check_time(double t) const;

    [[nodiscard]] virtual Vec unit_embedding(const IntrinsicPoint& x) const = 0;
    [[nodiscard]] Vec embed(double t, const IntrinsicPoint& x) const;
    /// Ambient orthonormal basis of the embedded tangent space (ambient_dim x dim).
    [[nodiscard]] virtual Mat tangent_frame(const IntrinsicPoint& x) const = 0;
    /// Columns A_i = Pi_M^t(x) e_i, as ambient tangent vectors.
    [[nodiscard]] Mat projection_fields(double t, const IntrinsicPoint& x) const;

    /// Chart derivatives along the unit-model orthonormal frame, one field per direction.
    [[nodiscard]] virtual std::vector<NodalField> unit_frame_derivatives(const NodalField& f) const = 0;
    /// grad^{g_t} f in a g_t-orthonormal frame: one field per frame direction.
    [[nodiscard]] std::vector<NodalField> metric_gradient(double t, const NodalField& f) const;
    /// Pointwise g_t-norm of grad f (Frobenius over components), as an n x 1 field.
    [[nodiscard]] NodalField gradient_norm(double t, const NodalField& f) const;

    [[nodiscard]] virtual NodalField unit_laplacian(const NodalField& f) const = 0;
    [[nodiscard]] NodalField laplace_beltrami(double t, const NodalField& f) const;

    /// One-step conditional expectation x -> E[f(X_{t+dt}^{t,x})] under the semigroup
    /// of (1/2) Delta_{g_t}: exact heat kernel (circle) or one implicit step (sphere).
    [[nodiscard]] virtual NodalField heat_step(double t, double dt, const NodalField& f) const = 0;

    [[nodiscard]] virtual std::vector<double> unit_volume_weights() const = 0;
    [[nodiscard]] std::vector<double> volume_measure(double t) const;
    /// d/dt of dx^{g_t} divided by dx^{g_t}, i.e. m rho'/rho.
    [[nodiscard]] double volume_growth_rate(double t) const;

    /// Ric_{g_t} = ricci_unit() / rho(t)^2 * g_t for the round metric.
    [[nodiscard]] virtual double ricci_unit() const noexcept = 0;
    /// sup over [0, horizon] of |d/dt g_t + Ric_{g_t}| in the g_t x g_t norm.
    [[nodiscard]] double ricci_bound(std::size_t time_nodes = 1000) const;

    /// sum_i A_i(A_i f) - Delta_{g_t} f on the grid.
    [[nodiscard]] NodalField generator_identity_check(double t, const NodalField& f) const;

    [[nodiscard]] virtual std::unique_ptr<SliceInterpolant> interpolant(const NodalField& f) const = 0;

private:
    RadiusProfile radius_;
    double horizon_;
};

using SourcePtr = std::shared_ptr<const SourceManifold>;

SourcePtr make_circle_source(RadiusProfile radius, double horizon, std::size_t n_theta);
SourcePtr make_sphere_source(RadiusProfile radius, double horizon, std::size_t n_lat = 360, std::size_t n_lon = 720);

/// Colatitude/longitude of a unit vector; longitude in [0, 2 pi).
std::pair<double, double> sphere_angles(const Vec3& unit);
Vec3 sphere_point(double colatitude, double longitude);

/// Unit tangent (-sin, cos) of the unit circle at `angle`.
Vec circle_tangent(double angle);

}  // namespace hmflow
