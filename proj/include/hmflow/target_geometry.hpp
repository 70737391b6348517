#pragma once

#include "hmflow/types.hpp"

#include <string>

namespace hmflow {

enum class TargetFamily {
    UnitSphere,    ///< S^d in R^{d+1}, d in {1, 2}
    FlatSubspace,  ///< linear subspace of R^L; second fundamental form vanishes
};

/// Value, gradient and Hessian of the truncated squared distance G = chi(dist^2).
struct TruncatedDistance {
    double value = 0.0;
    Vec gradient;
    Mat hessian;

    [[nodiscard]] double hessian_quadform(const Vec& u) const { return u.dot(hessian * u); }
};

/// Compact target N embedded in Euclidean space, with the nearest-point projection,
/// the second fundamental form and its cut-off extension to all of ambient space.
class TargetManifold {
public:
    static TargetManifold unit_sphere(int dim, double tube_radius = 0.2);
    /// Subspace spanned by the columns of `basis` inside R^{ambient_dim}.
    static TargetManifold flat(int ambient_dim, Mat basis);
    /// The whole ambient space R^{ambient_dim}.
    static TargetManifold flat(int ambient_dim);

    [[nodiscard]] TargetFamily family() const noexcept { return family_; }
    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] int ambient_dim() const noexcept { return ambient_dim_; }
    [[nodiscard]] double tube_radius() const noexcept { return tube_radius_; }
    [[nodiscard]] double reach() const noexcept;
    [[nodiscard]] std::string describe() const;

    /// Closest point of N; only defined on the open tube B(N, 3 delta).
    [[nodiscard]] Vec nearest_point(const Vec& p) const;
    [[nodiscard]] double distance(const Vec& p) const;
    /// Orthogonal projector onto T_q N for q on N.
    [[nodiscard]] Mat tangent_projector(const Vec& q) const;

    /// Jacobian of the nearest-point projection at a tube point.
    [[nodiscard]] Mat projection_jacobian(const Vec& p) const;
    /// Second derivative of the nearest-point projection applied to (u, u).
    [[nodiscard]] Vec projection_hessian(const Vec& p, const Vec& u) const;

    /// Gamma(p)(u, v) for p on N; u and v are first projected onto T_p N.
    [[nodiscard]] Vec second_fundamental_form(const Vec& p, const Vec& u, const Vec& v) const;
    /// phi(dist(p)) Gamma(P(p))(u, u), zero outside B(N, 2 delta).
    [[nodiscard]] Vec extended_sff(const Vec& p, const Vec& u) const;

    /// Smooth step: 1 below delta, 0 above 2 delta, quintic in between.
    [[nodiscard]] double cutoff(double s) const;
    [[nodiscard]] double truncation(double s) const;
    [[nodiscard]] double truncation_derivative(double s) const;
    [[nodiscard]] double truncation_second_derivative(double s) const;
    [[nodiscard]] TruncatedDistance truncated_distance_sq(const Vec& p) const;

private:
    TargetManifold(TargetFamily family, int dim, int ambient_dim, double tube_radius, Mat basis);

    void check_dimension(const Vec& p) const;

    TargetFamily family_;
    int dim_;
    int ambient_dim_;
    double tube_radius_;
    Mat basis_;  // orthonormal columns, flat targets only
};

/// D^2 P(p)[u, u] by central differences with one Richardson extrapolation step.
Vec projection_hessian_fd(const TargetManifold& target, const Vec& p, const Vec& u, double step = 1e-4);

}  // namespace hmflow
