#pragma once

#include "hmflow/source_geometry.hpp"

#include <Eigen/SparseCholesky>

#include <mutex>

namespace hmflow {

/// Round 2-sphere with g_t = rho(t)^2 g_unit on a cell-centred colatitude/longitude grid.
///
/// Rings sit at colatitudes (i + 1/2) pi / n_lat, so no node lies on a pole;
/// central differences across a pole continue along the same great circle on the
/// ring opposite in longitude. The Laplacian is the finite-volume form with exact
/// cell areas, which keeps W * L symmetric for the area weights W.
class SphereSource final : public SourceManifold {
public:
    SphereSource(RadiusProfile radius, double horizon, std::size_t n_lat, std::size_t n_lon);

    [[nodiscard]] SourceFamily family() const noexcept override { return SourceFamily::Sphere2; }
    [[nodiscard]] int dim() const noexcept override { return 2; }
    [[nodiscard]] int ambient_dim() const noexcept override { return 3; }
    [[nodiscard]] std::size_t node_count() const noexcept override { return n_lat_ * n_lon_; }
    [[nodiscard]] IntrinsicPoint node(std::size_t index) const override;
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] int chart_dim() const noexcept override { return 3; }

    [[nodiscard]] Vec unit_embedding(const IntrinsicPoint& x) const override;
    [[nodiscard]] Mat tangent_frame(const IntrinsicPoint& x) const override;

    [[nodiscard]] std::vector<NodalField> unit_frame_derivatives(const NodalField& f) const override;
    [[nodiscard]] NodalField unit_laplacian(const NodalField& f) const override;
    [[nodiscard]] NodalField heat_step(double t, double dt, const NodalField& f) const override;
    [[nodiscard]] std::vector<double> unit_volume_weights() const override;
    [[nodiscard]] double ricci_unit() const noexcept override { return 1.0; }
    [[nodiscard]] std::unique_ptr<SliceInterpolant> interpolant(const NodalField& f) const override;

    [[nodiscard]] std::size_t n_lat() const noexcept { return n_lat_; }
    [[nodiscard]] std::size_t n_lon() const noexcept { return n_lon_; }
    [[nodiscard]] double colatitude(std::size_t ring) const noexcept;
    [[nodiscard]] double longitude(std::size_t column) const noexcept;
    [[nodiscard]] std::size_t index(std::size_t ring, std::size_t column) const noexcept { return ring * n_lon_ + column; }
    /// Node index for a possibly out-of-range ring (-1 or n_lat) reflected across the pole.
    [[nodiscard]] std::size_t reflected_index(long ring, long column) const noexcept;

private:
    using Factor = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
    std::shared_ptr<const Factor> implicit_factor(double coeff) const;

    std::size_t n_lat_;
    std::size_t n_lon_;
    double dtheta_;
    double dphi_;
    std::vector<double> area_;     // unit-sphere cell area per ring
    std::vector<double> flux_lo_;  // sin(theta_{i-1/2}) dphi / dtheta, zero at the north pole
    std::vector<double> flux_hi_;  // sin(theta_{i+1/2}) dphi / dtheta, zero at the south pole

    mutable std::mutex cache_mutex_;
    mutable double cached_coeff_ = -1.0;
    mutable std::shared_ptr<const Factor> cached_factor_;
};

}  // namespace hmflow
