#pragma once

#include "hmflow/periodic_fft.hpp"
#include "hmflow/source_geometry.hpp"

#include <complex>
#include <span>

namespace hmflow {

/// Circle with g_t = rho(t)^2 d theta^2 on n uniform angles; all derivatives spectral.
class CircleSource final : public SourceManifold {
public:
    CircleSource(RadiusProfile radius, double horizon, std::size_t n_theta);

    [[nodiscard]] SourceFamily family() const noexcept override { return SourceFamily::Circle; }
    [[nodiscard]] int dim() const noexcept override { return 1; }
    [[nodiscard]] int ambient_dim() const noexcept override { return 2; }
    [[nodiscard]] std::size_t node_count() const noexcept override { return n_; }
    [[nodiscard]] IntrinsicPoint node(std::size_t index) const override;
    [[nodiscard]] std::string describe() const override;
    [[nodiscard]] int chart_dim() const noexcept override { return 1; }

    [[nodiscard]] Vec unit_embedding(const IntrinsicPoint& x) const override;
    [[nodiscard]] Mat tangent_frame(const IntrinsicPoint& x) const override;

    [[nodiscard]] std::vector<NodalField> unit_frame_derivatives(const NodalField& f) const override;
    [[nodiscard]] NodalField unit_laplacian(const NodalField& f) const override;
    [[nodiscard]] NodalField heat_step(double t, double dt, const NodalField& f) const override;
    [[nodiscard]] std::vector<double> unit_volume_weights() const override;
    [[nodiscard]] double ricci_unit() const noexcept override { return 0.0; }
    [[nodiscard]] std::unique_ptr<SliceInterpolant> interpolant(const NodalField& f) const override;

    [[nodiscard]] double angle(std::size_t index) const noexcept;
    [[nodiscard]] const PeriodicFft& fft() const noexcept { return fft_; }
    /// Applies a Fourier multiplier (one entry per r2c slot) to every column of f.
    [[nodiscard]] NodalField apply_multiplier(const NodalField& f, std::span<const std::complex<double>> multiplier) const;

private:
    std::size_t n_;
    PeriodicFft fft_;
};

}  // namespace hmflow
