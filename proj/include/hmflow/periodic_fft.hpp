#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hmflow {

/// Real-to-complex FFT on a uniform periodic grid of n points.
///
/// Spectra hold n/2 + 1 coefficients in FFTW's unnormalized convention;
/// `inverse` divides by n so that inverse(forward(x)) == x.
class PeriodicFft {
public:
    explicit PeriodicFft(std::size_t n);
    ~PeriodicFft();
    PeriodicFft(const PeriodicFft&) = delete;
    PeriodicFft& operator=(const PeriodicFft&) = delete;

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

    void forward(std::span<const double> x, std::span<std::complex<double>> spectrum) const;
    void inverse(std::span<const std::complex<double>> spectrum, std::span<double> x) const;

    /// out = inverse(multiplier .* forward(x)); `out` may alias `x`.
    void filter(std::span<const double> x, std::span<const std::complex<double>> multiplier,
                std::span<double> out) const;

    /// Signed wavenumber of spectrum slot k (non-negative for r2c layouts).
    [[nodiscard]] bool is_nyquist(std::size_t k) const noexcept { return n_ % 2 == 0 && k == n_ / 2; }

private:
    std::size_t n_;
    void* forward_plan_;
    void* inverse_plan_;
};

}  // namespace hmflow
