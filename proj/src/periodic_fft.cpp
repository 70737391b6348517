#include "hmflow/periodic_fft.hpp"

#include "hmflow/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

namespace hmflow {

namespace {

// FFTW's planner is not re-entrant; execution with new-array functions is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

PeriodicFft::PeriodicFft(std::size_t n) : n_(n), forward_plan_(nullptr), inverse_plan_(nullptr) {
    if (n_ < 2) fail(ErrorCode::InvalidArgument, "FFT size must be at least 2");
    std::vector<double> real(n_);
    std::vector<std::complex<double>> spec(spectrum_size());
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    std::lock_guard lock(planner_mutex());
    forward_plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real.data(), cplx, flags);
    inverse_plan_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), cplx, real.data(), flags | FFTW_DESTROY_INPUT);
}

PeriodicFft::~PeriodicFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
    fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void PeriodicFft::forward(std::span<const double> x, std::span<std::complex<double>> spectrum) const {
    if (x.size() != n_ || spectrum.size() != spectrum_size()) fail(ErrorCode::ShapeMismatch, "FFT buffer size");
    std::vector<double> in(x.begin(), x.end());
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), in.data(),
                         reinterpret_cast<fftw_complex*>(spectrum.data()));
}

void PeriodicFft::inverse(std::span<const std::complex<double>> spectrum, std::span<double> x) const {
    if (x.size() != n_ || spectrum.size() != spectrum_size()) fail(ErrorCode::ShapeMismatch, "FFT buffer size");
    std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(in.data()), x.data());
    const double scale = 1.0 / static_cast<double>(n_);
    std::for_each(x.begin(), x.end(), [scale](double& v) { v *= scale; });
}

void PeriodicFft::filter(std::span<const double> x, std::span<const std::complex<double>> multiplier,
                         std::span<double> out) const {
    if (multiplier.size() != spectrum_size()) fail(ErrorCode::ShapeMismatch, "multiplier size");
    std::vector<std::complex<double>> spec(spectrum_size());
    forward(x, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= multiplier[k];
    inverse(spec, out);
}

}  // namespace hmflow
