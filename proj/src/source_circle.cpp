#include "hmflow/source_circle.hpp"

#include "hmflow/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace hmflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angle_of(const IntrinsicPoint& x) {
    const auto* p = std::get_if<CirclePoint>(&x);
    if (p == nullptr) fail(ErrorCode::InvalidArgument, "circle source expects a CirclePoint");
    return p->angle;
}

/// Trigonometric interpolant of a real grid function, kept as complex coefficients.
class CircleInterpolant final : public SliceInterpolant {
public:
    CircleInterpolant(const PeriodicFft& fft, const NodalField& f) : n_(fft.size()), comps_(f.cols()) {
        const std::size_t ns = fft.spectrum_size();
        coeffs_.resize(comps_, std::vector<std::complex<double>>(ns));
        std::vector<double> column(n_);
        for (Eigen::Index c = 0; c < comps_; ++c) {
            for (std::size_t j = 0; j < n_; ++j) column[j] = f(static_cast<Eigen::Index>(j), c);
            fft.forward(column, coeffs_[c]);
            for (std::size_t k = 0; k < ns; ++k) {
                // Slots 1..ceil(n/2)-1 stand for +k and -k; the Nyquist slot only once.
                const bool single = (k == 0) || fft.is_nyquist(k);
                coeffs_[c][k] *= (single ? 1.0 : 2.0) / static_cast<double>(n_);
            }
        }
        nyquist_ = (n_ % 2 == 0);
    }

    [[nodiscard]] Vec value(const IntrinsicPoint& x) const override {
        const double a = angle_of(x);
        Vec out(comps_);
        for (Eigen::Index c = 0; c < comps_; ++c) out(c) = evaluate(c, a, false);
        return out;
    }

    [[nodiscard]] Eigen::MatrixXd unit_frame_derivatives(const IntrinsicPoint& x) const override {
        const double a = angle_of(x);
        Eigen::MatrixXd out(1, comps_);
        for (Eigen::Index c = 0; c < comps_; ++c) out(0, c) = evaluate(c, a, true);
        return out;
    }

private:
    double evaluate(Eigen::Index c, double a, bool derivative) const {
        const auto& co = coeffs_[c];
        const std::complex<double> step(std::cos(a), std::sin(a));
        std::complex<double> phase(1.0, 0.0);
        double sum = derivative ? 0.0 : co[0].real();
        const std::size_t last = co.size() - 1;
        for (std::size_t k = 1; k < co.size(); ++k) {
            phase *= step;
            if (k == last && nyquist_) {
                // Nyquist mode is interpolated as a pure cosine.
                const double kk = static_cast<double>(k);
                sum += derivative ? -kk * co[k].real() * std::sin(kk * a) : co[k].real() * std::cos(kk * a);
                continue;
            }
            const std::complex<double> term = co[k] * phase;
            sum += derivative ? -static_cast<double>(k) * term.imag() : term.real();
        }
        return sum;
    }

    std::size_t n_;
    Eigen::Index comps_;
    bool nyquist_ = false;
    std::vector<std::vector<std::complex<double>>> coeffs_;
};

}  // namespace

CircleSource::CircleSource(RadiusProfile radius, double horizon, std::size_t n_theta)
    : SourceManifold(radius, horizon), n_(n_theta), fft_(std::max<std::size_t>(n_theta, 2)) {
    if (n_ < 8) fail(ErrorCode::GridTooCoarse, "circle grid needs at least 8 nodes");
}

IntrinsicPoint CircleSource::node(std::size_t index) const { return CirclePoint{angle(index)}; }

double CircleSource::angle(std::size_t index) const noexcept {
    return kTwoPi * static_cast<double>(index) / static_cast<double>(n_);
}

std::string CircleSource::describe() const {
    std::ostringstream os;
    os << "circle(rho=" << radius().describe() << ", n=" << n_ << ")";
    return os.str();
}

Vec CircleSource::unit_embedding(const IntrinsicPoint& x) const {
    const double a = angle_of(x);
    Vec p(2);
    p << std::cos(a), std::sin(a);
    return p;
}

Mat CircleSource::tangent_frame(const IntrinsicPoint& x) const {
    Mat frame(2, 1);
    frame.col(0) = circle_tangent(angle_of(x));
    return frame;
}

NodalField CircleSource::apply_multiplier(const NodalField& f, std::span<const std::complex<double>> multiplier) const {
    if (static_cast<std::size_t>(f.rows()) != n_) fail(ErrorCode::ShapeMismatch, "field does not match circle grid");
    NodalField out(f.rows(), f.cols());
    std::vector<double> column(n_);
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
        for (std::size_t j = 0; j < n_; ++j) column[j] = f(static_cast<Eigen::Index>(j), c);
        fft_.filter(column, multiplier, column);
        for (std::size_t j = 0; j < n_; ++j) out(static_cast<Eigen::Index>(j), c) = column[j];
    }
    return out;
}

std::vector<NodalField> CircleSource::unit_frame_derivatives(const NodalField& f) const {
    std::vector<std::complex<double>> mult(fft_.spectrum_size());
    for (std::size_t k = 0; k < mult.size(); ++k) {
        mult[k] = fft_.is_nyquist(k) ? std::complex<double>(0.0) : std::complex<double>(0.0, static_cast<double>(k));
    }
    return {apply_multiplier(f, mult)};
}

NodalField CircleSource::unit_laplacian(const NodalField& f) const {
    std::vector<std::complex<double>> mult(fft_.spectrum_size());
    for (std::size_t k = 0; k < mult.size(); ++k) mult[k] = -static_cast<double>(k * k);
    return apply_multiplier(f, mult);
}

NodalField CircleSource::heat_step(double t, double dt, const NodalField& f) const {
    check_time(t);
    const double rho = radius().value(t);
    const double diffusivity = 0.5 / (rho * rho);
    std::vector<std::complex<double>> mult(fft_.spectrum_size());
    for (std::size_t k = 0; k < mult.size(); ++k) {
        const double kk = static_cast<double>(k);
        mult[k] = std::exp(-diffusivity * kk * kk * dt);
    }
    return apply_multiplier(f, mult);
}

std::vector<double> CircleSource::unit_volume_weights() const {
    return std::vector<double>(n_, kTwoPi / static_cast<double>(n_));
}

std::unique_ptr<SliceInterpolant> CircleSource::interpolant(const NodalField& f) const {
    if (static_cast<std::size_t>(f.rows()) != n_) fail(ErrorCode::ShapeMismatch, "field does not match circle grid");
    return std::make_unique<CircleInterpolant>(fft_, f);
}

SourcePtr make_circle_source(RadiusProfile radius, double horizon, std::size_t n_theta) {
    return std::make_shared<CircleSource>(radius, horizon, n_theta);
}

}  // namespace hmflow
