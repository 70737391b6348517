#include "hmflow/source_geometry.hpp"

#include "hmflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hmflow {

SourceManifold::SourceManifold(RadiusProfile radius, double horizon) : radius_(radius), horizon_(horizon) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) fail(ErrorCode::InvalidArgument, "source horizon must be positive");
    if (!(horizon_ < radius_.max_time())) {
        fail(ErrorCode::InvalidArgument, "radius profile " + radius_.describe() + " degenerates before the horizon");
    }
}

void SourceManifold::check_time(double t) const {
    constexpr double slack = 1e-12;
    if (!(t >= -slack && t <= horizon_ * (1.0 + slack) + slack)) {
        std::ostringstream os;
        os << "t = " << t << " outside [0, " << horizon_ << "]";
        fail(ErrorCode::TimeOutOfRange, os.str());
    }
}

Vec SourceManifold::embed(double t, const IntrinsicPoint& x) const {
    check_time(t);
    return radius_.value(t) * unit_embedding(x);
}

Mat SourceManifold::projection_fields(double t, const IntrinsicPoint& x) const {
    check_time(t);
    const Mat frame = tangent_frame(x);
    return frame * frame.transpose();
}

std::vector<NodalField> SourceManifold::metric_gradient(double t, const NodalField& f) const {
    check_time(t);
    auto grads = unit_frame_derivatives(f);
    const double inv_rho = 1.0 / radius_.value(t);
    for (auto& g : grads) g *= inv_rho;
    return grads;
}

NodalField SourceManifold::gradient_norm(double t, const NodalField& f) const {
    const auto grads = metric_gradient(t, f);
    NodalField out = NodalField::Zero(f.rows(), 1);
    for (const auto& g : grads) out.col(0) += g.rowwise().squaredNorm();
    out = out.array().sqrt().matrix();
    return out;
}

NodalField SourceManifold::laplace_beltrami(double t, const NodalField& f) const {
    check_time(t);
    const double rho = radius_.value(t);
    return unit_laplacian(f) / (rho * rho);
}

std::vector<double> SourceManifold::volume_measure(double t) const {
    check_time(t);
    auto w = unit_volume_weights();
    const double scale = std::pow(radius_.value(t), dim());
    for (double& v : w) v *= scale;
    return w;
}

double SourceManifold::volume_growth_rate(double t) const {
    return dim() * radius_.derivative(t) / radius_.value(t);
}

double SourceManifold::ricci_bound(std::size_t time_nodes) const {
    if (time_nodes < 2) time_nodes = 2;
    // d/dt g_t + Ric = (2 rho'/rho + ricci_unit/rho^2) g_t and |g_t|_{g_t x g_t} = sqrt(m).
    double best = 0.0;
    for (std::size_t k = 0; k < time_nodes; ++k) {
        const double t = horizon_ * static_cast<double>(k) / static_cast<double>(time_nodes - 1);
        const double rho = radius_.value(t);
        const double coeff = 2.0 * radius_.derivative(t) / rho + ricci_unit() / (rho * rho);
        best = std::max(best, std::abs(coeff));
    }
    return best * std::sqrt(static_cast<double>(dim()));
}

NodalField SourceManifold::generator_identity_check(double t, const NodalField& f) const {
    check_time(t);
    const double inv_rho = 1.0 / radius_.value(t);
    const std::size_t n = node_count();
    if (static_cast<std::size_t>(f.rows()) != n) fail(ErrorCode::ShapeMismatch, "field does not match the grid");

    std::vector<Mat> frames(n);
    for (std::size_t j = 0; j < n; ++j) frames[j] = tangent_frame(node(j));

    const auto df = unit_frame_derivatives(f);
    NodalField total = NodalField::Zero(f.rows(), f.cols());
    for (int i = 0; i < ambient_dim(); ++i) {
        // A_i f = sum_a <E_a, e_i> (e_a f), where e_a = E_a / rho in chart terms.
        NodalField ai_f = NodalField::Zero(f.rows(), f.cols());
        for (std::size_t j = 0; j < n; ++j) {
            for (int a = 0; a < dim(); ++a) ai_f.row(j) += frames[j](i, a) * inv_rho * df[a].row(j);
        }
        const auto d_ai_f = unit_frame_derivatives(ai_f);
        for (std::size_t j = 0; j < n; ++j) {
            for (int a = 0; a < dim(); ++a) total.row(j) += frames[j](i, a) * inv_rho * d_ai_f[a].row(j);
        }
    }
    return total - laplace_beltrami(t, f);
}

std::pair<double, double> sphere_angles(const Vec3& unit) {
    const double colat = std::acos(std::clamp(unit.z(), -1.0, 1.0));
    double lon = std::atan2(unit.y(), unit.x());
    if (lon < 0.0) lon += 2.0 * std::numbers::pi;
    return {colat, lon};
}

Vec3 sphere_point(double colatitude, double longitude) {
    const double s = std::sin(colatitude);
    return {s * std::cos(longitude), s * std::sin(longitude), std::cos(colatitude)};
}

Vec circle_tangent(double angle) {
    Vec tau(2);
    tau << -std::sin(angle), std::cos(angle);
    return tau;
}

}  // namespace hmflow
