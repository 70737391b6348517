#include "hmflow/source_sphere.hpp"

#include "hmflow/error.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <numbers>
#include <sstream>

namespace hmflow {

namespace {

const Vec3& unit_of(const IntrinsicPoint& x) {
    const auto* p = std::get_if<SpherePoint>(&x);
    if (p == nullptr) fail(ErrorCode::InvalidArgument, "sphere source expects a SpherePoint");
    return p->unit;
}

Mat frame_at(double colat, double lon) {
    Mat frame(3, 2);
    frame.col(0) << std::cos(colat) * std::cos(lon), std::cos(colat) * std::sin(lon), -std::sin(colat);
    frame.col(1) << -std::sin(lon), std::cos(lon), 0.0;
    return frame;
}

class SphereInterpolant final : public SliceInterpolant {
public:
    SphereInterpolant(const SphereSource& source, const NodalField& f) : source_(source), values_(f) {
        const auto d = source.unit_frame_derivatives(f);
        const std::size_t n = source.node_count();
        const auto comps = f.cols();
        ambient_grad_.assign(3, NodalField::Zero(f.rows(), comps));
        for (std::size_t j = 0; j < n; ++j) {
            const Mat frame = source.tangent_frame(source.node(j));
            const auto r = static_cast<Eigen::Index>(j);
            for (int e = 0; e < 3; ++e) {
                ambient_grad_[e].row(r) = frame(e, 0) * d[0].row(r) + frame(e, 1) * d[1].row(r);
            }
        }
    }

    [[nodiscard]] Vec value(const IntrinsicPoint& x) const override {
        return Vec(blend(values_, unit_of(x)).transpose());
    }

    [[nodiscard]] Eigen::MatrixXd unit_frame_derivatives(const IntrinsicPoint& x) const override {
        const Vec3& u = unit_of(x);
        const Mat frame = source_.tangent_frame(x);
        Eigen::MatrixXd grad(3, values_.cols());
        for (int e = 0; e < 3; ++e) grad.row(e) = blend(ambient_grad_[e], u);
        return frame.transpose() * grad;
    }

private:
    Eigen::RowVectorXd blend(const NodalField& f, const Vec3& u) const {
        const auto [colat, lon] = sphere_angles(u);
        const double dtheta = std::numbers::pi / static_cast<double>(source_.n_lat());
        const double dphi = 2.0 * std::numbers::pi / static_cast<double>(source_.n_lon());
        const double s = colat / dtheta - 0.5;
        const double r0 = std::floor(s);
        const double fr = s - r0;
        const double c = lon / dphi;
        const double c0 = std::floor(c);
        const double fc = c - c0;
        const long ri = static_cast<long>(r0);
        const long ci = static_cast<long>(c0);
        auto at = [&](long r, long col) { return f.row(static_cast<Eigen::Index>(source_.reflected_index(r, col))); };
        return (1.0 - fr) * ((1.0 - fc) * at(ri, ci) + fc * at(ri, ci + 1)) +
               fr * ((1.0 - fc) * at(ri + 1, ci) + fc * at(ri + 1, ci + 1));
    }

    const SphereSource& source_;
    NodalField values_;
    std::vector<NodalField> ambient_grad_;
};

}  // namespace

SphereSource::SphereSource(RadiusProfile radius, double horizon, std::size_t n_lat, std::size_t n_lon)
    : SourceManifold(radius, horizon), n_lat_(n_lat), n_lon_(n_lon) {
    if (n_lat_ < 8 || n_lon_ < 8) fail(ErrorCode::GridTooCoarse, "sphere grid needs at least 8 rings and 8 columns");
    if (n_lon_ % 2 != 0) fail(ErrorCode::InvalidArgument, "sphere longitude count must be even");
    dtheta_ = std::numbers::pi / static_cast<double>(n_lat_);
    dphi_ = 2.0 * std::numbers::pi / static_cast<double>(n_lon_);
    area_.resize(n_lat_);
    flux_lo_.resize(n_lat_);
    flux_hi_.resize(n_lat_);
    for (std::size_t i = 0; i < n_lat_; ++i) {
        const double lo = static_cast<double>(i) * dtheta_;
        const double hi = static_cast<double>(i + 1) * dtheta_;
        area_[i] = (std::cos(lo) - std::cos(hi)) * dphi_;
        flux_lo_[i] = (i == 0) ? 0.0 : std::sin(lo) * dphi_ / dtheta_;
        flux_hi_[i] = (i + 1 == n_lat_) ? 0.0 : std::sin(hi) * dphi_ / dtheta_;
    }
}

double SphereSource::colatitude(std::size_t ring) const noexcept { return (static_cast<double>(ring) + 0.5) * dtheta_; }

double SphereSource::longitude(std::size_t column) const noexcept { return static_cast<double>(column) * dphi_; }

std::size_t SphereSource::reflected_index(long ring, long column) const noexcept {
    const long nlat = static_cast<long>(n_lat_);
    const long nlon = static_cast<long>(n_lon_);
    if (ring < 0) {
        ring = -1 - ring;
        column += nlon / 2;
    } else if (ring >= nlat) {
        ring = 2 * nlat - 1 - ring;
        column += nlon / 2;
    }
    column %= nlon;
    if (column < 0) column += nlon;
    return index(static_cast<std::size_t>(ring), static_cast<std::size_t>(column));
}

IntrinsicPoint SphereSource::node(std::size_t idx) const {
    return SpherePoint{sphere_point(colatitude(idx / n_lon_), longitude(idx % n_lon_))};
}

std::string SphereSource::describe() const {
    std::ostringstream os;
    os << "sphere(rho=" << radius().describe() << ", " << n_lat_ << "x" << n_lon_ << ")";
    return os.str();
}

Vec SphereSource::unit_embedding(const IntrinsicPoint& x) const { return Vec(unit_of(x)); }

Mat SphereSource::tangent_frame(const IntrinsicPoint& x) const {
    const auto [colat, lon] = sphere_angles(unit_of(x));
    return frame_at(colat, lon);
}

std::vector<NodalField> SphereSource::unit_frame_derivatives(const NodalField& f) const {
    if (static_cast<std::size_t>(f.rows()) != node_count()) fail(ErrorCode::ShapeMismatch, "field does not match sphere grid");
    NodalField d_theta(f.rows(), f.cols());
    NodalField d_phi(f.rows(), f.cols());
    for (std::size_t i = 0; i < n_lat_; ++i) {
        const double inv_sin = 1.0 / std::sin(colatitude(i));
        const long r = static_cast<long>(i);
        for (std::size_t j = 0; j < n_lon_; ++j) {
            const long c = static_cast<long>(j);
            const auto here = static_cast<Eigen::Index>(index(i, j));
            const auto north = static_cast<Eigen::Index>(reflected_index(r - 1, c));
            const auto south = static_cast<Eigen::Index>(reflected_index(r + 1, c));
            const auto west = static_cast<Eigen::Index>(reflected_index(r, c - 1));
            const auto east = static_cast<Eigen::Index>(reflected_index(r, c + 1));
            d_theta.row(here) = (f.row(south) - f.row(north)) / (2.0 * dtheta_);
            d_phi.row(here) = (f.row(east) - f.row(west)) * (inv_sin / (2.0 * dphi_));
        }
    }
    return {d_theta, d_phi};
}

NodalField SphereSource::unit_laplacian(const NodalField& f) const {
    if (static_cast<std::size_t>(f.rows()) != node_count()) fail(ErrorCode::ShapeMismatch, "field does not match sphere grid");
    NodalField out(f.rows(), f.cols());
    for (std::size_t i = 0; i < n_lat_; ++i) {
        const double s = std::sin(colatitude(i));
        const double lon_coeff = 1.0 / (dphi_ * dphi_ * s * s);
        const long r = static_cast<long>(i);
        for (std::size_t j = 0; j < n_lon_; ++j) {
            const long c = static_cast<long>(j);
            const auto here = static_cast<Eigen::Index>(index(i, j));
            Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(f.cols());
            if (i > 0) acc += flux_lo_[i] * (f.row(static_cast<Eigen::Index>(index(i - 1, j))) - f.row(here));
            if (i + 1 < n_lat_) acc += flux_hi_[i] * (f.row(static_cast<Eigen::Index>(index(i + 1, j))) - f.row(here));
            acc /= area_[i];
            const auto west = static_cast<Eigen::Index>(reflected_index(r, c - 1));
            const auto east = static_cast<Eigen::Index>(reflected_index(r, c + 1));
            acc += lon_coeff * (f.row(east) - 2.0 * f.row(here) + f.row(west));
            out.row(here) = acc;
        }
    }
    return out;
}

std::shared_ptr<const SphereSource::Factor> SphereSource::implicit_factor(double coeff) const {
    std::lock_guard lock(cache_mutex_);
    if (cached_factor_ && cached_coeff_ == coeff) return cached_factor_;
    // (W + coeff K) where -K = W L is the symmetric finite-volume stiffness.
    const auto n = static_cast<Eigen::Index>(node_count());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) * 5);
    for (std::size_t i = 0; i < n_lat_; ++i) {
        const double s = std::sin(colatitude(i));
        const double lon_weight = area_[i] / (dphi_ * dphi_ * s * s);
        for (std::size_t j = 0; j < n_lon_; ++j) {
            const auto here = static_cast<Eigen::Index>(index(i, j));
            double diag = area_[i];
            auto couple = [&](Eigen::Index other, double w) {
                triplets.emplace_back(here, other, -coeff * w);
                diag += coeff * w;
            };
            if (i > 0) couple(static_cast<Eigen::Index>(index(i - 1, j)), flux_lo_[i]);
            if (i + 1 < n_lat_) couple(static_cast<Eigen::Index>(index(i + 1, j)), flux_hi_[i]);
            couple(static_cast<Eigen::Index>(reflected_index(static_cast<long>(i), static_cast<long>(j) - 1)), lon_weight);
            couple(static_cast<Eigen::Index>(reflected_index(static_cast<long>(i), static_cast<long>(j) + 1)), lon_weight);
            triplets.emplace_back(here, here, diag);
        }
    }
    Eigen::SparseMatrix<double> system(n, n);
    system.setFromTriplets(triplets.begin(), triplets.end());
    auto factor = std::make_shared<Factor>(system);
    if (factor->info() != Eigen::Success) fail(ErrorCode::InvalidArgument, "implicit heat step factorization failed");
    cached_coeff_ = coeff;
    cached_factor_ = factor;
    return factor;
}

NodalField SphereSource::heat_step(double t, double dt, const NodalField& f) const {
    check_time(t);
    if (static_cast<std::size_t>(f.rows()) != node_count()) fail(ErrorCode::ShapeMismatch, "field does not match sphere grid");
    const double rho = radius().value(t);
    const auto factor = implicit_factor(0.5 * dt / (rho * rho));
    NodalField rhs(f.rows(), f.cols());
    for (std::size_t i = 0; i < n_lat_; ++i) {
        for (std::size_t j = 0; j < n_lon_; ++j) {
            const auto r = static_cast<Eigen::Index>(index(i, j));
            rhs.row(r) = area_[i] * f.row(r);
        }
    }
    NodalField out = factor->solve(rhs);
    return out;
}

std::vector<double> SphereSource::unit_volume_weights() const {
    std::vector<double> w(node_count());
    for (std::size_t i = 0; i < n_lat_; ++i) {
        for (std::size_t j = 0; j < n_lon_; ++j) w[index(i, j)] = area_[i];
    }
    return w;
}

std::unique_ptr<SliceInterpolant> SphereSource::interpolant(const NodalField& f) const {
    if (static_cast<std::size_t>(f.rows()) != node_count()) fail(ErrorCode::ShapeMismatch, "field does not match sphere grid");
    return std::make_unique<SphereInterpolant>(*this, f);
}

SourcePtr make_sphere_source(RadiusProfile radius, double horizon, std::size_t n_lat, std::size_t n_lon) {
    return std::make_shared<SphereSource>(radius, horizon, n_lat, n_lon);
}

}  // namespace hmflow
