#include "hmflow/target_geometry.hpp"

#include "hmflow/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hmflow {

namespace {

constexpr double kOnManifoldTol = 1e-10;

// Quintic Hermite blend on [0, 1] with q(0) = 0, q'(0) = 1, q''(0) = 0 and
// q(1) = 1, q'(1) = q''(1) = 0. q'(x) = (1 - x)^2 (15 x^2 + 2x + 1) >= 0.
double blend(double x) { return x + x * x * x * (4.0 + x * (-7.0 + 3.0 * x)); }
double blend_d1(double x) { return 1.0 + x * x * (12.0 + x * (-28.0 + 15.0 * x)); }
double blend_d2(double x) { return x * (24.0 + x * (-84.0 + 60.0 * x)); }

}  // namespace

TargetManifold::TargetManifold(TargetFamily family, int dim, int ambient_dim, double tube_radius, Mat basis)
    : family_(family), dim_(dim), ambient_dim_(ambient_dim), tube_radius_(tube_radius), basis_(std::move(basis)) {
    if (!(tube_radius_ > 0.0)) fail(ErrorCode::InvalidArgument, "tube radius must be positive");
    if (!(3.0 * tube_radius_ < reach())) {
        fail(ErrorCode::InvalidArgument, "3 * tube radius must be below the reach of the target");
    }
}

TargetManifold TargetManifold::unit_sphere(int dim, double tube_radius) {
    if (dim != 1 && dim != 2) fail(ErrorCode::InvalidArgument, "unit sphere targets support dimension 1 or 2");
    return TargetManifold(TargetFamily::UnitSphere, dim, dim + 1, tube_radius, Mat());
}

TargetManifold TargetManifold::flat(int ambient_dim, Mat basis) {
    if (ambient_dim < 1 || ambient_dim > 3) fail(ErrorCode::InvalidArgument, "flat target ambient dimension must be 1..3");
    if (basis.rows() != ambient_dim || basis.cols() < 1 || basis.cols() > ambient_dim) {
        fail(ErrorCode::InvalidArgument, "flat target basis has the wrong shape");
    }
    // Orthonormalize so the projector is B B^T.
    const Eigen::MatrixXd dense = basis;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, basis.cols());
    return TargetManifold(TargetFamily::FlatSubspace, static_cast<int>(basis.cols()), ambient_dim, 0.2, Mat(q));
}

TargetManifold TargetManifold::flat(int ambient_dim) {
    return flat(ambient_dim, Mat(Mat::Identity(ambient_dim, ambient_dim)));
}

double TargetManifold::reach() const noexcept {
    return family_ == TargetFamily::UnitSphere ? 1.0 : std::numeric_limits<double>::infinity();
}

std::string TargetManifold::describe() const {
    std::ostringstream os;
    if (family_ == TargetFamily::UnitSphere) {
        os << "S^" << dim_ << " in R^" << ambient_dim_;
    } else {
        os << "flat R^" << dim_ << " in R^" << ambient_dim_;
    }
    return os.str();
}

void TargetManifold::check_dimension(const Vec& p) const {
    if (p.size() != ambient_dim_) fail(ErrorCode::ShapeMismatch, "ambient vector has the wrong dimension");
}

double TargetManifold::distance(const Vec& p) const {
    check_dimension(p);
    if (family_ == TargetFamily::UnitSphere) return std::abs(p.norm() - 1.0);
    return (p - basis_ * (basis_.transpose() * p)).norm();
}

Vec TargetManifold::nearest_point(const Vec& p) const {
    const double d = distance(p);
    if (!(d < 3.0 * tube_radius_) && family_ == TargetFamily::UnitSphere) {
        std::ostringstream os;
        os << "dist_N(p) = " << d << " is not below 3 delta = " << 3.0 * tube_radius_;
        fail(ErrorCode::PointOutsideTube, os.str());
    }
    if (family_ == TargetFamily::UnitSphere) return p / p.norm();
    return basis_ * (basis_.transpose() * p);
}

Mat TargetManifold::tangent_projector(const Vec& q) const {
    check_dimension(q);
    if (family_ == TargetFamily::UnitSphere) {
        const Vec n = q / q.norm();
        return Mat::Identity(ambient_dim_, ambient_dim_) - n * n.transpose();
    }
    return basis_ * basis_.transpose();
}

Mat TargetManifold::projection_jacobian(const Vec& p) const {
    check_dimension(p);
    if (family_ == TargetFamily::UnitSphere) {
        const double r = p.norm();
        const Vec n = p / r;
        return (Mat::Identity(ambient_dim_, ambient_dim_) - n * n.transpose()) / r;
    }
    return basis_ * basis_.transpose();
}

Vec TargetManifold::projection_hessian(const Vec& p, const Vec& u) const {
    check_dimension(p);
    check_dimension(u);
    if (family_ == TargetFamily::FlatSubspace) return Vec::Zero(ambient_dim_);
    const double r = p.norm();
    const double pu = p.dot(u);
    const double r3 = r * r * r;
    return -2.0 * pu / r3 * u - u.squaredNorm() / r3 * p + 3.0 * pu * pu / (r3 * r * r) * p;
}

Vec TargetManifold::second_fundamental_form(const Vec& p, const Vec& u, const Vec& v) const {
    check_dimension(u);
    check_dimension(v);
    if (distance(p) > kOnManifoldTol) {
        fail(ErrorCode::PointNotOnManifold, "second fundamental form needs a point on the target");
    }
    if (family_ == TargetFamily::FlatSubspace) return Vec::Zero(ambient_dim_);
    const Mat proj = tangent_projector(p);
    return -(proj * u).dot(proj * v) * p;
}

Vec TargetManifold::extended_sff(const Vec& p, const Vec& u) const {
    check_dimension(u);
    if (family_ == TargetFamily::FlatSubspace) return Vec::Zero(ambient_dim_);
    const double d = distance(p);
    if (!(d < 2.0 * tube_radius_)) return Vec::Zero(ambient_dim_);
    const Vec q = p / p.norm();
    const Vec ut = u - q.dot(u) * q;
    return -cutoff(d) * ut.squaredNorm() * q;
}

double TargetManifold::cutoff(double s) const {
    if (s < tube_radius_) return 1.0;
    if (s > 2.0 * tube_radius_) return 0.0;
    const double x = (s - tube_radius_) / tube_radius_;
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double TargetManifold::truncation(double s) const {
    const double lo = tube_radius_ * tube_radius_;
    const double hi = 4.0 * lo;
    if (s <= lo) return s;
    if (s >= hi) return hi;
    const double len = hi - lo;
    return lo + len * blend((s - lo) / len);
}

double TargetManifold::truncation_derivative(double s) const {
    const double lo = tube_radius_ * tube_radius_;
    const double hi = 4.0 * lo;
    if (s <= lo) return 1.0;
    if (s >= hi) return 0.0;
    return blend_d1((s - lo) / (hi - lo));
}

double TargetManifold::truncation_second_derivative(double s) const {
    const double lo = tube_radius_ * tube_radius_;
    const double hi = 4.0 * lo;
    if (s <= lo || s >= hi) return 0.0;
    return blend_d2((s - lo) / (hi - lo)) / (hi - lo);
}

TruncatedDistance TargetManifold::truncated_distance_sq(const Vec& p) const {
    check_dimension(p);
    TruncatedDistance out;
    const double d = distance(p);
    const double d2 = d * d;
    out.value = truncation(d2);
    out.gradient = Vec::Zero(ambient_dim_);
    out.hessian = Mat::Zero(ambient_dim_, ambient_dim_);
    if (!(d < 2.0 * tube_radius_)) return out;
    const Vec normal = p - nearest_point(p);
    const double c1 = truncation_derivative(d2);
    const double c2 = truncation_second_derivative(d2);
    const Mat id = Mat::Identity(ambient_dim_, ambient_dim_);
    out.gradient = 2.0 * c1 * normal;
    out.hessian = 4.0 * c2 * normal * normal.transpose() + 2.0 * c1 * (id - projection_jacobian(p));
    return out;
}

Vec projection_hessian_fd(const TargetManifold& target, const Vec& p, const Vec& u, double step) {
    auto central = [&](double h) -> Vec {
        return (target.nearest_point(p + h * u) - 2.0 * target.nearest_point(p) + target.nearest_point(p - h * u)) /
               (h * h);
    };
    return (4.0 * central(0.5 * step) - central(step)) / 3.0;
}

}  // namespace hmflow
