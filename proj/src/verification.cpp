#include "hmflow/verification.hpp"

#include "hmflow/error.hpp"

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hmflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double node_angle(const IntrinsicPoint& x) { return std::get<CirclePoint>(x).angle; }

/// Real trigonometric interpolant of periodic samples on n uniform angles.
struct TrigSeries {
    double mean = 0.0;
    Eigen::VectorXd a;  // cos coefficients, modes 1..K
    Eigen::VectorXd b;  // sin coefficients, modes 1..K
    double nyquist = 0.0;
    bool has_nyquist = false;

    explicit TrigSeries(const Eigen::VectorXd& samples) {
        const auto n = samples.size();
        const Eigen::Index modes = (n - 1) / 2;
        a = Eigen::VectorXd::Zero(modes);
        b = Eigen::VectorXd::Zero(modes);
        mean = samples.mean();
        for (Eigen::Index j = 0; j < n; ++j) {
            const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
            for (Eigen::Index k = 1; k <= modes; ++k) {
                a(k - 1) += 2.0 * samples(j) * std::cos(static_cast<double>(k) * th) / static_cast<double>(n);
                b(k - 1) += 2.0 * samples(j) * std::sin(static_cast<double>(k) * th) / static_cast<double>(n);
            }
        }
        if (n % 2 == 0) {
            has_nyquist = true;
            for (Eigen::Index j = 0; j < n; ++j) nyquist += (j % 2 == 0 ? 1.0 : -1.0) * samples(j) / static_cast<double>(n);
        }
    }
};

/// Evaluates decayed trigonometric series at fixed angles.
class TrigEvaluator {
public:
    TrigEvaluator(const std::vector<double>& angles, Eigen::Index modes, bool nyquist, Eigen::Index nyquist_mode)
        : cos_(static_cast<Eigen::Index>(angles.size()), modes), sin_(static_cast<Eigen::Index>(angles.size()), modes),
          nyq_(static_cast<Eigen::Index>(angles.size())) {
        for (std::size_t j = 0; j < angles.size(); ++j) {
            const auto r = static_cast<Eigen::Index>(j);
            for (Eigen::Index k = 1; k <= modes; ++k) {
                cos_(r, k - 1) = std::cos(static_cast<double>(k) * angles[j]);
                sin_(r, k - 1) = std::sin(static_cast<double>(k) * angles[j]);
            }
            nyq_(r) = nyquist ? std::cos(static_cast<double>(nyquist_mode) * angles[j]) : 0.0;
        }
    }

    /// Series with every mode k scaled by exp(-k^2 s / 2).
    [[nodiscard]] Eigen::VectorXd evaluate(const TrigSeries& f, double s, Eigen::Index nyquist_mode) const {
        Eigen::VectorXd decay(f.a.size());
        for (Eigen::Index k = 1; k <= f.a.size(); ++k) decay(k - 1) = std::exp(-0.5 * static_cast<double>(k * k) * s);
        Eigen::VectorXd out = cos_ * f.a.cwiseProduct(decay) + sin_ * f.b.cwiseProduct(decay);
        out.array() += f.mean;
        if (f.has_nyquist) {
            const double kn = static_cast<double>(nyquist_mode);
            out += f.nyquist * std::exp(-0.5 * kn * kn * s) * nyq_;
        }
        return out;
    }

private:
    Eigen::MatrixXd cos_;
    Eigen::MatrixXd sin_;
    Eigen::VectorXd nyq_;
};

MapField circle_reference(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_t, std::size_t n_x) {
    const double horizon = c.horizon;
    const int l2 = c.target_ambient_dim;
    std::vector<double> angles(source.node_count());
    for (std::size_t j = 0; j < angles.size(); ++j) angles[j] = node_angle(source.node(j));
    const auto nx = static_cast<Eigen::Index>(n_x);
    const Eigen::Index modes = (nx - 1) / 2;
    const TrigEvaluator eval(angles, modes, nx % 2 == 0, nx / 2);

    // Columns of periodic samples: the components for a flat target, the angle perturbation for a lift.
    const int columns = c.reduction == Reduction::FlatHeat ? l2 : 1;
    std::vector<TrigSeries> series;
    for (int col = 0; col < columns; ++col) {
        Eigen::VectorXd samples(nx);
        for (Eigen::Index j = 0; j < nx; ++j) {
            const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(nx);
            const IntrinsicPoint x = CirclePoint{th};
            if (c.reduction == Reduction::FlatHeat)
                samples(j) = c.terminal_value(x)(col);
            else
                samples(j) = c.terminal_profile(th) - c.winding * th;
        }
        series.emplace_back(samples);
    }

    MapField out(n_t, source.node_count(), l2, horizon);
    for (std::size_t k = 0; k <= n_t; ++k) {
        const double t = out.time(k);
        const double s = k == n_t ? 0.0 : inverse_square_integral(c.radius, t, horizon);
        NodalField& slice = out.slice(k);
        if (c.reduction == Reduction::FlatHeat) {
            for (int col = 0; col < l2; ++col) slice.col(col) = eval.evaluate(series[static_cast<std::size_t>(col)], s, nx / 2);
            continue;
        }
        const Eigen::VectorXd q = eval.evaluate(series[0], s, nx / 2);
        for (std::size_t j = 0; j < angles.size(); ++j) {
            const double psi = c.winding * angles[j] + q(static_cast<Eigen::Index>(j));
            slice.row(static_cast<Eigen::Index>(j)) = (std::cos(psi) * c.plane_e1 + std::sin(psi) * c.plane_e2).transpose();
        }
    }
    if (c.reduction == Reduction::FlatHeat || n_x == source.node_count()) out.slice(n_t) = c.terminal(source);
    return out;
}

/// Method of lines for f_tau = (1/2) rho^{-2} [f'' + cot f' - sin(2f) / (2 sin^2)], tau = T0 - t.
MapField equivariant_reference(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_t, std::size_t n_x) {
    const auto m = static_cast<Eigen::Index>(n_x);
    const double h = std::numbers::pi / static_cast<double>(m + 1);
    Eigen::VectorXd theta(m + 2);
    for (Eigen::Index i = 0; i < m + 2; ++i) theta(i) = h * static_cast<double>(i);
    Eigen::VectorXd f(m + 2);
    for (Eigen::Index i = 0; i < m + 2; ++i) f(i) = c.terminal_profile(theta(i));
    f(0) = 0.0;
    f(m + 1) = std::numbers::pi;

    auto rhs = [&](double t, const Eigen::VectorXd& g) {
        const double r = c.radius.value(t);
        Eigen::VectorXd out = Eigen::VectorXd::Zero(m + 2);
        for (Eigen::Index i = 1; i <= m; ++i) {
            const double s = std::sin(theta(i));
            const double lap = (g(i + 1) - 2.0 * g(i) + g(i - 1)) / (h * h) +
                               std::cos(theta(i)) / s * (g(i + 1) - g(i - 1)) / (2.0 * h) -
                               std::sin(2.0 * g(i)) / (2.0 * s * s);
            out(i) = 0.5 * lap / (r * r);
        }
        return out;
    };

    double rho_min = c.radius.value(0.0);
    for (int i = 1; i <= 200; ++i) rho_min = std::min(rho_min, c.radius.value(c.horizon * i / 200.0));
    const double max_sub = 0.5 * rho_min * rho_min * h * h;

    MapField out(n_t, source.node_count(), 3, c.horizon);
    auto write_slice = [&](std::size_t k) {
        boost::math::interpolators::cardinal_cubic_b_spline<double> spline(f.data(), static_cast<std::size_t>(m + 2), 0.0, h);
        NodalField& slice = out.slice(k);
        for (std::size_t j = 0; j < source.node_count(); ++j) {
            const auto [colat, lon] = sphere_angles(std::get<SpherePoint>(source.node(j)).unit);
            slice.row(static_cast<Eigen::Index>(j)) = sphere_point(spline(colat), lon).transpose();
        }
    };
    write_slice(n_t);
    const double slice_dt = c.horizon / static_cast<double>(n_t);
    const auto sub = static_cast<std::size_t>(std::ceil(slice_dt / max_sub));
    const double d = slice_dt / static_cast<double>(sub);
    for (std::size_t k = n_t; k-- > 0;) {
        double t = out.time(k + 1);
        for (std::size_t s = 0; s < sub; ++s) {
            // Backward in t, forward in tau.
            const Eigen::VectorXd k1 = rhs(t, f);
            const Eigen::VectorXd k2 = rhs(t - 0.5 * d, f + 0.5 * d * k1);
            const Eigen::VectorXd k3 = rhs(t - 0.5 * d, f + 0.5 * d * k2);
            const Eigen::VectorXd k4 = rhs(t - d, f + d * k3);
            f += d / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t -= d;
        }
        write_slice(k);
    }
    out.slice(n_t) = c.terminal(source);
    return out;
}

NodalField spatial_tension(const SourceManifold& source, const TargetManifold& target, double t, const NodalField& u) {
    const NodalField lap = source.laplace_beltrami(t, u);
    const auto grad = source.metric_gradient(t, u);
    NodalField out = 0.5 * lap;
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
        const Vec p = u.row(j).transpose();
        Vec gam = Vec::Zero(u.cols());
        for (const auto& g : grad) gam += target.extended_sff(p, g.row(j).transpose());
        out.row(j) -= 0.5 * gam.transpose();
    }
    return out;
}

}  // namespace

SourcePtr BenchmarkCase::make_source() const {
    if (family == SourceFamily::Circle) return make_circle_source(radius, horizon, n_theta);
    return make_sphere_source(radius, horizon, n_lat, n_lon);
}

TargetManifold BenchmarkCase::make_target() const {
    if (flat_target) return TargetManifold::flat(target_ambient_dim);
    return TargetManifold::unit_sphere(target_ambient_dim - 1, tube_radius);
}

Vec BenchmarkCase::terminal_value(const IntrinsicPoint& x) const {
    if (terminal_map) return terminal_map(x);
    if (reduction == Reduction::CircleLift && terminal_profile) {
        const double psi = terminal_profile(node_angle(x));
        return std::cos(psi) * plane_e1 + std::sin(psi) * plane_e2;
    }
    if (reduction == Reduction::EquivariantSphere && terminal_profile) {
        const auto [colat, lon] = sphere_angles(std::get<SpherePoint>(x).unit);
        return sphere_point(terminal_profile(colat), lon);
    }
    fail(ErrorCode::InvalidArgument, "benchmark " + name + " has no terminal map");
}

NodalField BenchmarkCase::terminal(const SourceManifold& source) const {
    NodalField h(source.node_count(), target_ambient_dim);
    for (std::size_t j = 0; j < source.node_count(); ++j)
        h.row(static_cast<Eigen::Index>(j)) = terminal_value(source.node(j)).transpose();
    return h;
}

MapField BenchmarkCase::sample_closed_form(const SourceManifold& source, std::size_t n_t) const {
    if (!closed_form) fail(ErrorCode::UnsupportedReduction, "benchmark " + name + " has no closed form");
    MapField out(n_t, source.node_count(), target_ambient_dim, horizon);
    for (std::size_t k = 0; k <= n_t; ++k) {
        for (std::size_t j = 0; j < source.node_count(); ++j)
            out.slice(k).row(static_cast<Eigen::Index>(j)) = closed_form(out.time(k), horizon, source.node(j)).transpose();
    }
    out.slice(n_t) = terminal(source);
    return out;
}

double inverse_square_integral(const RadiusProfile& radius, double a, double b) {
    if (a == b) return 0.0;
    if (radius.is_static()) return (b - a) / (radius.value(a) * radius.value(a));
    auto f = [&](double x) {
        const double v = radius.value(a + (b - a) * x);
        return 1.0 / (v * v);
    };
    return (b - a) * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-13);
}

MapField pde_reference(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_t, std::size_t n_x) {
    if (n_t == 0 || n_x < 3) fail(ErrorCode::InvalidArgument, "reference solver needs n_t >= 1 and n_x >= 3");
    if (source.family() != c.family) fail(ErrorCode::ShapeMismatch, "source family differs from the benchmark");
    switch (c.reduction) {
    case Reduction::FlatHeat:
        if (c.family == SourceFamily::Circle && c.flat_target) return circle_reference(c, source, n_t, n_x);
        break;
    case Reduction::CircleLift:
        if (c.family == SourceFamily::Circle && !c.flat_target && c.terminal_profile)
            return circle_reference(c, source, n_t, n_x);
        break;
    case Reduction::EquivariantSphere:
        if (c.family == SourceFamily::Sphere2 && !c.flat_target && c.target_ambient_dim == 3 && c.terminal_profile)
            return equivariant_reference(c, source, n_t, n_x);
        break;
    case Reduction::None:
        break;
    }
    fail(ErrorCode::UnsupportedReduction, "benchmark " + c.name + " has no supported one-dimensional reduction");
}

std::vector<NodalField> tension_residual(const SourceManifold& source, const TargetManifold& target,
                                         const MapField& field) {
    if (field.n_nodes() != source.node_count() || field.value_dim() != target.ambient_dim())
        fail(ErrorCode::ShapeMismatch, "field does not match source grid or target dimension");
    for (std::size_t k = 0; k < field.n_slices(); ++k) {
        const NodalField& s = field.slice(k);
        for (Eigen::Index j = 0; j < s.rows(); ++j) {
            const double d = target.distance(s.row(j).transpose());
            if (!(d < target.tube_radius()))
                fail(ErrorCode::FieldLeftTube, "slice " + std::to_string(k) + " node " + std::to_string(j) +
                                                   " is at distance " + std::to_string(d) + " from N");
        }
    }
    const std::size_t n = field.n_t();
    const double dt = field.dt();
    std::vector<NodalField> out;
    out.reserve(field.n_slices());
    for (std::size_t k = 0; k <= n; ++k) {
        NodalField dudt;
        if (n == 1)
            dudt = (field.slice(1) - field.slice(0)) / dt;
        else if (k == 0)
            dudt = (-3.0 * field.slice(0) + 4.0 * field.slice(1) - field.slice(2)) / (2.0 * dt);
        else if (k == n)
            dudt = (3.0 * field.slice(n) - 4.0 * field.slice(n - 1) + field.slice(n - 2)) / (2.0 * dt);
        else
            dudt = (field.slice(k + 1) - field.slice(k - 1)) / (2.0 * dt);
        const NodalField r = dudt + spatial_tension(source, target, field.time(k), field.slice(k));
        out.emplace_back(r.rowwise().norm());
    }
    return out;
}

double sup_of(const std::vector<NodalField>& fields) {
    double m = 0.0;
    for (const auto& f : fields) m = std::max(m, f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff());
    return m;
}

double closed_form_residual(const BenchmarkCase& c, const SourceManifold& source, std::size_t n_times, double step) {
    if (!c.closed_form) fail(ErrorCode::UnsupportedReduction, "benchmark " + c.name + " has no closed form");
    const TargetManifold target = c.make_target();
    auto sample = [&](double t) {
        NodalField s(source.node_count(), c.target_ambient_dim);
        for (std::size_t j = 0; j < source.node_count(); ++j)
            s.row(static_cast<Eigen::Index>(j)) = c.closed_form(t, c.horizon, source.node(j)).transpose();
        return s;
    };
    double worst = 0.0;
    for (std::size_t i = 0; i < n_times; ++i) {
        const double t = step + (c.horizon - 2.0 * step) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n_times - 1, 1));
        const NodalField dudt = (sample(t + step) - sample(t - step)) / (2.0 * step);
        const NodalField r = dudt + spatial_tension(source, target, t, sample(t));
        worst = std::max(worst, r.rowwise().norm().maxCoeff());
    }
    return worst;
}

StayOnTargetReport stay_on_target(const TargetManifold& target, const BsdeSolutionSample& sample) {
    const auto& ens = sample.paths;
    StayOnTargetReport rep;
    const std::size_t steps = ens.n_steps();
    std::vector<double> mean_g(steps + 1, 0.0);
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        for (std::size_t k = 0; k <= steps; ++k) {
            const Vec y = sample.y_at(p, k);
            rep.max_distance = std::max(rep.max_distance, target.distance(y));
            mean_g[k] += target.truncated_distance_sq(y).value;
        }
    }
    for (double& g : mean_g) g /= static_cast<double>(ens.n_paths());
    rep.curve.resize(steps + 1);
    double tail = 0.0;
    for (std::size_t k = steps + 1; k-- > 0;) {
        if (k < steps) tail += 0.5 * ens.dt() * (mean_g[k] + mean_g[k + 1]);
        rep.curve[k] = {ens.time(k), mean_g[k], tail};
        if (tail > 0.0) rep.fitted_constant = std::max(rep.fitted_constant, mean_g[k] / tail);
    }
    return rep;
}

double weak_form_residual(const SourceManifold& source, const TargetManifold& target, const MapField& field,
                          const NodalField& test_fn, std::size_t start_slice) {
    if (field.n_nodes() != source.node_count() || test_fn.rows() != static_cast<Eigen::Index>(source.node_count()) ||
        test_fn.cols() != 1)
        fail(ErrorCode::ShapeMismatch, "test function must be one scalar per grid node");
    if (start_slice >= field.n_slices()) fail(ErrorCode::InvalidArgument, "start slice beyond the horizon");
    const int l2 = field.value_dim();
    auto pairing = [&](double t, const NodalField& u) {
        const auto w = source.volume_measure(t);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(l2);
        for (Eigen::Index j = 0; j < u.rows(); ++j) acc += w[static_cast<std::size_t>(j)] * test_fn(j, 0) * u.row(j).transpose();
        return acc;
    };
    auto integrand = [&](std::size_t k) {
        const double s = field.time(k);
        const NodalField& u = field.slice(k);
        const auto w = source.volume_measure(s);
        const double rate = source.volume_growth_rate(s);
        const auto gu = source.metric_gradient(s, u);
        const auto gf = source.metric_gradient(s, test_fn);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(l2);
        for (Eigen::Index j = 0; j < u.rows(); ++j) {
            const Vec p = u.row(j).transpose();
            Eigen::VectorXd local = rate * test_fn(j, 0) * p;
            for (std::size_t a = 0; a < gu.size(); ++a) {
                local += 0.5 * gf[a](j, 0) * gu[a].row(j).transpose();
                local += 0.5 * test_fn(j, 0) * target.extended_sff(p, gu[a].row(j).transpose());
            }
            acc += w[static_cast<std::size_t>(j)] * local;
        }
        return acc;
    };
    const double t0 = field.time(start_slice);
    Eigen::VectorXd r = pairing(field.horizon(), field.terminal()) - pairing(t0, field.slice(start_slice));
    Eigen::VectorXd prev = integrand(start_slice);
    for (std::size_t k = start_slice + 1; k < field.n_slices(); ++k) {
        const Eigen::VectorXd cur = integrand(k);
        r -= 0.5 * field.dt() * (prev + cur);
        prev = cur;
    }
    return r.norm();
}

double self_adjointness_defect(const SourceManifold& source, double t, const NodalField& a, const NodalField& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != static_cast<Eigen::Index>(source.node_count()))
        fail(ErrorCode::ShapeMismatch, "fields must share the source grid and component count");
    const auto w = source.volume_measure(t);
    const NodalField lap = source.laplace_beltrami(t, a);
    const auto ga = source.metric_gradient(t, a);
    const auto gb = source.metric_gradient(t, b);
    double lhs = 0.0;
    double rhs = 0.0;
    for (Eigen::Index j = 0; j < a.rows(); ++j) {
        const double wj = w[static_cast<std::size_t>(j)];
        lhs += wj * lap.row(j).dot(b.row(j));
        for (std::size_t d = 0; d < ga.size(); ++d) rhs += wj * ga[d].row(j).dot(gb[d].row(j));
    }
    return std::abs(lhs + rhs);
}

NodalField lift_perturbation(const SourceManifold& source, const BenchmarkCase& c, const NodalField& slice) {
    if (source.family() != SourceFamily::Circle) fail(ErrorCode::UnsupportedReduction, "lift needs a circle source");
    NodalField q(slice.rows(), 1);
    for (Eigen::Index j = 0; j < slice.rows(); ++j) {
        const Vec v = slice.row(j).transpose();
        const double psi = std::atan2(v.dot(c.plane_e2), v.dot(c.plane_e1));
        q(j, 0) = std::remainder(psi - c.winding * node_angle(source.node(static_cast<std::size_t>(j))), kTwoPi);
    }
    return q;
}

}  // namespace hmflow
