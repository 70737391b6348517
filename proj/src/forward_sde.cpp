#include "hmflow/forward_sde.hpp"

#include "hmflow/error.hpp"
#include "hmflow/keyed_rng.hpp"
#include "hmflow/parallel.hpp"
#include "hmflow/quadrature.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hmflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    return a >= kTwoPi ? 0.0 : a;
}

}  // namespace

PathEnsemble::PathEnsemble(double start_time, double dt, std::size_t n_steps, std::size_t n_paths, int chart_dim,
                           int noise_dim)
    : start_time_(start_time),
      dt_(dt),
      n_steps_(n_steps),
      n_paths_(n_paths),
      chart_dim_(chart_dim),
      noise_dim_(noise_dim),
      states_(n_paths * (n_steps + 1) * static_cast<std::size_t>(chart_dim)),
      increments_(n_paths * n_steps * static_cast<std::size_t>(noise_dim)) {}

IntrinsicPoint PathEnsemble::state(std::size_t path, std::size_t step) const {
    const double* s = states_.data() + (path * (n_steps_ + 1) + step) * static_cast<std::size_t>(chart_dim_);
    if (chart_dim_ == 1) return CirclePoint{s[0]};
    return SpherePoint{Vec3(s[0], s[1], s[2])};
}

Vec PathEnsemble::increment(std::size_t path, std::size_t step) const {
    const double* s = increments_.data() + (path * n_steps_ + step) * static_cast<std::size_t>(noise_dim_);
    Vec v(noise_dim_);
    for (int i = 0; i < noise_dim_; ++i) v(i) = s[i];
    return v;
}

void PathEnsemble::set_state(std::size_t path, std::size_t step, const IntrinsicPoint& x) {
    double* s = states_.data() + (path * (n_steps_ + 1) + step) * static_cast<std::size_t>(chart_dim_);
    if (const auto* c = std::get_if<CirclePoint>(&x)) {
        s[0] = c->angle;
    } else {
        const Vec3& u = std::get<SpherePoint>(x).unit;
        s[0] = u.x();
        s[1] = u.y();
        s[2] = u.z();
    }
}

void PathEnsemble::set_increment(std::size_t path, std::size_t step, const Vec& dw) {
    double* s = increments_.data() + (path * n_steps_ + step) * static_cast<std::size_t>(noise_dim_);
    for (int i = 0; i < noise_dim_; ++i) s[i] = dw(i);
}

StepOutcome forward_step(const SourceManifold& source, double t, double dt, const IntrinsicPoint& x, const Vec& dw) {
    const double rho = source.radius().value(t);
    if (const auto* c = std::get_if<CirclePoint>(&x)) {
        const double db = circle_tangent(c->angle).dot(dw);
        return {CirclePoint{wrap_angle(c->angle + db / rho)}, 0.0};
    }
    const Vec3& u = std::get<SpherePoint>(x).unit;
    const Vec3 w(dw(0), dw(1), dw(2));
    const double m = source.dim();
    const Vec3 moved = u + (w - u.dot(w) * u) / rho - 0.5 * m / (rho * rho) * dt * u;
    const double norm = moved.norm();
    return {SpherePoint{moved / norm}, std::abs(norm - 1.0)};
}

std::size_t step_count(double t, double horizon, double dt) {
    if (!(dt > 0.0)) fail(ErrorCode::InvalidArgument, "step size must be positive");
    const double ratio = (horizon - t) / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, rounded)) {
        std::ostringstream os;
        os << "dt = " << dt << " does not divide [" << t << ", " << horizon << "]";
        fail(ErrorCode::InvalidArgument, os.str());
    }
    return static_cast<std::size_t>(rounded);
}

namespace {

void check_forward_request(const SourceManifold& source, double t, double horizon, double dt) {
    source.check_time(t);
    source.check_time(horizon);
    if (!(t < horizon)) fail(ErrorCode::TimeOutOfRange, "start time must precede the horizon");
    constexpr int samples = 257;
    double min_rho = source.radius().value(t);
    for (int k = 0; k <= samples; ++k) {
        min_rho = std::min(min_rho, source.radius().value(t + (horizon - t) * k / samples));
    }
    if (dt > 0.25 * min_rho * min_rho) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds (min rho)^2 / 4 = " << 0.25 * min_rho * min_rho;
        fail(ErrorCode::StepTooLarge, os.str());
    }
}

}  // namespace

PathEnsemble simulate(const SourceManifold& source, double t, std::span<const IntrinsicPoint> starts, double horizon,
                      double dt, std::size_t paths_per_start, std::uint64_t master_seed, const ForwardOptions& options) {
    check_forward_request(source, t, horizon, dt);
    const std::size_t n_steps = step_count(t, horizon, dt);
    dt = (horizon - t) / static_cast<double>(n_steps);
    const std::size_t n_paths = starts.size() * paths_per_start;
    const int noise_dim = source.ambient_dim();
    PathEnsemble ensemble(t, dt, n_steps, n_paths, source.chart_dim(), noise_dim);
    const KeyedNormal rng(master_seed);
    const double sqrt_dt = std::sqrt(dt);
    std::vector<double> violation(n_paths, 0.0);

    parallel_for(n_paths, options.threads, [&](std::size_t path) {
        const std::size_t start = path / paths_per_start;
        const std::size_t local = path % paths_per_start;
        std::uint64_t key = path;
        double sign = 1.0;
        if (options.antithetic) {
            key = start * paths_per_start + (local & ~std::size_t{1});
            sign = (local & 1U) ? -1.0 : 1.0;
        }
        IntrinsicPoint x = starts[start];
        ensemble.set_state(path, 0, x);
        Vec dw(noise_dim);
        for (std::size_t k = 0; k < n_steps; ++k) {
            for (int i = 0; i < noise_dim; ++i) {
                dw(i) = options.zero_noise
                            ? 0.0
                            : sign * sqrt_dt *
                                  rng.normal(KeyedNormal::ForwardPaths, key, static_cast<std::uint32_t>(k),
                                             static_cast<std::uint32_t>(i));
            }
            ensemble.set_increment(path, k, dw);
            const auto outcome = forward_step(source, ensemble.time(k), dt, x, dw);
            violation[path] = std::max(violation[path], outcome.violation);
            x = outcome.next;
            ensemble.set_state(path, k + 1, x);
        }
    });
    double worst = 0.0;
    for (double v : violation) worst = std::max(worst, v);
    ensemble.set_max_violation(worst);
    return ensemble;
}

PathEnsemble simulate(const SourceManifold& source, double t, const IntrinsicPoint& start, double horizon, double dt,
                      std::size_t n_paths, std::uint64_t master_seed, const ForwardOptions& options) {
    const IntrinsicPoint starts[] = {start};
    return simulate(source, t, std::span<const IntrinsicPoint>(starts), horizon, dt, n_paths, master_seed, options);
}

std::vector<WeakErrorRow> weak_error_probe(const SourceManifold& source, double t, std::size_t node,
                                           const std::function<double(const IntrinsicPoint&)>& f,
                                           std::span<const double> h_list, const WeakProbeOptions& options) {
    source.check_time(t);
    const std::size_t n = source.node_count();
    if (node >= n) fail(ErrorCode::InvalidArgument, "probe node outside the grid");
    NodalField samples(static_cast<Eigen::Index>(n), 1);
    for (std::size_t j = 0; j < n; ++j) samples(static_cast<Eigen::Index>(j), 0) = f(source.node(j));
    const double lap = source.laplace_beltrami(t, samples)(static_cast<Eigen::Index>(node), 0);
    const IntrinsicPoint x = source.node(node);
    const double fx = f(x);

    std::vector<WeakErrorRow> rows;
    rows.reserve(h_list.size());
    const KeyedNormal rng(options.seed);
    for (std::size_t hi = 0; hi < h_list.size(); ++hi) {
        const double h = h_list[hi];
        WeakErrorRow row;
        row.h = h;
        if (source.family() == SourceFamily::Circle) {
            // dB = <tau, dW> ~ N(0, h): one-dimensional Gauss-Hermite expectation.
            const auto rule = gauss_hermite(options.quadrature_order);
            const double angle = std::get<CirclePoint>(x).angle;
            const Vec tau = circle_tangent(angle);
            double mean = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const Vec dw = tau * (std::sqrt(h) * rule.nodes[q]);
                mean += rule.weights[q] * (f(forward_step(source, t, h, x, dw).next) - fx);
            }
            row.residual = std::abs(mean - 0.5 * h * lap);
        } else {
            const std::size_t pairs = options.antithetic ? options.n_paths / 2 : options.n_paths;
            const int noise_dim = source.ambient_dim();
            std::vector<double> sums(pairs);
            parallel_for(pairs, options.threads, [&](std::size_t p) {
                Vec dw(noise_dim);
                for (int i = 0; i < noise_dim; ++i) {
                    dw(i) = std::sqrt(h) * rng.normal(KeyedNormal::WeakProbe, p, static_cast<std::uint32_t>(hi),
                                                      static_cast<std::uint32_t>(i));
                }
                double value = f(forward_step(source, t, h, x, dw).next) - fx;
                if (options.antithetic) value = 0.5 * (value + f(forward_step(source, t, h, x, -dw).next) - fx);
                sums[p] = value;
            });
            double mean = 0.0;
            for (double v : sums) mean += v;
            mean /= static_cast<double>(pairs);
            double var = 0.0;
            for (double v : sums) var += (v - mean) * (v - mean);
            var /= static_cast<double>(pairs - 1);
            row.residual = std::abs(mean - 0.5 * h * lap);
            row.standard_error = std::sqrt(var / static_cast<double>(pairs));
        }
        rows.push_back(row);
    }
    return rows;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InvalidArgument, "slope fit needs two or more points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

void write_paths_csv(const PathEnsemble& ensemble, std::ostream& out) {
    out << "path_id,step,time";
    if (ensemble.chart_dim() == 1) {
        out << ",theta";
    } else {
        out << ",x,y,z";
    }
    out << '\n' << std::setprecision(17);
    const auto states = ensemble.states();
    const auto cd = static_cast<std::size_t>(ensemble.chart_dim());
    for (std::size_t p = 0; p < ensemble.n_paths(); ++p) {
        for (std::size_t k = 0; k <= ensemble.n_steps(); ++k) {
            out << p << ',' << k << ',' << ensemble.time(k);
            const double* s = states.data() + (p * (ensemble.n_steps() + 1) + k) * cd;
            for (std::size_t c = 0; c < cd; ++c) out << ',' << s[c];
            out << '\n';
        }
    }
}

}  // namespace hmflow
