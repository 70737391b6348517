#include "hmflow/bsde_operator.hpp"

#include "hmflow/error.hpp"
#include "hmflow/keyed_rng.hpp"
#include "hmflow/parallel.hpp"
#include "hmflow/quadrature.hpp"
#include "hmflow/source_circle.hpp"

#include <cmath>
#include <complex>

namespace hmflow {

std::string to_string(Backend backend) { return backend == Backend::Semigroup ? "semigroup" : "monte-carlo"; }

Backend parse_backend(const std::string& name) {
    if (name == "semigroup") return Backend::Semigroup;
    if (name == "monte-carlo" || name == "monte_carlo") return Backend::MonteCarlo;
    fail(ErrorCode::Config, "unknown backend '" + name + "' (expected semigroup or monte-carlo)");
}

BsdeOperator::BsdeOperator(SourcePtr source, TargetManifold target, BsdeOptions options)
    : source_(std::move(source)), target_(std::move(target)), options_(options) {
    if (!source_) fail(ErrorCode::InvalidArgument, "BSDE operator needs a source manifold");
    if (options_.mc_paths == 1) fail(ErrorCode::InvalidArgument, "Monte Carlo batches need at least two samples");
}

NodalField BsdeOperator::driver(const NodalField& y, const std::vector<NodalField>& gradient) const {
    NodalField out = NodalField::Zero(y.rows(), y.cols());
    if (options_.flat_override) return out;
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
        const Vec p = y.row(j).transpose();
        Vec acc = Vec::Zero(y.cols());
        for (const auto& g : gradient) acc += target_.extended_sff(p, g.row(j).transpose());
        out.row(j) = 0.5 * acc.transpose();
    }
    return out;
}

NodalField BsdeOperator::circle_sampled(std::size_t slice, double t, double dt, const NodalField& g, NodalField* se) const {
    const auto& circle = dynamic_cast<const CircleSource&>(*source_);
    const double sigma = std::sqrt(dt) / source_->radius().value(t);
    const std::size_t modes = circle.fft().spectrum_size();
    // Every node sees the same batch of angular displacements, so the batch average of
    // g(theta + xi) is the Fourier multiplier mean_j exp(i k xi_j).
    std::vector<double> re(modes, 0.0);
    std::vector<double> im(modes, 0.0);
    auto accumulate = [&](double xi, double weight) {
        const double c = std::cos(xi);
        const double s = std::sin(xi);
        double pr = weight;
        double pi = 0.0;
        for (std::size_t k = 0; k < modes; ++k) {
            re[k] += pr;
            im[k] += pi;
            const double next = pr * c - pi * s;
            pi = pr * s + pi * c;
            pr = next;
        }
    };
    const std::size_t n = options_.mc_paths;
    if (n == 0) {
        const auto rule = gauss_hermite(options_.quadrature_order);
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) accumulate(sigma * rule.nodes[q], rule.weights[q]);
    } else {
        const KeyedNormal rng(options_.seed);
        const double w = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j)
            accumulate(sigma * rng.normal(KeyedNormal::NodeBatch, j, static_cast<std::uint32_t>(slice), 0), w);
    }
    std::vector<std::complex<double>> mult(modes);
    for (std::size_t k = 0; k < modes; ++k) mult[k] = {re[k], circle.fft().is_nyquist(k) ? 0.0 : im[k]};
    NodalField mean = circle.apply_multiplier(g, mult);
    if (se) {
        if (n == 0) {
            *se = NodalField::Zero(g.rows(), g.cols());
        } else {
            const NodalField second = circle.apply_multiplier(g.cwiseProduct(g), mult);
            const NodalField var = (second - mean.cwiseProduct(mean)).cwiseMax(0.0);
            *se = (var / static_cast<double>(n - 1)).cwiseSqrt();
        }
    }
    return mean;
}

NodalField BsdeOperator::sphere_sampled(std::size_t slice, double t, double dt, const NodalField& g, NodalField* se) const {
    const std::size_t nodes = source_->node_count();
    const auto interp = source_->interpolant(g);
    const double sd = std::sqrt(dt);
    // Shared batch of increments: ambient normals (sampling) or tangent-plane Gauss-Hermite points.
    std::vector<Vec3> draws;
    std::vector<double> weights;
    const bool quadrature = options_.mc_paths == 0;
    if (quadrature) {
        const auto rule = gauss_hermite(options_.quadrature_order);
        for (std::size_t a = 0; a < rule.nodes.size(); ++a)
            for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
                draws.emplace_back(rule.nodes[a], rule.nodes[b], 0.0);
                weights.push_back(rule.weights[a] * rule.weights[b]);
            }
    } else {
        const KeyedNormal rng(options_.seed);
        const auto s = static_cast<std::uint32_t>(slice);
        for (std::size_t j = 0; j < options_.mc_paths; ++j) {
            draws.emplace_back(rng.normal(KeyedNormal::NodeBatch, j, s, 0), rng.normal(KeyedNormal::NodeBatch, j, s, 1),
                               rng.normal(KeyedNormal::NodeBatch, j, s, 2));
            weights.push_back(1.0 / static_cast<double>(options_.mc_paths));
        }
    }
    NodalField mean(g.rows(), g.cols());
    NodalField second(g.rows(), g.cols());
    parallel_for(nodes, options_.threads, [&](std::size_t j) {
        const IntrinsicPoint x = source_->node(j);
        const Mat frame = source_->tangent_frame(x);
        Eigen::RowVectorXd m1 = Eigen::RowVectorXd::Zero(g.cols());
        Eigen::RowVectorXd m2 = Eigen::RowVectorXd::Zero(g.cols());
        for (std::size_t q = 0; q < draws.size(); ++q) {
            const Vec dw = quadrature ? Vec(sd * (draws[q](0) * frame.col(0) + draws[q](1) * frame.col(1)))
                                      : Vec(sd * draws[q]);
            const Eigen::RowVectorXd v = interp->value(forward_step(*source_, t, dt, x, dw).next).transpose();
            m1 += weights[q] * v;
            m2 += weights[q] * v.cwiseProduct(v);
        }
        mean.row(static_cast<Eigen::Index>(j)) = m1;
        second.row(static_cast<Eigen::Index>(j)) = m2;
    });
    if (se) {
        if (quadrature) {
            *se = NodalField::Zero(g.rows(), g.cols());
        } else {
            const NodalField var = (second - mean.cwiseProduct(mean)).cwiseMax(0.0);
            *se = (var / static_cast<double>(options_.mc_paths - 1)).cwiseSqrt();
        }
    }
    return mean;
}

NodalField BsdeOperator::conditional_expectation(std::size_t slice, double t, double dt, const NodalField& g,
                                                 NodalField* se) const {
    if (options_.backend == Backend::Semigroup) {
        if (se) *se = NodalField::Zero(g.rows(), g.cols());
        return source_->heat_step(t, dt, g);
    }
    return source_->family() == SourceFamily::Circle ? circle_sampled(slice, t, dt, g, se)
                                                     : sphere_sampled(slice, t, dt, g, se);
}

ApplyResult BsdeOperator::apply_with_error(const MapField& u, const NodalField& h) const {
    const auto& src = *source_;
    if (u.n_nodes() != src.node_count() || static_cast<std::size_t>(h.rows()) != src.node_count())
        fail(ErrorCode::ShapeMismatch, "u and h must be sampled on the source grid");
    if (u.value_dim() != target_.ambient_dim() || h.cols() != target_.ambient_dim())
        fail(ErrorCode::ShapeMismatch, "u and h must take values in the target's ambient space");
    if (u.horizon() > src.horizon() * (1.0 + 1e-12))
        fail(ErrorCode::HorizonMismatch, "map field horizon exceeds the source metric's horizon");

    const double bound = 10.0 * (h.rowwise().norm().maxCoeff() + 1.0);
    ApplyResult out{MapField(u.n_t(), u.n_nodes(), u.value_dim(), u.horizon()),
                    MapField(u.n_t(), u.n_nodes(), u.value_dim(), u.horizon())};
    out.w.slice(u.n_t()) = h;
    NodalField se_next = NodalField::Zero(h.rows(), h.cols());
    const double dt = u.dt();
    for (std::size_t k = u.n_t(); k-- > 0;) {
        const double t = u.time(k);
        NodalField se_step;
        const NodalField w_hat = conditional_expectation(k, t, dt, out.w.slice(k + 1), &se_step);
        const auto grad = src.metric_gradient(t, u.slice(k));
        NodalField w = w_hat - dt * driver(w_hat, grad);
        if (options_.implicit_driver) {
            for (std::size_t sweep = 0; sweep < options_.implicit_sweeps; ++sweep) w = w_hat - dt * driver(w, grad);
        }
        if (!w.allFinite() || w.rowwise().norm().maxCoeff() > bound) {
            fail(ErrorCode::BlowUp, "|w| exceeded " + std::to_string(bound) + " at slice " + std::to_string(k) +
                                        "; the horizon is too long for the contraction regime");
        }
        out.w.slice(k) = w;
        if (options_.backend == Backend::MonteCarlo) {
            // Errors from different slices are independent; the positive one-step kernel
            // propagates a standard deviation no further than its average.
            const NodalField carried = src.heat_step(t, dt, se_next);
            se_next = (carried.cwiseProduct(carried) + se_step.cwiseProduct(se_step)).cwiseSqrt();
            out.standard_error.slice(k) = se_next;
        }
    }
    return out;
}

MapField BsdeOperator::apply(const MapField& u, const NodalField& h) const { return apply_with_error(u, h).w; }

Vec BsdeSolutionSample::y_at(std::size_t path, std::size_t step) const {
    return y.row(static_cast<Eigen::Index>(row(path, step))).transpose();
}

Vec BsdeSolutionSample::z_at(std::size_t path, std::size_t step, int i) const {
    return z.block(static_cast<Eigen::Index>(row(path, step)), i * value_dim, 1, value_dim).transpose();
}

double BsdeSolutionSample::max_z_norm() const { return z.size() == 0 ? 0.0 : z.rowwise().norm().maxCoeff(); }

namespace {

struct SliceEval {
    std::vector<std::unique_ptr<SliceInterpolant>> interp;

    SliceEval(const SourceManifold& source, const MapField& w) {
        interp.reserve(w.n_slices());
        for (std::size_t k = 0; k < w.n_slices(); ++k) interp.push_back(source.interpolant(w.slice(k)));
    }

    /// Gradient in the g_t-orthonormal frame at x, one row per frame direction.
    Eigen::MatrixXd gradient(const SourceManifold& source, std::size_t k, double t, const IntrinsicPoint& x) const {
        return interp[k]->unit_frame_derivatives(x) / source.radius().value(t);
    }
};

}  // namespace

BsdeSolutionSample make_solution_sample(const SourceManifold& source, const MapField& w, std::size_t n_paths,
                                        std::uint64_t seed, const ForwardOptions& options) {
    if (w.n_nodes() != source.node_count()) fail(ErrorCode::ShapeMismatch, "map field does not match the source grid");
    if (n_paths == 0) fail(ErrorCode::InvalidArgument, "solution sample needs at least one path");
    std::vector<IntrinsicPoint> starts;
    starts.reserve(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) starts.push_back(source.node(p * source.node_count() / n_paths));
    BsdeSolutionSample sample{simulate(source, 0.0, starts, w.horizon(), w.dt(), 1, seed, options), {}, {}, w.value_dim()};
    const auto& ens = sample.paths;
    if (ens.n_steps() != w.n_t()) fail(ErrorCode::ShapeMismatch, "ensemble steps do not match the map field slices");
    const int l1 = source.ambient_dim();
    const int l2 = w.value_dim();
    const std::size_t rows = n_paths * (ens.n_steps() + 1);
    sample.y.resize(static_cast<Eigen::Index>(rows), l2);
    sample.z.resize(static_cast<Eigen::Index>(rows), l1 * l2);
    const SliceEval eval(source, w);
    parallel_for(n_paths, options.threads, [&](std::size_t p) {
        for (std::size_t k = 0; k <= ens.n_steps(); ++k) {
            const IntrinsicPoint x = ens.state(p, k);
            const auto r = static_cast<Eigen::Index>(sample.row(p, k));
            sample.y.row(r) = eval.interp[k]->value(x).transpose();
            const Eigen::MatrixXd grad = eval.gradient(source, k, w.time(k), x);
            const Mat frame = source.tangent_frame(x);
            for (int i = 0; i < l1; ++i) sample.z.block(r, i * l2, 1, l2) = frame.row(i) * grad;
        }
    });
    return sample;
}

double bsde_residual(const SourceManifold& source, const TargetManifold& target, const BsdeSolutionSample& sample,
                     const MapField& u, bool flat_override) {
    const auto& ens = sample.paths;
    if (u.n_t() != ens.n_steps() || u.n_nodes() != source.node_count() || u.value_dim() != sample.value_dim ||
        static_cast<std::size_t>(sample.y.rows()) != ens.n_paths() * (ens.n_steps() + 1))
        fail(ErrorCode::ShapeMismatch, "sample, ensemble and map field shapes disagree");
    if (std::abs(u.dt() - ens.dt()) > 1e-12 * u.dt())
        fail(ErrorCode::ShapeMismatch, "sample and map field use different time steps");
    const SliceEval eval(source, u);
    const int l1 = source.ambient_dim();
    double total = 0.0;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) {
        Vec acc = Vec::Zero(sample.value_dim);
        for (std::size_t k = 0; k < ens.n_steps(); ++k) {
            const Vec yk = sample.y_at(p, k);
            Vec r = sample.y_at(p, k + 1) - yk;
            if (!flat_override) {
                const Eigen::MatrixXd grad = eval.gradient(source, k, u.time(k), ens.state(p, k));
                for (Eigen::Index a = 0; a < grad.rows(); ++a)
                    r -= 0.5 * ens.dt() * target.extended_sff(yk, grad.row(a).transpose());
            }
            const Vec dw = ens.increment(p, k);
            for (int i = 0; i < l1; ++i) r -= sample.z_at(p, k, i) * dw(i);
            acc += r;
        }
        total += acc.squaredNorm();
    }
    return std::sqrt(total / static_cast<double>(ens.n_paths()));
}

}  // namespace hmflow
