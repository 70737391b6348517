#include "hmflow/benchmarks.hpp"

#include "hmflow/error.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace hmflow {

namespace {

double angle_of(const IntrinsicPoint& x) { return std::get<CirclePoint>(x).angle; }

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

std::string label(const std::string& what, double t) {
    std::ostringstream os;
    os << what << "(t=" << std::setprecision(6) << t << ")";
    return os.str();
}

}  // namespace

std::vector<std::string> benchmark_names() {
    return {"flat_circle", "identity_circle", "perturbed_geodesic", "perturbed_geodesic_tdm", "great_circle_s2",
            "equivariant_sphere"};
}

BenchmarkCase lift_case(const std::string& name, const RadiusProfile& radius, double horizon, int target_dim, bool flat,
                        int winding, double amplitude, int mode) {
    if (target_dim < 1 || target_dim > 2) fail(ErrorCode::Config, "lift target dimension must be 1 or 2");
    BenchmarkCase c;
    c.name = name;
    c.radius = radius;
    c.horizon = horizon;
    c.flat_target = flat;
    c.target_ambient_dim = target_dim + 1;
    c.reduction = flat ? Reduction::FlatHeat : Reduction::CircleLift;
    c.plane_e1 = Vec::Zero(c.target_ambient_dim);
    c.plane_e2 = Vec::Zero(c.target_ambient_dim);
    c.plane_e1(0) = 1.0;
    c.plane_e2(1) = 1.0;
    c.winding = winding;
    c.terminal_profile = [winding, amplitude, mode](double th) { return winding * th + amplitude * std::sin(mode * th); };
    const Vec e1 = c.plane_e1;
    const Vec e2 = c.plane_e2;
    if (flat) {
        const auto profile = c.terminal_profile;
        c.terminal_map = [profile, e1, e2](const IntrinsicPoint& x) {
            const double psi = profile(angle_of(x));
            return Vec(std::cos(psi) * e1 + std::sin(psi) * e2);
        };
        if (amplitude == 0.0) {
            c.closed_form = [radius, winding, e1, e2](double t, double t0, const IntrinsicPoint& x) {
                const double k = winding;
                const double th = angle_of(x);
                return Vec(std::exp(-0.5 * k * k * inverse_square_integral(radius, t, t0)) *
                           (std::cos(k * th) * e1 + std::sin(k * th) * e2));
            };
        }
        return c;
    }
    if (amplitude != 0.0) c.lift_mode = std::make_pair(mode, amplitude);
    c.closed_form = [radius, winding, amplitude, mode, e1, e2](double t, double t0, const IntrinsicPoint& x) {
        const double th = angle_of(x);
        const double decay = amplitude == 0.0 ? 0.0 : std::exp(-0.5 * mode * mode * inverse_square_integral(radius, t, t0));
        const double psi = winding * th + amplitude * decay * std::sin(mode * th);
        return Vec(std::cos(psi) * e1 + std::sin(psi) * e2);
    };
    return c;
}

BenchmarkCase great_circle_case(const std::string& name, const RadiusProfile& radius, double horizon, double tilt) {
    BenchmarkCase c = lift_case(name, radius, horizon, 2, false, 1, 0.0, 1);
    c.closed_form = nullptr;
    const double stretch = std::sqrt(1.0 + tilt * tilt);
    c.plane_e2 = vec3(0.0, 1.0 / stretch, tilt / stretch);
    c.terminal_profile = [stretch](double th) {
        return th + std::remainder(std::atan2(stretch * std::sin(th), std::cos(th)) - th, 2.0 * std::numbers::pi);
    };
    c.terminal_map = [tilt](const IntrinsicPoint& x) {
        const double th = angle_of(x);
        return Vec(vec3(std::cos(th), std::sin(th), tilt * std::sin(th)).normalized());
    };
    return c;
}

BenchmarkCase equivariant_case(const std::string& name, const RadiusProfile& radius, double horizon, double amplitude) {
    BenchmarkCase c;
    c.name = name;
    c.family = SourceFamily::Sphere2;
    c.radius = radius;
    c.horizon = horizon;
    c.reduction = Reduction::EquivariantSphere;
    c.target_ambient_dim = 3;
    c.terminal_profile = [amplitude](double th) { return th + amplitude * std::sin(th); };
    return c;
}

BenchmarkCase benchmark_case(const std::string& name) {
    const RadiusProfile unit = RadiusProfile::constant(1.0);
    BenchmarkCase c;
    if (name == "flat_circle") {
        c = lift_case(name, unit, 1.0, 1, true, 1, 0.0, 1);
        c.tolerance = 1e-6;
    } else if (name == "identity_circle") {
        c = lift_case(name, unit, 0.25, 1, false, 1, 0.0, 1);
        c.tolerance = 1e-3;
    } else if (name == "perturbed_geodesic") {
        c = lift_case(name, unit, 0.5, 1, false, 1, 0.3, 1);
        c.tolerance = 5e-3;
    } else if (name == "perturbed_geodesic_tdm") {
        c = lift_case(name, RadiusProfile::sinusoid(1.0, 0.2, 1.0), 0.5, 1, false, 1, 0.3, 1);
        c.tolerance = 1e-2;
    } else if (name == "great_circle_s2") {
        c = great_circle_case(name, unit, 0.25, 0.3);
        c.tolerance = 5e-3;
    } else if (name == "equivariant_sphere") {
        c = equivariant_case(name, unit, 0.1, 0.3);
        c.tolerance = 5e-3;
    } else {
        fail(ErrorCode::Config, "unknown benchmark '" + name + "'");
    }
    return c;
}

PicardOptions benchmark_options(const BenchmarkCase& c) {
    PicardOptions o;
    o.initial_horizon = c.horizon;
    o.dt = c.dt;
    return o;
}

std::vector<double> lift_mode_amplitudes(const SourceManifold& source, const BenchmarkCase& c, const MapField& u, int mode) {
    std::vector<double> out;
    out.reserve(u.n_slices());
    const auto n = static_cast<double>(source.node_count());
    for (std::size_t k = 0; k < u.n_slices(); ++k) {
        const NodalField q = lift_perturbation(source, c, u.slice(k));
        double b = 0.0;
        for (Eigen::Index j = 0; j < q.rows(); ++j)
            b += 2.0 * q(j, 0) * std::sin(mode * angle_of(source.node(static_cast<std::size_t>(j)))) / n;
        out.push_back(b);
    }
    return out;
}

BenchmarkRun run_benchmark(const BenchmarkCase& c, const PicardOptions& options) {
    BenchmarkRun run;
    run.problem = c;
    const SourcePtr source = c.make_source();
    const BsdeOperator op(source, c.make_target(), options.bsde);
    run.result = solve(op, c.terminal(*source), options);
    const MapField& u = run.result.solution;

    BenchmarkCase solved = c;
    solved.horizon = run.result.state.horizon;
    const std::size_t n_x = c.family == SourceFamily::Circle ? source->node_count() : 400;
    run.reference = pde_reference(solved, *source, u.n_t(), n_x);
    run.sup_error = sup_distance(u, run.reference);

    auto& rows = run.rows;
    rows.push_back({"sup_error", run.sup_error, 0.0, run.sup_error});
    rows.push_back({"horizon", solved.horizon, c.horizon, std::abs(solved.horizon - c.horizon)});
    rows.push_back({"iterations", static_cast<double>(run.result.state.n), 0.0, 0.0});
    const double last = run.result.state.deltas.empty() ? 0.0 : run.result.state.deltas.back();
    rows.push_back({"final_delta", last, options.tolerance, std::max(0.0, last - options.tolerance)});

    const std::size_t stride = std::max<std::size_t>(1, u.n_t() / 10);
    const std::size_t node_stride = std::max<std::size_t>(1, source->node_count() / 8);
    for (std::size_t k = 0; k <= u.n_t(); k += stride) {
        const double err = (u.slice(k) - run.reference.slice(k)).rowwise().norm().maxCoeff();
        rows.push_back({label("slice_sup_error", u.time(k)), err, 0.0, err});
        for (std::size_t j = 0; j < source->node_count(); j += node_stride) {
            for (int comp = 0; comp < u.value_dim(); ++comp) {
                const double a = u.slice(k)(static_cast<Eigen::Index>(j), comp);
                const double b = run.reference.slice(k)(static_cast<Eigen::Index>(j), comp);
                std::ostringstream q;
                q << "u[k=" << k << ";node=" << j << ";c=" << comp << "]";
                rows.push_back({q.str(), a, b, std::abs(a - b)});
            }
        }
    }

    if (c.lift_mode) {
        const auto [mode, amplitude] = *c.lift_mode;
        const auto amps = lift_mode_amplitudes(*source, c, u, mode);
        double worst = 0.0;
        for (std::size_t k = 0; k < amps.size(); ++k) {
            const double factor = amps[k] / amplitude;
            const double exact = std::exp(-0.5 * static_cast<double>(mode * mode) *
                                          inverse_square_integral(c.radius, u.time(k), solved.horizon));
            worst = std::max(worst, std::abs(factor - exact));
            if (k % stride == 0) rows.push_back({label("amplitude_factor", u.time(k)), factor, exact, std::abs(factor - exact)});
        }
        run.amplitude_error = worst;
        rows.push_back({"amplitude_factor_sup_error", worst, 0.0, worst});
    }
    run.pass = run.result.state.converged && run.sup_error <= c.tolerance &&
               (!run.amplitude_error || *run.amplitude_error <= c.tolerance);
    return run;
}

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out) {
    out << "quantity,computed,reference,error\n" << std::setprecision(17);
    for (const auto& r : rows) out << r.quantity << ',' << r.computed << ',' << r.reference << ',' << r.error << '\n';
}

}  // namespace hmflow
