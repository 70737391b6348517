#include "doctest.h"

#include "hmflow/benchmarks.hpp"
#include "hmflow/error.hpp"
#include "hmflow/verification.hpp"
#include "test_helpers.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace hmflow;
using hmflow::testing::vec;

namespace {

double angle(const SourceManifold& s, std::size_t j) { return std::get<CirclePoint>(s.node(j)).angle; }

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

/// Composite Simpson rule for int_a^b rho^{-2}, independent of the library quadrature.
double simpson_inverse_square(const RadiusProfile& r, double a, double b, int n = 2000) {
    const double h = (b - a) / n;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = r.value(a + i * h);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        s += w / (v * v);
    }
    return s * h / 3.0;
}

NodalField cos_field(const SourceManifold& s) {
    NodalField f(s.node_count(), 1);
    for (std::size_t j = 0; j < s.node_count(); ++j) f(static_cast<Eigen::Index>(j), 0) = std::cos(angle(s, j));
    return f;
}

}  // namespace

TEST_CASE("circle lift reference matches the single-mode decay") {
    auto c = benchmark_case("perturbed_geodesic");
    const auto src = c.make_source();
    const MapField ref = pde_reference(c, *src, 100, src->node_count());
    double worst = 0.0;
    for (std::size_t k = 0; k <= 100; ++k) {
        const double amp = 0.3 * std::exp(-(c.horizon - ref.time(k)) / 2);
        for (std::size_t j = 0; j < src->node_count(); ++j) {
            const double th = angle(*src, j);
            const double phi = th + amp * std::sin(th);
            worst = std::max(worst, (ref.value(k, j) - vec({std::cos(phi), std::sin(phi)})).norm());
        }
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("time-dependent metric reference uses the time-changed decay") {
    auto c = benchmark_case("perturbed_geodesic_tdm");
    const auto src = c.make_source();
    CHECK(inverse_square_integral(c.radius, 0.1, 0.5) == doctest::Approx(simpson_inverse_square(c.radius, 0.1, 0.5)).epsilon(1e-12));
    const MapField ref = pde_reference(c, *src, 50, src->node_count());
    const auto amps = lift_mode_amplitudes(*src, c, ref, 1);
    for (std::size_t k = 0; k <= 50; ++k) {
        const double exact = 0.3 * std::exp(-0.5 * simpson_inverse_square(c.radius, ref.time(k), c.horizon));
        CHECK(amps[k] == doctest::Approx(exact).epsilon(1e-10));
    }
}

TEST_CASE("harmonic lifts are stationary for every winding number") {
    for (int k : {1, 2, 3}) {
        BenchmarkCase c = benchmark_case("identity_circle");
        c.winding = k;
        c.terminal_profile = [k](double th) { return k * th; };
        const auto src = c.make_source();
        const MapField ref = pde_reference(c, *src, 20, src->node_count());
        CHECK(sup_distance(ref, MapField::constant_in_time(ref.terminal(), 20, c.horizon)) <= 1e-12);
    }
}

TEST_CASE("unsupported reductions are rejected") {
    BenchmarkCase c = benchmark_case("perturbed_geodesic");
    c.reduction = Reduction::None;
    const auto src = c.make_source();
    CHECK(code_of([&] { (void)pde_reference(c, *src, 10, 64); }) == ErrorCode::UnsupportedReduction);
    BenchmarkCase sphere = benchmark_case("equivariant_sphere");
    sphere.reduction = Reduction::CircleLift;
    const auto ssrc = sphere.make_source();
    CHECK(code_of([&] { (void)pde_reference(sphere, *ssrc, 10, 64); }) == ErrorCode::UnsupportedReduction);
    CHECK(code_of([] { (void)benchmark_case("no_such_case"); }) == ErrorCode::Config);
}

TEST_CASE("equivariant reference: identity is stationary and refinement converges") {
    BenchmarkCase id = benchmark_case("equivariant_sphere");
    id.terminal_profile = [](double th) { return th; };
    const auto src = id.make_source();
    const MapField still = pde_reference(id, *src, 10, 200);
    CHECK(sup_distance(still, MapField::constant_in_time(still.terminal(), 10, id.horizon)) <= 1e-6);

    const BenchmarkCase c = benchmark_case("equivariant_sphere");
    const MapField r100 = pde_reference(c, *src, 10, 100);
    const MapField r200 = pde_reference(c, *src, 10, 200);
    const MapField r400 = pde_reference(c, *src, 10, 400);
    const double e1 = sup_distance(r100, r400);
    const double e2 = sup_distance(r200, r400);
    CHECK(e2 < e1 / 2.5);
    CHECK(e2 < 1e-4);
    // The flow moves the profile away from its terminal value.
    CHECK(sup_distance(r400, MapField::constant_in_time(r400.terminal(), 10, c.horizon)) > 1e-3);
}

TEST_CASE("closed forms satisfy the PDE") {
    for (const auto& name : benchmark_names()) {
        const BenchmarkCase c = benchmark_case(name);
        if (!c.closed_form) continue;
        const auto src = c.make_source();
        const double r = closed_form_residual(c, *src);
        INFO(name << " residual " << r);
        CHECK(r <= 1e-8);
    }
}

TEST_CASE("tension residual examples") {
    const auto src = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const auto s1 = TargetManifold::unit_sphere(1);
    NodalField point(256, 2);
    point.col(0).setConstant(0.6);
    point.col(1).setConstant(0.8);
    CHECK(sup_of(tension_residual(*src, s1, MapField::constant_in_time(point, 10, 0.5))) <= 1e-14);

    const BenchmarkCase id = benchmark_case("identity_circle");
    const NodalField h = id.terminal(*src);
    CHECK(sup_of(tension_residual(*src, s1, MapField::constant_in_time(h, 10, 0.25))) <= 1e-4);

    const BenchmarkCase pg = benchmark_case("perturbed_geodesic");
    double prev = 1.0;
    for (std::size_t n_t : {25, 50, 100}) {
        const double r = sup_of(tension_residual(*src, s1, pg.sample_closed_form(*src, n_t)));
        CHECK(r < prev / 3.0);
        prev = r;
    }

    NodalField off = h;
    off.row(5) *= 1.25;
    CHECK(code_of([&] { (void)tension_residual(*src, s1, MapField::constant_in_time(off, 4, 0.25)); }) ==
          ErrorCode::FieldLeftTube);
}

TEST_CASE("self-adjointness of the circle quadrature") {
    const auto src = make_circle_source(RadiusProfile::sinusoid(1.0, 0.2, 1.0), 1.0, 128);
    std::mt19937_64 gen(7);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        NodalField a = NodalField::Zero(128, 2);
        NodalField b = NodalField::Zero(128, 2);
        for (int k = 0; k <= 10; ++k) {
            const double ca = n(gen), sa = n(gen), cb = n(gen), sb = n(gen);
            for (Eigen::Index j = 0; j < 128; ++j) {
                const double th = angle(*src, static_cast<std::size_t>(j));
                a(j, trial % 2) += ca * std::cos(k * th) + sa * std::sin(k * th);
                b(j, trial % 2) += cb * std::cos(k * th) + sb * std::sin(k * th);
            }
        }
        CHECK(self_adjointness_defect(*src, 0.3, a, b) <= 1e-8);
    }
}

TEST_CASE("stay on target") {
    const BenchmarkCase gc = benchmark_case("great_circle_s2");
    const auto src = gc.make_source();
    const auto s2 = gc.make_target();
    const BsdeOperator op(src, s2);
    auto run_at = [&](double dt) {
        PicardOptions o;
        o.initial_horizon = gc.horizon;
        o.dt = dt;
        o.sample_paths = 200;
        const auto res = solve(op, gc.terminal(*src), o);
        return stay_on_target(s2, *res.sample);
    };
    const auto coarse = run_at(0.05);
    const auto fine = run_at(0.005);
    MESSAGE("stay-on-target: dt 0.05 -> " << coarse.max_distance << ", dt 0.005 -> " << fine.max_distance);
    CHECK(fine.max_distance <= 1e-2);
    CHECK(coarse.max_distance >= 2.0 * fine.max_distance);
    CHECK(fine.curve.size() == 51);
    CHECK(fine.curve.back().mean_g <= 1e-20);
    CHECK(fine.curve.front().tail_integral > 0.0);
    CHECK(std::isfinite(fine.fitted_constant));

    // A flat subspace stays exactly in place.
    Mat basis(3, 2);
    basis << 1, 0, 0, 1, 0, 0;
    const auto plane = TargetManifold::flat(3, basis);
    const auto csrc = make_circle_source(RadiusProfile::constant(1.0), 1.0, 64);
    NodalField h = NodalField::Zero(64, 3);
    for (Eigen::Index j = 0; j < 64; ++j) {
        h(j, 0) = std::cos(angle(*csrc, static_cast<std::size_t>(j)));
        h(j, 1) = std::sin(2 * angle(*csrc, static_cast<std::size_t>(j)));
    }
    PicardOptions o;
    o.initial_horizon = 0.2;
    o.dt = 0.01;
    o.sample_paths = 100;
    const auto res = solve(BsdeOperator(csrc, plane), h, o);
    CHECK(stay_on_target(plane, *res.sample).max_distance == 0.0);
}

TEST_CASE("weak form residual") {
    const BenchmarkCase c = benchmark_case("perturbed_geodesic");
    const auto src = c.make_source();
    const auto target = c.make_target();
    const MapField exact = c.sample_closed_form(*src, 500);
    CHECK(weak_form_residual(*src, target, exact, NodalField::Zero(256, 1)) == 0.0);
    CHECK(weak_form_residual(*src, target, exact, cos_field(*src)) <= 1e-6);

    const auto run = run_benchmark(c, benchmark_options(c));
    const double r = weak_form_residual(*src, target, run.result.solution, cos_field(*src));
    MESSAGE("weak-form residual at defaults " << r);
    CHECK(r <= 1e-3);

    double prev = 1.0;
    for (auto [dt, n] : {std::pair{4e-3, 64}, std::pair{2e-3, 128}, std::pair{1e-3, 256}}) {
        BenchmarkCase rc = c;
        rc.dt = dt;
        rc.n_theta = static_cast<std::size_t>(n);
        const auto rsrc = rc.make_source();
        const auto rr = run_benchmark(rc, benchmark_options(rc));
        const double w = weak_form_residual(*rsrc, target, rr.result.solution, cos_field(*rsrc));
        CHECK(w < prev);
        prev = w;
    }
}

TEST_CASE("time-dependent volume enters the weak form") {
    const BenchmarkCase c = benchmark_case("perturbed_geodesic_tdm");
    const auto src = c.make_source();
    const MapField exact = c.sample_closed_form(*src, 500);
    CHECK(weak_form_residual(*src, c.make_target(), exact, cos_field(*src)) <= 1e-6);
    // Ignoring the volume change leaves an O(1) defect.
    const auto frozen = make_circle_source(RadiusProfile::constant(1.0), c.horizon, 256);
    CHECK(weak_form_residual(*frozen, c.make_target(), exact, cos_field(*src)) > 1e-3);
}

TEST_CASE("benchmark registry cross-validation") {
    for (const auto& name : benchmark_names()) {
        const BenchmarkCase c = benchmark_case(name);
        const auto run = run_benchmark(c, benchmark_options(c));
        INFO(name << " sup error " << run.sup_error);
        CHECK(run.pass);
        CHECK(run.sup_error <= c.tolerance);
        std::ostringstream os;
        write_benchmark_csv(run.rows, os);
        std::istringstream is(os.str());
        std::string line;
        std::getline(is, line);
        CHECK(line == "quantity,computed,reference,error");
        std::size_t rows = 0;
        while (std::getline(is, line)) {
            CHECK(std::count(line.begin(), line.end(), ',') == 3);
            ++rows;
        }
        CHECK(rows == run.rows.size());
        CHECK(run.rows.front().quantity == "sup_error");
    }
}
