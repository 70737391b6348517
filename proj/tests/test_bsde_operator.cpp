#include "doctest.h"

#include "hmflow/bsde_operator.hpp"
#include "hmflow/error.hpp"
#include "hmflow/source_sphere.hpp"

#include <cmath>
#include <numbers>

using namespace hmflow;

namespace {

NodalField circle_curve(const SourceManifold& c, int winding, double scale = 1.0) {
    NodalField s(c.node_count(), 2);
    for (std::size_t j = 0; j < c.node_count(); ++j) {
        const double th = std::get<CirclePoint>(c.node(j)).angle;
        s(j, 0) = scale * std::cos(winding * th);
        s(j, 1) = scale * std::sin(winding * th);
    }
    return s;
}

BsdeOptions flat_options(Backend backend) {
    BsdeOptions o;
    o.backend = backend;
    o.flat_override = true;
    return o;
}

}  // namespace

TEST_CASE("flat override reproduces the heat semigroup") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1), flat_options(Backend::Semigroup));
    const NodalField h = circle_curve(*c, 1);
    const auto u = MapField::constant_in_time(h, 1000, 1.0);
    const auto w = op.apply(u, h);
    double worst = 0.0;
    for (std::size_t k = 0; k < w.n_slices(); ++k)
        worst = std::max(worst, (w.slice(k) - std::exp(-(1.0 - w.time(k)) / 2) * h).cwiseAbs().maxCoeff());
    CHECK(worst <= 1e-6);
    CHECK((w.terminal().array() == h.array()).all());
}

TEST_CASE("Monte Carlo backend agrees with the semigroup within 3 standard errors") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const NodalField h = circle_curve(*c, 1);
    const auto u = MapField::constant_in_time(h, 1000, 1.0);
    const BsdeOperator sg(c, TargetManifold::unit_sphere(1), flat_options(Backend::Semigroup));
    auto mc_opts = flat_options(Backend::MonteCarlo);
    mc_opts.mc_paths = 10'000;
    const BsdeOperator mc(c, TargetManifold::unit_sphere(1), mc_opts);
    const auto exact = sg.apply(u, h);
    const auto sampled = mc.apply_with_error(u, h);
    CHECK((sampled.w.terminal().array() == h.array()).all());
    std::size_t outside = 0;
    for (std::size_t k = 0; k < exact.n_slices(); k += 50) {
        const auto diff = (sampled.w.slice(k) - exact.slice(k)).cwiseAbs();
        const auto& se = sampled.standard_error.slice(k);
        for (Eigen::Index j = 0; j < diff.rows(); ++j)
            for (Eigen::Index q = 0; q < diff.cols(); ++q)
                if (diff(j, q) > 3.0 * se(j, q) + 1e-15) ++outside;
    }
    CHECK(outside == 0);
    CHECK(sampled.standard_error.slice(0).maxCoeff() > 0.0);
    // Determinism of the keyed node batches.
    const auto again = mc.apply(u, h);
    CHECK((again.slice(0).array() == sampled.w.slice(0).array()).all());
}

TEST_CASE("quadrature fallback matches the exact semigroup") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 64);
    const NodalField h = circle_curve(*c, 2);
    const auto u = MapField::constant_in_time(h, 100, 0.5);
    auto q = flat_options(Backend::MonteCarlo);
    q.mc_paths = 0;
    const auto a = BsdeOperator(c, TargetManifold::unit_sphere(1), q).apply_with_error(u, h);
    const auto b = BsdeOperator(c, TargetManifold::unit_sphere(1), flat_options(Backend::Semigroup)).apply(u, h);
    CHECK(sup_distance(a.w, b) < 1e-12);
    CHECK(a.standard_error.sup_norm() == 0.0);
}

TEST_CASE("identity map is a fixed point up to the splitting error") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const NodalField h = circle_curve(*c, 1);
    const double dt = 1e-3;
    const auto u = MapField::constant_in_time(h, 250, 0.25);
    const auto w = BsdeOperator(c, TargetManifold::unit_sphere(1)).apply(u, h);
    // Oracle: w stays radial with r_k = exp(-dt/2) r_{k+1} + dt/2 from r = 1 at T0.
    double r = 1.0;
    double worst = 0.0;
    for (std::size_t k = 250; k-- > 0;) {
        r = std::exp(-dt / 2) * r + dt / 2;
        worst = std::max(worst, (w.slice(k) - r * h).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
    MESSAGE("identity-map deviation |w - h| = " << sup_distance(w, u) << ", r(0) - 1 = " << r - 1);
    CHECK(sup_distance(w, u) == doctest::Approx(r - 1.0).epsilon(1e-6));
    CHECK(sup_distance(w, u) <= 1e-4);
}

TEST_CASE("implicit driver sweeps are a small correction") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 128);
    const NodalField h = circle_curve(*c, 1);
    const auto u = MapField::constant_in_time(h, 250, 0.25);
    BsdeOptions o;
    o.implicit_driver = true;
    const auto wi = BsdeOperator(c, TargetManifold::unit_sphere(1), o).apply(u, h);
    const auto we = BsdeOperator(c, TargetManifold::unit_sphere(1)).apply(u, h);
    CHECK(sup_distance(wi, we) < 1e-6);
    CHECK(sup_distance(wi, u) < 1e-4);
}

TEST_CASE("error conditions") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 0.5, 64);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    const NodalField h = circle_curve(*c, 1);
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code_of([&] { (void)op.apply(MapField::constant_in_time(h, 100, 1.0), h); }) == ErrorCode::HorizonMismatch);
    CHECK(code_of([&] { (void)op.apply(MapField::constant_in_time(h, 100, 0.5), h.topRows(32)); }) ==
          ErrorCode::ShapeMismatch);
    // One explicit step with |grad u| = 100 and dt = 0.01 jumps far beyond 10 (sup|h| + 1).
    const auto fine = make_circle_source(RadiusProfile::constant(1.0), 0.5, 256);
    const auto wild = MapField::constant_in_time(circle_curve(*fine, 100), 50, 0.5);
    CHECK(code_of([&] { (void)BsdeOperator(fine, TargetManifold::unit_sphere(1)).apply(wild, circle_curve(*fine, 1)); }) ==
          ErrorCode::BlowUp);
    CHECK(parse_backend("monte-carlo") == Backend::MonteCarlo);
    CHECK(code_of([] { (void)parse_backend("euler"); }) == ErrorCode::Config);
}

TEST_CASE("norm bound shape: fitted beta decreases with the horizon") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 128);
    const NodalField h = circle_curve(*c, 1);
    const double dt = 5e-3;
    const double h_norm = c01_norm(*c, MapField::constant_in_time(h, 1, 1.0));
    double prev = std::numeric_limits<double>::infinity();
    for (double t0 : {0.4, 0.2, 0.1, 0.05}) {
        const auto n_t = static_cast<std::size_t>(std::lround(t0 / dt));
        const BsdeOperator op(c, TargetManifold::unit_sphere(1));
        double beta = 0.0;
        for (double scale : {0.5, 1.0, 1.5}) {
            for (int winding : {1, 2}) {
                const auto u = MapField::constant_in_time(circle_curve(*c, winding, scale), n_t, t0);
                const double un = c01_norm(*c, u);
                beta = std::max(beta, (c01_norm(*c, op.apply(u, h)) - h_norm) / (un * un));
            }
        }
        MESSAGE("T0 = " << t0 << ": fitted beta = " << beta);
        CHECK(beta < prev);
        prev = beta;
    }
}

TEST_CASE("sphere Monte Carlo one-step expectation agrees with quadrature and the exact decay") {
    const auto s = make_sphere_source(RadiusProfile::constant(1.0), 1.0, 64, 128);
    NodalField g(s->node_count(), 1);
    for (std::size_t j = 0; j < s->node_count(); ++j) g(j, 0) = std::get<SpherePoint>(s->node(j)).unit.z();
    BsdeOptions o;
    o.backend = Backend::MonteCarlo;
    o.mc_paths = 2000;
    NodalField se;
    const auto mc = BsdeOperator(s, TargetManifold::unit_sphere(2), o).conditional_expectation(0, 0.0, 0.01, g, &se);
    o.mc_paths = 0;
    o.quadrature_order = 8;
    const auto quad = BsdeOperator(s, TargetManifold::unit_sphere(2), o).conditional_expectation(0, 0.0, 0.01, g, nullptr);
    // Same interpolant and scheme on both sides: agreement up to sampling error.
    std::size_t outside = 0;
    for (Eigen::Index j = 0; j < g.rows(); ++j)
        if (std::abs(mc(j, 0) - quad(j, 0)) > 4.5 * se(j, 0)) ++outside;
    CHECK(outside == 0);
    // Exact: E z(X_dt) = exp(-dt) z, up to bilinear interpolation (dtheta^2 / 8) and O(dt^2) scheme bias.
    const double dtheta = std::numbers::pi / 64;
    CHECK((quad - std::exp(-0.01) * g).cwiseAbs().maxCoeff() < dtheta * dtheta / 8 + 1e-4);
}

TEST_CASE("solution sample and BSDE residual") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 128);
    const auto target = TargetManifold::unit_sphere(1);
    SUBCASE("zero noise with constant w") {
        const auto w = MapField::constant_in_time(NodalField::Constant(128, 2, 0.6), 50, 0.25);
        ForwardOptions fo;
        fo.zero_noise = true;
        const auto sample = make_solution_sample(*c, w, 20, 1, fo);
        CHECK(bsde_residual(*c, target, sample, w) == 0.0);
        CHECK(sample.max_z_norm() < 1e-12);
    }
    SUBCASE("identity fixed point: residual is the Ito remainder sqrt(T0 dt / 2)") {
        const NodalField h = circle_curve(*c, 1);
        const auto w = BsdeOperator(c, target).apply(MapField::constant_in_time(h, 250, 0.25), h);
        const auto sample = make_solution_sample(*c, w, 1000, 3);
        const double r = bsde_residual(*c, target, sample, w);
        MESSAGE("identity-map BSDE residual " << r << " vs " << std::sqrt(0.25e-3 / 2));
        CHECK(r == doctest::Approx(std::sqrt(0.25e-3 / 2)).epsilon(0.15));
        CHECK(sample.max_z_norm() == doctest::Approx(1.0).epsilon(1e-3));
        CHECK((sample.y_at(0, 0) - w.value(0, 0)).norm() < 1e-12);
    }
    SUBCASE("flat override with the exact heat solution: order 1/2 under refinement") {
        const NodalField h = circle_curve(*c, 1);
        std::vector<double> dts{4e-3, 1e-3}, res;
        for (double dt : dts) {
            const auto n_t = static_cast<std::size_t>(std::lround(0.5 / dt));
            MapField w(n_t, 128, 2, 0.5);
            for (std::size_t k = 0; k < w.n_slices(); ++k) w.slice(k) = std::exp(-(0.5 - w.time(k)) / 2) * h;
            const auto sample = make_solution_sample(*c, w, 1000, 5);
            res.push_back(bsde_residual(*c, target, sample, w, true));
        }
        const double order = loglog_slope(dts, res);
        MESSAGE("flat residual order " << order);
        CHECK(order > 0.35);
        CHECK(order < 0.65);
    }
}
