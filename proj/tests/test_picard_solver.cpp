#include "doctest.h"

#include "hmflow/error.hpp"
#include "hmflow/picard_solver.hpp"

#include "json.hpp"

#include <cmath>
#include <sstream>

using namespace hmflow;

namespace {

NodalField lifted_curve(const SourceManifold& c, double amplitude) {
    NodalField s(c.node_count(), 2);
    for (std::size_t j = 0; j < c.node_count(); ++j) {
        const double th = std::get<CirclePoint>(c.node(j)).angle;
        const double phi = th + amplitude * std::sin(th);
        s(j, 0) = std::cos(phi);
        s(j, 1) = std::sin(phi);
    }
    return s;
}

double closed_form_error(const SourceManifold& c, const MapField& u, double amplitude) {
    double worst = 0.0;
    for (std::size_t k = 0; k < u.n_slices(); ++k) {
        const double decay = std::exp(-(u.horizon() - u.time(k)) / 2);
        for (std::size_t j = 0; j < c.node_count(); ++j) {
            const double th = std::get<CirclePoint>(c.node(j)).angle;
            const double phi = th + amplitude * decay * std::sin(th);
            worst = std::max(worst, (u.value(k, j) - Vec(Eigen::Vector2d(std::cos(phi), std::sin(phi)))).norm());
        }
    }
    return worst;
}

PicardOptions options_for(double horizon, double dt = 1e-3) {
    PicardOptions o;
    o.initial_horizon = horizon;
    o.dt = dt;
    o.sample_paths = 0;
    return o;
}

}  // namespace

TEST_CASE("identity map converges immediately") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    const NodalField h = lifted_curve(*c, 0.0);
    const auto res = solve(op, h, options_for(0.25));
    REQUIRE(res.state.converged);
    MESSAGE("identity map: delta_1 = " << res.state.deltas.front() << ", iterations " << res.state.n);
    CHECK(res.state.deltas.front() <= 1e-4);
    CHECK(sup_distance(res.solution, MapField::constant_in_time(h, 250, 0.25)) <= 1e-3);
    CHECK(res.state.abandoned_horizons.empty());
    CHECK(res.state.ball_ok);
}

TEST_CASE("perturbed geodesic matches the closed-form lift") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    auto opts = options_for(0.5);
    opts.sample_paths = 200;
    const auto res = solve(op, lifted_curve(*c, 0.3), opts);
    REQUIRE(res.state.converged);
    const double err = closed_form_error(*c, res.solution, 0.3);
    MESSAGE("perturbed geodesic sup-error " << err << " after " << res.state.n << " iterations");
    CHECK(err <= 5e-3);
    CHECK((res.solution.terminal().array() == lifted_curve(*c, 0.3).array()).all());
    // Fixed-point residual.
    CHECK(c01_norm(*c, op.apply(res.solution, lifted_curve(*c, 0.3)) - res.solution) <= 2 * opts.tolerance);
    CHECK(res.state.ball_ok);
    REQUIRE(res.sample.has_value());
    CHECK(res.sample->paths.n_paths() == 200);
    // Time derivative bounded by half the tension field.
    double dudt = 0.0;
    double tension = 0.0;
    const auto& u = res.solution;
    for (std::size_t k = 0; k < u.n_t(); ++k) {
        dudt = std::max(dudt, ((u.slice(k + 1) - u.slice(k)) / u.dt()).rowwise().norm().maxCoeff());
        const auto grad = c->metric_gradient(u.time(k), u.slice(k));
        const NodalField lap = c->laplace_beltrami(u.time(k), u.slice(k));
        for (Eigen::Index j = 0; j < lap.rows(); ++j) {
            const Vec p = u.slice(k).row(j).transpose();
            const Vec g = grad[0].row(j).transpose();
            tension = std::max(tension, 0.5 * (lap.row(j).transpose() - op.target().extended_sff(p, g)).norm());
        }
    }
    CHECK(dudt <= 1.01 * tension);
}

TEST_CASE("contraction regime") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 256);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    const NodalField h = lifted_curve(*c, 0.3);
    const auto small = solve(op, h, options_for(0.05));
    REQUIRE(small.state.converged);
    const auto rows = contraction_report(small.state);
    std::size_t recorded = 0;
    for (const auto& r : rows) {
        if (!r.ratio) continue;
        ++recorded;
        CHECK(*r.ratio <= 0.5);
    }
    CHECK(recorded >= 2);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].delta < rows[i - 1].delta);
    const auto medium = solve(op, h, options_for(0.2));
    CHECK(medium.state.converged);
    CHECK(medium.state.abandoned_horizons.empty());
}

TEST_CASE("long horizon run terminates") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 128);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    auto opts = options_for(0.8, 5e-3);
    const auto res = solve(op, lifted_curve(*c, 0.3), opts);
    CHECK(res.state.converged);
    MESSAGE("T0 = 0.8 finished at horizon " << res.state.horizon << " after " << res.state.abandoned_horizons.size()
                                            << " halvings");
}

TEST_CASE("error conditions") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 64);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    NodalField off = lifted_curve(*c, 0.0);
    off(3, 0) *= 1.01;
    auto code_of = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    CHECK(code_of([&] { (void)solve(op, off, options_for(0.1)); }) == ErrorCode::TerminalNotOnTarget);
    auto never = options_for(0.1);
    never.ratio_trigger = 0.0;
    never.tolerance = 1e-300;
    CHECK(code_of([&] { (void)solve(op, lifted_curve(*c, 0.3), never); }) == ErrorCode::NoContraction);
    PicardState empty;
    CHECK(code_of([&] { (void)contraction_report(empty); }) == ErrorCode::InsufficientHistory);
}

TEST_CASE("Monte Carlo iterate histories are deterministic") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 64);
    BsdeOptions b;
    b.backend = Backend::MonteCarlo;
    b.mc_paths = 500;
    b.seed = 11;
    const BsdeOperator op(c, TargetManifold::unit_sphere(1), b);
    auto opts = options_for(0.05, 5e-3);
    opts.tolerance = 1e-6;
    const auto a = solve(op, lifted_curve(*c, 0.3), opts);
    const auto again = solve(op, lifted_curve(*c, 0.3), opts);
    CHECK(a.state.deltas == again.state.deltas);
    CHECK(iteration_json_lines(a.state) == iteration_json_lines(again.state));
}

TEST_CASE("iteration JSON records") {
    const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, 64);
    const BsdeOperator op(c, TargetManifold::unit_sphere(1));
    const auto res = solve(op, lifted_curve(*c, 0.3), options_for(0.05, 5e-3));
    std::istringstream is(iteration_json_lines(res.state));
    std::string line;
    std::size_t count = 0;
    while (std::getline(is, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("n"));
        CHECK(j.contains("delta"));
        CHECK(j.contains("ratio"));
        CHECK(j["horizon"].get<double>() == doctest::Approx(0.05));
        CHECK(j["wall_time"].is_null());
        ++count;
    }
    CHECK(count == res.state.records.size());
}

TEST_CASE("Z stays bounded under grid refinement") {
    double prev = 0.0;
    for (std::size_t n : {128, 256}) {
        const auto c = make_circle_source(RadiusProfile::constant(1.0), 1.0, n);
        const BsdeOperator op(c, TargetManifold::unit_sphere(1));
        auto opts = options_for(0.25, 2.5e-3);
        opts.sample_paths = 500;
        const auto res = solve(op, lifted_curve(*c, 0.3), opts);
        const double zmax = res.sample->max_z_norm();
        CHECK(std::isfinite(zmax));
        if (prev > 0.0) {
            CHECK(zmax / prev >= 0.8);
            CHECK(zmax / prev <= 1.25);
        }
        prev = zmax;
    }
}
