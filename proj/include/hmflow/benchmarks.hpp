#pragma once

#include "hmflow/picard_solver.hpp"
#include "hmflow/verification.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hmflow {

/// flat_circle, identity_circle, perturbed_geodesic, perturbed_geodesic_tdm, great_circle_s2, equivariant_sphere.
std::vector<std::string> benchmark_names();
/// Throws Config for an unknown name.
BenchmarkCase benchmark_case(const std::string& name);

/// Circle into S^d (or flat R^{d+1}) with lift psi_T = winding * theta + amplitude * sin(mode * theta).
BenchmarkCase lift_case(const std::string& name, const RadiusProfile& radius, double horizon, int target_dim, bool flat,
                        int winding, double amplitude, int mode);
/// theta -> normalize(cos, sin, tilt * sin): a great circle of S^2 at non-constant speed.
BenchmarkCase great_circle_case(const std::string& name, const RadiusProfile& radius, double horizon, double tilt);
/// Sphere to sphere, colatitude theta -> theta + amplitude * sin(theta).
BenchmarkCase equivariant_case(const std::string& name, const RadiusProfile& radius, double horizon, double amplitude);

struct BenchmarkRow {
    std::string quantity;
    double computed = 0.0;
    double reference = 0.0;
    double error = 0.0;
};

struct BenchmarkRun {
    BenchmarkCase problem;
    SolveResult result;
    MapField reference;
    std::vector<BenchmarkRow> rows;
    double sup_error = 0.0;
    std::optional<double> amplitude_error;
    bool pass = false;
};

/// Picard options matching the case's horizon and time step.
PicardOptions benchmark_options(const BenchmarkCase& c);

/// Solves the case, compares against the reference solver and tabulates the comparison.
BenchmarkRun run_benchmark(const BenchmarkCase& c, const PicardOptions& options);

/// Amplitude of sin(mode theta) in the lift perturbation of every slice.
std::vector<double> lift_mode_amplitudes(const SourceManifold& source, const BenchmarkCase& c, const MapField& u, int mode);

void write_benchmark_csv(const std::vector<BenchmarkRow>& rows, std::ostream& out);

}  // namespace hmflow
