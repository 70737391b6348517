#pragma once

#include "hmflow/map_field.hpp"
#include "hmflow/picard_solver.hpp"
#include "hmflow/verification.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace hmflow {

/// section -> key -> value, as read from the file plus command-line overrides.
using ConfigTable = std::map<std::string, std::map<std::string, std::string>>;

struct ForwardRunConfig {
    double start_time = 0.0;
    double horizon = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 10'000;
    std::size_t start_node = 0;
    std::size_t dump_paths = 10;
    bool antithetic = false;
};

struct VerifyRunConfig {
    std::filesystem::path field;  ///< empty = <out>/field.bin
    std::size_t sample_paths = 1000;
    double tension_tolerance = 1e-2;
    double distance_tolerance = 1e-2;
    double weak_tolerance = 1e-3;
};

struct RunConfig {
    ConfigTable table;
    BenchmarkCase problem;
    bool is_benchmark = false;
    PicardOptions solver;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::filesystem::path out_dir = "hmflow-out";
    MapFieldFormat field_format = MapFieldFormat::Binary;
    bool svg = true;
    ForwardRunConfig forward;
    VerifyRunConfig verify;
};

/// Strict "key = value" text with [section] headers; '#' and ';' start comments.
ConfigTable parse_config_table(std::istream& in, const std::string& origin);
/// Validates every key and builds the typed configuration; unknown keys raise Config naming the key.
RunConfig build_config(const ConfigTable& table);
RunConfig load_config(const std::filesystem::path& path);

/// Applies --seed, --backend and --out on top of the file contents.
RunConfig with_overrides(const RunConfig& config, const std::optional<std::uint64_t>& seed,
                         const std::optional<std::string>& backend, const std::optional<std::filesystem::path>& out);

/// Canonical text of the effective configuration; parses back to the same RunConfig.
std::string echo_config(const ConfigTable& table);

}  // namespace hmflow
