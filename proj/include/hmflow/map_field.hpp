#pragma once

#include "hmflow/source_geometry.hpp"
#include "hmflow/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace hmflow {

/// Map [0, T0] x M -> R^{L2} sampled on n_t + 1 equally spaced time slices and the source grid.
class MapField {
public:
    MapField() = default;
    MapField(std::size_t n_t, std::size_t n_nodes, int value_dim, double horizon);

    /// u(t, x) = slice for every t (the initial Picard iterate).
    static MapField constant_in_time(const NodalField& slice, std::size_t n_t, double horizon);

    [[nodiscard]] std::size_t n_t() const noexcept { return n_t_; }
    [[nodiscard]] std::size_t n_slices() const noexcept { return slices_.size(); }
    [[nodiscard]] std::size_t n_nodes() const noexcept { return n_nodes_; }
    [[nodiscard]] int value_dim() const noexcept { return value_dim_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] double dt() const noexcept { return horizon_ / static_cast<double>(n_t_); }
    [[nodiscard]] double time(std::size_t k) const noexcept;

    [[nodiscard]] NodalField& slice(std::size_t k) { return slices_.at(k); }
    [[nodiscard]] const NodalField& slice(std::size_t k) const { return slices_.at(k); }
    [[nodiscard]] const NodalField& terminal() const { return slices_.back(); }
    [[nodiscard]] Vec value(std::size_t k, std::size_t node) const;

    /// Slice at arbitrary t in [0, T0], linear between neighbouring slices.
    [[nodiscard]] NodalField at_time(double t) const;
    /// Linear in time, spectral/bilinear in space.
    [[nodiscard]] Vec evaluate(const SourceManifold& source, double t, const IntrinsicPoint& x) const;

    [[nodiscard]] bool same_shape(const MapField& other) const noexcept;
    [[nodiscard]] bool all_finite() const;
    [[nodiscard]] double sup_norm() const;

    MapField& operator-=(const MapField& other);
    friend MapField operator-(MapField a, const MapField& b) { return a -= b; }

private:
    std::size_t n_t_ = 0;
    std::size_t n_nodes_ = 0;
    int value_dim_ = 0;
    double horizon_ = 0.0;
    std::vector<NodalField> slices_;
};

/// sup |u| + sup |grad^{g_t} u|_{g_t} over every slice and node.
double c01_norm(const SourceManifold& source, const MapField& u);

/// Largest |a - b| over every slice and node.
double sup_distance(const MapField& a, const MapField& b);

/// Z = grad^{g_t} w in the g_t-orthonormal frame: zf[k][a] is slice k, frame direction a.
using ZField = std::vector<std::vector<NodalField>>;
ZField z_field(const SourceManifold& source, const MapField& w);
/// Pointwise block norm sqrt(sum_a |Z_a|^2), one n x 1 field per slice.
std::vector<NodalField> z_norms(const ZField& z);

enum class MapFieldFormat { Binary, Csv };

void write_map_field(const MapField& u, std::ostream& out, MapFieldFormat format);
/// Reads either format; the binary header starts with a magic tag, anything else is parsed as CSV.
MapField read_map_field(std::istream& in);

void save_map_field(const MapField& u, const std::filesystem::path& path, MapFieldFormat format);
MapField load_map_field(const std::filesystem::path& path);

}  // namespace hmflow
