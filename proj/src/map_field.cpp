#include "hmflow/map_field.hpp"

#include "hmflow/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace hmflow {

namespace {

constexpr std::array<char, 8> magic{'H', 'M', 'F', 'L', 'O', 'W', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFFU);
    out.write(bytes.data(), 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t read_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (!in) fail(ErrorCode::Io, "truncated map field header or body");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void check_header(std::uint64_t n_t, std::uint64_t n_nodes, std::uint64_t l2, double horizon) {
    if (n_t == 0 || n_nodes == 0 || l2 == 0 || l2 > 3 || !(horizon > 0.0) || !std::isfinite(horizon))
        fail(ErrorCode::Io, "map field header is invalid");
    if (n_t > (1U << 24) || n_nodes > (1U << 26)) fail(ErrorCode::Io, "map field header is implausibly large");
}

std::vector<double> parse_csv_line(const std::string& line) {
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(cell, &used);
        } catch (const std::exception&) {
            fail(ErrorCode::Io, "map field CSV has a non-numeric cell: '" + cell + "'");
        }
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) fail(ErrorCode::Io, "map field CSV has a malformed cell: '" + cell + "'");
        values.push_back(v);
    }
    return values;
}

MapField read_binary(std::istream& in) {
    const auto n_t = read_u64(in);
    const auto n_nodes = read_u64(in);
    const auto l2 = read_u64(in);
    const double horizon = read_f64(in);
    check_header(n_t, n_nodes, l2, horizon);
    MapField u(n_t, n_nodes, static_cast<int>(l2), horizon);
    for (std::size_t k = 0; k < u.n_slices(); ++k) {
        auto& s = u.slice(k);
        for (std::size_t j = 0; j < n_nodes; ++j)
            for (int c = 0; c < static_cast<int>(l2); ++c) s(static_cast<Eigen::Index>(j), c) = read_f64(in);
    }
    if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::Io, "trailing bytes after map field body");
    if (!u.all_finite()) fail(ErrorCode::Io, "map field contains non-finite values");
    return u;
}

MapField read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "n_t,n_nodes,L2,horizon") fail(ErrorCode::Io, "map field CSV header missing");
    if (!std::getline(in, line)) fail(ErrorCode::Io, "map field CSV shape line missing");
    const auto shape = parse_csv_line(line);
    if (shape.size() != 4) fail(ErrorCode::Io, "map field CSV shape line needs four values");
    for (int i = 0; i < 3; ++i)
        if (shape[i] < 1 || shape[i] != std::floor(shape[i])) fail(ErrorCode::Io, "map field CSV shape is not integral");
    const auto n_t = static_cast<std::uint64_t>(shape[0]);
    const auto n_nodes = static_cast<std::uint64_t>(shape[1]);
    const auto l2 = static_cast<std::uint64_t>(shape[2]);
    check_header(n_t, n_nodes, l2, shape[3]);
    MapField u(n_t, n_nodes, static_cast<int>(l2), shape[3]);
    for (std::size_t k = 0; k < u.n_slices(); ++k) {
        for (std::size_t j = 0; j < n_nodes; ++j) {
            if (!std::getline(in, line)) fail(ErrorCode::Io, "map field CSV is truncated");
            const auto row = parse_csv_line(line);
            if (row.size() != l2) fail(ErrorCode::Io, "map field CSV row has the wrong width");
            for (std::size_t c = 0; c < l2; ++c) u.slice(k)(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    while (std::getline(in, line))
        if (!line.empty()) fail(ErrorCode::Io, "trailing rows after map field body");
    if (!u.all_finite()) fail(ErrorCode::Io, "map field contains non-finite values");
    return u;
}

}  // namespace

MapField::MapField(std::size_t n_t, std::size_t n_nodes, int value_dim, double horizon)
    : n_t_(n_t), n_nodes_(n_nodes), value_dim_(value_dim), horizon_(horizon) {
    if (n_t == 0 || n_nodes == 0 || value_dim < 1 || !(horizon > 0.0))
        fail(ErrorCode::InvalidArgument, "map field needs n_t >= 1, nodes >= 1, L2 >= 1 and a positive horizon");
    slices_.assign(n_t + 1, NodalField::Zero(static_cast<Eigen::Index>(n_nodes), value_dim));
}

MapField MapField::constant_in_time(const NodalField& slice, std::size_t n_t, double horizon) {
    MapField u(n_t, static_cast<std::size_t>(slice.rows()), static_cast<int>(slice.cols()), horizon);
    for (auto& s : u.slices_) s = slice;
    return u;
}

double MapField::time(std::size_t k) const noexcept {
    if (k == n_t_) return horizon_;
    return horizon_ * static_cast<double>(k) / static_cast<double>(n_t_);
}

Vec MapField::value(std::size_t k, std::size_t node) const {
    return slices_.at(k).row(static_cast<Eigen::Index>(node)).transpose();
}

NodalField MapField::at_time(double t) const {
    if (!(t >= -1e-12 * horizon_ && t <= horizon_ * (1.0 + 1e-12)))
        fail(ErrorCode::TimeOutOfRange, "map field evaluated outside [0, T0]");
    const double s = std::clamp(t / dt(), 0.0, static_cast<double>(n_t_));
    const auto k = std::min(static_cast<std::size_t>(s), n_t_ - 1);
    const double frac = s - static_cast<double>(k);
    if (frac == 0.0) return slices_[k];
    if (frac == 1.0) return slices_[k + 1];
    return (1.0 - frac) * slices_[k] + frac * slices_[k + 1];
}

Vec MapField::evaluate(const SourceManifold& source, double t, const IntrinsicPoint& x) const {
    if (source.node_count() != n_nodes_) fail(ErrorCode::ShapeMismatch, "map field does not match the source grid");
    return source.interpolant(at_time(t))->value(x);
}

bool MapField::same_shape(const MapField& other) const noexcept {
    return n_t_ == other.n_t_ && n_nodes_ == other.n_nodes_ && value_dim_ == other.value_dim_ &&
           horizon_ == other.horizon_;
}

bool MapField::all_finite() const {
    return std::all_of(slices_.begin(), slices_.end(), [](const NodalField& s) { return s.allFinite(); });
}

double MapField::sup_norm() const {
    double best = 0.0;
    for (const auto& s : slices_) best = std::max(best, s.rowwise().norm().maxCoeff());
    return best;
}

MapField& MapField::operator-=(const MapField& other) {
    if (!same_shape(other)) fail(ErrorCode::ShapeMismatch, "map fields have different shapes");
    for (std::size_t k = 0; k < slices_.size(); ++k) slices_[k] -= other.slices_[k];
    return *this;
}

double c01_norm(const SourceManifold& source, const MapField& u) {
    if (source.node_count() != u.n_nodes()) fail(ErrorCode::ShapeMismatch, "map field does not match the source grid");
    double value = 0.0;
    double grad = 0.0;
    for (std::size_t k = 0; k < u.n_slices(); ++k) {
        value = std::max(value, u.slice(k).rowwise().norm().maxCoeff());
        grad = std::max(grad, source.gradient_norm(u.time(k), u.slice(k)).maxCoeff());
    }
    return value + grad;
}

double sup_distance(const MapField& a, const MapField& b) { return (a - b).sup_norm(); }

ZField z_field(const SourceManifold& source, const MapField& w) {
    if (source.node_count() != w.n_nodes()) fail(ErrorCode::ShapeMismatch, "map field does not match the source grid");
    ZField z(w.n_slices());
    for (std::size_t k = 0; k < w.n_slices(); ++k) z[k] = source.metric_gradient(w.time(k), w.slice(k));
    return z;
}

std::vector<NodalField> z_norms(const ZField& z) {
    std::vector<NodalField> out;
    out.reserve(z.size());
    for (const auto& slice : z) {
        NodalField sq = NodalField::Zero(slice.front().rows(), 1);
        for (const auto& dir : slice) sq += dir.rowwise().squaredNorm();
        out.push_back(sq.cwiseSqrt());
    }
    return out;
}

void write_map_field(const MapField& u, std::ostream& out, MapFieldFormat format) {
    if (format == MapFieldFormat::Binary) {
        out.write(magic.data(), magic.size());
        write_u64(out, u.n_t());
        write_u64(out, u.n_nodes());
        write_u64(out, static_cast<std::uint64_t>(u.value_dim()));
        write_f64(out, u.horizon());
        for (std::size_t k = 0; k < u.n_slices(); ++k)
            for (std::size_t j = 0; j < u.n_nodes(); ++j)
                for (int c = 0; c < u.value_dim(); ++c) write_f64(out, u.slice(k)(static_cast<Eigen::Index>(j), c));
    } else {
        out << std::setprecision(17);
        out << "n_t,n_nodes,L2,horizon\n" << u.n_t() << ',' << u.n_nodes() << ',' << u.value_dim() << ',' << u.horizon() << '\n';
        for (std::size_t k = 0; k < u.n_slices(); ++k) {
            for (std::size_t j = 0; j < u.n_nodes(); ++j) {
                for (int c = 0; c < u.value_dim(); ++c) {
                    if (c) out << ',';
                    out << u.slice(k)(static_cast<Eigen::Index>(j), c);
                }
                out << '\n';
            }
        }
    }
    if (!out) fail(ErrorCode::Io, "failed to write map field");
}

MapField read_map_field(std::istream& in) {
    std::array<char, 8> head{};
    in.read(head.data(), head.size());
    if (in.gcount() == static_cast<std::streamsize>(head.size()) && head == magic) return read_binary(in);
    in.clear();
    in.seekg(0);
    if (!in) fail(ErrorCode::Io, "map field stream is not seekable");
    return read_csv(in);
}

void save_map_field(const MapField& u, const std::filesystem::path& path, MapFieldFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    write_map_field(u, out, format);
}

MapField load_map_field(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    return read_map_field(in);
}

}  // namespace hmflow
