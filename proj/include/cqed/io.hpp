#pragma once

// File formats: decay traces (two-column CSV with "# key: value" metadata)
// and field grids (one-line JSON header followed by a CSV or binary body).

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "cqed/coupling.hpp"
#include "cqed/csv.hpp"
#include "cqed/dynamics.hpp"
#include "cqed/errors.hpp"

namespace cqed::io {

/// Writes `contents` next to `path` and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents,
                              std::ios::openmode mode = std::ios::out) {
    namespace fs = std::filesystem;
    if (path.has_parent_path() && !path.parent_path().empty()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, mode | std::ios::trunc | std::ios::binary);
        if (!out) throw UsageError("cannot write " + tmp.string());
        out << contents;
        if (!out) throw UsageError("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw UsageError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Decay traces

inline void write_trace_csv(std::ostream& out, const dynamics::DecayTrace& trace,
                            const std::map<std::string, std::string>& metadata = {}) {
    out << "# kind: " << (trace.kind == dynamics::TraceKind::simulated ? "simulated" : "measured") << '\n';
    out << "# bin_width_s: " << csv::format_double(trace.bin_width.value()) << '\n';
    for (const auto& [k, v] : metadata) out << "# " << k << ": " << v << '\n';
    out << "time_s,value\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << csv::format_double(trace.times[i]) << ',' << csv::format_double(trace.values[i]) << '\n';
    }
}

inline std::string trace_csv_string(const dynamics::DecayTrace& trace,
                                    const std::map<std::string, std::string>& metadata = {}) {
    std::ostringstream s;
    write_trace_csv(s, trace, metadata);
    return s.str();
}

/// Reads a trace. `kind` and `bin_width_s` come from metadata when present;
/// files without a kind are treated as measured counts.
inline dynamics::DecayTrace read_trace_csv(std::istream& in, const std::string& source = "<trace>") {
    const auto table = csv::read(in, 2, 2, source);
    dynamics::DecayTrace trace;
    trace.kind = dynamics::TraceKind::measured;
    if (auto it = table.metadata.find("kind"); it != table.metadata.end()) {
        if (it->second == "simulated") {
            trace.kind = dynamics::TraceKind::simulated;
        } else if (it->second != "measured") {
            throw UsageError(source + ": unknown trace kind '" + it->second + "'");
        }
    }
    trace.times = table.column(0);
    trace.values = table.column(1);
    if (auto it = table.metadata.find("bin_width_s"); it != table.metadata.end()) {
        double bw = 0.0;
        if (!csv::detail::parse_double(it->second, bw) || !(bw > 0.0)) {
            throw UsageError(source + ": invalid bin_width_s '" + it->second + "'");
        }
        trace.bin_width = Duration(bw);
    } else if (trace.times.size() > 1) {
        trace.bin_width = Duration(trace.times[1] - trace.times[0]);
    }
    for (std::size_t i = 1; i < trace.times.size(); ++i) {
        if (!(trace.times[i] > trace.times[i - 1])) {
            throw UsageError(source + ":" + std::to_string(table.line_numbers[i]) +
                             ":1: times must be strictly increasing");
        }
    }
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        if (!(trace.values[i] >= 0.0)) {
            throw UsageError(source + ":" + std::to_string(table.line_numbers[i]) +
                             ": trace values must be non-negative");
        }
    }
    return trace;
}

inline dynamics::DecayTrace read_trace_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    return read_trace_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Field grids
//
// Line 1 is a JSON object:
//   {"format": "cqed-fieldgrid", "version": 1, "dims": [nx, ny, nz],
//    "spacing": [dx, dy, dz], "origin": [x0, y0, z0], "units": "m" | "nm",
//    "encoding": "csv" | "binary"}
// CSV body: optional "Ex,Ey,Ez,eps_rel" header, then exactly nx*ny*nz rows in
// row-major order (z fastest). Binary body: nx*ny*nz records of four
// little-endian float64 values in the same order.

enum class GridEncoding { csv, binary };

inline constexpr const char* field_grid_format = "cqed-fieldgrid";

inline std::string field_grid_header(const coupling::FieldGrid& g, GridEncoding enc) {
    nlohmann::ordered_json h;
    h["format"] = field_grid_format;
    h["version"] = 1;
    h["dims"] = g.dims();
    h["spacing"] = g.spacing();
    h["origin"] = g.origin();
    h["units"] = "m";
    h["encoding"] = enc == GridEncoding::csv ? "csv" : "binary";
    return h.dump();
}

inline void write_field_grid(std::ostream& out, const coupling::FieldGrid& g, GridEncoding enc) {
    out << field_grid_header(g, enc) << '\n';
    if (enc == GridEncoding::csv) {
        out << "Ex,Ey,Ez,eps_rel\n";
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto& e = g.field()[i];
            out << csv::format_double(e[0]) << ',' << csv::format_double(e[1]) << ','
                << csv::format_double(e[2]) << ',' << csv::format_double(g.eps_rel()[i]) << '\n';
        }
        return;
    }
    static_assert(std::endian::native == std::endian::little, "binary grid writer assumes little-endian");
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double rec[4] = {g.field()[i][0], g.field()[i][1], g.field()[i][2], g.eps_rel()[i]};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
    }
}

inline std::string field_grid_string(const coupling::FieldGrid& g, GridEncoding enc) {
    std::ostringstream s(std::ios::out | std::ios::binary);
    write_field_grid(s, g, enc);
    return s.str();
}

inline coupling::FieldGrid read_field_grid(std::istream& in, const std::string& source = "<grid>") {
    std::string header_line;
    if (!std::getline(in, header_line)) throw UsageError(source + ":1:1: empty field grid file");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(source + ":1:" + std::to_string(e.byte) + ": invalid JSON header");
    }

    std::array<std::size_t, 3> dims{};
    coupling::Vec3 spacing{}, origin{};
    std::string encoding, units;
    try {
        if (h.at("format").get<std::string>() != field_grid_format) {
            throw UsageError(source + ":1:1: not a " + std::string(field_grid_format) + " file");
        }
        if (h.at("version").get<int>() != 1) throw UsageError(source + ":1:1: unsupported version");
        dims = h.at("dims").get<std::array<std::size_t, 3>>();
        spacing = h.at("spacing").get<coupling::Vec3>();
        origin = h.at("origin").get<coupling::Vec3>();
        encoding = h.value("encoding", std::string("csv"));
        units = h.value("units", std::string("m"));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(source + ":1:1: bad field grid header: " + e.what());
    }
    double scale = 1.0;
    if (units == "nm") {
        scale = 1e-9;
    } else if (units != "m") {
        throw UsageError(source + ":1:1: unknown units '" + units + "'");
    }
    for (int a = 0; a < 3; ++a) {
        spacing[a] *= scale;
        origin[a] *= scale;
    }

    const std::size_t n = dims[0] * dims[1] * dims[2];
    std::vector<coupling::Vec3> field(n);
    std::vector<double> eps(n);

    if (encoding == "csv") {
        const auto table = csv::read(in, 4, 4, source);
        if (table.rows.size() != n) {
            const std::size_t where = table.line_numbers.empty() ? 2 : table.line_numbers.back();
            throw UsageError(source + ":" + std::to_string(where) + ":1: expected " + std::to_string(n) +
                             " rows, got " + std::to_string(table.rows.size()));
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = table.rows[i];
            field[i] = {r[0], r[1], r[2]};
            eps[i] = r[3];
        }
    } else if (encoding == "binary") {
        std::vector<double> buf(4 * n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
        const auto got = static_cast<std::size_t>(in.gcount());
        if (got != buf.size() * sizeof(double)) {
            throw UsageError(source + ": binary body holds " + std::to_string(got) + " bytes, expected " +
                             std::to_string(buf.size() * sizeof(double)));
        }
        if (in.peek() != std::char_traits<char>::eof()) {
            throw UsageError(source + ": trailing bytes after binary body");
        }
        for (std::size_t i = 0; i < n; ++i) {
            field[i] = {buf[4 * i], buf[4 * i + 1], buf[4 * i + 2]};
            eps[i] = buf[4 * i + 3];
        }
    } else {
        throw UsageError(source + ":1:1: unknown encoding '" + encoding + "'");
    }
    return coupling::FieldGrid(dims, spacing, origin, std::move(field), std::move(eps));
}

inline coupling::FieldGrid read_field_grid_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path.string());
    return read_field_grid(in, path.string());
}

}  // namespace cqed::io
