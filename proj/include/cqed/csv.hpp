#pragma once

// Minimal numeric CSV reader/writer. Lines starting with '#' are comments;
// a "# key: value" comment is collected as metadata. The first non-comment
// line is treated as a header when it does not parse as numbers.

#include <charconv>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cqed/errors.hpp"

namespace cqed::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::map<std::string, std::string> metadata;
    std::vector<std::size_t> line_numbers;  // source line of each row

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(c < r.size() ? r[c] : 0.0);
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

inline std::string location(const std::string& source, std::size_t line, std::size_t col) {
    return source + ":" + std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace detail

/// Reads rows of `min_cols`..`max_cols` numbers. Throws UsageError naming the
/// offending line and column.
inline Table read(std::istream& in, std::size_t min_cols, std::size_t max_cols,
                  const std::string& source = "<input>") {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool seen_data_or_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            const std::string_view body = detail::trim(view.substr(1));
            const auto colon = body.find(':');
            if (colon != std::string_view::npos) {
                t.metadata[std::string(detail::trim(body.substr(0, colon)))] =
                    std::string(detail::trim(body.substr(colon + 1)));
            }
            continue;
        }

        std::vector<std::string_view> fields;
        std::vector<std::size_t> cols;
        std::size_t start = 0;
        const std::string_view raw(line);
        while (true) {
            const auto comma = raw.find(',', start);
            fields.push_back(raw.substr(start, comma == std::string_view::npos ? raw.npos : comma - start));
            cols.push_back(start + 1);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }

        std::vector<double> values(fields.size());
        std::size_t bad = fields.size();
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!detail::parse_double(fields[i], values[i])) {
                bad = i;
                break;
            }
        }
        if (bad != fields.size()) {
            if (!seen_data_or_header) {
                for (auto f : fields) t.header.emplace_back(detail::trim(f));
                seen_data_or_header = true;
                continue;
            }
            throw UsageError(detail::location(source, line_no, cols[bad]) + ": expected a number, got '" +
                             std::string(detail::trim(fields[bad])) + "'");
        }
        if (fields.size() < min_cols || fields.size() > max_cols) {
            throw UsageError(detail::location(source, line_no, 1) + ": expected " +
                             std::to_string(min_cols) +
                             (max_cols != min_cols ? "-" + std::to_string(max_cols) : std::string()) +
                             " columns, got " + std::to_string(fields.size()));
        }
        if (!t.rows.empty() && t.rows.front().size() != fields.size()) {
            throw UsageError(detail::location(source, line_no, 1) + ": inconsistent column count");
        }
        seen_data_or_header = true;
        t.rows.push_back(std::move(values));
        t.line_numbers.push_back(line_no);
    }
    return t;
}

inline Table read_file(const std::filesystem::path& path, std::size_t min_cols, std::size_t max_cols) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    return read(in, min_cols, max_cols, path.string());
}

/// Shortest round-trip formatting of a double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace cqed::csv
