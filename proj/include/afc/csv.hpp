// CSV formats for traces, spectra, x/y scans and decay series.
//
//   time trace / spectrum : t_or_nu,re,im   (s or Hz; spectra ascending in ν)
//   fit input             : <x name>,<y name>
//   decay series          : ts_seconds,height
#pragma once

#include <algorithm>
#include <charconv>
#include <initializer_list>
#include <cmath>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "afc/errors.hpp"
#include "afc/estimation.hpp"
#include "afc/signal.hpp"

namespace afc::csv {

/// Shortest decimal that round-trips the double.
inline std::string format_number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view s, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw CsvError("line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                           : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Header names plus numeric columns.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline Table read_table(std::istream& in, std::size_t n_columns) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() != n_columns)
            throw CsvError("line " + std::to_string(line_no) + ": expected " + std::to_string(n_columns) +
                           " columns, got " + std::to_string(cells.size()));
        if (t.header.empty()) {
            for (auto c : cells) t.header.push_back(trim(c));
            t.columns.resize(n_columns);
            continue;
        }
        for (std::size_t c = 0; c < n_columns; ++c) t.columns[c].push_back(parse_number(cells[c], line_no));
    }
    if (t.header.empty()) throw CsvError("empty CSV input");
    return t;
}

inline void expect_header(const Table& t, std::initializer_list<std::string_view> names) {
    if (!std::equal(t.header.begin(), t.header.end(), names.begin(), names.end())) {
        std::string want;
        for (auto n : names) want += (want.empty() ? "" : ",") + std::string(n);
        throw CsvError("header must be '" + want + "'");
    }
}

namespace detail {

inline SimGrid grid_from_axis(const std::vector<double>& axis, bool is_frequency) {
    const std::size_t n = axis.size();
    if (n < 2 || (n & (n - 1)) != 0) throw CsvError("row count must be a power of two >= 2");
    const double step = axis[1] - axis[0];
    if (!(step > 0.0)) throw CsvError("axis must be increasing");
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((axis[i] - axis[i - 1]) - step) > 1e-6 * step)
            throw CsvError("axis is not uniformly sampled at row " + std::to_string(i + 1));
    return is_frequency ? SimGrid(n, 1.0 / step) : SimGrid(n, step * static_cast<double>(n));
}

}  // namespace detail

inline void write_trace(std::ostream& out, const TimeTrace& trace) {
    out << "t_or_nu,re,im\n";
    for (std::size_t i = 0; i < trace.samples.size(); ++i)
        out << format_number(trace.grid.time_at(i)) << ',' << format_number(trace.samples[i].real()) << ','
            << format_number(trace.samples[i].imag()) << '\n';
}

inline TimeTrace read_trace(std::istream& in) {
    const auto t = read_table(in, 3);
    expect_header(t, {"t_or_nu", "re", "im"});
    const auto grid = detail::grid_from_axis(t.columns[0], false);
    TimeTrace trace(grid);
    for (std::size_t i = 0; i < t.rows(); ++i) trace.samples[i] = {t.columns[1][i], t.columns[2][i]};
    return trace;
}

/// Rows are written in ascending frequency (negative bins first).
inline void write_spectrum(std::ostream& out, const Spectrum& spec) {
    out << "t_or_nu,re,im\n";
    const std::size_t n = spec.samples.size();
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = (r + n / 2) % n;
        out << format_number(spec.grid.frequency_at(k)) << ',' << format_number(spec.samples[k].real())
            << ',' << format_number(spec.samples[k].imag()) << '\n';
    }
}

inline Spectrum read_spectrum(std::istream& in) {
    const auto t = read_table(in, 3);
    expect_header(t, {"t_or_nu", "re", "im"});
    const auto grid = detail::grid_from_axis(t.columns[0], true);
    const std::size_t n = t.rows();
    std::vector<cplx> s(n);
    for (std::size_t r = 0; r < n; ++r) s[(r + n / 2) % n] = {t.columns[1][r], t.columns[2][r]};
    return {grid, std::move(s)};
}

struct XYData {
    std::string x_name;
    std::string y_name;
    std::vector<double> x;
    std::vector<double> y;
};

inline XYData read_xy(std::istream& in) {
    auto t = read_table(in, 2);
    return {t.header[0], t.header[1], std::move(t.columns[0]), std::move(t.columns[1])};
}

inline void write_xy(std::ostream& out, const std::string& x_name, const std::string& y_name,
                     std::span<const double> x, std::span<const double> y) {
    out << x_name << ',' << y_name << '\n';
    for (std::size_t i = 0; i < x.size(); ++i) out << format_number(x[i]) << ',' << format_number(y[i]) << '\n';
}

inline DecaySeries read_decay_series(std::istream& in) {
    const auto t = read_table(in, 2);
    expect_header(t, {"ts_seconds", "height"});
    std::vector<DecayPoint> pts;
    for (std::size_t i = 0; i < t.rows(); ++i) pts.push_back({t.columns[0][i], t.columns[1][i]});
    return DecaySeries(std::move(pts));
}

inline void write_decay_series(std::ostream& out, const DecaySeries& series) {
    out << "ts_seconds,height\n";
    for (const auto& p : series.points()) out << format_number(p.ts) << ',' << format_number(p.height) << '\n';
}

}  // namespace afc::csv
