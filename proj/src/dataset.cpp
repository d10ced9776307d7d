#include "orderedae/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "orderedae/errors.hpp"

namespace oae {

Matrix NormStats::apply(const Matrix& x) const {
    if (x.rows() != means.size()) throw ContractError("NormStats::apply: variable count mismatch");
    Matrix z = x;
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (double& v : z.row(i)) v = (v - means[i]) / scales[i];
    return z;
}

Matrix NormStats::invert(const Matrix& z) const {
    if (z.rows() != means.size()) throw ContractError("NormStats::invert: variable count mismatch");
    Matrix x = z;
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (double& v : x.row(i)) v = v * scales[i] + means[i];
    return x;
}

std::string_view to_string(Sampling s) noexcept { return s == Sampling::Iid ? "iid" : "antithetic"; }

Sampling sampling_from_string(std::string_view name) {
    if (name == "iid") return Sampling::Iid;
    if (name == "antithetic") return Sampling::Antithetic;
    throw ContractError("unknown sampling '" + std::string(name) + "'");
}

namespace {

// rows x n uniform draws, one column per sample.
Matrix draw_inputs(std::size_t rows, std::size_t n_samples, Rng& rng, double half_range, Sampling sampling) {
    Matrix u(rows, n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        const bool mirror = sampling == Sampling::Antithetic && j % 2 == 1;
        for (std::size_t i = 0; i < rows; ++i) u(i, j) = mirror ? -u(i, j - 1) : rng.uniform(-half_range, half_range);
    }
    return u;
}

}  // namespace

Dataset gen_two_var(std::size_t n_samples, Rng& rng, double half_range, Sampling sampling) {
    if (n_samples < 2) throw ContractError("gen_two_var: need at least two samples");
    Dataset d;
    d.x = Matrix(2, n_samples);
    d.names = {"x1", "x2"};
    const Matrix u = draw_inputs(1, n_samples, rng, half_range, sampling);
    for (std::size_t j = 0; j < n_samples; ++j) {
        d.x(0, j) = u(0, j);
        d.x(1, j) = std::tanh(3.0 * u(0, j));
    }
    d.noise_free = d.x;
    return d;
}

Dataset gen_five_var(std::size_t n_samples, Rng& rng, double noise_var, double half_range, Sampling sampling) {
    if (n_samples < 2) throw ContractError("gen_five_var: need at least two samples");
    if (noise_var < 0) throw ContractError("gen_five_var: noise variance must be nonnegative");
    Dataset d;
    d.names = {"x1", "x2", "x3", "x4", "x5"};
    const Matrix u = draw_inputs(3, n_samples, rng, half_range, sampling);
    Matrix clean(5, n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        clean(0, j) = u(0, j);
        clean(1, j) = u(1, j);
        clean(2, j) = u(2, j);
        clean(3, j) = std::sin(3.0 * u(0, j));
        clean(4, j) = u(1, j) - std::tan(0.5 * u(2, j));
    }
    // Noise is drawn after all inputs so the inputs do not depend on noise_var.
    const double sd = std::sqrt(noise_var);
    d.x = clean;
    for (std::size_t j = 0; j < n_samples; ++j) {
        d.x(3, j) += sd * rng.normal();
        d.x(4, j) += sd * rng.normal();
    }
    d.noise_free = std::move(clean);
    return d;
}

Dataset normalize(const Dataset& d) {
    if (d.num_samples() < 2) throw DataError("normalize: need at least two samples");
    const Dataset raw = denormalize(d);
    NormStats stats{row_means(raw.x), row_variances(raw.x)};
    for (std::size_t i = 0; i < stats.scales.size(); ++i) {
        stats.scales[i] = std::sqrt(stats.scales[i]);
        if (!(stats.scales[i] > 0)) {
            const std::string label = i < d.names.size() ? d.names[i] : std::to_string(i);
            throw DataError("normalize: variable '" + label + "' (row " + std::to_string(i + 1) +
                            ") has zero variance");
        }
    }
    Dataset out;
    out.x = stats.apply(raw.x);
    out.names = raw.names;
    if (raw.noise_free) out.noise_free = stats.apply(*raw.noise_free);
    out.norm = std::move(stats);
    return out;
}

Dataset denormalize(const Dataset& d) {
    if (!d.norm) return d;
    Dataset out;
    out.x = d.norm->invert(d.x);
    out.names = d.names;
    if (d.noise_free) out.noise_free = d.norm->invert(*d.noise_free);
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw ContractError("format_double: conversion failed");
    return std::string(buf, end);
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("save_csv: cannot open '" + path.string() + "' for writing");
    for (std::size_t i = 0; i < d.names.size(); ++i) out << (i ? "," : "") << d.names[i];
    out << '\n';
    for (std::size_t j = 0; j < d.num_samples(); ++j) {
        for (std::size_t i = 0; i < d.num_vars(); ++i) out << (i ? "," : "") << format_double(d.x(i, j));
        out << '\n';
    }
    if (!out) throw DataError("save_csv: write to '" + path.string() + "' failed");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("load_csv: cannot open '" + path.string() + "'", 0);

    std::string line;
    std::size_t lineno = 0;
    Dataset d;
    if (!std::getline(in, line) || trim(line).empty()) throw ParseError("load_csv: empty file, no header row", 1);
    ++lineno;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    for (auto& name : split_csv_line(line)) d.names.push_back(trim(name));
    const std::size_t n = d.names.size();

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != n) {
            throw ParseError("load_csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(n),
                             lineno);
        }
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::string cell = trim(cells[i]);
            const char* b = cell.data();
            const char* e = cell.data() + cell.size();
            auto [ptr, ec] = std::from_chars(b, e, row[i]);
            if (cell.empty() || ec != std::errc{} || ptr != e || !std::isfinite(row[i])) {
                throw ParseError("load_csv: line " + std::to_string(lineno) + ", column " + std::to_string(i + 1) +
                                     ": '" + cell + "' is not a finite number",
                                 lineno);
            }
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("load_csv: no data rows", lineno);

    d.x = Matrix(n, rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) d.x(i, j) = rows[j][i];
    return d;
}

}  // namespace oae
