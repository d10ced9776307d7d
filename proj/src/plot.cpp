#include "orderedae/plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "orderedae/errors.hpp"

namespace oae {

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Fixed-precision text for SVG coordinates.
std::string num(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return ec == std::errc{} ? std::string(buf, end) : std::string("0");
}

std::string tick_label(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 4);
    return ec == std::errc{} ? std::string(buf, end) : std::string("?");
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-300) {
            const double pad = lo == 0 ? 1.0 : std::abs(lo) * 0.1;
            lo -= pad;
            hi += pad;
        }
    }
};

// Roughly five round ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi) {
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        step = m * mag;
        if (step >= raw) break;
    }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) t.push_back(std::abs(v) < step * 1e-9 ? 0 : v);
    return t;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series) {
    const double left = 70, right = 150, top = 40, bottom = 50;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;

    auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
    auto usable = [&](double x, double y) { return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0); };

    Range rx, ry;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            rx.add(s.x[i]);
            ry.add(ty(s.y[i]));
        }
    }
    rx.finish();
    ry.finish();
    if (spec.log_y) {
        ry.lo = std::floor(ry.lo);
        ry.hi = std::ceil(ry.hi);
        if (ry.hi == ry.lo) ry.hi += 1;
    }
    auto px = [&](double x) { return left + (x - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double y) { return top + ph - (ty(y) - ry.lo) / (ry.hi - ry.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(spec.width) << "\" height=\"" << num(spec.height)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(spec.title)
      << "</text>\n";
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double t : nice_ticks(rx.lo, rx.hi)) {
        o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
          << num(top + ph + 5) << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(t) << "</text>\n";
    }
    std::vector<double> yt;
    if (spec.log_y) {
        const int span = static_cast<int>(ry.hi - ry.lo);
        const int every = std::max(1, span / 6);
        for (int e = static_cast<int>(ry.lo); e <= static_cast<int>(ry.hi); e += every) yt.push_back(e);
    } else {
        yt = nice_ticks(ry.lo, ry.hi);
    }
    for (double t : yt) {
        const double y = top + ph - (t - ry.lo) / (ry.hi - ry.lo) * ph;
        o << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left) << "\" y2=\"" << num(y)
          << "\" stroke=\"black\"/>";
        o << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
          << (spec.log_y ? "1e" + tick_label(t) : tick_label(t)) << "</text>\n";
    }
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 10) << "\" text-anchor=\"middle\">"
      << escape(spec.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(top + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kPalette[k % kPalette.size()];
        if (s.scatter) {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
                if (!usable(s.x[i], s.y[i])) continue;
                o << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << color
                  << "\"/>\n";
            }
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
                if (usable(s.x[i], s.y[i])) o << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
            }
            o << "\"/>\n";
        }
        const double ly = top + 10 + 18 * static_cast<double>(k);
        o << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(ly - 8) << "\" width=\"12\" height=\"8\" fill=\""
          << color << "\"/><text x=\"" << num(left + pw + 30) << "\" y=\"" << num(ly) << "\">" << escape(s.name)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("csv has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        double v = std::numeric_limits<double>::quiet_NaN();
        const std::string& cell = r[c];
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc{} || ptr != cell.data() + cell.size()) v = std::numeric_limits<double>::quiet_NaN();
        out.push_back(v);
    }
    return out;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'", 0);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw ParseError("'" + path.string() + "': missing header", 1);
    t.header = split(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw ParseError("'" + path.string() + "': line " + std::to_string(lineno) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " + std::to_string(t.header.size()),
                             lineno);
        }
        t.rows.push_back(std::move(cells));
    }
    return t;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace oae
