#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace oae {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    bool scatter = false;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    double width = 640;
    double height = 400;
};

/// Self-contained SVG with axes, ticks, one polyline or point set per series
/// and a legend. Non-finite points are skipped; with log_y, so are y ≤ 0.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

/// CSV read back as text cells: header plus rows of equal length.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header name; throws DataError when absent.
    std::size_t column(const std::string& name) const;
    /// Column parsed as doubles; cells that do not parse become NaN.
    std::vector<double> numbers(const std::string& name) const;
};

/// Throws ParseError on ragged rows or a missing header.
CsvTable read_csv_table(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace oae
