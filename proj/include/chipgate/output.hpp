#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace chipgate::output {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Writes via a temporary sibling and a rename. Throws Error when `path`
/// escapes `root`.
void write_atomic(const std::filesystem::path& root, const std::filesystem::path& relative,
                  std::string_view content);

/// %.17g, so doubles round-trip.
std::string format_double(double v);

struct Column {
  std::string name;  // header, unit suffix included
  std::vector<double> values;
};

/// Header row plus one line per sample. Throws DomainError on ragged columns.
std::string csv(const std::vector<Column>& columns);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct Chart {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  double width = 720.0, height = 440.0;
};

/// Standalone SVG line chart with axes, ticks and a legend.
std::string svg_line_chart(const Chart& chart);

}  // namespace chipgate::output
