#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lookaround::io {

/// Shortest round-trippable decimal form of a double ("%.17g" trimmed).
std::string fmt(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  /// Appends a row; its width must match the header.
  void add_row(std::vector<std::string> row);

  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Writes `content` to `<path>.tmp` and renames it over `path`, so readers
/// never observe a partially written file under the final name.
void write_atomic(const std::filesystem::path& path, std::string_view content);

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) { write_atomic(path, t.str()); }

struct Series {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  int width = 640;
  int height = 420;
};

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& opt);

/// Row-major `values[iy * xs.size() + ix]`; optional markers are drawn as
/// labelled dots in data coordinates.
struct Marker {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

std::string heatmap_svg(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& values, const std::vector<Marker>& markers,
                        const ChartOptions& opt);

/// Best-effort SVG write: failures are reported on stderr and swallowed.
void write_svg(const std::filesystem::path& path, std::string_view svg) noexcept;

}  // namespace lookaround::io
