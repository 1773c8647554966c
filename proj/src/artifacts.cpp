#include "lookaround/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lookaround::io {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  // Shortest precision that parses back to the same double.
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CSV header must not be empty");
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw std::invalid_argument("CSV row has " + std::to_string(row.size()) + " fields, header has " +
                                std::to_string(header_.size()));
  }
  rows_.push_back(std::move(row));
}

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void append_line(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += quote(fields[i]);
  }
  out += '\n';
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;  // data bounds
  int left = 70, right = 20, top = 40, bottom = 50;
  int width = 0, height = 0;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void axes(std::ostringstream& o, const Frame& f, const ChartOptions& opt) {
  o << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.width - f.left - f.right
    << "\" height=\"" << f.height - f.top - f.bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
  o << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(opt.title) << "</text>\n";
  o << "<text x=\"" << f.width / 2 << "\" y=\"" << f.height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << xml_escape(opt.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << f.height / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << f.height / 2 << ")\">" << xml_escape(opt.y_label) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    char xs[32], ys[32];
    std::snprintf(xs, sizeof xs, "%.3g", opt.log_x ? std::pow(10.0, xv) : xv);
    std::snprintf(ys, sizeof ys, "%.3g", yv);
    o << "<text x=\"" << f.px(xv) << "\" y=\"" << f.height - f.bottom + 16
      << "\" text-anchor=\"middle\" font-size=\"10\">" << xs << "</text>\n";
    o << "<text x=\"" << f.left - 6 << "\" y=\"" << f.py(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">" << ys
      << "</text>\n";
  }
}

}  // namespace

std::string CsvTable::str() const {
  std::string out;
  append_line(out, header_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    f.flush();
    if (!f) {
      std::filesystem::remove(tmp);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& opt) {
  Frame f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  f.width = opt.width;
  f.height = opt.height;
  auto tx = [&](double x) { return opt.log_x ? std::log10(x) : x; };
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if (!std::isfinite(tx(s.xs[i])) || !std::isfinite(s.ys[i])) continue;
      f.x0 = std::min(f.x0, tx(s.xs[i]));
      f.x1 = std::max(f.x1, tx(s.xs[i]));
      f.y0 = std::min(f.y0, s.ys[i]);
      f.y1 = std::max(f.y1, s.ys[i]);
    }
  }
  if (!(f.x0 < f.x1)) { f.x0 = std::isfinite(f.x0) ? f.x0 - 1 : 0; f.x1 = f.x0 + 2; }
  if (!(f.y0 < f.y1)) { f.y0 = std::isfinite(f.y0) ? f.y0 - 1 : 0; f.y1 = f.y0 + 2; }

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  axes(o, f, opt);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if (!std::isfinite(tx(s.xs[i])) || !std::isfinite(s.ys[i])) continue;
      o << f.px(tx(s.xs[i])) << ',' << f.py(s.ys[i]) << ' ';
    }
    o << "\"/>\n";
    o << "<text x=\"" << f.width - f.right - 6 << "\" y=\"" << f.top + 14 + 14 * static_cast<int>(k)
      << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << xml_escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string heatmap_svg(const std::vector<double>& xs, const std::vector<double>& ys,
                        const std::vector<double>& values, const std::vector<Marker>& markers,
                        const ChartOptions& opt) {
  if (xs.size() < 2 || ys.size() < 2 || values.size() != xs.size() * ys.size()) {
    throw std::invalid_argument("heatmap_svg: grid shape mismatch");
  }
  Frame f{xs.front(), xs.back(), ys.front(), ys.back()};
  f.width = opt.width;
  f.height = opt.height;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, std::log(v + 1e-12));
    hi = std::max(hi, std::log(v + 1e-12));
  }
  if (!(lo < hi)) hi = lo + 1.0;

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double cw = (f.px(xs.back()) - f.px(xs.front())) / static_cast<double>(xs.size() - 1);
  const double ch = (f.py(ys.front()) - f.py(ys.back())) / static_cast<double>(ys.size() - 1);
  for (std::size_t iy = 0; iy < ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
      const double v = values[iy * xs.size() + ix];
      // log-loss mapped onto a blue (low) to yellow (high) ramp
      const double t = std::isfinite(v) ? std::clamp((std::log(v + 1e-12) - lo) / (hi - lo), 0.0, 1.0) : 1.0;
      const int r = static_cast<int>(40 + 215 * t), g = static_cast<int>(40 + 180 * t),
                b = static_cast<int>(160 - 120 * t);
      o << "<rect x=\"" << f.px(xs[ix]) - cw / 2 << "\" y=\"" << f.py(ys[iy]) - ch / 2 << "\" width=\"" << cw + 0.5
        << "\" height=\"" << ch + 0.5 << "\" fill=\"rgb(" << r << ',' << g << ',' << b << ")\"/>\n";
    }
  }
  axes(o, f, opt);
  for (const Marker& m : markers) {
    o << "<circle cx=\"" << f.px(m.x) << "\" cy=\"" << f.py(m.y) << "\" r=\"4\" fill=\"white\" stroke=\"black\"/>\n";
    o << "<text x=\"" << f.px(m.x) + 6 << "\" y=\"" << f.py(m.y) - 6 << "\" font-size=\"11\">" << xml_escape(m.label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_svg(const std::filesystem::path& path, std::string_view svg) noexcept {
  try {
    write_atomic(path, svg);
  } catch (const std::exception& e) {
    std::cerr << "warning: could not write " << path.string() << ": " << e.what() << '\n';
  }
}

}  // namespace lookaround::io
