#pragma once

#include "svi/csv.hpp"

namespace svi {

struct PlotOptions {
  bool log_scale_y = true;
  std::string title = "convergence";
  std::string x_label = "iteration k";
  std::string y_label = "E[d_k]";
  int width = 880;
  int height = 560;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

inline std::string format_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

// Standalone SVG 1.1 convergence chart: one polyline per record over the
// mean-distance column, optional log y-axis, axis ticks, and a legend. No
// external assets, so the file renders anywhere as-is.
inline void emit_plot(const std::vector<TraceRecord>& records, const std::string& path,
                      const PlotOptions& options = {}) {
  if (records.empty()) throw std::invalid_argument("emit_plot: no records");
  for (const auto& rec : records) rec.validate();

  // Plot box inside fixed margins; the right margin hosts the legend.
  const double left = 74.0, right = 196.0, top = 46.0, bottom = 58.0;
  const double w = options.width - left - right;
  const double h = options.height - top - bottom;
  if (w <= 0 || h <= 0) throw std::invalid_argument("emit_plot: canvas too small");

  long long k_max = 0;
  double y_min = std::numeric_limits<double>::infinity(), y_max = 0.0;
  for (const auto& rec : records) {
    k_max = std::max(k_max, rec.k.back());
    for (double v : rec.mean_dist_sq) {
      if (options.log_scale_y && !(v > 0.0)) continue;  // log scale skips zeros
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (!(y_min <= y_max))
    throw std::invalid_argument("emit_plot: no positive values to draw on a log axis");
  if (y_min == y_max) {  // flat data still needs a nonempty range
    y_min *= options.log_scale_y ? 0.5 : 1.0;
    y_max = options.log_scale_y ? y_max * 2.0 : y_max + 1.0;
    if (!options.log_scale_y) y_min -= 1.0;
  }

  const double lo = options.log_scale_y ? std::log10(y_min) : y_min;
  const double hi = options.log_scale_y ? std::log10(y_max) : y_max;
  const auto x_of = [&](double k) {
    return left + (k_max > 0 ? k / static_cast<double>(k_max) : 0.5) * w;
  };
  const auto y_of = [&](double v) {
    const double t = options.log_scale_y ? std::log10(v) : v;
    return top + (hi - t) / (hi - lo) * h;
  };

  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr int kPaletteSize = 6;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_plot: cannot open " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << options.width << "\" height=\"" << options.height << "\" viewBox=\"0 0 "
      << options.width << ' ' << options.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left + w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << detail::xml_escape(options.title) << "</text>\n"
      << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << w << "\" height=\""
      << h << "\" fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n";

  // x ticks at round iteration counts.
  const int x_ticks = 6;
  for (int i = 0; i <= x_ticks; ++i) {
    const double kv = k_max * static_cast<double>(i) / x_ticks;
    const double x = x_of(kv);
    out << "<line x1=\"" << detail::format_coord(x) << "\" y1=\"" << top + h << "\" x2=\""
        << detail::format_coord(x) << "\" y2=\"" << top + h + 5 << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << detail::format_coord(x) << "\" y=\"" << top + h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << static_cast<long long>(kv + 0.5) << "</text>\n";
  }
  out << "<text x=\"" << left + w / 2 << "\" y=\"" << top + h + 40
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << detail::xml_escape(options.x_label) << "</text>\n";

  // y ticks: decades on the log axis, even splits otherwise.
  if (options.log_scale_y) {
    const int d_lo = static_cast<int>(std::ceil(lo - 1e-9));
    const int d_hi = static_cast<int>(std::floor(hi + 1e-9));
    const int stride = std::max(1, (d_hi - d_lo) / 10 + ((d_hi - d_lo) % 10 ? 1 : 0));
    for (int d = d_lo; d <= d_hi; d += stride) {
      const double y = y_of(std::pow(10.0, d));
      out << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::format_coord(y)
          << "\" x2=\"" << left << "\" y2=\"" << detail::format_coord(y)
          << "\" stroke=\"#333\"/>\n"
          << "<text x=\"" << left - 9 << "\" y=\"" << detail::format_coord(y + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << d
          << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 5; ++i) {
      const double v = y_min + (y_max - y_min) * i / 5.0;
      const double y = y_of(v);
      out << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::format_coord(y)
          << "\" x2=\"" << left << "\" y2=\"" << detail::format_coord(y)
          << "\" stroke=\"#333\"/>\n"
          << "<text x=\"" << left - 9 << "\" y=\"" << detail::format_coord(y + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << detail::format_double(v) << "</text>\n";
    }
  }
  out << "<text x=\"18\" y=\"" << top + h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 18 "
      << top + h / 2 << ")\">" << detail::xml_escape(options.y_label) << "</text>\n";

  // Data polylines.
  for (std::size_t s = 0; s < records.size(); ++s) {
    const TraceRecord& rec = records[s];
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[s % kPaletteSize]
        << "\" stroke-width=\"1.6\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < rec.rows(); ++i) {
      double v = rec.mean_dist_sq[i];
      if (options.log_scale_y && !(v > 0.0)) v = y_min;  // clamp into range
      out << (first ? "" : " ") << detail::format_coord(x_of(static_cast<double>(rec.k[i])))
          << ',' << detail::format_coord(y_of(v));
      first = false;
    }
    out << "\"/>\n";
  }

  // Legend.
  const double legend_x = left + w + 14.0;
  for (std::size_t s = 0; s < records.size(); ++s) {
    const double y = top + 14.0 + 20.0 * static_cast<double>(s);
    out << "<line x1=\"" << legend_x << "\" y1=\"" << y << "\" x2=\"" << legend_x + 24
        << "\" y2=\"" << y << "\" stroke=\"" << kPalette[s % kPaletteSize]
        << "\" stroke-width=\"1.6\"/>\n"
        << "<text x=\"" << legend_x + 30 << "\" y=\"" << y + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << detail::xml_escape(records[s].label) << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("emit_plot: write failed for " + path);
}

}  // namespace svi
