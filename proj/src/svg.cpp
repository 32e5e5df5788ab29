#include "diffadmm/svg.hpp"

#include "diffadmm/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace diffadmm {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_line_svg(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series, bool log_y) {
  const double width = 720, height = 440;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;

  // data ranges over finite (and, for log, positive) samples
  double xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    xmax = std::max(xmax, static_cast<double>(s.y.size()) - 1.0);
    for (double v : s.y) {
      if (!std::isfinite(v) || (log_y && v <= 0)) continue;
      const double t = log_y ? std::log10(v) : v;
      if (!any) {
        ymin = ymax = t;
        any = true;
      } else {
        ymin = std::min(ymin, t);
        ymax = std::max(ymax, t);
      }
    }
  }
  if (!any) {
    ymin = 0;
    ymax = 1;
  }
  if (ymax - ymin < 1e-12) {
    ymax += 0.5;
    ymin -= 0.5;
  }

  const auto px = [&](double x) { return ml + pw * x / xmax; };
  const auto py = [&](double y) {
    return mt + ph * (1.0 - (y - ymin) / (ymax - ymin));
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";

  // axes
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";

  // ticks
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmax * i / 4.0;
    svg << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << (log_y ? "1e" + fmt(fy) : fmt(fy)) << "</text>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << py(fy) << "\" x2=\"" << ml + pw
        << "\" y2=\"" << py(fy)
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }

  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << xml_escape(x_label) << "</text>\n"
      << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 16 "
      << mt + ph / 2 << ")\">" << xml_escape(y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % 6];
    std::ostringstream pts;
    bool open = false;
    for (std::size_t i = 0; i < series[si].y.size(); ++i) {
      double v = series[si].y[i];
      if (!std::isfinite(v) || (log_y && v <= 0)) {
        open = false;
        continue;
      }
      if (log_y) v = std::log10(v);
      if (!open) {
        if (pts.tellp() > 0) {
          svg << "<polyline fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
          pts.str("");
        }
        open = true;
      }
      pts << fmt(px(static_cast<double>(i))) << ',' << fmt(py(v)) << ' ';
    }
    if (pts.tellp() > 0)
      svg << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    svg << "<text x=\"" << ml + pw - 8 << "\" y=\"" << mt + 16 + 16 * si
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\""
        << color << "\">" << xml_escape(series[si].label) << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write svg: " + path);
  out << svg.str();
}

}  // namespace diffadmm
