#include "feedaudit/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace feedaudit::metrics {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::fabs(v) < 0.005 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

void header(std::ostringstream& svg, double w, double h) {
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" viewBox=\"0 0 " << num(w) << ' ' << num(h)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void text(std::ostringstream& svg, double x, double y, const std::string& s, const char* anchor = "start",
          int size = 11) {
  svg << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
      << "\" font-size=\"" << size << "\">" << escape(s) << "</text>\n";
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<PlotSeries>& series) {
  const double w = 720, h = 400;
  const double left = 60, right = 170, top = 36, bottom = 44;
  const double pw = w - left - right, ph = h - top - bottom;

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      if (!any) {
        x0 = x1 = p.x;
        y0 = y1 = p.value;
        any = true;
      }
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.value);
      y1 = std::max(y1, p.value);
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) {
    y0 -= 1;
    y1 += 1;
  }
  const double pad = (y1 - y0) * 0.05;
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  header(svg, w, h);
  text(svg, w / 2, 20, title, "middle", 13);
  svg << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y0 + (y1 - y0) * i / 4.0;
    const double yy = sy(yv);
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(yy) << "\" x2=\"" << num(left + pw) << "\" y2=\""
        << num(yy) << "\" stroke=\"#ddd\"/>\n";
    text(svg, left - 6, yy + 4, num(yv), "end");
    const double xv = x0 + (x1 - x0) * i / 4.0;
    text(svg, sx(xv), top + ph + 16, num(xv), "middle");
  }
  text(svg, left + pw / 2, h - 8, "run", "middle");
  svg << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num(top + ph / 2) << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    if (!s.points.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.points.size(); ++k)
        svg << (k ? " " : "") << num(sx(s.points[k].x)) << ',' << num(sy(s.points[k].value));
      svg << "\"/>\n";
    }
    if (s.trend && s.points.size() >= 2) {
      auto t = fit_trend(s.points);
      const double a = s.points.front().x, b = s.points.back().x;
      if (b > a)
        svg << "<line x1=\"" << num(sx(a)) << "\" y1=\"" << num(sy(t.intercept + t.slope * a)) << "\" x2=\""
            << num(sx(b)) << "\" y2=\"" << num(sy(t.intercept + t.slope * b)) << "\" stroke=\"" << color
            << "\" stroke-dasharray=\"4 3\"/>\n";
    }
    const double ly = top + 10 + 16 * static_cast<double>(i);
    svg << "<rect x=\"" << num(left + pw + 12) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/>\n";
    text(svg, left + pw + 28, ly + 1, s.label);
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string heatmap_svg(const std::string& title, const Heatmap& heatmap) {
  const std::size_t n = heatmap.labels.size();
  const double cell = 44, left = 130, top = 130;
  const double w = left + cell * static_cast<double>(n) + 20;
  const double h = top + cell * static_cast<double>(n) + 20;

  double lim = 1e-9;
  for (const auto& row : heatmap.values)
    for (double v : row)
      if (std::isfinite(v)) lim = std::max(lim, std::fabs(v));

  std::ostringstream svg;
  header(svg, w, h);
  text(svg, w / 2, 20, title, "middle", 13);
  for (std::size_t i = 0; i < n; ++i) {
    const double c = top + cell * (static_cast<double>(i) + 0.5);
    text(svg, left - 6, c + 4, heatmap.labels[i], "end", 10);
    svg << "<text x=\"" << num(c) << "\" y=\"" << num(top - 6) << "\" font-size=\"10\" transform=\"rotate(-45 "
        << num(c) << ' ' << num(top - 6) << ")\">" << escape(heatmap.labels[i]) << "</text>\n";
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double v = heatmap.values[i][j];
      const double x = left + cell * static_cast<double>(j);
      const double y = top + cell * static_cast<double>(i);
      if (!std::isfinite(v)) {
        svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\""
            << num(cell) << "\" fill=\"#f4f4f4\" stroke=\"white\"/>\n";
        continue;
      }
      // Red above the noise overlap, blue below.
      const double t = std::min(1.0, std::fabs(v) / lim);
      const int fade = static_cast<int>(std::lround(255 * (1.0 - t)));
      char color[16];
      if (v >= 0)
        std::snprintf(color, sizeof color, "#ff%02x%02x", fade, fade);
      else
        std::snprintf(color, sizeof color, "#%02x%02xff", fade, fade);
      svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\""
          << num(cell) << "\" fill=\"" << color << "\" stroke=\"white\"/>\n";
      char label[32];
      std::snprintf(label, sizeof label, "%.1f", std::fabs(v) < 0.05 ? 0.0 : v);
      text(svg, x + cell / 2, y + cell / 2 + 4, label, "middle", 10);
    }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace feedaudit::metrics
