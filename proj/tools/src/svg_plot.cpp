#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace docparse::cli {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 50;

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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  std::size_t n = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](std::size_t i) { return kLeft + (n <= 1 ? pw / 2 : pw * static_cast<double>(i) / static_cast<double>(n - 1)); };
  auto py = [&](double v) { return kTop + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"15\">" << escape(title) << "</text>\n"
    << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
    << num(kTop + ph) << "\"/>\n"
    << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
    << num(kTop + ph) << "\"/>\n"
    << "</g>\n"
    << "<g font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kTop + 4) << "\" text-anchor=\"end\">" << tick(hi)
    << "</text>\n"
    << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kTop + ph) << "\" text-anchor=\"end\">" << tick(lo)
    << "</text>\n"
    << "<text x=\"" << num(kLeft) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">1</text>\n"
    << "<text x=\"" << num(kLeft + pw) << "\" y=\"" << num(kTop + ph + 16) << "\" text-anchor=\"middle\">"
    << std::max<std::size_t>(n, 1) << "</text>\n"
    << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12) << "\" text-anchor=\"middle\">"
    << escape(x_label) << "</text>\n"
    << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(kTop + ph / 2) << ")\">" << escape(y_label) << "</text>\n"
    << "</g>\n";

  int legend_row = 0;
  for (const auto& s : series) {
    if (!s.values.empty()) {
      o << "<polyline fill=\"none\" stroke=\"" << escape(s.color) << "\" stroke-width=\"1.5\" stroke-opacity=\""
        << num(s.opacity) << "\" points=\"";
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (i) o << ' ';
        const double v = std::isfinite(s.values[i]) ? s.values[i] : hi;
        o << num(px(i)) << ',' << num(py(v));
      }
      o << "\"/>\n";
    }
    if (s.in_legend) {
      const double y = kTop + 10 + 18 * legend_row++;
      o << "<line x1=\"" << num(kLeft + pw + 14) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + pw + 34)
        << "\" y2=\"" << num(y) << "\" stroke=\"" << escape(s.color) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << num(kLeft + pw + 40) << "\" y=\"" << num(y + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace docparse::cli
