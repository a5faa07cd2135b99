#include "mct/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mct {
namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void absorb(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span() const { return hi - lo; }
};

}  // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     const std::vector<SvgSeries>& series, int width, int height) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg_chart: cannot open " + path);

  Range rx, ry;
  for (const auto& s : series) {
    for (double v : s.x) rx.absorb(v);
    for (double v : s.y) ry.absorb(v);
  }
  if (!std::isfinite(rx.span())) {
    rx = {0.0, 1.0};
    ry = {0.0, 1.0};
  }
  if (rx.span() <= 0) rx.hi = rx.lo + 1.0;
  if (ry.span() <= 0) {
    ry.lo -= 0.5;
    ry.hi += 0.5;
  }
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - rx.lo) / rx.span() * pw; };
  auto py = [&](double y) { return mt + ph - (y - ry.lo) / ry.span() * ph; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";

  // axes and ticks
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = rx.lo + rx.span() * i / 5.0;
    const double fy = ry.lo + ry.span() * i / 5.0;
    std::ostringstream xs, ys;
    xs.precision(4);
    ys.precision(4);
    xs << fx;
    ys << fy;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << px(fx) << "\" y2=\""
        << mt + ph + 5 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << px(fx) << "\" y=\"" << mt + ph + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << xs.str() << "</text>\n";
    out << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\""
        << py(fy) << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << ys.str() << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2
      << ")\">" << y_label << "</text>\n";

  int legend_y = static_cast<int>(mt) + 14;
  for (const auto& s : series) {
    if (s.x.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
    const size_t n = std::min(s.x.size(), s.y.size());
    const size_t stride = std::max<size_t>(1, n / 4000);  // keep files small
    for (size_t i = 0; i < n; i += stride) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << ml + 10 << "\" y=\"" << legend_y << "\" font-size=\"11\" fill=\""
        << s.color << "\">" << s.label << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
}

}  // namespace mct
