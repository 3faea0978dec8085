#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vesbo/harness.hpp"

namespace vesbo {

namespace {

constexpr int kWidth = 880;
constexpr int kHeight = 540;
constexpr int kMarginLeft = 72;
constexpr int kMarginRight = 220;  // room for the legend
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string axis_label(const std::string& metric) {
  if (metric == "log_regret") return "log simple regret";
  if (metric == "neg_best") return "negative best value";
  return metric;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// A handful of round tick values covering [lo, hi].
std::vector<double> make_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw_step = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  double step = mag;
  for (double mult : {1.0, 2.0, 5.0, 10.0})
    if (mag * mult >= raw_step) {
      step = mag * mult;
      break;
    }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-12 * span;
       t += step)
    ticks.push_back(t);
  return ticks;
}

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series,
               const std::string& output_path) {
  if (series.empty())
    throw std::invalid_argument("emit_plot: no series to draw");
  for (const PlotSeries& s : series)
    if (s.rows.empty())
      throw std::invalid_argument("emit_plot: series '" + s.label +
                                  "' has no rows");

  // The curves must share at least one iteration, otherwise the comparison
  // plot is meaningless.
  double shared_lo = -std::numeric_limits<double>::infinity();
  double shared_hi = std::numeric_limits<double>::infinity();
  for (const PlotSeries& s : series) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const AggregateRow& row : s.rows) {
      lo = std::min(lo, static_cast<double>(row.iteration));
      hi = std::max(hi, static_cast<double>(row.iteration));
    }
    shared_lo = std::max(shared_lo, lo);
    shared_hi = std::min(shared_hi, hi);
  }
  if (shared_lo > shared_hi)
    throw std::invalid_argument(
        "emit_plot: series iteration ranges do not overlap");

  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const PlotSeries& s : series)
    for (const AggregateRow& row : s.rows) {
      x_lo = std::min(x_lo, static_cast<double>(row.iteration));
      x_hi = std::max(x_hi, static_cast<double>(row.iteration));
      y_lo = std::min(y_lo, row.mean - row.std);
      y_hi = std::max(y_hi, row.mean + row.std);
    }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  if (!(y_hi > y_lo)) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double y_pad = 0.05 * (y_hi - y_lo);
  y_lo -= y_pad;
  y_hi += y_pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double x) {
    return kMarginLeft + plot_w * (x - x_lo) / (x_hi - x_lo);
  };
  auto sy = [&](double y) {
    return kMarginTop + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo));
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Axes and ticks.
  svg << "<g stroke=\"#333\" stroke-width=\"1\">\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h
      << "\" x2=\"" << kMarginLeft + plot_w << "\" y2=\""
      << kMarginTop + plot_h << "\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop
      << "\" x2=\"" << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h
      << "\"/>\n</g>\n";
  svg << "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n";
  for (double t : make_ticks(x_lo, x_hi)) {
    const double px = sx(t);
    svg << "<line x1=\"" << px << "\" y1=\"" << kMarginTop + plot_h
        << "\" x2=\"" << px << "\" y2=\"" << kMarginTop + plot_h + 5
        << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
  }
  for (double t : make_ticks(y_lo, y_hi)) {
    const double py = sy(t);
    svg << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << py << "\" x2=\""
        << kMarginLeft << "\" y2=\"" << py << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << kMarginLeft - 9 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
  }
  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\""
      << kHeight - 14 << "\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">" << axis_label(series[0].metric)
      << "</text>\n</g>\n";

  // One band + mean line per series, colors cycling through the palette.
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(*kPalette))];
    const auto& rows = series[s].rows;

    std::ostringstream band;
    for (const AggregateRow& row : rows)
      band << sx(row.iteration) << "," << sy(row.mean + row.std) << " ";
    for (auto it = rows.rbegin(); it != rows.rend(); ++it)
      band << sx(it->iteration) << "," << sy(it->mean - it->std) << " ";
    svg << "<polygon points=\"" << band.str() << "\" fill=\"" << color
        << "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";

    std::ostringstream line;
    for (const AggregateRow& row : rows)
      line << sx(row.iteration) << "," << sy(row.mean) << " ";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"1.8\"/>\n";

    const double ly = kMarginTop + 16 + 22 * static_cast<double>(s);
    const double lx = kMarginLeft + plot_w + 18;
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 26
        << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << lx + 32 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">"
        << series[s].label << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(output_path);
  if (!out) throw std::runtime_error("emit_plot: cannot open " + output_path);
  out << svg.str();
}

}  // namespace vesbo
