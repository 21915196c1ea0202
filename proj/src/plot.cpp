#include "mdn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdn/error.hpp"

namespace mdn {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 300.0;
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 35.0, kBottom = 45.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-6, std::abs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
  }
};

void axes(std::ostringstream& os, double y0, const std::string& title, const std::string& xl, const std::string& yl,
          const Range& xr, const Range& yr, bool log_x) {
  const double pw = kWidth - kLeft - kRight, ph = kPanelHeight - kTop - kBottom;
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << y0 + 20 << "\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << y0 + kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double x = kLeft + f * pw, y = y0 + kTop + ph - f * ph;
    const double xv = log_x ? std::exp(std::log(xr.lo) + f * (std::log(xr.hi) - std::log(xr.lo)))
                            : xr.lo + f * (xr.hi - xr.lo);
    const double yv = yr.lo + f * (yr.hi - yr.lo);
    os << "<text x=\"" << x << "\" y=\"" << y0 + kTop + ph + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << num(xv) << "</text>\n";
    os << "<text x=\"" << kLeft - 5 << "\" y=\"" << y + 3 << "\" text-anchor=\"end\" font-size=\"10\">" << num(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << y0 + kPanelHeight - 8
     << "\" text-anchor=\"middle\" font-size=\"11\">" << xml_escape(xl) << "</text>\n";
  os << "<text x=\"15\" y=\"" << y0 + kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 15 "
     << y0 + kTop + ph / 2 << ")\">" << xml_escape(yl) << "</text>\n";
}

void legend(std::ostringstream& os, double y0, std::size_t i, const std::string& label) {
  const double x = kWidth - kRight + 10, y = y0 + kTop + 10 + 16.0 * double(i);
  os << "<rect x=\"" << x << "\" y=\"" << y - 8 << "\" width=\"10\" height=\"10\" fill=\"" << kColors[i % 7]
     << "\"/>\n<text x=\"" << x + 14 << "\" y=\"" << y + 1 << "\" font-size=\"11\">" << xml_escape(label)
     << "</text>\n";
}

std::string open_svg(double height) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

}  // namespace

std::string xml_escape(const std::string& text) {
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

std::string line_chart_svg(const std::vector<Panel>& panels) {
  std::ostringstream os;
  os << open_svg(kPanelHeight * double(std::max<std::size_t>(1, panels.size())));
  const double pw = kWidth - kLeft - kRight, ph = kPanelHeight - kTop - kBottom;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double y0 = kPanelHeight * double(p);
    Range xr, yr;
    for (const Series& s : panel.series) {
      if (s.x.size() != s.y.size()) throw ValidationError("line_chart_svg: series '" + s.label + "' x/y size differ");
      for (double v : s.x) xr.add(v);
      for (double v : s.y) yr.add(v);
    }
    xr.settle();
    yr.settle();
    axes(os, y0, panel.title, panel.x_label, panel.y_label, xr, yr, false);
    for (std::size_t i = 0; i < panel.series.size(); ++i) {
      const Series& s = panel.series[i];
      std::ostringstream path;
      bool pen = false;
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) {
          pen = false;
          continue;
        }
        const double x = kLeft + (s.x[k] - xr.lo) / (xr.hi - xr.lo) * pw;
        const double y = y0 + kTop + ph - (s.y[k] - yr.lo) / (yr.hi - yr.lo) * ph;
        path << (pen ? " L" : " M") << num(x) << ' ' << num(y);
        pen = true;
      }
      os << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << kColors[i % 7]
         << "\" stroke-width=\"1.5\"/>\n";
      legend(os, y0, i, s.label);
    }
  }
  os << "</svg>\n";
  return os.str();
}

BinEdges make_bins(double lo, double hi, std::size_t bins, bool log_scale) {
  if (bins < 1) throw ValidationError("histogram needs at least one bin");
  if (!(hi > lo) || (log_scale && !(lo > 0.0))) throw ValidationError("histogram range is empty or invalid");
  BinEdges e;
  e.log_scale = log_scale;
  const double a = log_scale ? std::log(lo) : lo, b = log_scale ? std::log(hi) : hi;
  for (std::size_t i = 0; i <= bins; ++i) {
    const double t = a + (b - a) * double(i) / double(bins);
    e.edges.push_back(log_scale ? std::exp(t) : t);
  }
  e.edges.front() = lo;
  e.edges.back() = hi;
  return e;
}

std::vector<std::size_t> histogram_counts(const std::vector<double>& values, const BinEdges& bins) {
  const std::size_t n = bins.edges.size() - 1;
  std::vector<std::size_t> counts(n, 0);
  for (double v : values) {
    if (!(v >= bins.edges.front() && v <= bins.edges.back())) continue;
    auto it = std::upper_bound(bins.edges.begin(), bins.edges.end(), v);
    std::size_t i = std::size_t(it - bins.edges.begin());
    i = i == 0 ? 0 : i - 1;
    counts[std::min(i, n - 1)]++;
  }
  return counts;
}

std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::vector<HistogramGroup>& groups, const BinEdges& bins) {
  std::ostringstream os;
  os << open_svg(kPanelHeight);
  const double pw = kWidth - kLeft - kRight, ph = kPanelHeight - kTop - kBottom;
  std::vector<std::vector<std::size_t>> counts;
  Range yr;
  yr.add(0.0);
  for (const auto& g : groups) {
    counts.push_back(histogram_counts(g.values, bins));
    for (std::size_t c : counts.back()) yr.add(double(c));
  }
  yr.settle();
  Range xr;
  xr.add(bins.edges.front());
  xr.add(bins.edges.back());
  xr.settle();
  axes(os, 0.0, title, x_label, "count", xr, yr, bins.log_scale);
  auto xpos = [&](double v) {
    const double f = bins.log_scale ? (std::log(v) - std::log(xr.lo)) / (std::log(xr.hi) - std::log(xr.lo))
                                    : (v - xr.lo) / (xr.hi - xr.lo);
    return kLeft + f * pw;
  };
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::ostringstream path;
    const double base = kTop + ph;
    path << "M" << num(xpos(bins.edges.front())) << ' ' << num(base);
    for (std::size_t i = 0; i + 1 < bins.edges.size(); ++i) {
      const double y = base - double(counts[g][i]) / yr.hi * ph;
      path << " L" << num(xpos(bins.edges[i])) << ' ' << num(y) << " L" << num(xpos(bins.edges[i + 1])) << ' '
           << num(y);
    }
    path << " L" << num(xpos(bins.edges.back())) << ' ' << num(base);
    os << "<path d=\"" << path.str() << "\" fill=\"" << kColors[g % 7] << "\" fill-opacity=\"0.25\" stroke=\""
       << kColors[g % 7] << "\" stroke-width=\"1.5\"/>\n";
    legend(os, 0.0, g, groups[g].label + " (" + std::to_string(groups[g].values.size()) + ")");
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mdn
