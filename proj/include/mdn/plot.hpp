#pragma once

// Minimal SVG output for loss curves and histograms.

#include <cstddef>
#include <string>
#include <vector>

namespace mdn {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;  // non-finite values break the line
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Panels stacked vertically, one shared width.
std::string line_chart_svg(const std::vector<Panel>& panels);

struct HistogramGroup {
  std::string label;
  std::vector<double> values;
};

struct BinEdges {
  std::vector<double> edges;  // bins + 1 increasing values
  bool log_scale = false;
};
// Equal-width bins over [lo, hi], in log space when log_scale is set.
BinEdges make_bins(double lo, double hi, std::size_t bins, bool log_scale);
// Values outside the edges are dropped.
std::vector<std::size_t> histogram_counts(const std::vector<double>& values, const BinEdges& bins);

// Overlaid step histograms of several groups.
std::string histogram_svg(const std::string& title, const std::string& x_label,
                          const std::vector<HistogramGroup>& groups, const BinEdges& bins);

std::string xml_escape(const std::string& text);

}  // namespace mdn
