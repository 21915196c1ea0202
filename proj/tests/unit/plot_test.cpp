#include <gtest/gtest.h>

#include <cmath>

#include "mdn/error.hpp"
#include "mdn/plot.hpp"

namespace mdn {
namespace {

TEST(Histogram, CountsWithClosedUpperEdge) {
  const BinEdges b = make_bins(0.0, 4.0, 4, false);
  ASSERT_EQ(b.edges.size(), 5u);
  const auto c = histogram_counts({0.0, 0.5, 1.0, 3.99, 4.0, 4.5, -1.0}, b);
  EXPECT_EQ(c, (std::vector<std::size_t>{2, 1, 0, 2}));
}

TEST(Histogram, LogBinsAreGeometric) {
  const BinEdges b = make_bins(1.0, 100.0, 2, true);
  EXPECT_NEAR(b.edges[1], 10.0, 1e-12);
  EXPECT_EQ(histogram_counts({2.0, 9.0, 11.0, 100.0}, b), (std::vector<std::size_t>{2, 2}));
  EXPECT_THROW(make_bins(0.0, 10.0, 3, true), ValidationError);
  EXPECT_THROW(make_bins(1.0, 1.0, 3, false), ValidationError);
}

TEST(Svg, LineChartIsWellFormed) {
  const std::string svg = line_chart_svg({{"Loss <a&b>", "epoch", "loss", {{"L", {1, 2, 3}, {3, NAN, 1}}}},
                                          {"AP", "epoch", "AP", {{"AP", {1}, {0.5}}}}});
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("Loss &lt;a&amp;b&gt;"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_THROW(line_chart_svg({{"x", "", "", {{"bad", {1, 2}, {1}}}}}), ValidationError);
}

TEST(Svg, HistogramHasOnePathPerGroup) {
  const BinEdges b = make_bins(1.0, 50.0, 10, true);
  const std::string svg = histogram_svg("t", "x", {{"a", {2, 3, 4}}, {"b", {30, 40}}}, b);
  std::size_t paths = 0;
  for (std::size_t p = svg.find("<path"); p != std::string::npos; p = svg.find("<path", p + 1)) ++paths;
  EXPECT_EQ(paths, 2u);
}

}  // namespace
}  // namespace mdn
