#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace replimeta::svg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

std::string escape_xml(std::string_view text);

/// Append-only SVG builder. Coordinates are written with two decimals so the
/// output is byte-stable; every coordinate passed in is tracked for bounds checks.
class Document {
 public:
  Document(double width, double height, std::string title);

  double width() const { return width_; }
  double height() const { return height_; }

  void line(Point a, Point b, std::string_view stroke, double stroke_width = 1.0,
            std::string_view dash = {});
  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "none", double stroke_width = 1.0);
  void circle(Point c, double r, std::string_view fill, std::string_view stroke = "none");
  void polyline(const std::vector<Point>& points, std::string_view stroke,
                double stroke_width = 1.5);
  void polygon(const std::vector<Point>& points, std::string_view fill,
               std::string_view stroke = "none", double opacity = 1.0);
  void text(Point at, std::string_view content, double size = 12.0,
            std::string_view anchor = "start", std::string_view weight = "normal");
  /// Text rotated -90 degrees about its anchor (vertical axis titles).
  void vertical_text(Point at, std::string_view content, double size = 12.0);

  /// True when every tracked coordinate lies in [0, width] x [0, height].
  bool within_viewport() const;
  std::string str() const;

 private:
  void track(Point p);

  double width_;
  double height_;
  std::string title_;
  std::vector<std::string> elements_;
  double min_x_ = 0.0, min_y_ = 0.0, max_x_ = 0.0, max_y_ = 0.0;
  bool any_ = false;
};

/// Linear map from a data interval onto a pixel interval.
class Scale {
 public:
  Scale(double d0, double d1, double p0, double p1);
  double operator()(double v) const;

 private:
  double d0_, d1_, p0_, p1_;
};

/// About `target` evenly spaced round-valued ticks inside [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int target = 6);

/// Categorical colors, cycled.
std::string_view palette(std::size_t i);

/// Compact numeric label ("0.5", "12", "-0.25").
std::string tick_label(double v);

}  // namespace replimeta::svg
