#include "replimeta/svg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace replimeta::svg {

namespace {

std::string num(double v) {
  if (std::fabs(v) < 0.005) v = 0.0;  // avoid "-0.00"
  return fmt::format("{:.2f}", v);
}

}  // namespace

std::string escape_xml(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

Document::Document(double width, double height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {
  if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("svg size must be positive");
}

void Document::track(Point p) {
  if (!any_) {
    min_x_ = max_x_ = p.x;
    min_y_ = max_y_ = p.y;
    any_ = true;
    return;
  }
  min_x_ = std::min(min_x_, p.x);
  max_x_ = std::max(max_x_, p.x);
  min_y_ = std::min(min_y_, p.y);
  max_y_ = std::max(max_y_, p.y);
}

void Document::line(Point a, Point b, std::string_view stroke, double stroke_width,
                    std::string_view dash) {
  track(a);
  track(b);
  std::string e = fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="{}")",
                              num(a.x), num(a.y), num(b.x), num(b.y), stroke, num(stroke_width));
  if (!dash.empty()) e += fmt::format(R"( stroke-dasharray="{}")", dash);
  elements_.push_back(e + "/>");
}

void Document::rect(double x, double y, double w, double h, std::string_view fill,
                    std::string_view stroke, double stroke_width) {
  track({x, y});
  track({x + w, y + h});
  elements_.push_back(fmt::format(
      R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="{}" stroke-width="{}"/>)",
      num(x), num(y), num(std::max(0.0, w)), num(std::max(0.0, h)), fill, stroke,
      num(stroke_width)));
}

void Document::circle(Point c, double r, std::string_view fill, std::string_view stroke) {
  track({c.x - r, c.y - r});
  track({c.x + r, c.y + r});
  elements_.push_back(fmt::format(R"(<circle cx="{}" cy="{}" r="{}" fill="{}" stroke="{}"/>)",
                                  num(c.x), num(c.y), num(r), fill, stroke));
}

void Document::polyline(const std::vector<Point>& points, std::string_view stroke,
                        double stroke_width) {
  std::string pts;
  for (const auto& p : points) {
    track(p);
    if (!pts.empty()) pts += ' ';
    pts += num(p.x) + "," + num(p.y);
  }
  elements_.push_back(fmt::format(
      R"(<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>)", pts, stroke,
      num(stroke_width)));
}

void Document::polygon(const std::vector<Point>& points, std::string_view fill,
                       std::string_view stroke, double opacity) {
  std::string pts;
  for (const auto& p : points) {
    track(p);
    if (!pts.empty()) pts += ' ';
    pts += num(p.x) + "," + num(p.y);
  }
  elements_.push_back(fmt::format(R"(<polygon points="{}" fill="{}" stroke="{}" opacity="{}"/>)",
                                  pts, fill, stroke, num(opacity)));
}

void Document::text(Point at, std::string_view content, double size, std::string_view anchor,
                    std::string_view weight) {
  track(at);
  elements_.push_back(fmt::format(
      R"(<text x="{}" y="{}" font-size="{}" text-anchor="{}" font-weight="{}">{}</text>)",
      num(at.x), num(at.y), num(size), anchor, weight, escape_xml(content)));
}

void Document::vertical_text(Point at, std::string_view content, double size) {
  track(at);
  elements_.push_back(fmt::format(
      R"svg(<text x="{0}" y="{1}" font-size="{2}" text-anchor="middle" transform="rotate(-90 {0} {1})">{3}</text>)svg",
      num(at.x), num(at.y), num(size), escape_xml(content)));
}

bool Document::within_viewport() const {
  if (!any_) return true;
  const double eps = 1e-9;
  return min_x_ >= -eps && min_y_ >= -eps && max_x_ <= width_ + eps && max_y_ <= height_ + eps;
}

std::string Document::str() const {
  std::string out = fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
      "<title>{2}</title>\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      num(width_), num(height_), escape_xml(title_));
  for (const auto& e : elements_) {
    out += e;
    out += '\n';
  }
  out += "</svg>\n";
  return out;
}

Scale::Scale(double d0, double d1, double p0, double p1) : d0_(d0), d1_(d1), p0_(p0), p1_(p1) {
  if (d1_ == d0_) {
    d0_ -= 0.5;
    d1_ += 0.5;
  }
}

double Scale::operator()(double v) const { return p0_ + (v - d0_) / (d1_ - d0_) * (p1_ - p0_); }

std::vector<double> nice_ticks(double lo, double hi, int target) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double raw = (hi - lo) / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  const double first = std::ceil(lo / step - 1e-9) * step;
  for (double t = first; t <= hi + step * 1e-9; t += step) {
    ticks.push_back(std::fabs(t) < step * 1e-9 ? 0.0 : t);
  }
  return ticks;
}

std::string_view palette(std::size_t i) {
  static constexpr std::string_view kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return kColors[i % std::size(kColors)];
}

std::string tick_label(double v) {
  std::string s = fmt::format("{:.3f}", v);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

}  // namespace replimeta::svg
