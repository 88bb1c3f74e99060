#include "replimeta/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace replimeta {

using svg::Point;

namespace {

void y_axis(svg::Document& doc, const svg::Scale& sy, double lo, double hi, double x, double x_end,
            std::string_view label, double label_x) {
  for (const double t : svg::nice_ticks(lo, hi, 5)) {
    if (t < lo || t > hi) continue;
    doc.line({x, sy(t)}, {x_end, sy(t)}, "#e5e5e5", 1.0);
    doc.line({x - 4, sy(t)}, {x, sy(t)}, "black", 1.0);
    doc.text({x - 7, sy(t) + 4}, svg::tick_label(t), 11, "end");
  }
  doc.line({x, sy(lo)}, {x, sy(hi)}, "black", 1.0);
  doc.vertical_text({label_x, (sy(lo) + sy(hi)) / 2.0}, label, 12);
}

}  // namespace

svg::Document render_forest(const ForestPlotModel& model, const ForestOptions& options) {
  if (model.studies.empty()) throw std::invalid_argument("forest plot of an empty model");
  const double w = options.width;
  const double h = options.height;
  svg::Document doc(w, h, options.title.empty() ? "Forest plot" : options.title);

  double lo = std::min(0.0, model.pooled.ci_low);
  double hi = std::max(0.0, model.pooled.ci_high);
  for (const auto& r : model.studies) {
    lo = std::min(lo, r.ci_low);
    hi = std::max(hi, r.ci_high);
  }
  const double pad = 0.05 * (hi - lo + 1e-9);
  lo = options.x_min.value_or(lo - pad);
  hi = options.x_max.value_or(hi + pad);
  if (!(hi > lo)) throw std::invalid_argument("forest plot axis range is empty");

  const double left = 0.17 * w;
  const double right = w - 0.30 * w;
  const double top = 50.0;
  const double bottom = h - 80.0;
  const svg::Scale sx(lo, hi, left, right);
  const std::size_t rows = model.studies.size() + 1;
  const double row_h = (bottom - top) / static_cast<double>(rows + 1);
  auto clamp_x = [&](double v) { return std::clamp(v, lo, hi); };

  if (!options.title.empty()) doc.text({w / 2.0, 24}, options.title, 15, "middle", "bold");
  doc.text({10, top - 10}, "Study", 12, "start", "bold");
  doc.text({right + 15, top - 10}, "d [95% CI]", 12, "start", "bold");
  doc.text({w - 10, top - 10}, "Weight", 12, "end", "bold");

  if (lo <= 0.0 && hi >= 0.0) doc.line({sx(0), top}, {sx(0), bottom}, "#777777", 1.0, "4,3");

  double max_weight = 0.0;
  for (const auto& r : model.studies) max_weight = std::max(max_weight, r.weight_percent);
  const double max_side = std::min(row_h * 0.7, 18.0);

  auto whisker = [&](double y, double a, double b) {
    doc.line({sx(clamp_x(a)), y}, {sx(clamp_x(b)), y}, "black", 1.2);
    if (a < lo) doc.polygon({{sx(lo), y}, {sx(lo) + 7, y - 4}, {sx(lo) + 7, y + 4}}, "black");
    if (b > hi) doc.polygon({{sx(hi), y}, {sx(hi) - 7, y - 4}, {sx(hi) - 7, y + 4}}, "black");
  };

  for (std::size_t i = 0; i < model.studies.size(); ++i) {
    const auto& r = model.studies[i];
    const double y = top + row_h * static_cast<double>(i + 1);
    doc.text({10, y + 4}, r.label, 12);
    whisker(y, r.ci_low, r.ci_high);
    const double side = max_weight > 0.0
                            ? std::max(3.0, max_side * std::sqrt(r.weight_percent / max_weight))
                            : 6.0;
    if (r.d >= lo && r.d <= hi) {
      doc.rect(sx(r.d) - side / 2, y - side / 2, side, side, "#1f4e79");
    }
    doc.text({right + 15, y + 4}, fmt::format("{:.2f} [{:.2f}, {:.2f}]", r.d, r.ci_low, r.ci_high),
             12);
    doc.text({w - 10, y + 4}, fmt::format("{:.1f}%", r.weight_percent), 12, "end");
  }

  const double yp = top + row_h * static_cast<double>(rows);
  doc.line({left, yp - row_h / 2}, {right, yp - row_h / 2}, "#bbbbbb", 1.0);
  doc.text({10, yp + 4}, model.pooled.label, 12, "start", "bold");
  const double dh = std::min(row_h * 0.35, 9.0);
  doc.polygon({{sx(clamp_x(model.pooled.ci_low)), yp},
               {sx(clamp_x(model.pooled.d)), yp - dh},
               {sx(clamp_x(model.pooled.ci_high)), yp},
               {sx(clamp_x(model.pooled.d)), yp + dh}},
              "#c0392b", "black");
  doc.text({right + 15, yp + 4},
           fmt::format("{:.2f} [{:.2f}, {:.2f}]", model.pooled.d, model.pooled.ci_low,
                       model.pooled.ci_high),
           12, "start", "bold");
  doc.text({w - 10, yp + 4}, "100.0%", 12, "end", "bold");

  doc.line({left, bottom}, {right, bottom}, "black", 1.0);
  for (const double t : svg::nice_ticks(lo, hi, 6)) {
    if (t < lo || t > hi) continue;
    doc.line({sx(t), bottom}, {sx(t), bottom + 5}, "black", 1.0);
    doc.text({sx(t), bottom + 18}, svg::tick_label(t), 11, "middle");
  }
  doc.text({(left + right) / 2.0, bottom + 36}, options.axis_label, 12, "middle");
  doc.text({10, h - 14},
           fmt::format("Heterogeneity: Q = {:.2f}, df = {}, p = {:.3f}; I² = {:.1f}%; "
                       "τ² = {:.3f} ({} model)",
                       model.q, model.q_df, model.q_p, model.i2, model.tau2,
                       to_string(model.model)),
           12);
  return doc;
}

svg::Document render_profile(const ProfileSeries& series, const PlotOptions& options) {
  if (series.lines.empty()) throw std::invalid_argument("profile plot without experiments");
  if (series.categories.empty()) throw std::invalid_argument("profile plot without categories");
  const double w = options.width;
  const double h = options.height;
  svg::Document doc(w, h, options.title.empty() ? "Profile plot" : options.title);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& line : series.lines) {
    for (const auto& y : line.y) {
      if (y) {
        lo = std::min(lo, *y);
        hi = std::max(hi, *y);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = 0.08 * (hi - lo) + (hi == lo ? 0.5 : 0.0);
  lo -= pad;
  hi += pad;

  const double left = 80.0, right = w - 170.0, top = 50.0, bottom = h - 60.0;
  const svg::Scale sy(lo, hi, bottom, top);
  const std::size_t nc = series.categories.size();
  auto cx = [&](std::size_t i) {
    return nc == 1 ? (left + right) / 2.0
                   : left + 40.0 + (right - left - 80.0) * static_cast<double>(i) /
                                        static_cast<double>(nc - 1);
  };
  if (!options.title.empty()) doc.text({w / 2.0, 24}, options.title, 15, "middle", "bold");
  y_axis(doc, sy, lo, hi, left, right, series.label, 22);
  doc.line({left, bottom}, {right, bottom}, "black", 1.0);
  for (std::size_t i = 0; i < nc; ++i) {
    doc.text({cx(i), bottom + 20}, series.categories[i], 12, "middle");
  }
  for (std::size_t k = 0; k < series.lines.size(); ++k) {
    const auto& line = series.lines[k];
    const auto color = svg::palette(k);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < nc && i < line.y.size(); ++i) {
      if (!line.y[i]) continue;
      pts.push_back({cx(i), sy(*line.y[i])});
    }
    if (pts.size() >= 2) doc.polyline(pts, color, 2.0);
    for (const auto& p : pts) doc.circle(p, 4, color);
    const double ly = top + 10.0 + 20.0 * static_cast<double>(k);
    doc.line({right + 20, ly}, {right + 44, ly}, color, 2.0);
    doc.text({right + 50, ly + 4}, line.experiment_id, 12);
  }
  return doc;
}

BoxStats box_stats(const std::vector<double>& values) {
  if (values.size() < 2) throw std::invalid_argument("box plot needs at least 2 values");
  BoxStats b;
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.5);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo_fence = b.q1 - 1.5 * iqr;
  const double hi_fence = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  for (const double v : values) {
    if (v < lo_fence || v > hi_fence) {
      b.outliers.push_back(v);
    } else {
      b.whisker_low = std::min(b.whisker_low, v);
      b.whisker_high = std::max(b.whisker_high, v);
    }
  }
  std::sort(b.outliers.begin(), b.outliers.end());
  return b;
}

double silverman_bandwidth(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  const double sd = sample_sd(values);
  const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  if (!(spread > 0.0)) return 0.0;
  return 0.9 * spread * std::pow(static_cast<double>(values.size()), -0.2);
}

double gaussian_kde(const std::vector<double>& values, double bandwidth, double at) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde bandwidth must be positive");
  double s = 0.0;
  for (const double v : values) {
    const double z = (at - v) / bandwidth;
    s += std::exp(-0.5 * z * z);
  }
  return s / (static_cast<double>(values.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
}

std::vector<BoxGroup> box_groups(const ReplicationSet& data, const TreatmentLevels& levels) {
  std::vector<BoxGroup> groups;
  for (const auto& rep : data.replications()) {
    groups.push_back({rep.experiment_id(), levels.control, rep.outcomes(Arm::control)});
    groups.push_back({rep.experiment_id(), levels.treatment, rep.outcomes(Arm::treatment)});
  }
  return groups;
}

svg::Document render_box_violin(const std::vector<BoxGroup>& groups, const PlotOptions& options) {
  if (groups.empty()) throw std::invalid_argument("box plot without groups");
  const double w = options.width;
  const double h = options.height;
  svg::Document doc(w, h, options.title.empty() ? "Box and violin plot" : options.title);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& g : groups) {
    if (g.values.size() < 2) {
      throw std::invalid_argument(
          fmt::format("box plot group '{} / {}' needs at least 2 values", g.experiment_id,
                      g.arm_label));
    }
    for (const double v : g.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double pad = 0.06 * (hi - lo) + (hi == lo ? 0.5 : 0.0);
  lo -= pad;
  hi += pad;

  const double left = 70.0, right = w - 20.0, top = 50.0, bottom = h - 70.0;
  const svg::Scale sy(lo, hi, bottom, top);
  if (!options.title.empty()) doc.text({w / 2.0, 24}, options.title, 15, "middle", "bold");
  y_axis(doc, sy, lo, hi, left, right, "Outcome", 20);
  doc.line({left, bottom}, {right, bottom}, "black", 1.0);

  const double slot = (right - left) / static_cast<double>(groups.size());
  const double half = std::min(slot * 0.4, 60.0);
  std::vector<std::string> arm_order;
  for (const auto& g : groups) {
    if (std::find(arm_order.begin(), arm_order.end(), g.arm_label) == arm_order.end()) {
      arm_order.push_back(g.arm_label);
    }
  }
  std::string previous_experiment;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const auto arm_index = static_cast<std::size_t>(
        std::find(arm_order.begin(), arm_order.end(), g.arm_label) - arm_order.begin());
    const auto color = svg::palette(arm_index);

    const double bw = silverman_bandwidth(g.values);
    const double vmin = *std::min_element(g.values.begin(), g.values.end());
    const double vmax = *std::max_element(g.values.begin(), g.values.end());
    if (bw > 0.0 && vmax > vmin) {
      constexpr int kGrid = 64;
      std::vector<double> ys, dens;
      double peak = 0.0;
      for (int k = 0; k <= kGrid; ++k) {
        const double y = vmin + (vmax - vmin) * k / kGrid;
        const double dv = gaussian_kde(g.values, bw, y);
        ys.push_back(y);
        dens.push_back(dv);
        peak = std::max(peak, dv);
      }
      std::vector<Point> outline;
      for (std::size_t k = 0; k < ys.size(); ++k) {
        outline.push_back({cx + half * dens[k] / peak, sy(ys[k])});
      }
      for (std::size_t k = ys.size(); k-- > 0;) {
        outline.push_back({cx - half * dens[k] / peak, sy(ys[k])});
      }
      doc.polygon(outline, color, "none", 0.25);
    } else {
      doc.text({cx, top + 12}, "no violin: constant data", 9, "middle");
    }

    const auto b = box_stats(g.values);
    const double bwid = half * 0.35;
    doc.line({cx, sy(b.whisker_low)}, {cx, sy(b.q1)}, "black", 1.0);
    doc.line({cx, sy(b.q3)}, {cx, sy(b.whisker_high)}, "black", 1.0);
    doc.line({cx - bwid / 2, sy(b.whisker_low)}, {cx + bwid / 2, sy(b.whisker_low)}, "black", 1.0);
    doc.line({cx - bwid / 2, sy(b.whisker_high)}, {cx + bwid / 2, sy(b.whisker_high)}, "black",
             1.0);
    doc.rect(cx - bwid, sy(b.q3), 2 * bwid, sy(b.q1) - sy(b.q3), "white", "black", 1.2);
    doc.line({cx - bwid, sy(b.median)}, {cx + bwid, sy(b.median)}, "black", 2.0);
    for (const double o : b.outliers) doc.circle({cx, sy(o)}, 2.5, "none", "black");

    doc.text({cx, bottom + 16}, g.arm_label, 11, "middle");
    if (g.experiment_id != previous_experiment) {
      std::size_t span = 0;
      while (i + span < groups.size() && groups[i + span].experiment_id == g.experiment_id) ++span;
      const double mid = left + slot * (static_cast<double>(i) + static_cast<double>(span) / 2.0);
      doc.text({mid, bottom + 34}, g.experiment_id, 12, "middle", "bold");
      if (i > 0) doc.line({left + slot * static_cast<double>(i), top}, {left + slot * static_cast<double>(i), bottom}, "#cccccc", 1.0, "3,3");
      previous_experiment = g.experiment_id;
    }
  }
  return doc;
}

InteractionPanel interaction_panel(const LmmFit& fit, std::string label) {
  const auto& slope = fit.effect(interaction_name(fit));
  InteractionPanel p;
  p.label = std::move(label);
  p.slope = slope.estimate;
  p.p_value = slope.p_value;
  p.center = fit.moderator_mean.value_or(0.0);
  p.effect_at_center = fit.treatment_mean.estimate - fit.control_mean.estimate;
  if (!fit.moderator_mean) p.effect_at_center = fit.treatment_effect().estimate;
  return p;
}

svg::Document render_interactions(const std::vector<InteractionPanel>& panels,
                                  const PlotOptions& options) {
  if (panels.empty()) throw std::invalid_argument("interaction plot without panels");
  const double w = options.width;
  const double h = options.height;
  svg::Document doc(w, h, options.title.empty() ? "Moderator interactions" : options.title);
  constexpr double kXmin = 1.0, kXmax = 4.0;

  double lo = 0.0, hi = 0.0;
  for (const auto& p : panels) {
    for (const double x : {kXmin, kXmax}) {
      const double y = p.effect_at_center + p.slope * (x - p.center);
      lo = std::min(lo, y);
      hi = std::max(hi, y);
    }
  }
  const double pad = 0.1 * (hi - lo) + (hi == lo ? 1.0 : 0.0);
  lo -= pad;
  hi += pad;

  const double top = 60.0, bottom = h - 60.0, margin = 70.0, gap = 30.0;
  const double pw = (w - margin - 20.0 - gap * static_cast<double>(panels.size() - 1)) /
                    static_cast<double>(panels.size());
  const svg::Scale sy(lo, hi, bottom, top);
  if (!options.title.empty()) doc.text({w / 2.0, 24}, options.title, 15, "middle", "bold");
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const auto& p = panels[k];
    const double x0 = margin + static_cast<double>(k) * (pw + gap);
    const double x1 = x0 + pw;
    const svg::Scale sx(kXmin, kXmax, x0 + 10, x1 - 10);
    if (k == 0) {
      y_axis(doc, sy, lo, hi, x0, x1, "Treatment effect", 20);
    } else {
      doc.line({x0, sy(lo)}, {x0, sy(hi)}, "black", 1.0);
    }
    doc.line({x0, bottom}, {x1, bottom}, "black", 1.0);
    if (lo <= 0.0 && hi >= 0.0) doc.line({x0, sy(0)}, {x1, sy(0)}, "#777777", 1.0, "4,3");
    for (int v = 1; v <= 4; ++v) {
      doc.line({sx(v), bottom}, {sx(v), bottom + 4}, "black", 1.0);
      doc.text({sx(v), bottom + 17}, std::to_string(v), 11, "middle");
    }
    const auto color = svg::palette(k);
    doc.polyline({{sx(kXmin), sy(p.effect_at_center + p.slope * (kXmin - p.center))},
                  {sx(kXmax), sy(p.effect_at_center + p.slope * (kXmax - p.center))}},
                 color, 2.5);
    doc.text({(x0 + x1) / 2.0, top - 22}, p.label, 13, "middle", "bold");
    doc.text({(x0 + x1) / 2.0, top - 6}, fmt::format("slope {:.2f}, p = {:.3f}", p.slope, p.p_value),
             11, "middle");
    doc.text({(x0 + x1) / 2.0, bottom + 34}, "Experience (1-4)", 11, "middle");
  }
  return doc;
}

}  // namespace replimeta
