#pragma once

#include <cstdio>
#include <map>
#include <string>

#include "nftdisk/disk_layout.hpp"
#include "nftdisk/flow_layout.hpp"

namespace nftdisk::svg {

struct Style {
  double disk_size = 800.0;   // px, square
  double slot_width = 36.0;   // flow chart px per event
  double lane_height = 10.0;  // flow chart px per lane row
  std::string sale_color = "#2e9e44";
  std::string transfer_color = "#e3b505";
  std::string band_color = "#1f5fbf";
  std::string inner_path_color = "#c0392b";
  std::string lifeline_color = "#777777";
};

namespace detail {

/// Fixed three-decimal formatting; "-0.000" is folded to "0.000" so
/// rounding noise around zero cannot change the bytes.
inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline const char* palette(std::size_t i) {
  static constexpr const char* colors[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                           "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  return colors[i % std::size(colors)];
}

inline std::string color_for_key(const std::string& key) {
  if (key == "border-top") return "#999999";
  if (key == "border-bottom") return "#444444";
  if (key.rfind("addr-", 0) == 0) return palette(std::stoull(key.substr(5)));
  return "#000000";
}

inline std::string class_of(SegmentKind k) {
  switch (k) {
    case SegmentKind::Hold: return "hold";
    case SegmentKind::SaleHop: return "sale-hop";
    case SegmentKind::TransferHop: return "transfer-hop";
    case SegmentKind::MintEntry: return "mint-entry";
    case SegmentKind::ExternalEntry: return "external-entry";
    case SegmentKind::ExternalExit: return "external-exit";
  }
  return "hold";
}

}  // namespace detail

/// Radial view. Math angles run counter-clockwise; SVG y points down, so y
/// is negated.
inline std::string export_svg(const DiskLayout& layout, const Style& style = {}) {
  using detail::num;
  const double half = style.disk_size / 2.0;
  auto px = [&](Point p) { return num(half + p.x * half * 0.95) + " " + num(half - p.y * half * 0.95); };
  auto scale = [&](double r) { return num(r * half * 0.95); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(style.disk_size) + "\" height=\"" +
         num(style.disk_size) + "\" viewBox=\"0 0 " + num(style.disk_size) + " " + num(style.disk_size) + "\">\n";
  out += "<g class=\"background\">\n";
  for (const auto& b : layout.background) {
    const double mid = 0.5 * (b.r_lo + b.r_hi);
    out += "<circle class=\"background-band\" cx=\"" + num(half) + "\" cy=\"" + num(half) + "\" r=\"" + scale(mid) +
           "\" fill=\"none\" stroke=\"" + style.band_color + "\" stroke-width=\"" + scale(b.r_hi - b.r_lo) +
           "\" stroke-opacity=\"" + num(b.intensity) + "\" data-start=\"" + std::to_string(b.start) + "\"/>\n";
  }
  out += "</g>\n<g class=\"lifelines\">\n";
  for (const auto& l : layout.lifelines) {
    out += "<line class=\"lifeline\" x1=\"" + num(half + std::cos(l.angle) * l.r_first * half * 0.95) + "\" y1=\"" +
           num(half - std::sin(l.angle) * l.r_first * half * 0.95) + "\" x2=\"" +
           num(half + std::cos(l.angle) * l.r_last * half * 0.95) + "\" y2=\"" +
           num(half - std::sin(l.angle) * l.r_last * half * 0.95) + "\" stroke=\"" + style.lifeline_color +
           "\" data-address=\"" + std::to_string(l.address) + "\"/>\n";
  }
  out += "</g>\n<g class=\"arcs\">\n";
  for (const auto& a : layout.arcs) {
    const bool sale = a.style == Status::Sale;
    // Counter-clockwise in math coordinates is sweep-flag 0 after the y flip.
    out += "<path class=\"" + std::string(sale ? "arc-sale" : "arc-transfer") + "\" d=\"M " +
           px(polar(a.radius, a.angle_start)) + " A " + scale(a.radius) + " " + scale(a.radius) + " 0 0 0 " +
           px(polar(a.radius, a.angle_end)) + "\" fill=\"none\" stroke=\"" +
           (sale ? style.sale_color : style.transfer_color) + "\" data-tx=\"" + std::to_string(a.tx) + "\"/>\n";
  }
  out += "</g>\n<g class=\"inner\">\n";
  out += "<circle class=\"inner-circle\" cx=\"" + num(half) + "\" cy=\"" + num(half) + "\" r=\"" +
         scale(layout.config.circle_radius()) + "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  for (const auto& p : layout.inner_paths) {
    out += "<path class=\"inner-path\" d=\"M " + px(p.start) + " Q " + px(p.control) + " " + px(p.end) +
           "\" fill=\"none\" stroke=\"" + style.inner_path_color + "\" data-apex-radius=\"" +
           num(p.apex_radius / layout.config.circle_radius()) + "\" data-score=\"" + num(p.score) + "\" data-a=\"" +
           std::to_string(p.a) + "\" data-b=\"" + std::to_string(p.b) + "\"/>\n";
  }
  out += "</g>\n<g class=\"addresses\">\n";
  for (std::size_t k = 0; k < layout.order.addresses.size(); ++k) {
    out += "<circle class=\"address-node\" cx=\"" + num(half + std::cos(layout.angles[k]) * half * 0.97) +
           "\" cy=\"" + num(half - std::sin(layout.angles[k]) * half * 0.97) + "\" r=\"2.000\" data-address=\"" +
           std::to_string(layout.order.addresses[k]) + "\"/>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

/// Detail flow chart: ribbons as stepped areas, token paths on lane rows.
inline std::string export_svg(const FlowLayout& flow, const Style& style = {}) {
  using detail::num;
  const double w = style.slot_width;
  const double h = style.lane_height;
  std::uint32_t rows = 0;
  for (const auto& r : flow.ribbons) rows = std::max(rows, r.y_offset + r.max_height);
  const double top = h;  // border rows above and below the ribbons
  const double bottom = top + (rows + 1) * h;
  const double width = w * static_cast<double>(flow.slot_count() + 1);
  const double height = bottom + h;

  auto x_of = [&](std::size_t slot) { return w * (static_cast<double>(slot) + 0.5); };
  auto y_of = [&](const PathEndpoint& p) {
    if (p.border == Border::Top) return 0.0;
    if (p.border == Border::Bottom) return bottom;
    return top + h * (flow.ribbons[p.ribbon].y_offset + p.lane + 0.5);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" + num(height) +
         "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n<defs>\n";
  std::map<std::pair<std::string, std::string>, std::string> gradients;
  for (const auto& p : flow.paths) {
    for (const auto& s : p.segments) {
      if (s.fill_from == s.fill_to) continue;
      auto key = std::pair{s.fill_from, s.fill_to};
      if (gradients.contains(key)) continue;
      const std::string id = "g" + std::to_string(gradients.size());
      gradients.emplace(key, id);
    }
  }
  // Emit in id order so the defs block does not depend on map ordering.
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> ordered;
  for (const auto& [k, id] : gradients) ordered.push_back({id, k});
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
    return std::stoul(a.first.substr(1)) < std::stoul(b.first.substr(1));
  });
  for (const auto& [id, k] : ordered) {
    out += "<linearGradient id=\"" + id + "\"><stop offset=\"0\" stop-color=\"" + detail::color_for_key(k.first) +
           "\"/><stop offset=\"1\" stop-color=\"" + detail::color_for_key(k.second) + "\"/></linearGradient>\n";
  }
  out += "</defs>\n<g class=\"ribbons\">\n";
  for (const auto& r : flow.ribbons) {
    const double y0 = top + h * r.y_offset;
    std::string d = "M " + num(0.0) + " " + num(y0);
    for (std::size_t s = 0; s < r.heights.size(); ++s) {
      const double yb = y0 + h * r.heights[s];
      d += " L " + num(w * s) + " " + num(yb) + " L " + num(w * (s + 1)) + " " + num(yb);
    }
    d += " L " + num(w * r.heights.size()) + " " + num(y0) + " Z";
    out += "<path class=\"ribbon\" d=\"" + d + "\" fill=\"" + detail::color_for_key(r.color_key) +
           "\" fill-opacity=\"0.35\" data-address=\"" + std::to_string(r.address) + "\"/>\n";
  }
  out += "</g>\n<g class=\"paths\">\n";
  for (const auto& p : flow.paths) {
    for (const auto& s : p.segments) {
      const double x0 = x_of(s.from.slot), x1 = x_of(s.to.slot);
      const double y0 = y_of(s.from), y1 = y_of(s.to);
      const double mx = 0.5 * (x0 + x1);
      std::string stroke = s.fill_from == s.fill_to ? detail::color_for_key(s.fill_from)
                                                    : "url(#" + gradients.at({s.fill_from, s.fill_to}) + ")";
      out += "<path class=\"nft-path " + detail::class_of(s.kind) + "\" d=\"M " + num(x0) + " " + num(y0) +
             " C " + num(mx) + " " + num(y0) + " " + num(mx) + " " + num(y1) + " " + num(x1) + " " + num(y1) +
             "\" fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"2.000\"";
      if (s.kind == SegmentKind::TransferHop) out += " stroke-dasharray=\"3 3\"";
      out += " data-token=\"" + std::to_string(p.token) + "\"/>\n";
    }
  }
  out += "</g>\n</svg>\n";
  return out;
}

/// Group-level stacked area chart.
inline std::string export_svg(const StackedSeries& series, const Style& style = {}) {
  using detail::num;
  const double w = style.slot_width;
  const double h = style.lane_height;
  std::size_t peak = 0;
  for (auto t : series.totals) peak = std::max(peak, t);
  const double width = w * static_cast<double>(std::max<std::size_t>(series.event_count(), 1));
  const double height = h * static_cast<double>(peak + 1);
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  std::vector<std::uint32_t> base(series.event_count(), 0);
  for (std::size_t k = 0; k < series.stacking_order.size(); ++k) {
    std::string upper, lower;
    for (std::size_t e = 0; e < series.event_count(); ++e) {
      const double x = w * (static_cast<double>(e) + 0.5);
      upper += (e == 0 ? "M " : " L ") + num(x) + " " + num(height - h * (base[e] + series.heights[k][e]));
    }
    for (std::size_t e = series.event_count(); e-- > 0;) {
      lower += " L " + num(w * (static_cast<double>(e) + 0.5)) + " " + num(height - h * base[e]);
    }
    for (std::size_t e = 0; e < series.event_count(); ++e) base[e] += series.heights[k][e];
    if (series.event_count() == 0) continue;
    out += "<path class=\"stack-area\" d=\"" + upper + lower + " Z\" fill=\"" +
           detail::palette(series.stacking_order[k]) + "\" data-address=\"" +
           std::to_string(series.stacking_order[k]) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace nftdisk::svg
