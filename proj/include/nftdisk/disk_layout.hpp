#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "nftdisk/analytics.hpp"
#include "nftdisk/core.hpp"
#include "nftdisk/seriation.hpp"

namespace nftdisk {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point polar(double radius, double angle) {
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Toolbar state of the disk view. Radii are normalised to the unit disk.
struct DiskConfig {
  TimeRange time_range;
  double inner_radius = 0.35;       // ring starts here (earliest time)
  double outer_radius = 1.0;        // ring ends here (latest time)
  std::optional<double> inner_circle_radius;  // defaults to inner_radius
  BackgroundMetric metric = BackgroundMetric::AveragePrice;
  std::uint32_t min_tx = 20;

  double circle_radius() const { return inner_circle_radius.value_or(inner_radius); }

  void validate() const {
    const double r = circle_radius();
    if (!(0.0 < r && r <= inner_radius && inner_radius < outer_radius && outer_radius <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "radii must satisfy 0 < circle <= inner < outer <= 1");
    }
    if (!time_range.valid()) throw Error(ErrorCode::InvalidArgument, "time range is inverted");
    if (min_tx < 1) throw Error(ErrorCode::InvalidArgument, "min_tx must be >= 1");
  }
};

/// One transaction drawn between two address spokes at its time radius.
/// The arc runs counter-clockwise from angle_start through `span` radians.
struct ArcGlyph {
  TxIndex tx = 0;
  Timestamp timestamp = 0;
  double radius = 0.0;
  double angle_start = 0.0;
  double angle_end = 0.0;
  double span = 0.0;
  Status style = Status::Transfer;
  AddressIndex from = 0;
  AddressIndex to = 0;
};

/// First-to-last activity segment along an address spoke.
struct Lifeline {
  AddressIndex address = 0;
  double angle = 0.0;
  Timestamp first = 0;
  Timestamp last = 0;
  double r_first = 0.0;
  double r_last = 0.0;
};

struct BackgroundBand {
  Timestamp start = 0;
  Timestamp end = 0;
  double r_lo = 0.0;
  double r_hi = 0.0;
  double intensity = 0.0;  // in [0, 1]
  Decimal value;
};

/// Quadratic curve inside the inner circle for one suspicious pair. Its
/// parametric midpoint sits at apex_radius = R * (1 - S) on the bisector.
struct InnerPath {
  AddressIndex a = 0;
  AddressIndex b = 0;
  double angle_a = 0.0;
  double angle_b = 0.0;
  Point start;
  Point control;
  Point end;
  double apex_radius = 0.0;
  double score = 0.0;
  std::uint32_t tx_count = 0;
  std::uint32_t unique_tokens = 0;
};

struct DiskLayout {
  DiskConfig config;
  AddressOrder order;
  std::vector<double> angles;  // parallel to order.addresses
  std::vector<ArcGlyph> arcs;  // log order, later on top
  std::vector<Lifeline> lifelines;
  std::vector<BackgroundBand> background;
  std::vector<InnerPath> inner_paths;
  std::vector<PairStats> pairs;  // filtered pairs behind the layout

  std::optional<std::size_t> position_of(AddressIndex a) const {
    for (std::size_t i = 0; i < order.addresses.size(); ++i) {
      if (order.addresses[i] == a) return i;
    }
    return std::nullopt;
  }
};

inline double angle_of_position(std::size_t k, std::size_t n) {
  return kTwoPi * static_cast<double>(k) / static_cast<double>(n);
}

/// Even spacing: order position k sits at 2*pi*k/n.
inline std::vector<double> address_angles(const AddressOrder& order) {
  const std::size_t n = order.addresses.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "address order is empty");
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = angle_of_position(k, n);
  return out;
}

/// Linear time-to-radius map; t0 lands on the inner radius, t1 on the outer.
inline double time_to_radius(Timestamp t, const DiskConfig& config) {
  const auto& r = config.time_range;
  if (!r.contains(t)) throw Error(ErrorCode::OutOfRange, "timestamp outside the configured range");
  if (r.from == r.to) return config.inner_radius;
  const double f = static_cast<double>(t - r.from) / static_cast<double>(r.to - r.from);
  return config.inner_radius + f * (config.outer_radius - config.inner_radius);
}

/// Inverse of time_to_radius; the radius is clamped into the ring first.
inline double radius_to_time(double radius, const DiskConfig& config) {
  const auto& r = config.time_range;
  const double clamped = std::clamp(radius, config.inner_radius, config.outer_radius);
  const double f = (clamped - config.inner_radius) / (config.outer_radius - config.inner_radius);
  return static_cast<double>(r.from) + f * static_cast<double>(r.to - r.from);
}

namespace detail {

/// Position-indexed smaller-span arc between order positions pa and pb.
/// Returns (start position, span in positions). Exactly opposite endpoints
/// start from the lower position.
inline std::pair<std::size_t, std::size_t> min_span(std::size_t pa, std::size_t pb, std::size_t n) {
  const std::size_t ccw = (pb + n - pa) % n;  // a -> b counter-clockwise
  if (2 * ccw < n) return {pa, ccw};
  if (2 * ccw > n) return {pb, n - ccw};
  return {std::min(pa, pb), ccw};
}

inline std::unordered_map<AddressIndex, std::size_t> position_map(const AddressOrder& order) {
  std::unordered_map<AddressIndex, std::size_t> pos;
  for (std::size_t k = 0; k < order.addresses.size(); ++k) pos.emplace(order.addresses[k], k);
  return pos;
}

}  // namespace detail

/// One arc per in-range transaction whose endpoints are both on the disk.
inline std::vector<ArcGlyph> make_arcs(const CollectionDataset& ds, const AddressOrder& order,
                                       std::span<const double> angles, const DiskConfig& config) {
  const std::size_t n = order.addresses.size();
  const auto pos = detail::position_map(order);
  std::vector<ArcGlyph> arcs;
  const auto [first, last] = ds.index_range(config.time_range);
  const auto txs = ds.transactions();
  for (std::size_t i = first; i < last; ++i) {
    const auto& t = txs[i];
    auto fa = pos.find(t.from);
    auto fb = pos.find(t.to);
    if (fa == pos.end() || fb == pos.end() || t.from == t.to) continue;
    const auto [start, steps] = detail::min_span(fa->second, fb->second, n);
    ArcGlyph arc;
    arc.tx = static_cast<TxIndex>(i);
    arc.timestamp = t.timestamp;
    arc.radius = time_to_radius(t.timestamp, config);
    arc.angle_start = angles[start];
    arc.angle_end = angles[(start + steps) % n];
    arc.span = angle_of_position(steps, n);
    arc.style = t.status;
    arc.from = t.from;
    arc.to = t.to;
    arcs.push_back(arc);
  }
  return arcs;
}

/// Per address, the spoke segment between its first and last in-range
/// transaction (any counterparty). Addresses idle in the range get none.
inline std::vector<Lifeline> make_lifelines(const CollectionDataset& ds, const AddressOrder& order,
                                            std::span<const double> angles, const DiskConfig& config) {
  const auto pos = detail::position_map(order);
  std::vector<std::optional<std::pair<Timestamp, Timestamp>>> seen(order.addresses.size());
  const auto [first, last] = ds.index_range(config.time_range);
  const auto txs = ds.transactions();
  auto touch = [&](AddressIndex a, Timestamp t) {
    auto it = pos.find(a);
    if (it == pos.end()) return;
    auto& s = seen[it->second];
    if (!s) {
      s = std::pair{t, t};
    } else {
      s->second = t;
    }
  };
  for (std::size_t i = first; i < last; ++i) {
    touch(txs[i].from, txs[i].timestamp);
    if (txs[i].to != txs[i].from) touch(txs[i].to, txs[i].timestamp);
  }
  std::vector<Lifeline> out;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) continue;
    Lifeline l;
    l.address = order.addresses[k];
    l.angle = angles[k];
    l.first = seen[k]->first;
    l.last = seen[k]->second;
    l.r_first = time_to_radius(l.first, config);
    l.r_last = time_to_radius(l.last, config);
    out.push_back(l);
  }
  return out;
}

/// One annular band per month, clipped to the configured range. Intensity
/// is the bin value over the largest bin value.
inline std::vector<BackgroundBand> make_background(const BackgroundSeries& series, const DiskConfig& config) {
  std::vector<BackgroundBand> out;
  const auto& r = config.time_range;
  for (const auto& bin : series.bins) {
    const Timestamp lo = std::max(bin.start, r.from);
    const Timestamp hi = std::min(bin.end, r.to);
    if (lo > hi) continue;
    BackgroundBand band;
    band.start = bin.start;
    band.end = bin.end;
    band.r_lo = time_to_radius(lo, config);
    band.r_hi = time_to_radius(hi, config);
    band.value = bin.value;
    band.intensity = ratio(bin.value, series.normalization);
    out.push_back(band);
  }
  return out;
}

/// Quadratic control point placing the curve midpoint at `apex`:
/// B(1/2) = P0/4 + C/2 + P1/4, so C = 2*apex - (P0 + P1)/2.
inline Point quadratic_control_for_midpoint(Point p0, Point p1, Point apex) {
  return {2.0 * apex.x - 0.5 * (p0.x + p1.x), 2.0 * apex.y - 0.5 * (p0.y + p1.y)};
}

inline Point quadratic_point(Point p0, Point c, Point p1, double t) {
  const double u = 1.0 - t;
  return {u * u * p0.x + 2 * u * t * c.x + t * t * p1.x, u * u * p0.y + 2 * u * t * c.y + t * t * p1.y};
}

/// Inner-circle curves for every pair with S > 0.
inline std::vector<InnerPath> make_inner_paths(std::span<const PairStats> pairs, const AddressOrder& order,
                                               std::span<const double> angles, double circle_radius) {
  const std::size_t n = order.addresses.size();
  const auto pos = detail::position_map(order);
  std::vector<InnerPath> out;
  for (const auto& p : pairs) {
    if (p.score <= 0.0) continue;
    auto ia = pos.find(p.a);
    auto ib = pos.find(p.b);
    if (ia == pos.end() || ib == pos.end()) continue;
    const auto [start, steps] = detail::min_span(ia->second, ib->second, n);
    const double bisector = angles[start] + 0.5 * angle_of_position(steps, n);
    InnerPath path;
    path.a = p.a;
    path.b = p.b;
    path.angle_a = angles[ia->second];
    path.angle_b = angles[ib->second];
    path.start = polar(circle_radius, path.angle_a);
    path.end = polar(circle_radius, path.angle_b);
    path.apex_radius = circle_radius * (1.0 - p.score);
    path.control = quadratic_control_for_midpoint(path.start, path.end, polar(path.apex_radius, bisector));
    path.score = p.score;
    path.tx_count = p.tx_count;
    path.unique_tokens = p.unique_tokens;
    out.push_back(path);
  }
  return out;
}

/// Full disk pipeline: pair stats -> address filter -> seriation -> geometry.
inline DiskLayout build_disk_layout(const CollectionDataset& ds, const DiskConfig& config) {
  config.validate();
  DiskLayout layout;
  layout.config = config;
  const auto stats = compute_pair_stats(ds, config.time_range);
  auto filtered = filter_pairs(stats, config.min_tx);
  layout.pairs = std::move(filtered.pairs);
  const auto series = compute_background_bins(ds, config.metric, config.time_range);
  layout.background = make_background(series, config);
  if (filtered.addresses.empty()) return layout;

  layout.order = seriate(layout.pairs, filtered.addresses);
  layout.angles = address_angles(layout.order);
  layout.arcs = make_arcs(ds, layout.order, layout.angles, config);
  layout.lifelines = make_lifelines(ds, layout.order, layout.angles, config);
  layout.inner_paths = make_inner_paths(layout.pairs, layout.order, layout.angles, config.circle_radius());
  return layout;
}

/// Arc-shaped brush: counter-clockwise from angle_start to angle_end
/// (wrapping through 0 when angle_end < angle_start; angle_end - angle_start
/// of 2*pi covers the whole ring), radial extent r_lo..r_hi.
struct CircularBrush {
  double angle_start = 0.0;
  double angle_end = 0.0;
  double r_lo = 0.0;
  double r_hi = 0.0;
};

struct Selection {
  std::vector<AddressIndex> addresses;  // disk order
  TimeRange time_range;
};

inline bool angle_in_brush(double angle, const CircularBrush& brush) {
  double span = brush.angle_end - brush.angle_start;
  if (span >= kTwoPi) return true;
  if (span < 0) span += kTwoPi;
  double offset = std::fmod(angle - brush.angle_start, kTwoPi);
  if (offset < 0) offset += kTwoPi;
  return offset <= span;
}

/// Resolves a circular brush against a layout: angular span picks addresses,
/// radial span picks the time range.
inline Selection resolve_circular_brush(const DiskLayout& layout, const CircularBrush& brush) {
  if (!(0.0 <= brush.r_lo && brush.r_lo < brush.r_hi)) {
    throw Error(ErrorCode::InvalidArgument, "brush radii must satisfy 0 <= r_lo < r_hi");
  }
  Selection sel;
  for (std::size_t k = 0; k < layout.order.addresses.size(); ++k) {
    if (angle_in_brush(layout.angles[k], brush)) sel.addresses.push_back(layout.order.addresses[k]);
  }
  if (sel.addresses.empty()) throw Error(ErrorCode::EmptyBrush, "no address inside the brushed span");
  const auto& cfg = layout.config;
  const double lo = std::max(brush.r_lo, cfg.inner_radius);
  const double hi = std::min(brush.r_hi, cfg.outer_radius);
  if (lo > hi) throw Error(ErrorCode::EmptyBrush, "brush does not reach the ring");
  sel.time_range.from = static_cast<Timestamp>(std::floor(radius_to_time(lo, cfg)));
  sel.time_range.to = static_cast<Timestamp>(std::ceil(radius_to_time(hi, cfg)));
  sel.time_range.from = std::max(sel.time_range.from, cfg.time_range.from);
  sel.time_range.to = std::min(sel.time_range.to, cfg.time_range.to);
  return sel;
}

}  // namespace nftdisk
