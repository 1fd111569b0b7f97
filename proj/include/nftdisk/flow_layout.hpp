#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nftdisk/analytics.hpp"
#include "nftdisk/core.hpp"

namespace nftdisk {

/// Group-level holdings per event, stacked in disk order. The x axis is the
/// event index (relative sequence), not wall-clock time.
struct StackedSeries {
  std::vector<AddressIndex> stacking_order;
  std::vector<std::uint32_t> initial;               // [address] at window start
  std::vector<std::vector<std::uint32_t>> heights;  // [address][event]
  std::vector<std::size_t> totals;                  // [event]
  std::vector<Timestamp> event_times;

  std::size_t event_count() const { return totals.size(); }
  double x_of(std::size_t event) const { return static_cast<double>(event); }
};

/// Inclusive range of timeline event indices.
struct EventRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first + 1; }
  friend bool operator==(const EventRange&, const EventRange&) = default;
};

namespace detail {

/// `order` restricted to the timeline's group, as group positions.
inline std::vector<std::size_t> stacking_positions(const HoldingsTimeline& tl,
                                                   std::span<const AddressIndex> order) {
  std::vector<std::size_t> out;
  for (AddressIndex a : order) {
    const std::size_t p = tl.position_of(a);
    if (p != kOutsideGroup && std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  if (out.size() != tl.addresses.size()) {
    throw Error(ErrorCode::InvalidArgument, "stacking order does not cover the whole group");
  }
  return out;
}

}  // namespace detail

inline StackedSeries build_stacked_series(const HoldingsTimeline& tl, std::span<const AddressIndex> order) {
  const auto positions = detail::stacking_positions(tl, order);
  StackedSeries s;
  s.totals = tl.group_total;
  for (const auto& ev : tl.events) s.event_times.push_back(ev.timestamp);
  for (std::size_t p : positions) {
    s.stacking_order.push_back(tl.addresses[p]);
    s.initial.push_back(static_cast<std::uint32_t>(tl.initial[p].size()));
    std::vector<std::uint32_t> h;
    h.reserve(tl.events.size());
    for (const auto& snapshot : tl.holdings) h.push_back(static_cast<std::uint32_t>(snapshot[p].size()));
    s.heights.push_back(std::move(h));
  }
  return s;
}

/// Period brush over the stacked chart: every event whose x lies in
/// [x_lo, x_hi].
inline EventRange resolve_time_brush(const StackedSeries& series, double x_lo, double x_hi) {
  if (x_lo > x_hi) throw Error(ErrorCode::InvalidArgument, "brush bounds are inverted");
  const double n = static_cast<double>(series.event_count());
  const double lo = std::max(0.0, std::ceil(x_lo));
  const double hi = std::min(n - 1.0, std::floor(x_hi));
  if (series.event_count() == 0 || lo > hi) {
    throw Error(ErrorCode::EmptyBrush, "no event inside the brushed period");
  }
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

// ---------------------------------------------------------------------------
// Detail flow chart
// ---------------------------------------------------------------------------

enum class SegmentKind { Hold, SaleHop, TransferHop, MintEntry, ExternalEntry, ExternalExit };

inline std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::Hold: return "Hold";
    case SegmentKind::SaleHop: return "SaleHop";
    case SegmentKind::TransferHop: return "TransferHop";
    case SegmentKind::MintEntry: return "MintEntry";
    case SegmentKind::ExternalEntry: return "ExternalEntry";
    case SegmentKind::ExternalExit: return "ExternalExit";
  }
  return "Hold";
}

enum class Border { None, Top, Bottom };

inline std::string_view to_string(Border b) {
  return b == Border::Top ? "top" : b == Border::Bottom ? "bottom" : "none";
}

/// A point of a trade path. Slots are local: slot 0 is the state before
/// the first event of the window, slot s the state after its s-th event.
struct PathEndpoint {
  Border border = Border::None;
  std::size_t ribbon = 0;  // when border == None
  AddressIndex address = 0;
  std::size_t slot = 0;
  std::uint32_t lane = 0;

  friend bool operator==(const PathEndpoint&, const PathEndpoint&) = default;
};

struct PathSegment {
  TokenId token = 0;
  SegmentKind kind = SegmentKind::Hold;
  PathEndpoint from;
  PathEndpoint to;
  std::string fill_from;  // colour keys for the linear gradient
  std::string fill_to;
  std::optional<TxIndex> tx;  // the transaction behind a hop/entry/exit
};

struct TokenPath {
  TokenId token = 0;
  std::vector<PathSegment> segments;
};

struct Ribbon {
  AddressIndex address = 0;
  std::size_t stack_index = 0;
  std::string color_key;
  std::vector<std::uint32_t> heights;  // per slot
  std::uint32_t max_height = 0;
  std::uint32_t y_offset = 0;          // first lane row of this ribbon
};

struct FlowEvent {
  std::size_t event = 0;  // timeline event index
  TxIndex tx = 0;
  Timestamp timestamp = 0;
  TokenId token_id = 0;
  Status status = Status::Transfer;
  Origin origin = Origin::Normal;
  AddressIndex from = 0;
  AddressIndex to = 0;
};

/// Tokens held per ribbon, top lane first.
using LaneMap = std::vector<std::vector<TokenId>>;

enum class LaneSource { Ribbon, Mint, External };

/// One ownership change as seen by the lane router.
struct LaneChange {
  TokenId token = 0;
  LaneSource source = LaneSource::External;
  std::optional<std::size_t> sender;    // ribbon index, when source == Ribbon
  std::optional<std::size_t> receiver;  // ribbon index, absent when leaving
};

/// Insertion-side rule. A token arriving from a ribbon stacked above enters
/// the receiver's top lane, from below its bottom lane; mints enter at the
/// top, external inflow at the bottom. Removing a token closes its lane and
/// the remaining tokens keep their relative order.
inline void assign_lanes(LaneMap& lanes, const LaneChange& change) {
  if (change.sender) {
    auto& from = lanes.at(*change.sender);
    from.erase(std::remove(from.begin(), from.end(), change.token), from.end());
  }
  if (!change.receiver) return;
  auto& to = lanes.at(*change.receiver);
  bool top = false;
  switch (change.source) {
    case LaneSource::Mint: top = true; break;
    case LaneSource::External: top = false; break;
    case LaneSource::Ribbon: top = change.sender && *change.sender < *change.receiver; break;
  }
  if (top) {
    to.insert(to.begin(), change.token);
  } else {
    to.push_back(change.token);
  }
}

struct FlowLayout {
  EventRange range;
  std::vector<FlowEvent> events;
  std::vector<Ribbon> ribbons;   // stacking order
  std::vector<LaneMap> lanes;    // [slot][ribbon] -> tokens top to bottom
  std::vector<TokenPath> paths;  // ascending token id

  std::size_t slot_count() const { return lanes.size(); }
};

inline std::string color_key(AddressIndex a) { return "addr-" + std::to_string(a); }
inline std::string border_key(Border b) { return b == Border::Top ? "border-top" : "border-bottom"; }

/// Builds the detail chart for `range`: ribbons for the group addresses that
/// trade or hold tokens in the window, lanes per the insertion-side rule,
/// and one routed trade path per token seen in any lane.
inline FlowLayout build_flow_detail(const HoldingsTimeline& tl, EventRange range,
                                    std::span<const AddressIndex> order) {
  if (range.first > range.last || range.last >= tl.events.size()) {
    throw Error(ErrorCode::OutOfRange, "event range outside the timeline");
  }
  const auto positions = detail::stacking_positions(tl, order);
  const std::size_t slots = range.size() + 1;
  auto global_slot = [&](std::size_t s) { return range.first + s; };

  // Ribbon membership.
  std::vector<bool> keep(tl.addresses.size(), false);
  for (std::size_t e = range.first; e <= range.last; ++e) {
    const auto& ev = tl.events[e];
    for (AddressIndex a : {ev.from, ev.to}) {
      const std::size_t p = tl.position_of(a);
      if (p != kOutsideGroup) keep[p] = true;
    }
    if (ev.holder_before != kOutsideGroup) keep[ev.holder_before] = true;
  }
  for (std::size_t s = 0; s < slots; ++s) {
    for (std::size_t p = 0; p < tl.addresses.size(); ++p) {
      if (!tl.at_slot(global_slot(s), p).empty()) keep[p] = true;
    }
  }

  FlowLayout out;
  out.range = range;
  std::vector<std::size_t> ribbon_of(tl.addresses.size(), kOutsideGroup);
  for (std::size_t p : positions) {
    if (!keep[p]) continue;
    Ribbon r;
    r.address = tl.addresses[p];
    r.stack_index = out.ribbons.size();
    r.color_key = color_key(r.address);
    for (std::size_t s = 0; s < slots; ++s) {
      r.heights.push_back(static_cast<std::uint32_t>(tl.at_slot(global_slot(s), p).size()));
    }
    r.max_height = *std::max_element(r.heights.begin(), r.heights.end());
    ribbon_of[p] = out.ribbons.size();
    out.ribbons.push_back(std::move(r));
  }
  std::uint32_t y = 0;
  for (auto& r : out.ribbons) {
    r.y_offset = y;
    y += r.max_height + 1;
  }

  // Lanes: seed ascending by token id, then route each event.
  LaneMap lanes(out.ribbons.size());
  for (std::size_t p = 0; p < tl.addresses.size(); ++p) {
    if (ribbon_of[p] != kOutsideGroup) lanes[ribbon_of[p]] = tl.at_slot(range.first, p);
  }
  out.lanes.push_back(lanes);
  for (std::size_t e = range.first; e <= range.last; ++e) {
    const auto& ev = tl.events[e];
    out.events.push_back({e, ev.tx, ev.timestamp, ev.token_id, ev.status, ev.origin, ev.from, ev.to});
    LaneChange change;
    change.token = ev.token_id;
    if (ev.holder_before != kOutsideGroup) {
      change.source = LaneSource::Ribbon;
      change.sender = ribbon_of[ev.holder_before];
    } else {
      change.source = ev.origin == Origin::Mint ? LaneSource::Mint : LaneSource::External;
    }
    if (ev.holder_after != kOutsideGroup) change.receiver = ribbon_of[ev.holder_after];
    if (change.sender || change.receiver) assign_lanes(lanes, change);
    out.lanes.push_back(lanes);
  }

  // Token locations per slot.
  std::vector<TokenId> tokens;
  for (const auto& map : out.lanes) {
    for (const auto& ribbon : map) tokens.insert(tokens.end(), ribbon.begin(), ribbon.end());
  }
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());

  struct Loc {
    std::size_t ribbon;
    std::uint32_t lane;
  };
  auto locate = [&](TokenId token, std::size_t slot) -> std::optional<Loc> {
    const auto& map = out.lanes[slot];
    for (std::size_t r = 0; r < map.size(); ++r) {
      auto it = std::find(map[r].begin(), map[r].end(), token);
      if (it != map[r].end()) return Loc{r, static_cast<std::uint32_t>(it - map[r].begin())};
    }
    return std::nullopt;
  };
  auto at_ribbon = [&](Loc l, std::size_t slot) {
    return PathEndpoint{Border::None, l.ribbon, out.ribbons[l.ribbon].address, slot, l.lane};
  };

  for (TokenId token : tokens) {
    TokenPath path;
    path.token = token;
    std::optional<Loc> here = locate(token, 0);
    for (std::size_t s = 0; s + 1 < slots; ++s) {
      const std::optional<Loc> next = locate(token, s + 1);
      const auto& ev = out.events[s];
      PathSegment seg;
      seg.token = token;
      if (ev.token_id == token && (here || next)) {
        seg.tx = ev.tx;
        if (here && next) {
          seg.kind = ev.status == Status::Sale ? SegmentKind::SaleHop : SegmentKind::TransferHop;
          seg.from = at_ribbon(*here, s);
          seg.to = at_ribbon(*next, s + 1);
        } else if (next) {
          const bool mint = ev.origin == Origin::Mint;
          seg.kind = mint ? SegmentKind::MintEntry : SegmentKind::ExternalEntry;
          seg.from = PathEndpoint{mint ? Border::Top : Border::Bottom, 0, 0, s, 0};
          seg.to = at_ribbon(*next, s + 1);
        } else {
          seg.kind = SegmentKind::ExternalExit;
          seg.from = at_ribbon(*here, s);
          seg.to = PathEndpoint{Border::Bottom, 0, 0, s + 1, 0};
        }
      } else if (here && next) {
        seg.kind = SegmentKind::Hold;
        seg.from = at_ribbon(*here, s);
        seg.to = at_ribbon(*next, s + 1);
        if (!path.segments.empty()) {
          auto& prev = path.segments.back();
          if (prev.kind == SegmentKind::Hold && prev.to == seg.from && prev.from.lane == prev.to.lane &&
              seg.from.lane == seg.to.lane) {
            prev.to = seg.to;
            here = next;
            continue;
          }
        }
      } else {
        here = next;
        continue;
      }
      auto key = [&](const PathEndpoint& p) {
        return p.border == Border::None ? out.ribbons[p.ribbon].color_key : border_key(p.border);
      };
      seg.fill_from = key(seg.from);
      seg.fill_to = key(seg.to);
      path.segments.push_back(std::move(seg));
      here = next;
    }
    out.paths.push_back(std::move(path));
  }
  return out;
}

}  // namespace nftdisk
