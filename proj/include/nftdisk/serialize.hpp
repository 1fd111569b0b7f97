#pragma once

#include "json.hpp"

#include "nftdisk/disk_layout.hpp"
#include "nftdisk/flow_layout.hpp"
#include "nftdisk/time.hpp"

namespace nftdisk {

using Json = nlohmann::json;

inline Json error_body(ErrorCode code, std::string_view message) {
  return {{"code", to_string(code)}, {"message", message}};
}

inline Json time_range_json(TimeRange r) {
  return {{"from", r.from}, {"to", r.to}, {"from_iso", time::format_iso(r.from)}, {"to_iso", time::format_iso(r.to)}};
}

inline Json address_ref(const CollectionDataset& ds, AddressIndex a) {
  return {{"index", a}, {"address", ds.address(a).hex()}};
}

inline Json point_json(Point p) { return Json::array({p.x, p.y}); }

inline Json pair_json(const CollectionDataset& ds, const PairStats& p) {
  return {{"a", address_ref(ds, p.a)},
          {"b", address_ref(ds, p.b)},
          {"tx_count", p.tx_count},
          {"unique_tokens", p.unique_tokens},
          {"score", p.score}};
}

inline Json to_json(const CollectionDataset& ds, const DiskLayout& layout) {
  const auto& c = layout.config;
  Json j;
  j["collection_id"] = ds.collection_id();
  j["config"] = {{"time_range", time_range_json(c.time_range)},
                 {"inner_radius", c.inner_radius},
                 {"outer_radius", c.outer_radius},
                 {"inner_circle_radius", c.circle_radius()},
                 {"metric", to_string(c.metric)},
                 {"min_tx", c.min_tx}};
  Json addresses = Json::array();
  for (std::size_t k = 0; k < layout.order.addresses.size(); ++k) {
    Json a = address_ref(ds, layout.order.addresses[k]);
    a["position"] = k;
    a["angle"] = layout.angles[k];
    addresses.push_back(std::move(a));
  }
  j["addresses"] = std::move(addresses);
  j["order_cost"] = layout.order.cost;

  Json arcs = Json::array();
  for (const auto& a : layout.arcs) {
    arcs.push_back({{"tx", a.tx},
                    {"timestamp", a.timestamp},
                    {"radius", a.radius},
                    {"angle_start", a.angle_start},
                    {"angle_end", a.angle_end},
                    {"span", a.span},
                    {"style", to_string(a.style)},
                    {"from", a.from},
                    {"to", a.to}});
  }
  j["arcs"] = std::move(arcs);

  Json lifelines = Json::array();
  for (const auto& l : layout.lifelines) {
    lifelines.push_back({{"address", l.address},
                         {"angle", l.angle},
                         {"first", l.first},
                         {"last", l.last},
                         {"r_first", l.r_first},
                         {"r_last", l.r_last}});
  }
  j["lifelines"] = std::move(lifelines);

  Json bands = Json::array();
  for (const auto& b : layout.background) {
    bands.push_back({{"start", b.start},
                     {"end", b.end},
                     {"r_lo", b.r_lo},
                     {"r_hi", b.r_hi},
                     {"intensity", b.intensity},
                     {"value", b.value.to_string()}});
  }
  j["background"] = std::move(bands);

  Json paths = Json::array();
  for (const auto& p : layout.inner_paths) {
    paths.push_back({{"a", p.a},
                     {"b", p.b},
                     {"angle_a", p.angle_a},
                     {"angle_b", p.angle_b},
                     {"start", point_json(p.start)},
                     {"control", point_json(p.control)},
                     {"end", point_json(p.end)},
                     {"apex_radius", p.apex_radius},
                     {"score", p.score},
                     {"tx_count", p.tx_count},
                     {"unique_tokens", p.unique_tokens}});
  }
  j["inner_paths"] = std::move(paths);

  Json pairs = Json::array();
  for (const auto& p : layout.pairs) pairs.push_back(pair_json(ds, p));
  j["pairs"] = std::move(pairs);
  return j;
}

inline Json to_json(const CollectionDataset& ds, const Selection& sel) {
  Json addresses = Json::array();
  for (auto a : sel.addresses) addresses.push_back(address_ref(ds, a));
  return {{"addresses", std::move(addresses)}, {"time_range", time_range_json(sel.time_range)}};
}

inline Json to_json(const CollectionDataset& ds, const StackedSeries& s) {
  Json order = Json::array();
  for (auto a : s.stacking_order) order.push_back(address_ref(ds, a));
  return {{"stacking_order", std::move(order)},
          {"initial", s.initial},
          {"heights", s.heights},
          {"totals", s.totals},
          {"event_times", s.event_times}};
}

inline Json endpoint_json(const PathEndpoint& p) {
  Json j = {{"border", to_string(p.border)}, {"slot", p.slot}};
  if (p.border == Border::None) {
    j["ribbon"] = p.ribbon;
    j["address"] = p.address;
    j["lane"] = p.lane;
  }
  return j;
}

inline Json to_json(const CollectionDataset& ds, const FlowLayout& flow) {
  Json j;
  j["range"] = {{"first", flow.range.first}, {"last", flow.range.last}};
  Json events = Json::array();
  for (const auto& e : flow.events) {
    events.push_back({{"event", e.event},
                      {"tx", e.tx},
                      {"timestamp", e.timestamp},
                      {"token_id", e.token_id},
                      {"status", to_string(e.status)},
                      {"origin", to_string(e.origin)},
                      {"from", address_ref(ds, e.from)},
                      {"to", address_ref(ds, e.to)}});
  }
  j["events"] = std::move(events);

  Json ribbons = Json::array();
  for (const auto& r : flow.ribbons) {
    Json rb = address_ref(ds, r.address);
    rb["stack_index"] = r.stack_index;
    rb["color_key"] = r.color_key;
    rb["heights"] = r.heights;
    rb["max_height"] = r.max_height;
    rb["y_offset"] = r.y_offset;
    ribbons.push_back(std::move(rb));
  }
  j["ribbons"] = std::move(ribbons);
  j["lanes"] = flow.lanes;

  Json paths = Json::array();
  for (const auto& p : flow.paths) {
    Json segments = Json::array();
    for (const auto& s : p.segments) {
      Json seg = {{"kind", to_string(s.kind)},
                  {"from", endpoint_json(s.from)},
                  {"to", endpoint_json(s.to)},
                  {"fill", {{"from", s.fill_from}, {"to", s.fill_to}}}};
      seg["tx"] = s.tx ? Json(*s.tx) : Json(nullptr);
      segments.push_back(std::move(seg));
    }
    paths.push_back({{"token_id", p.token}, {"segments", std::move(segments)}});
  }
  j["paths"] = std::move(paths);
  return j;
}

inline Json to_json(const ConstantSpan& s, const HoldingsTimeline& tl) {
  return {{"first_event", s.first_event},
          {"last_event", s.last_event},
          {"tx_count", s.tx_count},
          {"holdings", s.holdings},
          {"from", tl.events[s.first_event].timestamp},
          {"to", tl.events[s.last_event].timestamp}};
}

}  // namespace nftdisk
