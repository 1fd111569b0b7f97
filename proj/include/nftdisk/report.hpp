#pragma once

#include <optional>
#include <set>
#include <sstream>

#include "nftdisk/disk_layout.hpp"
#include "nftdisk/flow_layout.hpp"
#include "nftdisk/serialize.hpp"

namespace nftdisk {

/// Toolbar state shared by the CLI and the HTTP API. Every field has a
/// default: full time range, AveragePrice, min_tx = 20.
struct SessionConfig {
  std::optional<TimeRange> time_range;
  BackgroundMetric metric = BackgroundMetric::AveragePrice;
  std::uint32_t min_tx = 20;
  std::optional<Selection> selection;
  std::optional<EventRange> event_range;

  TimeRange resolved_range(const CollectionDataset& ds) const { return time_range.value_or(ds.time_extent()); }

  DiskConfig disk_config(const CollectionDataset& ds) const {
    DiskConfig c;
    c.time_range = resolved_range(ds);
    c.metric = metric;
    c.min_tx = min_tx;
    return c;
  }
};

inline BackgroundMetric parse_metric(std::string_view s) {
  if (s == "AveragePrice" || s == "average-price" || s == "price") return BackgroundMetric::AveragePrice;
  if (s == "TradeVolume" || s == "trade-volume" || s == "volume") return BackgroundMetric::TradeVolume;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(s) + "'");
}

/// Disk order restricted to the group, then group members that are not on
/// the disk in ascending index order.
inline std::vector<AddressIndex> stacking_order(const DiskLayout& layout, std::span<const AddressIndex> group) {
  std::vector<AddressIndex> order;
  for (AddressIndex a : layout.order.addresses) {
    if (std::binary_search(group.begin(), group.end(), a)) order.push_back(a);
  }
  for (AddressIndex a : group) {
    if (std::find(order.begin(), order.end(), a) == order.end()) order.push_back(a);
  }
  return order;
}

struct GroupReport {
  AddressGroup group;
  std::size_t events = 0;
  std::vector<ConstantSpan> spans;
  std::vector<Timestamp> span_from, span_to;
};

struct ReportSummary {
  std::size_t transactions_in_range = 0;
  std::size_t suspicious_pairs = 0;
  std::size_t suspicious_addresses = 0;
  std::size_t suspicious_transactions = 0;
  std::size_t tokens_involved = 0;
};

struct ReportDocument {
  std::string collection_id;
  TimeRange range;
  std::uint32_t min_tx = 20;
  std::size_t top_k = 10;
  std::vector<PairStats> ranked;  // top-k by S, then M
  std::vector<GroupReport> groups;
  ReportSummary summary;
};

struct ReportOptions {
  std::size_t top_k = 10;
  std::size_t min_span_events = 3;
};

/// Suspicious pairs are those surviving the address filter with S > 0.
inline ReportDocument generate_report(const CollectionDataset& ds, const SessionConfig& session,
                                      const ReportOptions& options = {}) {
  if (session.min_tx < 1) throw Error(ErrorCode::InvalidArgument, "min_tx must be >= 1");
  ReportDocument doc;
  doc.collection_id = ds.collection_id();
  doc.range = session.resolved_range(ds);
  doc.min_tx = session.min_tx;
  doc.top_k = options.top_k;

  const auto [first, last] = ds.index_range(doc.range);
  doc.summary.transactions_in_range = last - first;

  std::vector<PairStats> suspicious;
  for (const auto& p : filter_pairs(compute_pair_stats(ds, doc.range), session.min_tx).pairs) {
    if (p.score > 0.0) suspicious.push_back(p);
  }
  auto ranked = suspicious;
  std::stable_sort(ranked.begin(), ranked.end(), [](const PairStats& x, const PairStats& y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.tx_count != y.tx_count) return x.tx_count > y.tx_count;
    return std::pair{x.a, x.b} < std::pair{y.a, y.b};
  });
  if (ranked.size() > options.top_k) ranked.resize(options.top_k);
  doc.ranked = std::move(ranked);

  std::set<AddressIndex> addresses;
  std::set<std::pair<AddressIndex, AddressIndex>> pair_set;
  for (const auto& p : suspicious) {
    addresses.insert(p.a);
    addresses.insert(p.b);
    pair_set.insert({p.a, p.b});
    doc.summary.suspicious_transactions += p.tx_count;
  }
  doc.summary.suspicious_pairs = suspicious.size();
  doc.summary.suspicious_addresses = addresses.size();
  std::set<TokenId> tokens;
  const auto txs = ds.transactions();
  for (std::size_t i = first; i < last; ++i) {
    if (pair_set.contains(std::minmax(txs[i].from, txs[i].to))) tokens.insert(txs[i].token_id);
  }
  doc.summary.tokens_involved = tokens.size();

  for (auto& g : detect_groups(suspicious)) {
    GroupReport gr;
    const auto tl = replay_holdings(ds, g.addresses, doc.range);
    gr.events = tl.events.size();
    gr.spans = detect_constant_spans(tl, std::max<std::size_t>(options.min_span_events, 2));
    for (const auto& s : gr.spans) {
      gr.span_from.push_back(tl.events[s.first_event].timestamp);
      gr.span_to.push_back(tl.events[s.last_event].timestamp);
    }
    gr.group = std::move(g);
    doc.groups.push_back(std::move(gr));
  }
  return doc;
}

inline Json to_json(const CollectionDataset& ds, const ReportDocument& doc) {
  Json j;
  j["collection_id"] = doc.collection_id;
  j["time_range"] = time_range_json(doc.range);
  j["min_tx"] = doc.min_tx;
  j["top_k"] = doc.top_k;
  Json pairs = Json::array();
  for (std::size_t i = 0; i < doc.ranked.size(); ++i) {
    Json p = pair_json(ds, doc.ranked[i]);
    p["rank"] = i + 1;
    pairs.push_back(std::move(p));
  }
  j["pairs"] = std::move(pairs);
  Json groups = Json::array();
  for (const auto& g : doc.groups) {
    Json members = Json::array();
    for (auto a : g.group.addresses) members.push_back(address_ref(ds, a));
    Json spans = Json::array();
    for (std::size_t i = 0; i < g.spans.size(); ++i) {
      spans.push_back({{"first_event", g.spans[i].first_event},
                       {"last_event", g.spans[i].last_event},
                       {"tx_count", g.spans[i].tx_count},
                       {"holdings", g.spans[i].holdings},
                       {"from", g.span_from[i]},
                       {"to", g.span_to[i]}});
    }
    groups.push_back({{"addresses", std::move(members)},
                      {"total_tx", g.group.total_tx},
                      {"events", g.events},
                      {"constant_spans", std::move(spans)}});
  }
  j["groups"] = std::move(groups);
  j["summary"] = {{"transactions_in_range", doc.summary.transactions_in_range},
                  {"suspicious_pairs", doc.summary.suspicious_pairs},
                  {"suspicious_addresses", doc.summary.suspicious_addresses},
                  {"suspicious_transactions", doc.summary.suspicious_transactions},
                  {"tokens_involved", doc.summary.tokens_involved}};
  return j;
}

inline std::string to_text(const CollectionDataset& ds, const ReportDocument& doc) {
  std::ostringstream out;
  char score[32];
  out << "collection " << doc.collection_id << "\n";
  out << "range      " << time::format_iso(doc.range.from) << " .. " << time::format_iso(doc.range.to) << "\n";
  out << "min_tx     " << doc.min_tx << "\n\n";
  const auto& s = doc.summary;
  out << "transactions in range    " << s.transactions_in_range << "\n";
  out << "suspicious pairs         " << s.suspicious_pairs << "\n";
  out << "suspicious addresses     " << s.suspicious_addresses << "\n";
  out << "suspicious transactions  " << s.suspicious_transactions << "\n";
  out << "tokens involved          " << s.tokens_involved << "\n\n";
  out << "top pairs by score\n";
  if (doc.ranked.empty()) out << "  (none)\n";
  for (std::size_t i = 0; i < doc.ranked.size(); ++i) {
    const auto& p = doc.ranked[i];
    std::snprintf(score, sizeof score, "%.4f", p.score);
    out << "  " << (i + 1) << ". S=" << score << " M=" << p.tx_count << " N=" << p.unique_tokens << "  "
        << ds.address(p.a).hex() << " <-> " << ds.address(p.b).hex() << "\n";
  }
  out << "\ngroups\n";
  if (doc.groups.empty()) out << "  (none)\n";
  for (std::size_t i = 0; i < doc.groups.size(); ++i) {
    const auto& g = doc.groups[i];
    out << "  #" << (i + 1) << " " << g.group.addresses.size() << " addresses, " << g.group.total_tx
        << " pair transactions, " << g.events << " holding events\n";
    for (auto a : g.group.addresses) out << "     " << ds.address(a).hex() << "\n";
    for (std::size_t k = 0; k < g.spans.size(); ++k) {
      out << "     constant " << g.spans[k].holdings << " held over " << g.spans[k].tx_count << " events ("
          << time::format_iso(g.span_from[k]) << " .. " << time::format_iso(g.span_to[k]) << ")\n";
    }
  }
  return out.str();
}

}  // namespace nftdisk
