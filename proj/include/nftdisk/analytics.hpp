#pragma once

#include <algorithm>
#include <numeric>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nftdisk/core.hpp"
#include "nftdisk/ingest.hpp"
#include "nftdisk/time.hpp"

namespace nftdisk {

// ---------------------------------------------------------------------------
// Pair suspicion statistics
// ---------------------------------------------------------------------------

/// Aggregate over all transactions between one unordered address pair.
///
/// The suspicious score is S = 1 - N/M, where M counts transactions in either
/// direction and N counts the distinct tokens they carried. A pair that moves
/// a different NFT every time scores 0; a pair that churns one NFT back and
/// forth approaches 1.
struct PairStats {
  AddressIndex a = 0;  // a < b
  AddressIndex b = 0;
  std::uint32_t tx_count = 0;       // M
  std::uint32_t unique_tokens = 0;  // N
  double score = 0.0;               // S

  friend bool operator==(const PairStats&, const PairStats&) = default;
};

inline double suspicious_score(std::uint32_t unique_tokens, std::uint32_t tx_count) {
  if (tx_count == 0) return 0.0;
  return static_cast<double>(tx_count - unique_tokens) / static_cast<double>(tx_count);
}

/// One entry per unordered pair with at least one transaction in `range`,
/// sorted by (a, b). Pairs touching the zero (mint/burn) address are skipped.
inline std::vector<PairStats> compute_pair_stats(const CollectionDataset& ds, TimeRange range) {
  struct Acc {
    std::uint32_t count = 0;
    std::vector<TokenId> tokens;
  };
  std::unordered_map<std::uint64_t, Acc> acc;
  const auto [first, last] = ds.index_range(range);
  const auto txs = ds.transactions();
  for (std::size_t i = first; i < last; ++i) {
    const auto& t = txs[i];
    if (ds.is_zero_address(t.from) || ds.is_zero_address(t.to) || t.from == t.to) continue;
    const AddressIndex lo = std::min(t.from, t.to);
    const AddressIndex hi = std::max(t.from, t.to);
    auto& a = acc[(static_cast<std::uint64_t>(lo) << 32) | hi];
    ++a.count;
    a.tokens.push_back(t.token_id);
  }
  std::vector<PairStats> out;
  out.reserve(acc.size());
  for (auto& [key, a] : acc) {
    std::sort(a.tokens.begin(), a.tokens.end());
    const auto distinct = static_cast<std::uint32_t>(
        std::unique(a.tokens.begin(), a.tokens.end()) - a.tokens.begin());
    PairStats p;
    p.a = static_cast<AddressIndex>(key >> 32);
    p.b = static_cast<AddressIndex>(key & 0xFFFFFFFFu);
    p.tx_count = a.count;
    p.unique_tokens = distinct;
    p.score = suspicious_score(distinct, a.count);
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(),
            [](const PairStats& x, const PairStats& y) { return std::pair{x.a, x.b} < std::pair{y.a, y.b}; });
  return out;
}

struct FilteredPairs {
  std::vector<PairStats> pairs;
  std::vector<AddressIndex> addresses;  // ascending, union of endpoints
};

/// Address Filter: keeps pairs with strictly more than `min_tx` transactions.
inline FilteredPairs filter_pairs(std::span<const PairStats> stats, std::uint32_t min_tx) {
  if (min_tx < 1) throw Error(ErrorCode::InvalidArgument, "min_tx must be >= 1");
  FilteredPairs out;
  for (const auto& p : stats) {
    if (p.tx_count > min_tx) {
      out.pairs.push_back(p);
      out.addresses.push_back(p.a);
      out.addresses.push_back(p.b);
    }
  }
  std::sort(out.addresses.begin(), out.addresses.end());
  out.addresses.erase(std::unique(out.addresses.begin(), out.addresses.end()), out.addresses.end());
  return out;
}

struct AddressGroup {
  std::vector<AddressIndex> addresses;  // ascending
  std::uint64_t total_tx = 0;           // sum of M over the group's pairs
};

/// Connected components of the filtered pair graph, largest total M first
/// (ties: smallest member index first).
inline std::vector<AddressGroup> detect_groups(std::span<const PairStats> pairs) {
  std::unordered_map<AddressIndex, AddressIndex> parent;
  auto find = [&](AddressIndex x) {
    parent.try_emplace(x, x);
    AddressIndex root = x;
    while (parent[root] != root) root = parent[root];
    while (parent[x] != root) {
      const AddressIndex next = parent[x];
      parent[x] = root;
      x = next;
    }
    return root;
  };
  for (const auto& p : pairs) {
    const AddressIndex ra = find(p.a);
    const AddressIndex rb = find(p.b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::map<AddressIndex, AddressGroup> by_root;
  for (const auto& p : pairs) by_root[find(p.a)].total_tx += p.tx_count;
  std::vector<AddressIndex> members;
  members.reserve(parent.size());
  for (const auto& [node, _] : parent) members.push_back(node);
  std::sort(members.begin(), members.end());
  for (AddressIndex m : members) by_root[find(m)].addresses.push_back(m);

  std::vector<AddressGroup> out;
  out.reserve(by_root.size());
  for (auto& [_, g] : by_root) out.push_back(std::move(g));
  std::stable_sort(out.begin(), out.end(), [](const AddressGroup& x, const AddressGroup& y) {
    if (x.total_tx != y.total_tx) return x.total_tx > y.total_tx;
    return x.addresses.front() < y.addresses.front();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Holdings replay
// ---------------------------------------------------------------------------

/// Sentinel for "not held by any group address".
inline constexpr std::size_t kOutsideGroup = static_cast<std::size_t>(-1);

struct HoldingsEvent {
  TxIndex tx = 0;
  Timestamp timestamp = 0;
  TokenId token_id = 0;
  Status status = Status::Transfer;
  Origin origin = Origin::Normal;
  AddressIndex from = 0;
  AddressIndex to = 0;
  std::size_t holder_before = kOutsideGroup;  // group position holding the token before
  std::size_t holder_after = kOutsideGroup;   // group position holding it after
  int inflow = 0;                             // 1 when the token enters the group
  int outflow = 0;                            // 1 when the token leaves the group

  bool intra_group() const { return holder_before != kOutsideGroup && holder_after != kOutsideGroup; }
};

/// Per-event token holdings of a selected address group.
///
/// `holdings[e][k]` is the sorted set of tokens held by `addresses[k]` after
/// event e; `initial[k]` is the state at the window start.
struct HoldingsTimeline {
  std::vector<AddressIndex> addresses;  // ascending
  TimeRange window;
  std::vector<std::vector<TokenId>> initial;
  std::vector<HoldingsEvent> events;
  std::vector<std::vector<std::vector<TokenId>>> holdings;
  std::vector<std::size_t> group_total;

  std::size_t position_of(AddressIndex a) const {
    auto it = std::lower_bound(addresses.begin(), addresses.end(), a);
    return (it != addresses.end() && *it == a) ? static_cast<std::size_t>(it - addresses.begin())
                                               : kOutsideGroup;
  }
  std::size_t initial_total() const {
    std::size_t n = 0;
    for (const auto& s : initial) n += s.size();
    return n;
  }
  /// Holdings of group position k at "slot" s: s == 0 is the window start,
  /// s == e + 1 is after event e.
  const std::vector<TokenId>& at_slot(std::size_t slot, std::size_t k) const {
    return slot == 0 ? initial[k] : holdings[slot - 1][k];
  }
};

/// Replays the full log to derive group holdings across `window`.
///
/// An address holds token k at time t iff the last transaction of k before t
/// was sent to it. Events are the window's transactions that touch a group
/// address or move a token currently held in the group.
inline HoldingsTimeline replay_holdings(const CollectionDataset& ds,
                                        std::span<const AddressIndex> group, TimeRange window) {
  if (group.empty()) throw Error(ErrorCode::GroupEmpty, "address group is empty");
  HoldingsTimeline tl;
  tl.addresses.assign(group.begin(), group.end());
  std::sort(tl.addresses.begin(), tl.addresses.end());
  tl.addresses.erase(std::unique(tl.addresses.begin(), tl.addresses.end()), tl.addresses.end());
  tl.window = window;
  const std::size_t k = tl.addresses.size();

  std::unordered_map<TokenId, std::size_t> holder;  // token -> group position (group tokens only)
  std::vector<std::set<TokenId>> sets(k);
  const auto txs = ds.transactions();
  const auto [first, last] = ds.index_range(window);
  const std::size_t prefix_end = ds.index_range({window.from, window.from}).first;

  auto apply = [&](const Transaction& t) -> std::pair<std::size_t, std::size_t> {
    std::size_t before = kOutsideGroup;
    if (auto it = holder.find(t.token_id); it != holder.end()) {
      before = it->second;
      sets[before].erase(t.token_id);
      holder.erase(it);
    }
    const std::size_t after = tl.position_of(t.to);
    if (after != kOutsideGroup) {
      sets[after].insert(t.token_id);
      holder[t.token_id] = after;
    }
    return {before, after};
  };

  for (std::size_t i = 0; i < prefix_end; ++i) apply(txs[i]);
  tl.initial.resize(k);
  for (std::size_t p = 0; p < k; ++p) tl.initial[p].assign(sets[p].begin(), sets[p].end());

  std::size_t total = tl.initial_total();
  if (window.valid()) {
    for (std::size_t i = first; i < last; ++i) {
      const auto& t = txs[i];
      const bool touches = tl.position_of(t.from) != kOutsideGroup ||
                           tl.position_of(t.to) != kOutsideGroup || holder.contains(t.token_id);
      const auto [before, after] = apply(t);
      if (!touches) continue;
      HoldingsEvent ev;
      ev.tx = static_cast<TxIndex>(i);
      ev.timestamp = t.timestamp;
      ev.token_id = t.token_id;
      ev.status = t.status;
      ev.origin = t.origin;
      ev.from = t.from;
      ev.to = t.to;
      ev.holder_before = before;
      ev.holder_after = after;
      ev.inflow = (before == kOutsideGroup && after != kOutsideGroup) ? 1 : 0;
      ev.outflow = (before != kOutsideGroup && after == kOutsideGroup) ? 1 : 0;
      total = total + static_cast<std::size_t>(ev.inflow) - static_cast<std::size_t>(ev.outflow);
      tl.events.push_back(ev);
      std::vector<std::vector<TokenId>> snapshot(k);
      for (std::size_t p = 0; p < k; ++p) snapshot[p].assign(sets[p].begin(), sets[p].end());
      tl.holdings.push_back(std::move(snapshot));
      tl.group_total.push_back(total);
    }
  }
  return tl;
}

struct ConstantSpan {
  std::size_t first_event = 0;  // inclusive
  std::size_t last_event = 0;   // inclusive
  std::size_t tx_count = 0;
  std::size_t holdings = 0;     // the constant group total
};

/// Maximal runs of events with an unchanged group total, at least
/// `min_events` long. A run like this means NFTs only moved inside the group.
inline std::vector<ConstantSpan> detect_constant_spans(const HoldingsTimeline& tl,
                                                       std::size_t min_events) {
  if (min_events < 2) throw Error(ErrorCode::InvalidArgument, "min_events must be >= 2");
  std::vector<ConstantSpan> out;
  const auto& totals = tl.group_total;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= totals.size(); ++i) {
    if (i == totals.size() || totals[i] != totals[start]) {
      const std::size_t len = i - start;
      if (len >= min_events) out.push_back({start, i - 1, len, totals[start]});
      start = i;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monthly background metric
// ---------------------------------------------------------------------------

enum class BackgroundMetric { AveragePrice, TradeVolume };

inline std::string_view to_string(BackgroundMetric m) {
  return m == BackgroundMetric::AveragePrice ? "AveragePrice" : "TradeVolume";
}

struct BackgroundBin {
  Timestamp start = 0;  // first second of the UTC month
  Timestamp end = 0;    // first second of the next month (exclusive)
  Decimal value;
  std::uint64_t sales = 0;
};

struct BackgroundSeries {
  BackgroundMetric metric = BackgroundMetric::AveragePrice;
  TimeRange range;
  std::vector<BackgroundBin> bins;
  Decimal normalization;  // max bin value
};

/// Calendar-month bins over `range`. Only Sale transactions contribute:
/// AveragePrice is their mean value, TradeVolume their count. Empty months
/// are 0.
inline BackgroundSeries compute_background_bins(const CollectionDataset& ds, BackgroundMetric metric,
                                                TimeRange range) {
  BackgroundSeries series;
  series.metric = metric;
  series.range = range;
  if (!range.valid()) return series;
  for (Timestamp m = time::month_start(range.from); m <= range.to; m = time::next_month_start(m)) {
    series.bins.push_back({m, time::next_month_start(m), Decimal{}, 0});
  }
  std::vector<Decimal> sums(series.bins.size());
  const auto [first, last] = ds.index_range(range);
  const auto txs = ds.transactions();
  std::size_t bin = 0;
  for (std::size_t i = first; i < last; ++i) {
    const auto& t = txs[i];
    while (t.timestamp >= series.bins[bin].end) ++bin;
    if (t.status != Status::Sale) continue;
    sums[bin] += t.value;
    ++series.bins[bin].sales;
  }
  for (std::size_t b = 0; b < series.bins.size(); ++b) {
    auto& out = series.bins[b];
    out.value = metric == BackgroundMetric::AveragePrice ? sums[b].divided_by(out.sales)
                                                         : Decimal::from_integer(out.sales);
    series.normalization = std::max(series.normalization, out.value);
  }
  return series;
}

}  // namespace nftdisk
