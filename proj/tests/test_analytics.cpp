#include <gtest/gtest.h>

#include <map>
#include <set>

#include "nftdisk/analytics.hpp"
#include "support/fixtures.hpp"

using namespace nftdisk;
using fx::make_address;

namespace {

TransactionRecord tx(Timestamp ts, TokenId token, std::uint32_t from, std::uint32_t to, int value = 1) {
  return make_record(ts, token, Decimal::from_integer(static_cast<std::uint64_t>(value)),
                     from == 0 ? Address::zero() : make_address(from), to == 0 ? Address::zero() : make_address(to));
}

AddressIndex idx(const CollectionDataset& ds, std::uint32_t id) { return *ds.find_address(make_address(id)); }

PairStats pair(std::uint32_t m, std::uint32_t n, AddressIndex a = 0, AddressIndex b = 1) {
  return {a, b, m, n, suspicious_score(n, m)};
}

}  // namespace

TEST(PairStats, TenTradesOverTwoTokensScoresPointEight) {
  std::vector<TransactionRecord> log;
  for (int i = 0; i < 10; ++i) log.push_back(tx(i, static_cast<TokenId>(i % 2), i % 2 ? 1 : 2, i % 2 ? 2 : 1));
  auto ds = build_dataset(log, "c");
  auto stats = compute_pair_stats(ds, ds.time_extent());
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].tx_count, 10u);
  EXPECT_EQ(stats[0].unique_tokens, 2u);
  EXPECT_NEAR(stats[0].score, 0.8, 1e-15);
}

TEST(PairStats, DistinctTokensScoreZero) {
  std::vector<TransactionRecord> log;
  for (int i = 0; i < 5; ++i) log.push_back(tx(i, static_cast<TokenId>(100 + i), 1, 2));
  auto ds = build_dataset(log, "c");
  auto stats = compute_pair_stats(ds, ds.time_extent());
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].score, 0.0);
}

TEST(PairStats, ExcludesZeroAddressAndRespectsRange) {
  std::vector<TransactionRecord> log = {tx(1, 1, 0, 1), tx(2, 1, 1, 2), tx(3, 1, 2, 1), tx(10, 1, 1, 2)};
  auto ds = build_dataset(log, "c");
  auto stats = compute_pair_stats(ds, {0, 5});
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].tx_count, 2u);
  EXPECT_TRUE(compute_pair_stats(ds, {4, 9}).empty());
  EXPECT_TRUE(compute_pair_stats(ds, {9, 4}).empty());
}

TEST(PairStats, MatchesBruteForceRecount) {
  fx::Rng rng(2024);
  auto log = fx::random_log(rng, {.transactions = 1000, .addresses = 25, .tokens = 60, .burn_share = 0.02});
  auto ds = build_dataset(log, "c");
  const auto ext = ds.time_extent();
  const Timestamp mid = ext.from + (ext.to - ext.from) / 3;
  for (TimeRange range : {ext, TimeRange{mid, ext.to}}) {
    auto stats = compute_pair_stats(ds, range);
    auto oracle = fx::brute_force_pairs(log, range.from, range.to);
    ASSERT_EQ(stats.size(), oracle.size());
    std::map<std::pair<Address, Address>, PairStats> by_addr;
    for (const auto& p : stats) by_addr[std::minmax(ds.address(p.a), ds.address(p.b))] = p;
    for (const auto& o : oracle) {
      const auto& p = by_addr.at({o.a, o.b});
      EXPECT_EQ(p.tx_count, o.m);
      EXPECT_EQ(p.unique_tokens, o.n);
      EXPECT_NEAR(p.score, 1.0 - static_cast<double>(o.n) / o.m, 1e-12);
    }
  }
}

TEST(PairStats, InvariantUnderDirectionSwap) {
  fx::Rng rng(5);
  auto log = fx::random_log(rng, {.transactions = 400});
  auto swapped = log;
  for (auto& r : swapped) {
    if (!r.from_address.is_zero() && !r.to_address.is_zero()) std::swap(r.from_address, r.to_address);
  }
  auto a = build_dataset(log, "c");
  auto b = build_dataset(swapped, "c");
  auto sa = compute_pair_stats(a, a.time_extent());
  auto sb = compute_pair_stats(b, b.time_extent());
  ASSERT_EQ(sa.size(), sb.size());
  std::map<std::pair<Address, Address>, PairStats> ma;
  for (const auto& p : sa) ma[std::minmax(a.address(p.a), a.address(p.b))] = p;
  for (const auto& p : sb) {
    const auto& q = ma.at(std::minmax(b.address(p.a), b.address(p.b)));
    EXPECT_EQ(p.tx_count, q.tx_count);
    EXPECT_EQ(p.unique_tokens, q.unique_tokens);
  }
}

TEST(PairStats, ScoreBounds) {
  fx::Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto ds = build_dataset(fx::random_log(rng, {.transactions = 600, .addresses = 8, .tokens = 10}), "c");
    for (const auto& p : compute_pair_stats(ds, ds.time_extent())) {
      ASSERT_GE(p.unique_tokens, 1u);
      ASSERT_LE(p.unique_tokens, p.tx_count);
      ASSERT_GE(p.score, 0.0);
      ASSERT_LT(p.score, 1.0);
      ASSERT_LE(p.score, 1.0 - 1.0 / p.tx_count + 1e-15);
      ASSERT_EQ(p.score == 0.0, p.unique_tokens == p.tx_count);
    }
  }
}

TEST(FilterPairs, StrictThreshold) {
  std::vector<PairStats> stats = {pair(5, 1, 0, 1), pair(20, 2, 1, 2), pair(21, 3, 2, 3)};
  auto f = filter_pairs(stats, 20);
  ASSERT_EQ(f.pairs.size(), 1u);
  EXPECT_EQ(f.pairs[0].tx_count, 21u);
  EXPECT_EQ(f.addresses, (std::vector<AddressIndex>{2, 3}));
}

TEST(FilterPairs, ThresholdOneKeepsRepeatedPairs) {
  std::vector<PairStats> stats = {pair(2, 1, 0, 1), pair(3, 1, 1, 2), pair(7, 7, 4, 9)};
  auto f = filter_pairs(stats, 1);
  EXPECT_EQ(f.pairs.size(), 3u);
  EXPECT_EQ(f.addresses, (std::vector<AddressIndex>{0, 1, 2, 4, 9}));
}

TEST(FilterPairs, EmptyAndInvalid) {
  auto f = filter_pairs({}, 3);
  EXPECT_TRUE(f.pairs.empty());
  EXPECT_TRUE(f.addresses.empty());
  EXPECT_THROW(filter_pairs({}, 0), Error);
}

TEST(FilterPairs, MonotoneInThreshold) {
  fx::Rng rng(8);
  auto ds = build_dataset(fx::random_log(rng, {.transactions = 2000, .addresses = 10, .tokens = 15}), "c");
  auto stats = compute_pair_stats(ds, ds.time_extent());
  auto prev = filter_pairs(stats, 1);
  for (std::uint32_t t = 2; t < 60; ++t) {
    auto cur = filter_pairs(stats, t);
    ASSERT_LE(cur.pairs.size(), prev.pairs.size());
    ASSERT_TRUE(std::includes(prev.addresses.begin(), prev.addresses.end(), cur.addresses.begin(), cur.addresses.end()));
    prev = std::move(cur);
  }
}

TEST(DetectGroups, ConnectedComponents) {
  // a=0 b=1 c=2 x=7 y=8
  std::vector<PairStats> pairs = {pair(3, 1, 0, 1), pair(3, 1, 1, 2), pair(10, 1, 7, 8)};
  auto groups = detect_groups(pairs);
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].addresses, (std::vector<AddressIndex>{7, 8}));  // larger total M first
  EXPECT_EQ(groups[0].total_tx, 10u);
  EXPECT_EQ(groups[1].addresses, (std::vector<AddressIndex>{0, 1, 2}));
  EXPECT_TRUE(detect_groups({}).empty());
}

TEST(DetectGroups, PlantedRingIsOneComponent) {
  auto fixture = fx::planted_ring(1);
  auto ds = build_dataset(fixture.records, "ring");
  auto f = filter_pairs(compute_pair_stats(ds, ds.time_extent()), 20);
  auto groups = detect_groups(f.pairs);
  ASSERT_EQ(groups.size(), 1u);
  std::vector<AddressIndex> ring;
  for (const auto& a : fixture.ring) ring.push_back(*ds.find_address(a));
  std::sort(ring.begin(), ring.end());
  EXPECT_EQ(groups[0].addresses, ring);
}

TEST(ReplayHoldings, IntraGroupSaleKeepsTotal) {
  auto ds = build_dataset({tx(1, 1, 0, 1), tx(2, 1, 1, 2)}, "c");
  const std::vector<AddressIndex> group = {idx(ds, 1), idx(ds, 2)};
  auto tl = replay_holdings(ds, group, ds.time_extent());
  ASSERT_EQ(tl.events.size(), 2u);
  EXPECT_EQ(tl.group_total, (std::vector<std::size_t>{1, 1}));
  const auto pa = tl.position_of(idx(ds, 1));
  const auto pb = tl.position_of(idx(ds, 2));
  EXPECT_EQ(tl.holdings[0][pa], std::vector<TokenId>{1});
  EXPECT_TRUE(tl.holdings[0][pb].empty());
  EXPECT_TRUE(tl.holdings[1][pa].empty());
  EXPECT_EQ(tl.holdings[1][pb], std::vector<TokenId>{1});
  EXPECT_TRUE(tl.events[1].intra_group());
}

TEST(ReplayHoldings, OutflowToExternal) {
  auto ds = build_dataset({tx(1, 2, 0, 2), tx(2, 2, 2, 3)}, "c");
  const std::vector<AddressIndex> group = {idx(ds, 2)};
  auto tl = replay_holdings(ds, group, ds.time_extent());
  EXPECT_EQ(tl.group_total, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(tl.events[1].outflow, 1);
}

TEST(ReplayHoldings, InitialHoldingsComeFromFullHistory) {
  auto ds = build_dataset({tx(1, 1, 0, 1), tx(2, 2, 0, 1), tx(3, 2, 1, 3), tx(10, 1, 1, 2)}, "c");
  const std::vector<AddressIndex> group = {idx(ds, 1), idx(ds, 2)};
  auto tl = replay_holdings(ds, group, {5, 20});
  EXPECT_EQ(tl.initial[tl.position_of(idx(ds, 1))], std::vector<TokenId>{1});
  EXPECT_EQ(tl.initial_total(), 1u);
  ASSERT_EQ(tl.events.size(), 1u);
  EXPECT_EQ(tl.group_total[0], 1u);
}

TEST(ReplayHoldings, EmptyGroupFails) {
  auto ds = build_dataset({tx(1, 1, 0, 1)}, "c");
  try {
    replay_holdings(ds, {}, ds.time_extent());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GroupEmpty);
  }
}

TEST(ReplayHoldings, MatchesPerTokenLastHolderOracle) {
  fx::Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    auto log = fx::random_log(rng, {.transactions = 500, .addresses = 12, .tokens = 40, .burn_share = 0.03});
    auto ds = build_dataset(log, "c");
    std::vector<TransactionRecord> sorted;
    for (std::size_t i = 0; i < ds.size(); ++i) sorted.push_back(ds.record(static_cast<TxIndex>(i)));
    std::vector<AddressIndex> group;
    for (std::uint32_t id : {0u, 3u, 4u, 7u, 9u}) {
      if (auto a = ds.find_address(make_address(id))) group.push_back(*a);
    }
    const auto ext = ds.time_extent();
    const TimeRange window{ext.from + (ext.to - ext.from) / 4, ext.to - (ext.to - ext.from) / 5};
    auto tl = replay_holdings(ds, group, window);
    ASSERT_FALSE(tl.events.empty());
    for (std::size_t e = 0; e < tl.events.size(); ++e) {
      const std::size_t prefix = tl.events[e].tx + 1;
      for (std::size_t p = 0; p < tl.addresses.size(); ++p) {
        const Address who = ds.address(tl.addresses[p]);
        std::vector<TokenId> expected;
        for (const auto& [token, _] : ds.token_index()) {
          if (fx::last_holder(sorted, token, prefix) == who) expected.push_back(token);
        }
        ASSERT_EQ(tl.holdings[e][p], expected) << "event " << e;
      }
      const long prev = e == 0 ? static_cast<long>(tl.initial_total()) : static_cast<long>(tl.group_total[e - 1]);
      ASSERT_EQ(static_cast<long>(tl.group_total[e]) - prev, tl.events[e].inflow - tl.events[e].outflow);
    }
  }
}

TEST(ConstantSpans, AllEqual) {
  HoldingsTimeline tl;
  tl.group_total = {3, 3, 3, 3};
  auto spans = detect_constant_spans(tl, 2);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].first_event, 0u);
  EXPECT_EQ(spans[0].last_event, 3u);
  EXPECT_EQ(spans[0].tx_count, 4u);
}

TEST(ConstantSpans, StrictlyIncreasingHasNone) {
  HoldingsTimeline tl;
  tl.group_total = {1, 2, 3, 4, 5};
  EXPECT_TRUE(detect_constant_spans(tl, 2).empty());
}

TEST(ConstantSpans, Maximality) {
  HoldingsTimeline tl;
  tl.group_total = {2, 2, 5, 5, 5};
  auto spans = detect_constant_spans(tl, 3);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].first_event, 2u);
  EXPECT_EQ(spans[0].last_event, 4u);
  EXPECT_EQ(spans[0].holdings, 5u);
  EXPECT_THROW(detect_constant_spans(tl, 1), Error);
}

TEST(ConstantSpans, NonOverlappingAndMaximalOnRandomSequences) {
  fx::Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    HoldingsTimeline tl;
    for (int i = 0; i < 40; ++i) tl.group_total.push_back(fx::uniform(rng, 3));
    auto spans = detect_constant_spans(tl, 2);
    for (std::size_t s = 0; s < spans.size(); ++s) {
      const auto& sp = spans[s];
      for (std::size_t e = sp.first_event; e <= sp.last_event; ++e) ASSERT_EQ(tl.group_total[e], sp.holdings);
      if (sp.first_event > 0) { ASSERT_NE(tl.group_total[sp.first_event - 1], sp.holdings); }
      if (sp.last_event + 1 < tl.group_total.size()) { ASSERT_NE(tl.group_total[sp.last_event + 1], sp.holdings); }
      if (s > 0) { ASSERT_GT(sp.first_event, spans[s - 1].last_event); }
    }
  }
}

TEST(BackgroundBins, AveragePriceAndVolume) {
  // 2022-01 has sales at 1 and 3 plus transfers; 2022-02 is empty;
  // 2022-03 has only a transfer.
  const Timestamp jan = 1'640'995'200, mar = 1'646'092'800;
  std::vector<TransactionRecord> log = {tx(jan + 10, 1, 1, 2, 1), tx(jan + 20, 2, 1, 2, 3),
                                        tx(jan + 30, 3, 1, 2, 0), tx(mar + 5, 4, 2, 3, 0)};
  auto ds = build_dataset(log, "c");
  auto price = compute_background_bins(ds, BackgroundMetric::AveragePrice, ds.time_extent());
  ASSERT_EQ(price.bins.size(), 3u);
  EXPECT_EQ(price.bins[0].start, jan);
  EXPECT_EQ(price.bins[0].end, 1'643'673'600);  // 2022-02-01
  EXPECT_EQ(price.bins[0].value, Decimal::from_integer(2));
  EXPECT_EQ(price.bins[1].value, Decimal{});
  EXPECT_EQ(price.bins[2].value, Decimal{});  // transfers only
  EXPECT_EQ(price.normalization, Decimal::from_integer(2));
  auto volume = compute_background_bins(ds, BackgroundMetric::TradeVolume, ds.time_extent());
  EXPECT_EQ(volume.bins[0].value, Decimal::from_integer(2));
  EXPECT_EQ(volume.bins[2].value, Decimal{});
}

TEST(BackgroundBins, VolumeCountsSalesOnly) {
  const Timestamp jan = 1'640'995'200;
  std::vector<TransactionRecord> log;
  for (int i = 0; i < 7; ++i) log.push_back(tx(jan + i, static_cast<TokenId>(i), 1, 2, 2));
  for (int i = 0; i < 3; ++i) log.push_back(tx(jan + 100 + i, static_cast<TokenId>(i), 2, 1, 0));
  auto ds = build_dataset(log, "c");
  auto volume = compute_background_bins(ds, BackgroundMetric::TradeVolume, ds.time_extent());
  ASSERT_EQ(volume.bins.size(), 1u);
  EXPECT_EQ(volume.bins[0].value, Decimal::from_integer(7));
}

TEST(BackgroundBins, ConsecutiveMonthsAgreeWithRecount) {
  fx::Rng rng(17);
  auto log = fx::random_log(rng, {.transactions = 800, .max_gap = 5 * 86'400});
  auto ds = build_dataset(log, "c");
  auto series = compute_background_bins(ds, BackgroundMetric::AveragePrice, ds.time_extent());
  ASSERT_FALSE(series.bins.empty());
  EXPECT_LE(series.bins.front().start, ds.time_extent().from);
  EXPECT_GT(series.bins.back().end, ds.time_extent().to);
  for (std::size_t b = 0; b < series.bins.size(); ++b) {
    if (b > 0) { ASSERT_EQ(series.bins[b].start, series.bins[b - 1].end); }
    // Independent recount with exact decimal sums.
    Decimal sum;
    std::uint64_t n = 0;
    for (const auto& r : log) {
      if (r.timestamp >= series.bins[b].start && r.timestamp < series.bins[b].end && r.status == Status::Sale) {
        sum += r.value;
        ++n;
      }
    }
    ASSERT_EQ(series.bins[b].value, sum.divided_by(n));
  }
}
