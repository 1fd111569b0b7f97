#pragma once

// Synthetic transaction logs and brute-force oracles shared by the test
// suites. Nothing in here calls into the engine's algorithms; the oracles
// recompute everything from raw records.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "nftdisk/ingest.hpp"

namespace nftdisk::fx {

using Rng = std::mt19937_64;

/// Deterministic non-zero address for a small integer id.
inline Address make_address(std::uint32_t id) {
  Address a;
  a.bytes[0] = 0xaa;
  a.bytes[16] = static_cast<std::uint8_t>(id >> 24);
  a.bytes[17] = static_cast<std::uint8_t>(id >> 16);
  a.bytes[18] = static_cast<std::uint8_t>(id >> 8);
  a.bytes[19] = static_cast<std::uint8_t>(id);
  return a;
}

inline std::size_t uniform(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

inline Decimal random_price(Rng& rng) {
  // 0.001 .. 10 ether with milli-ether resolution.
  const std::uint64_t milli = 1 + uniform(rng, 10'000);
  return Decimal::from_raw(static_cast<Decimal::Raw>(milli) * 1'000'000'000'000'000ULL);
}

struct LogOptions {
  std::size_t transactions = 500;
  std::size_t addresses = 20;
  std::size_t tokens = 30;
  double transfer_share = 0.3;  // zero-value moves
  double burn_share = 0.0;      // moves to the zero address
  Timestamp start = 1'600'000'000;
  Timestamp max_gap = 3 * 86'400;
};

/// Ownership-consistent random log: every token is minted once, after which
/// each move is sent by the token's current holder. Timestamps are
/// non-decreasing with occasional ties.
inline std::vector<TransactionRecord> random_log(Rng& rng, const LogOptions& opt) {
  std::vector<TransactionRecord> out;
  std::map<TokenId, std::uint32_t> holder;  // minted, not burnt
  std::vector<TokenId> unminted;
  for (std::size_t t = 0; t < opt.tokens; ++t) unminted.push_back(static_cast<TokenId>(t * 7 + 1));
  std::shuffle(unminted.begin(), unminted.end(), rng);
  Timestamp now = opt.start;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  while (out.size() < opt.transactions) {
    if (uniform(rng, 4) != 0) now += static_cast<Timestamp>(uniform(rng, static_cast<std::size_t>(opt.max_gap)));
    const bool mint = holder.empty() || (!unminted.empty() && coin(rng) < 0.15);
    if (mint && !unminted.empty()) {
      const TokenId token = unminted.back();
      unminted.pop_back();
      const auto to = static_cast<std::uint32_t>(uniform(rng, opt.addresses));
      holder[token] = to;
      out.push_back(make_record(now, token, random_price(rng), Address::zero(), make_address(to)));
      continue;
    }
    if (holder.empty()) break;
    auto it = holder.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(uniform(rng, holder.size())));
    const TokenId token = it->first;
    const std::uint32_t from = it->second;
    if (coin(rng) < opt.burn_share) {
      holder.erase(it);
      out.push_back(make_record(now, token, Decimal{}, make_address(from), Address::zero()));
      continue;
    }
    std::uint32_t to = static_cast<std::uint32_t>(uniform(rng, opt.addresses - 1));
    if (to >= from) ++to;
    it->second = to;
    const Decimal value = coin(rng) < opt.transfer_share ? Decimal{} : random_price(rng);
    out.push_back(make_record(now, token, value, make_address(from), make_address(to)));
  }
  return out;
}

/// Four colluding addresses cycling two tokens A->B->C->D->A, 25 laps each,
/// giving every ring pair M = 50 over N = 2 tokens (S = 0.96), hidden among
/// `background` transactions in which no pair ever repeats a token.
struct PlantedRing {
  std::vector<TransactionRecord> records;
  std::vector<Address> ring;
};

inline PlantedRing planted_ring(std::uint64_t seed, std::size_t background = 5000,
                                std::size_t background_addresses = 400) {
  Rng rng(seed);
  PlantedRing out;
  for (std::uint32_t i = 0; i < 4; ++i) out.ring.push_back(make_address(1'000'000 + i));

  const Timestamp start = 1'640'995'200;  // 2022-01-01
  const Timestamp span = 180 * 86'400;

  // Background: tokens 10'000.. minted to random addresses, then moved so
  // that no (pair, token) combination repeats.
  std::map<TokenId, std::uint32_t> holder;
  std::set<std::tuple<std::uint32_t, std::uint32_t, TokenId>> used;
  std::vector<TransactionRecord> bg;
  TokenId next_token = 10'000;
  while (bg.size() < background) {
    const Timestamp ts = start + static_cast<Timestamp>(uniform(rng, static_cast<std::size_t>(span)));
    if (holder.size() < 300 || uniform(rng, 10) == 0) {
      const auto to = static_cast<std::uint32_t>(uniform(rng, background_addresses));
      holder[next_token] = to;
      bg.push_back(make_record(ts, next_token++, random_price(rng), Address::zero(), make_address(to)));
      continue;
    }
    auto it = holder.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(uniform(rng, holder.size())));
    const std::uint32_t from = it->second;
    std::uint32_t to = static_cast<std::uint32_t>(uniform(rng, background_addresses - 1));
    if (to >= from) ++to;
    const auto key = std::tuple{std::min(from, to), std::max(from, to), it->first};
    if (!used.insert(key).second) continue;
    bg.push_back(make_record(ts, it->first, uniform(rng, 3) == 0 ? Decimal{} : random_price(rng),
                             make_address(from), make_address(to)));
    it->second = to;
  }
  // Background moves were generated with random timestamps but a fixed
  // ownership sequence; assign timestamps in generation order instead.
  std::vector<Timestamp> stamps;
  for (const auto& r : bg) stamps.push_back(r.timestamp);
  std::sort(stamps.begin(), stamps.end());
  for (std::size_t i = 0; i < bg.size(); ++i) bg[i].timestamp = stamps[i];

  // Ring: mint token 1 to A and token 2 to C, then 25 laps each.
  std::vector<TransactionRecord> ring;
  Timestamp ts = start + 30 * 86'400;
  ring.push_back(make_record(ts, 1, Decimal::from_integer(1), Address::zero(), out.ring[0]));
  ring.push_back(make_record(ts, 2, Decimal::from_integer(1), Address::zero(), out.ring[2]));
  std::array<std::size_t, 2> at{0, 2};
  for (int lap = 0; lap < 25; ++lap) {
    for (int hop = 0; hop < 4; ++hop) {
      for (std::size_t t = 0; t < 2; ++t) {
        ts += 3600;
        const std::size_t next = (at[t] + 1) % 4;
        ring.push_back(make_record(ts, static_cast<TokenId>(t + 1), Decimal::from_integer(2),
                                   out.ring[at[t]], out.ring[next]));
        at[t] = next;
      }
    }
  }
  out.records = std::move(bg);
  out.records.insert(out.records.end(), ring.begin(), ring.end());
  return out;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

struct OraclePair {
  Address a, b;  // a < b
  std::uint32_t m = 0;
  std::uint32_t n = 0;
};

/// For each unordered non-zero address pair seen in range, rescans the whole
/// raw log to count transactions and distinct tokens.
inline std::vector<OraclePair> brute_force_pairs(const std::vector<TransactionRecord>& log,
                                                 Timestamp t0, Timestamp t1) {
  std::set<std::pair<Address, Address>> pairs;
  for (const auto& r : log) {
    if (r.timestamp < t0 || r.timestamp > t1) continue;
    if (r.from_address.is_zero() || r.to_address.is_zero() || r.from_address == r.to_address) continue;
    pairs.insert(std::minmax(r.from_address, r.to_address));
  }
  std::vector<OraclePair> out;
  for (const auto& [a, b] : pairs) {
    OraclePair p{a, b, 0, 0};
    std::set<TokenId> tokens;
    for (const auto& r : log) {
      if (r.timestamp < t0 || r.timestamp > t1) continue;
      const bool hit = (r.from_address == a && r.to_address == b) || (r.from_address == b && r.to_address == a);
      if (!hit) continue;
      ++p.m;
      tokens.insert(r.token_id);
    }
    p.n = static_cast<std::uint32_t>(tokens.size());
    out.push_back(p);
  }
  return out;
}

/// Holder of `token` after the first `prefix` transactions of a sorted log.
inline std::optional<Address> last_holder(const std::vector<TransactionRecord>& sorted_log, TokenId token,
                                          std::size_t prefix) {
  std::optional<Address> holder;
  for (std::size_t i = 0; i < prefix; ++i) {
    if (sorted_log[i].token_id == token) holder = sorted_log[i].to_address;
  }
  return holder;
}

/// Textbook average-linkage clustering: every step recomputes the mean
/// leaf-to-leaf distance of every cluster pair from the original matrix.
struct NaiveMerge {
  std::vector<std::size_t> left, right;  // sorted leaf sets
  double height = 0.0;
};

inline std::vector<NaiveMerge> naive_average_linkage(const std::vector<std::vector<double>>& d) {
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < d.size(); ++i) clusters.push_back({i});
  std::vector<NaiveMerge> merges;
  while (clusters.size() > 1) {
    double best = 1e300;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        double sum = 0.0;
        for (auto x : clusters[i]) {
          for (auto y : clusters[j]) sum += d[x][y];
        }
        const double avg = sum / static_cast<double>(clusters[i].size() * clusters[j].size());
        if (avg < best) {
          best = avg;
          bi = i;
          bj = j;
        }
      }
    }
    merges.push_back({clusters[bi], clusters[bj], best});
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    std::sort(clusters[bi].begin(), clusters[bi].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    std::sort(clusters.begin(), clusters.end());
  }
  return merges;
}

/// Every leaf order reachable by flipping internal nodes of a binary tree
/// given as child lists (leaves have no children).
struct TreeNode {
  std::size_t left = 0, right = 0;
  bool leaf = true;
  std::size_t id = 0;
};

inline std::vector<std::vector<std::size_t>> all_flip_orders(const std::vector<TreeNode>& nodes,
                                                             std::size_t root) {
  const auto& v = nodes[root];
  if (v.leaf) return {{v.id}};
  const auto l = all_flip_orders(nodes, v.left);
  const auto r = all_flip_orders(nodes, v.right);
  std::vector<std::vector<std::size_t>> out;
  for (const auto& a : l) {
    for (const auto& b : r) {
      auto ab = a;
      ab.insert(ab.end(), b.begin(), b.end());
      auto ba = b;
      ba.insert(ba.end(), a.begin(), a.end());
      out.push_back(std::move(ab));
      out.push_back(std::move(ba));
    }
  }
  return out;
}

inline double chain_cost(const std::vector<std::vector<double>>& d, const std::vector<std::size_t>& order) {
  double c = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) c += d[order[i - 1]][order[i]];
  return c;
}

inline std::vector<std::vector<double>> random_distances(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = u(rng);
  }
  return d;
}

}  // namespace nftdisk::fx
