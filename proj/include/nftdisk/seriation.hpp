#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nftdisk/analytics.hpp"
#include "nftdisk/core.hpp"

namespace nftdisk {

/// Symmetric address distance matrix with zero diagonal, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::vector<AddressIndex> addresses)
      : addresses_(std::move(addresses)), n_(addresses_.size()), d_(n_ * n_, 0.0) {}

  std::size_t size() const { return n_; }
  std::span<const AddressIndex> addresses() const { return addresses_; }
  AddressIndex address(std::size_t i) const { return addresses_[i]; }

  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }
  const double* row(std::size_t i) const { return d_.data() + i * n_; }

 private:
  std::vector<AddressIndex> addresses_;
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// d = 1 / (1 + M): more transactions, shorter distance; unpaired is 1.
inline double transaction_distance(std::uint64_t tx_count) {
  return 1.0 / (1.0 + static_cast<double>(tx_count));
}

/// Builds the distance matrix over `addresses` (matrix index i is
/// addresses[i]); pairs outside the set are ignored.
inline DistanceMatrix build_distance_matrix(std::span<const PairStats> pairs,
                                            std::span<const AddressIndex> addresses) {
  if (addresses.empty()) throw Error(ErrorCode::InvalidArgument, "no addresses to order");
  std::vector<AddressIndex> sorted(addresses.begin(), addresses.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  DistanceMatrix dm(sorted);
  const std::size_t n = dm.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) dm.set(i, j, 1.0);
  }
  auto index_of = [&](AddressIndex a) -> std::size_t {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), a);
    return (it != sorted.end() && *it == a) ? static_cast<std::size_t>(it - sorted.begin()) : n;
  };
  for (const auto& p : pairs) {
    const std::size_t i = index_of(p.a);
    const std::size_t j = index_of(p.b);
    if (i < n && j < n && i != j) dm.set(i, j, transaction_distance(p.tx_count));
  }
  return dm;
}

/// Binary merge tree. Leaves are 0..n-1; merge k creates node n + k.
struct Dendrogram {
  struct Merge {
    std::size_t left = 0;   // child whose smallest leaf is smaller
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;   // leaves under this node
  };

  std::size_t leaf_count = 0;
  std::vector<Merge> merges;

  bool is_leaf(std::size_t node) const { return node < leaf_count; }
  std::size_t root() const { return leaf_count == 1 ? 0 : leaf_count + merges.size() - 1; }
  const Merge& merge_of(std::size_t node) const { return merges[node - leaf_count]; }

  /// Leaves of `node`, left child first, without any flips.
  std::vector<std::size_t> leaves(std::size_t node) const {
    std::vector<std::size_t> out;
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (is_leaf(v)) {
        out.push_back(v);
      } else {
        stack.push_back(merge_of(v).right);
        stack.push_back(merge_of(v).left);
      }
    }
    return out;
  }

  std::vector<std::size_t> in_order() const { return leaf_count == 0 ? std::vector<std::size_t>{} : leaves(root()); }
};

/// Average-linkage agglomerative clustering.
///
/// The closest pair of active clusters merges first; ties go to the pair
/// with the smallest (min leaf, min leaf) indices. Each active cluster caches
/// its nearest neighbour, so typical inputs cost O(n^2).
inline Dendrogram cluster_addresses(const DistanceMatrix& dm) {
  const std::size_t n = dm.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cannot cluster an empty matrix");
  Dendrogram tree;
  tree.leaf_count = n;
  if (n == 1) return tree;

  // Working copy; slot s holds the cluster whose smallest leaf is s.
  std::vector<double> d(dm.row(0), dm.row(0) + n * n);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return d[i * n + j]; };
  std::vector<bool> active(n, true);
  std::vector<std::size_t> node(n), size(n, 1);
  for (std::size_t i = 0; i < n; ++i) node[i] = i;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nn_dist(n, kInf);
  auto rescan = [&](std::size_t i) {
    nn[i] = n;
    nn_dist[i] = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !active[j]) continue;
      if (at(i, j) < nn_dist[i]) {
        nn_dist[i] = at(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t bi = n, bj = n;
    double best = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i] || nn[i] == n) continue;
      const std::size_t lo = std::min(i, nn[i]);
      const std::size_t hi = std::max(i, nn[i]);
      if (nn_dist[i] < best || (nn_dist[i] == best && std::pair{lo, hi} < std::pair{bi, bj})) {
        best = nn_dist[i];
        bi = lo;
        bj = hi;
      }
    }

    tree.merges.push_back({node[bi], node[bj], best, size[bi] + size[bj]});
    const double wi = static_cast<double>(size[bi]);
    const double wj = static_cast<double>(size[bj]);
    active[bj] = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi) continue;
      const double v = (wi * at(bi, k) + wj * at(bj, k)) / (wi + wj);
      at(bi, k) = v;
      at(k, bi) = v;
    }
    size[bi] += size[bj];
    node[bi] = n + step;

    rescan(bi);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi) continue;
      if (nn[k] == bi || nn[k] == bj) {
        rescan(k);
      } else if (at(k, bi) < nn_dist[k] || (at(k, bi) == nn_dist[k] && bi < nn[k])) {
        nn[k] = bi;
        nn_dist[k] = at(k, bi);
      }
    }
  }
  return tree;
}

/// A leaf permutation of the filtered addresses.
struct AddressOrder {
  std::vector<AddressIndex> addresses;
  std::vector<std::size_t> leaves;  // matrix indices, same order
  double cost = 0.0;                // sum of d over adjacent entries
};

inline double order_cost(const DistanceMatrix& dm, std::span<const std::size_t> leaves) {
  double c = 0.0;
  for (std::size_t i = 1; i < leaves.size(); ++i) c += dm(leaves[i - 1], leaves[i]);
  return c;
}

inline AddressOrder make_address_order(const DistanceMatrix& dm, std::vector<std::size_t> leaves) {
  AddressOrder order;
  order.cost = order_cost(dm, leaves);
  order.addresses.reserve(leaves.size());
  for (auto l : leaves) order.addresses.push_back(dm.address(l));
  order.leaves = std::move(leaves);
  return order;
}

/// Optimal leaf ordering of a dendrogram.
///
/// Among the 2^(n-1) orders reachable by swapping children at internal
/// nodes, finds one minimising the summed distance between neighbours on a
/// linear chain. Dynamic program over (subtree, leftmost leaf, rightmost
/// leaf): every leaf pair (i, j) has a unique lowest common ancestor, so one
/// n x n table holds the best cost of that subtree laid out from i to j.
/// O(n^3) time, O(n^2) memory.
inline AddressOrder optimal_leaf_order(const Dendrogram& tree, const DistanceMatrix& dm) {
  const std::size_t n = tree.leaf_count;
  if (n != dm.size()) throw Error(ErrorCode::InvalidArgument, "tree and matrix sizes differ");
  if (n <= 2) {
    std::vector<std::size_t> leaves = tree.in_order();
    return make_address_order(dm, std::move(leaves));
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  const auto default_order = tree.in_order();
  std::vector<std::size_t> pos(n);
  for (std::size_t p = 0; p < n; ++p) pos[default_order[p]] = p;

  // Leaf ranges in the default in-order: node -> [begin, end) of positions.
  const std::size_t nodes = n + tree.merges.size();
  std::vector<std::size_t> range_begin(nodes), range_end(nodes);
  for (std::size_t l = 0; l < n; ++l) {
    range_begin[l] = pos[l];
    range_end[l] = pos[l] + 1;
  }
  for (std::size_t k = 0; k < tree.merges.size(); ++k) {
    const auto& m = tree.merges[k];
    range_begin[n + k] = range_begin[m.left];
    range_end[n + k] = range_end[m.right];
  }

  std::vector<double> cost(n * n, kInf);
  std::vector<std::uint32_t> split_k(n * n, 0), split_m(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) cost[i * n + i] = 0.0;

  // Leaves of `node` that may sit at the opposite end from `leaf`.
  auto opposite = [&](std::size_t node, std::size_t leaf) -> std::span<const std::size_t> {
    if (tree.is_leaf(node)) return {default_order.data() + range_begin[node], 1};
    const auto& m = tree.merge_of(node);
    const bool in_left = pos[leaf] < range_end[m.left];
    const std::size_t other = in_left ? m.right : m.left;
    return {default_order.data() + range_begin[other], range_end[other] - range_begin[other]};
  };
  auto leaves_of = [&](std::size_t node) -> std::span<const std::size_t> {
    return {default_order.data() + range_begin[node], range_end[node] - range_begin[node]};
  };

  std::vector<double> inner;  // best(i -> k) + d(k, m) for fixed i, indexed by m
  std::vector<std::uint32_t> inner_arg;
  for (const auto& merge : tree.merges) {
    const auto left = leaves_of(merge.left);
    const auto right = leaves_of(merge.right);
    inner.assign(n, kInf);
    inner_arg.assign(n, 0);
    for (std::size_t i : left) {
      const auto ks = opposite(merge.left, i);
      for (std::size_t m : right) {
        double best = kInf;
        std::uint32_t arg = 0;
        for (std::size_t k : ks) {
          const double c = cost[i * n + k] + dm(k, m);
          if (c < best) {
            best = c;
            arg = static_cast<std::uint32_t>(k);
          }
        }
        inner[m] = best;
        inner_arg[m] = arg;
      }
      for (std::size_t j : right) {
        const auto ms = opposite(merge.right, j);
        double best = kInf;
        std::uint32_t arg = 0;
        for (std::size_t m : ms) {
          const double c = inner[m] + cost[m * n + j];
          if (c < best) {
            best = c;
            arg = static_cast<std::uint32_t>(m);
          }
        }
        cost[i * n + j] = best;
        cost[j * n + i] = best;
        split_m[i * n + j] = arg;
        split_k[i * n + j] = inner_arg[arg];
      }
    }
  }

  const auto& top = tree.merge_of(tree.root());
  double best = kInf;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i : leaves_of(top.left)) {
    for (std::size_t j : leaves_of(top.right)) {
      if (cost[i * n + j] < best) {
        best = cost[i * n + j];
        bi = i;
        bj = j;
      }
    }
  }

  // Unwind the split table. Entries are stored with i on the left side.
  std::vector<std::size_t> order;
  order.reserve(n);
  auto emit = [&](auto&& self, std::size_t i, std::size_t j) -> void {
    if (i == j) {
      order.push_back(i);
      return;
    }
    if (pos[i] < pos[j]) {
      self(self, i, split_k[i * n + j]);
      self(self, split_m[i * n + j], j);
    } else {
      const std::size_t start = order.size();
      self(self, j, i);
      std::reverse(order.begin() + static_cast<std::ptrdiff_t>(start), order.end());
    }
  };
  emit(emit, bi, bj);
  return make_address_order(dm, std::move(order));
}

/// Distance transform, clustering and leaf ordering in one call.
inline AddressOrder seriate(std::span<const PairStats> pairs, std::span<const AddressIndex> addresses) {
  const auto dm = build_distance_matrix(pairs, addresses);
  return optimal_leaf_order(cluster_addresses(dm), dm);
}

}  // namespace nftdisk
