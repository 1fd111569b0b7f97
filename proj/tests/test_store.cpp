#include <gtest/gtest.h>

#include <chrono>
#include <fstream>

#include "nftdisk/store.hpp"
#include "support/fixtures.hpp"

using namespace nftdisk;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("nftdisk-store-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

CollectionDataset sample(std::uint64_t seed, std::size_t n = 400) {
  fx::Rng rng(seed);
  fx::LogOptions opt;
  opt.transactions = n;
  opt.burn_share = 0.05;
  return build_dataset(fx::random_log(rng, opt), "sample");
}

void expect_same(const CollectionDataset& a, const CollectionDataset& b) {
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.address_count(), b.address_count());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto ra = a.record(i), rb = b.record(i);
    EXPECT_EQ(ra.timestamp, rb.timestamp);
    EXPECT_EQ(ra.token_id, rb.token_id);
    EXPECT_EQ(ra.value, rb.value);
    EXPECT_EQ(ra.from_address, rb.from_address);
    EXPECT_EQ(ra.to_address, rb.to_address);
    EXPECT_EQ(ra.status, rb.status);
    EXPECT_EQ(ra.origin, rb.origin);
  }
}

}  // namespace

TEST(Store, RoundTrip) {
  TempDir dir;
  DatasetStore store(dir.path());
  const auto ds = sample(1);
  const auto info = store.save(ds, "unit");
  EXPECT_EQ(info.transactions, ds.size());
  EXPECT_TRUE(store.contains("sample"));
  DatasetStore fresh(dir.path());
  expect_same(ds, *fresh.load("sample"));
}

TEST(Store, LargeValuesSurvive) {
  TempDir dir;
  std::vector<TransactionRecord> log;
  const auto big = Decimal::from_raw(~Decimal::Raw{0} - 7);
  log.push_back(make_record(5, 1, big, fx::make_address(1), fx::make_address(2)));
  log.push_back(make_record(6, 1, Decimal{}, fx::make_address(2), fx::make_address(3)));
  DatasetStore store(dir.path());
  store.save(build_dataset(log, "big"));
  DatasetStore fresh(dir.path());
  EXPECT_EQ(fresh.load("big")->record(0).value, big);
}

TEST(Store, LoadIsCachedAndSaveInvalidates) {
  TempDir dir;
  DatasetStore store(dir.path());
  store.save(sample(2), "a");
  const auto first = store.load("sample");
  EXPECT_EQ(first, store.load("sample"));
  store.save(sample(3), "b");
  EXPECT_NE(first, store.load("sample"));
}

TEST(Store, ListIsSortedWithMetadata) {
  TempDir dir;
  DatasetStore store(dir.path());
  EXPECT_TRUE(store.list().empty());
  auto b = sample(4);
  store.save(CollectionDataset::from_parts("zeta", {b.transactions().begin(), b.transactions().end()},
                                           {b.address_table().begin(), b.address_table().end()}));
  store.save(b, "x");
  const auto list = store.list();
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0].id, "sample");
  EXPECT_EQ(list[1].id, "zeta");
  EXPECT_EQ(list[0].transactions, b.size());
  EXPECT_EQ(list[0].extent.from, b.time_extent().from);
  EXPECT_EQ(list[0].source, "x");
}

TEST(Store, DetectsCorruption) {
  TempDir dir;
  DatasetStore store(dir.path());
  store.save(sample(5));
  const auto file = dir.path() / "sample" / "transactions.bin";
  auto bytes = detail::read_file(file);

  auto write = [&](const std::string& b) {
    std::ofstream(file, std::ios::binary | std::ios::trunc) << b;
  };
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  write(flipped);
  try {
    DatasetStore(dir.path()).load("sample");
    FAIL() << "flipped byte accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StoreCorrupt);
  }
  write(bytes.substr(0, bytes.size() - 13));
  try {
    DatasetStore(dir.path()).load("sample");
    FAIL() << "truncated file accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::StoreCorrupt);
  }
  write("");
  EXPECT_THROW(DatasetStore(dir.path()).load("sample"), Error);
}

TEST(Store, CollectionIds) {
  EXPECT_TRUE(valid_collection_id("bayc-2022_v1.0"));
  EXPECT_FALSE(valid_collection_id(""));
  EXPECT_FALSE(valid_collection_id("."));
  EXPECT_FALSE(valid_collection_id(".."));
  EXPECT_FALSE(valid_collection_id("a/b"));
  EXPECT_FALSE(valid_collection_id("a b"));
  EXPECT_FALSE(valid_collection_id(std::string(129, 'a')));
  TempDir dir;
  DatasetStore store(dir.path());
  try {
    store.load("../etc");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  try {
    store.load("missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotFound);
  }
}

TEST(Store, MissingDataDir) {
  try {
    DatasetStore::open_existing("/nonexistent/nftdisk/data");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DataDirMissing);
  }
}

TEST(Store, ColdLoadOfLargeCollectionIsFast) {
  TempDir dir;
  fx::Rng rng(9);
  fx::LogOptions opt;
  opt.transactions = 100'000;
  opt.addresses = 5'000;
  opt.tokens = 10'000;
  const auto ds = build_dataset(fx::random_log(rng, opt), "big");
  DatasetStore(dir.path()).save(ds);
  DatasetStore cold(dir.path());
  const auto t0 = std::chrono::steady_clock::now();
  const auto loaded = cold.load("big");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(loaded->size(), ds.size());
  EXPECT_LT(secs, 1.0);
}
