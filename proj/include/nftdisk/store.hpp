#pragma once

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <unordered_map>

#include "json.hpp"
#include "nftdisk/ingest.hpp"
#include "nftdisk/time.hpp"

namespace nftdisk {

namespace fs = std::filesystem;

inline bool valid_collection_id(std::string_view id) {
  static const std::regex pattern("[A-Za-z0-9_.-]+");
  return !id.empty() && id.size() <= 128 && id != "." && id != ".." &&
         std::regex_match(id.begin(), id.end(), pattern);
}

struct CollectionInfo {
  std::string id;
  std::size_t transactions = 0;
  std::size_t addresses = 0;
  std::size_t tokens = 0;
  TimeRange extent;
  std::string source;
};

namespace detail {

inline constexpr char kMagic[8] = {'N', 'F', 'T', 'D', 'S', 'K', '0', '1'};

/// Columnar layout: header, then one contiguous array per field, then the
/// address table, then an FNV-1a checksum of everything before it.
struct FileHeader {
  char magic[8];
  std::uint64_t transactions;
  std::uint64_t addresses;
};

inline std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
void append(std::string& buf, const std::vector<T>& column) {
  const auto* p = reinterpret_cast<const char*>(column.data());
  buf.append(p, column.size() * sizeof(T));
}

template <typename T>
void take(const std::string& buf, std::size_t& pos, std::vector<T>& column, std::size_t n) {
  const std::size_t bytes = n * sizeof(T);
  if (pos + bytes > buf.size()) throw Error(ErrorCode::StoreCorrupt, "dataset file truncated");
  column.resize(n);
  std::memcpy(column.data(), buf.data() + pos, bytes);
  pos += bytes;
}

inline std::string encode(const CollectionDataset& ds) {
  const std::size_t n = ds.size();
  std::vector<std::int64_t> ts(n);
  std::vector<std::uint64_t> token(n), value_lo(n), value_hi(n);
  std::vector<std::uint32_t> from(n), to(n);
  std::vector<std::uint8_t> flags(n);
  const auto txs = ds.transactions();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = txs[i];
    ts[i] = t.timestamp;
    token[i] = t.token_id;
    value_lo[i] = static_cast<std::uint64_t>(t.value.raw());
    value_hi[i] = static_cast<std::uint64_t>(t.value.raw() >> 64);
    from[i] = t.from;
    to[i] = t.to;
    flags[i] = static_cast<std::uint8_t>((t.status == Status::Sale ? 1 : 0) | (t.origin == Origin::Mint ? 2 : 0));
  }
  std::string buf;
  FileHeader h{};
  std::memcpy(h.magic, kMagic, sizeof kMagic);
  h.transactions = n;
  h.addresses = ds.address_count();
  buf.append(reinterpret_cast<const char*>(&h), sizeof h);
  append(buf, ts);
  append(buf, token);
  append(buf, value_lo);
  append(buf, value_hi);
  append(buf, from);
  append(buf, to);
  append(buf, flags);
  for (const auto& a : ds.address_table()) buf.append(reinterpret_cast<const char*>(a.bytes.data()), a.bytes.size());
  const std::uint64_t sum = fnv1a(buf.data(), buf.size());
  buf.append(reinterpret_cast<const char*>(&sum), sizeof sum);
  return buf;
}

inline CollectionDataset decode(const std::string& buf, std::string id) {
  if (buf.size() < sizeof(FileHeader) + sizeof(std::uint64_t)) throw Error(ErrorCode::StoreCorrupt, "dataset file too short");
  std::uint64_t stored = 0;
  std::memcpy(&stored, buf.data() + buf.size() - sizeof stored, sizeof stored);
  if (fnv1a(buf.data(), buf.size() - sizeof stored) != stored) throw Error(ErrorCode::StoreCorrupt, "checksum mismatch");
  FileHeader h{};
  std::memcpy(&h, buf.data(), sizeof h);
  if (std::memcmp(h.magic, kMagic, sizeof kMagic) != 0) throw Error(ErrorCode::StoreCorrupt, "bad magic");
  const std::size_t n = h.transactions;
  const std::size_t expected = sizeof h + n * (8 * 4 + 4 * 2 + 1) + h.addresses * 20 + sizeof stored;
  if (buf.size() != expected) throw Error(ErrorCode::StoreCorrupt, "dataset file size mismatch");

  std::size_t pos = sizeof h;
  std::vector<std::int64_t> ts;
  std::vector<std::uint64_t> token, value_lo, value_hi;
  std::vector<std::uint32_t> from, to;
  std::vector<std::uint8_t> flags;
  take(buf, pos, ts, n);
  take(buf, pos, token, n);
  take(buf, pos, value_lo, n);
  take(buf, pos, value_hi, n);
  take(buf, pos, from, n);
  take(buf, pos, to, n);
  take(buf, pos, flags, n);
  std::vector<Address> addresses(h.addresses);
  for (auto& a : addresses) {
    std::memcpy(a.bytes.data(), buf.data() + pos, a.bytes.size());
    pos += a.bytes.size();
  }
  std::vector<Transaction> txs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = txs[i];
    t.timestamp = ts[i];
    t.token_id = token[i];
    t.value = Decimal::from_raw((static_cast<Decimal::Raw>(value_hi[i]) << 64) | value_lo[i]);
    t.from = from[i];
    t.to = to[i];
    t.status = (flags[i] & 1) ? Status::Sale : Status::Transfer;
    t.origin = (flags[i] & 2) ? Origin::Mint : Origin::Normal;
  }
  return CollectionDataset::from_parts(std::move(id), std::move(txs), std::move(addresses));
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + p.string());
  in.seekg(0, std::ios::end);
  std::string buf(static_cast<std::size_t>(in.tellg()), '\0');
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  return buf;
}

inline void write_atomically(const fs::path& target, const std::string& bytes) {
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::InvalidArgument, "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

/// Exclusive advisory lock on a file, released on destruction.
class FileLock {
 public:
  explicit FileLock(const fs::path& p) : fd_(::open(p.c_str(), O_RDWR | O_CREAT, 0644)) {
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) throw Error(ErrorCode::InvalidArgument, "cannot lock " + p.string());
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

}  // namespace detail

/// On-disk dataset cache: <data_dir>/<id>/transactions.bin + meta.json.
/// Loaded datasets are immutable and shared between readers.
class DatasetStore {
 public:
  explicit DatasetStore(fs::path data_dir) : root_(std::move(data_dir)) {}

  const fs::path& root() const { return root_; }

  static DatasetStore open_existing(const fs::path& data_dir) {
    if (!fs::is_directory(data_dir)) {
      throw Error(ErrorCode::DataDirMissing, "data directory " + data_dir.string() + " does not exist");
    }
    return DatasetStore(data_dir);
  }

  CollectionInfo save(const CollectionDataset& ds, std::string_view source = "") {
    const std::string& id = ds.collection_id();
    check_id(id);
    const fs::path dir = root_ / id;
    fs::create_directories(dir);
    CollectionInfo info = describe(ds, std::string(source));
    {
      detail::FileLock lock(dir / ".lock");
      detail::write_atomically(dir / "transactions.bin", detail::encode(ds));
      detail::write_atomically(dir / "meta.json", meta_json(info).dump(2) + "\n");
    }
    std::unique_lock guard(mutex_);
    cache_.erase(id);
    return info;
  }

  bool contains(std::string_view id) const {
    return valid_collection_id(id) && fs::exists(root_ / std::string(id) / "transactions.bin");
  }

  std::shared_ptr<const CollectionDataset> load(const std::string& id) {
    check_id(id);
    {
      std::shared_lock guard(mutex_);
      if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    }
    const fs::path file = root_ / id / "transactions.bin";
    if (!fs::exists(file)) throw Error(ErrorCode::NotFound, "unknown collection '" + id + "'");
    auto ds = std::make_shared<const CollectionDataset>(detail::decode(detail::read_file(file), id));
    std::unique_lock guard(mutex_);
    return cache_.emplace(id, std::move(ds)).first->second;
  }

  /// Metadata of every stored collection, sorted by id.
  std::vector<CollectionInfo> list() const {
    std::vector<CollectionInfo> out;
    if (!fs::is_directory(root_)) return out;
    for (const auto& entry : fs::directory_iterator(root_)) {
      const auto meta = entry.path() / "meta.json";
      if (!entry.is_directory() || !fs::exists(meta)) continue;
      try {
        out.push_back(parse_meta(nlohmann::json::parse(detail::read_file(meta))));
      } catch (const std::exception&) {
        continue;
      }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
  }

  static CollectionInfo describe(const CollectionDataset& ds, std::string source) {
    return {ds.collection_id(), ds.size(), ds.address_count(), ds.token_index().size(), ds.time_extent(),
            std::move(source)};
  }

  static nlohmann::json meta_json(const CollectionInfo& info) {
    return {{"id", info.id},
            {"format", "nftdisk-columnar-1"},
            {"transactions", info.transactions},
            {"addresses", info.addresses},
            {"tokens", info.tokens},
            {"time_extent",
             {{"from", info.extent.from},
              {"to", info.extent.to},
              {"from_iso", time::format_iso(info.extent.from)},
              {"to_iso", time::format_iso(info.extent.to)}}},
            {"source", info.source}};
  }

  static CollectionInfo parse_meta(const nlohmann::json& j) {
    CollectionInfo info;
    info.id = j.at("id").get<std::string>();
    info.transactions = j.at("transactions").get<std::size_t>();
    info.addresses = j.at("addresses").get<std::size_t>();
    info.tokens = j.at("tokens").get<std::size_t>();
    info.extent = {j.at("time_extent").at("from").get<Timestamp>(), j.at("time_extent").at("to").get<Timestamp>()};
    info.source = j.value("source", "");
    return info;
  }

 private:
  static void check_id(std::string_view id) {
    if (!valid_collection_id(id)) {
      throw Error(ErrorCode::InvalidArgument, "collection id must match [A-Za-z0-9_.-]+");
    }
  }

  fs::path root_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const CollectionDataset>> cache_;
};

}  // namespace nftdisk
