#pragma once

#include <algorithm>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nftdisk/core.hpp"

namespace nftdisk {

/// One on-chain NFT sale or transfer.
struct TransactionRecord {
  Timestamp timestamp = 0;
  TokenId token_id = 0;
  Decimal value;
  Status status = Status::Transfer;
  Address from_address;
  Address to_address;
  Origin origin = Origin::Normal;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

/// Builds a record, deriving status from value and origin from the sender.
inline TransactionRecord make_record(Timestamp ts, TokenId token, Decimal value,
                                     const Address& from, const Address& to) {
  TransactionRecord r;
  r.timestamp = ts;
  r.token_id = token;
  r.value = value;
  r.status = value.is_zero() ? Status::Transfer : Status::Sale;
  r.from_address = from;
  r.to_address = to;
  r.origin = from.is_zero() ? Origin::Mint : Origin::Normal;
  return r;
}

enum class InputFormat { Csv, Json };

struct ParseOptions {
  bool strict = false;
};

struct ParseIssue {
  std::size_t line = 0;  // 1-based line (CSV) or object position (JSON)
  ErrorCode code = ErrorCode::MalformedRow;
  std::string reason;
};

struct ParseResult {
  std::vector<TransactionRecord> records;
  std::vector<ParseIssue> errors;    // rows skipped in lenient mode
  std::vector<ParseIssue> warnings;  // rows dropped by policy (self-transactions)
};

class ParseError : public Error {
 public:
  explicit ParseError(ParseIssue issue)
      : Error(issue.code, "line " + std::to_string(issue.line) + ": " + issue.reason),
        issue_(std::move(issue)) {}

  const ParseIssue& issue() const noexcept { return issue_; }

 private:
  ParseIssue issue_;
};

namespace detail {

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xE) {
      extra = 2;
    } else if ((c >> 3) == 0x1E) {
      extra = 3;
    } else {
      return false;
    }
    if (extra > 0 && i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

/// Field-level parsing shared by the CSV and JSON readers. Throws ParseError.
struct FieldParser {
  std::size_t line;

  [[noreturn]] void fail(ErrorCode code, std::string reason) const {
    throw ParseError(ParseIssue{line, code, std::move(reason)});
  }

  Timestamp timestamp(std::string_view s) const {
    if (!s.empty() && s.front() == '-') fail(ErrorCode::MalformedRow, "negative timestamp");
    Timestamp v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
      fail(ErrorCode::MalformedRow, "timestamp is not an integer: '" + std::string(s) + "'");
    }
    return v;
  }

  TokenId token(std::string_view s) const {
    TokenId v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
      fail(ErrorCode::MalformedRow, "token_id is not a non-negative 64-bit integer: '" +
                                        std::string(s) + "'");
    }
    return v;
  }

  Decimal value(std::string_view s) const {
    if (!s.empty() && s.front() == '-') {
      fail(ErrorCode::NegativeValue, "negative value: '" + std::string(s) + "'");
    }
    auto d = Decimal::parse(s);
    if (!d) fail(ErrorCode::MalformedRow, "value is not a decimal: '" + std::string(s) + "'");
    return *d;
  }

  Address address(std::string_view s, std::string_view field) const {
    auto a = Address::parse(s);
    if (!a) {
      fail(ErrorCode::BadAddress, std::string(field) + " is not 0x + 40 hex chars: '" +
                                      std::string(s) + "'");
    }
    return *a;
  }
};

struct RowSink {
  const ParseOptions& options;
  ParseResult& result;

  // Runs one row conversion; routes failures according to strict/lenient mode.
  template <typename Fn>
  void row(std::size_t line, Fn&& convert) {
    try {
      TransactionRecord r = convert();
      if (r.from_address == r.to_address) {
        ParseIssue issue{line, ErrorCode::SelfTransaction,
                         "self-transaction " + r.from_address.hex() + " dropped"};
        if (options.strict) throw ParseError(issue);
        result.warnings.push_back(std::move(issue));
        return;
      }
      result.records.push_back(r);
    } catch (const ParseError& e) {
      if (options.strict) throw;
      result.errors.push_back(e.issue());
    }
  }
};

inline constexpr std::array<std::string_view, 5> kCsvColumns = {
    "timestamp", "token_id", "value", "from_address", "to_address"};

inline void parse_csv(std::string_view source, const ParseOptions& options, ParseResult& result) {
  RowSink sink{options, result};
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::array<std::size_t, 5> column{};
  bool have_header = false;
  std::size_t width = 0;

  while (pos <= source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (end == source.size()) break;
      continue;
    }
    auto fields = split_commas(line);
    if (!have_header) {
      if (!fields.empty() && line_no == 1 && fields[0].starts_with("\xEF\xBB\xBF")) {
        fields[0].remove_prefix(3);
      }
      for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
        auto it = std::find(fields.begin(), fields.end(), kCsvColumns[c]);
        if (it == fields.end()) {
          throw ParseError(ParseIssue{line_no, ErrorCode::MalformedRow,
                                      "header is missing column '" +
                                          std::string(kCsvColumns[c]) + "'"});
        }
        column[c] = static_cast<std::size_t>(it - fields.begin());
      }
      width = fields.size();
      have_header = true;
      continue;
    }
    sink.row(line_no, [&] {
      FieldParser f{line_no};
      if (fields.size() != width) {
        f.fail(ErrorCode::MalformedRow, "expected " + std::to_string(width) + " fields, got " +
                                            std::to_string(fields.size()));
      }
      return make_record(f.timestamp(fields[column[0]]), f.token(fields[column[1]]),
                         f.value(fields[column[2]]),
                         f.address(fields[column[3]], "from_address"),
                         f.address(fields[column[4]], "to_address"));
    });
    if (end == source.size()) break;
  }
  if (!have_header) {
    throw ParseError(ParseIssue{1, ErrorCode::MalformedRow, "missing CSV header row"});
  }
}

inline std::string json_scalar_text(const nlohmann::json& v, const FieldParser& f,
                                    std::string_view key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_unsigned() || v.is_number_integer() || v.is_number_float()) return v.dump();
  f.fail(ErrorCode::MalformedRow, "field '" + std::string(key) + "' has unsupported type");
}

inline void parse_json(std::string_view source, const ParseOptions& options, ParseResult& result) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(source);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseIssue{0, ErrorCode::MalformedRow, std::string("invalid JSON: ") + e.what()});
  }
  if (!doc.is_array()) {
    throw ParseError(ParseIssue{0, ErrorCode::MalformedRow, "top-level JSON value must be an array"});
  }
  RowSink sink{options, result};
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    const std::size_t line = i + 1;
    sink.row(line, [&] {
      FieldParser f{line};
      if (!obj.is_object()) f.fail(ErrorCode::MalformedRow, "element is not an object");
      auto field = [&](std::string_view key) {
        auto it = obj.find(std::string(key));
        if (it == obj.end()) f.fail(ErrorCode::MalformedRow, "missing key '" + std::string(key) + "'");
        return json_scalar_text(*it, f, key);
      };
      return make_record(f.timestamp(field("timestamp")), f.token(field("token_id")),
                         f.value(field("value")), f.address(field("from_address"), "from_address"),
                         f.address(field("to_address"), "to_address"));
    });
  }
}

}  // namespace detail

/// Parses a raw export. Rows come back in input order.
///
/// Strict mode throws ParseError on the first bad row (self-transactions
/// included). Lenient mode skips bad rows and reports them in `errors`;
/// self-transactions are dropped with a warning.
inline ParseResult parse_transactions(std::string_view source, InputFormat format,
                                      ParseOptions options = {}) {
  if (!detail::valid_utf8(source)) {
    throw ParseError(ParseIssue{0, ErrorCode::MalformedRow, "input is not valid UTF-8"});
  }
  ParseResult result;
  if (format == InputFormat::Csv) {
    detail::parse_csv(source, options, result);
  } else {
    detail::parse_json(source, options, result);
  }
  return result;
}

/// Compact in-dataset transaction: addresses are interned.
struct Transaction {
  Timestamp timestamp = 0;
  TokenId token_id = 0;
  Decimal value;
  AddressIndex from = 0;
  AddressIndex to = 0;
  Status status = Status::Transfer;
  Origin origin = Origin::Normal;

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

/// Immutable, time-sorted transaction store for one collection.
class CollectionDataset {
 public:
  CollectionDataset() = default;

  /// Assembles a dataset from already-interned columns; validates every
  /// invariant. Used by build_dataset and by the on-disk store.
  static CollectionDataset from_parts(std::string collection_id, std::vector<Transaction> txs,
                                      std::vector<Address> addresses) {
    if (txs.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no transactions");
    CollectionDataset ds;
    ds.collection_id_ = std::move(collection_id);
    ds.transactions_ = std::move(txs);
    ds.addresses_ = std::move(addresses);
    ds.address_lookup_.reserve(ds.addresses_.size());
    for (std::size_t i = 0; i < ds.addresses_.size(); ++i) {
      if (!ds.address_lookup_.emplace(ds.addresses_[i], static_cast<AddressIndex>(i)).second) {
        throw Error(ErrorCode::StoreCorrupt, "duplicate address " + ds.addresses_[i].hex());
      }
    }
    Timestamp prev = ds.transactions_.front().timestamp;
    for (std::size_t i = 0; i < ds.transactions_.size(); ++i) {
      const auto& t = ds.transactions_[i];
      if (t.timestamp < prev) throw Error(ErrorCode::StoreCorrupt, "transactions not time-sorted");
      if (t.from >= ds.addresses_.size() || t.to >= ds.addresses_.size()) {
        throw Error(ErrorCode::StoreCorrupt, "address index out of range");
      }
      if (t.timestamp < 0) throw Error(ErrorCode::StoreCorrupt, "negative timestamp");
      prev = t.timestamp;
      ds.token_index_[t.token_id].push_back(static_cast<TxIndex>(i));
      ds.timestamps_.push_back(t.timestamp);
    }
    auto zero = ds.address_lookup_.find(Address::zero());
    if (zero != ds.address_lookup_.end()) ds.zero_index_ = zero->second;
    ds.extent_ = {ds.transactions_.front().timestamp, ds.transactions_.back().timestamp};
    return ds;
  }

  const std::string& collection_id() const { return collection_id_; }
  std::span<const Transaction> transactions() const { return transactions_; }
  const Transaction& transaction(TxIndex i) const { return transactions_.at(i); }
  std::size_t size() const { return transactions_.size(); }

  std::span<const Address> address_table() const { return addresses_; }
  const Address& address(AddressIndex i) const { return addresses_.at(i); }
  std::optional<AddressIndex> find_address(const Address& a) const {
    auto it = address_lookup_.find(a);
    if (it == address_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t address_count() const { return addresses_.size(); }

  /// Index of the all-zero (mint/burn) address, if it occurs.
  std::optional<AddressIndex> zero_address() const { return zero_index_; }
  bool is_zero_address(AddressIndex i) const { return zero_index_ && *zero_index_ == i; }

  const std::map<TokenId, std::vector<TxIndex>>& token_index() const { return token_index_; }
  TimeRange time_extent() const { return extent_; }

  /// Half-open index interval [first, last) of transactions inside `range`.
  std::pair<std::size_t, std::size_t> index_range(TimeRange range) const {
    if (!range.valid()) return {0, 0};
    auto lo = std::lower_bound(timestamps_.begin(), timestamps_.end(), range.from);
    auto hi = std::upper_bound(timestamps_.begin(), timestamps_.end(), range.to);
    return {static_cast<std::size_t>(lo - timestamps_.begin()),
            static_cast<std::size_t>(hi - timestamps_.begin())};
  }

  TransactionRecord record(TxIndex i) const {
    const auto& t = transactions_.at(i);
    TransactionRecord r;
    r.timestamp = t.timestamp;
    r.token_id = t.token_id;
    r.value = t.value;
    r.status = t.status;
    r.from_address = addresses_[t.from];
    r.to_address = addresses_[t.to];
    r.origin = t.origin;
    return r;
  }

 private:
  std::string collection_id_;
  std::vector<Transaction> transactions_;
  std::vector<Timestamp> timestamps_;
  std::vector<Address> addresses_;
  std::unordered_map<Address, AddressIndex, AddressHash> address_lookup_;
  std::map<TokenId, std::vector<TxIndex>> token_index_;
  std::optional<AddressIndex> zero_index_;
  TimeRange extent_;
};

/// Stable-sorts by timestamp and interns addresses in first-appearance
/// order of the sorted log (sender before receiver).
inline CollectionDataset build_dataset(std::vector<TransactionRecord> records,
                                       std::string collection_id) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records to build a dataset from");
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

  std::vector<Address> addresses;
  std::unordered_map<Address, AddressIndex, AddressHash> lookup;
  lookup.reserve(records.size());
  auto intern = [&](const Address& a) {
    auto [it, inserted] = lookup.try_emplace(a, static_cast<AddressIndex>(addresses.size()));
    if (inserted) addresses.push_back(a);
    return it->second;
  };

  std::vector<Transaction> txs;
  txs.reserve(records.size());
  for (const auto& r : records) {
    Transaction t;
    t.timestamp = r.timestamp;
    t.token_id = r.token_id;
    t.value = r.value;
    t.status = r.value.is_zero() ? Status::Transfer : Status::Sale;
    t.from = intern(r.from_address);
    t.to = intern(r.to_address);
    t.origin = r.from_address.is_zero() ? Origin::Mint : Origin::Normal;
    txs.push_back(t);
  }
  return CollectionDataset::from_parts(std::move(collection_id), std::move(txs),
                                       std::move(addresses));
}

inline void write_csv_header(std::ostream& out) {
  out << "timestamp,token_id,value,from_address,to_address\n";
}

inline void write_csv_row(std::ostream& out, const TransactionRecord& r) {
  out << r.timestamp << ',' << r.token_id << ',' << r.value.to_string() << ','
      << r.from_address.hex() << ',' << r.to_address.hex() << '\n';
}

/// Canonical CSV (header + one row per transaction, dataset order).
inline void write_canonical_csv(const CollectionDataset& ds, std::ostream& out) {
  write_csv_header(out);
  for (std::size_t i = 0; i < ds.size(); ++i) write_csv_row(out, ds.record(static_cast<TxIndex>(i)));
}

inline std::string to_canonical_csv(const CollectionDataset& ds) {
  std::ostringstream out;
  write_canonical_csv(ds, out);
  return out.str();
}

}  // namespace nftdisk
