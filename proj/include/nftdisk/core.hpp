#pragma once

#include <array>
#include <charconv>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nftdisk {

using Timestamp = std::int64_t;     // Unix seconds, UTC
using TokenId = std::uint64_t;
using AddressIndex = std::uint32_t; // dense index into a dataset's address table
using TxIndex = std::uint32_t;      // position in a dataset's sorted transaction log

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorCode {
  MalformedRow,
  NegativeValue,
  BadAddress,
  SelfTransaction,
  EmptyInput,
  GroupEmpty,
  OutOfRange,
  EmptyBrush,
  InvalidArgument,
  NotFound,
  StoreCorrupt,
  DataDirMissing,
  PortInUse,
  AuthFailed,
  RateLimited,
  PartialFetch,
  Network,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::BadAddress: return "BadAddress";
    case ErrorCode::SelfTransaction: return "SelfTransaction";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GroupEmpty: return "GroupEmpty";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyBrush: return "EmptyBrush";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::StoreCorrupt: return "StoreCorrupt";
    case ErrorCode::DataDirMissing: return "DataDirMissing";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::AuthFailed: return "AuthFailed";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::PartialFetch: return "PartialFetch";
    case ErrorCode::Network: return "Network";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Decimal: non-negative fixed point with 18 fractional digits.
//
// One unit is 1e-18, so an ether amount is stored as its exact wei count.
// ---------------------------------------------------------------------------

class Decimal {
 public:
  using Raw = unsigned __int128;
  static constexpr int kScaleDigits = 18;
  static constexpr Raw kScale = static_cast<Raw>(1'000'000'000'000'000'000ULL);

  constexpr Decimal() = default;

  static constexpr Decimal from_raw(Raw units) {
    Decimal d;
    d.units_ = units;
    return d;
  }
  static constexpr Decimal from_integer(std::uint64_t whole) {
    return from_raw(static_cast<Raw>(whole) * kScale);
  }

  /// Parses a plain decimal string ("1.5", "0", "12.000000000000000001").
  /// No sign, no exponent, at most 18 fractional digits.
  static std::optional<Decimal> parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    Raw whole = 0;
    Raw frac = 0;
    int frac_digits = 0;
    bool seen_point = false;
    bool seen_digit = false;
    constexpr Raw kMax = ~static_cast<Raw>(0);
    for (char c : text) {
      if (c == '.') {
        if (seen_point) return std::nullopt;
        seen_point = true;
        continue;
      }
      if (c < '0' || c > '9') return std::nullopt;
      seen_digit = true;
      const unsigned digit = static_cast<unsigned>(c - '0');
      if (!seen_point) {
        if (whole > (kMax / kScale - digit) / 10) return std::nullopt;
        whole = whole * 10 + digit;
      } else {
        if (++frac_digits > kScaleDigits) return std::nullopt;
        frac = frac * 10 + digit;
      }
    }
    if (!seen_digit) return std::nullopt;
    for (int i = frac_digits; i < kScaleDigits; ++i) frac *= 10;
    return from_raw(whole * kScale + frac);
  }

  /// Shortest exact decimal rendering; parse(to_string()) round-trips.
  std::string to_string() const {
    std::string whole = raw_to_string(units_ / kScale);
    Raw frac = units_ % kScale;
    if (frac == 0) return whole;
    std::string digits = raw_to_string(frac);
    digits.insert(0, static_cast<std::size_t>(kScaleDigits) - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    return whole + "." + digits;
  }

  constexpr Raw raw() const { return units_; }
  constexpr bool is_zero() const { return units_ == 0; }

  double to_double() const {
    return static_cast<double>(units_ / kScale) +
           static_cast<double>(units_ % kScale) / 1e18;
  }

  /// Ratio of two decimals; 0 when the denominator is zero.
  friend double ratio(Decimal num, Decimal den) {
    if (den.units_ == 0) return 0.0;
    if (num.units_ == den.units_) return 1.0;
    return static_cast<double>(num.units_) / static_cast<double>(den.units_);
  }

  constexpr Decimal& operator+=(Decimal other) {
    units_ += other.units_;
    return *this;
  }
  friend constexpr Decimal operator+(Decimal a, Decimal b) { return a += b; }

  /// Floor division by an integer count (used for means).
  constexpr Decimal divided_by(std::uint64_t count) const {
    return count == 0 ? Decimal{} : from_raw(units_ / count);
  }

  friend constexpr bool operator==(Decimal, Decimal) = default;
  friend constexpr auto operator<=>(Decimal a, Decimal b) { return a.units_ <=> b.units_; }

 private:
  static std::string raw_to_string(Raw v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
      out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
      v /= 10;
    }
    return {out.rbegin(), out.rend()};
  }

  Raw units_ = 0;
};

// ---------------------------------------------------------------------------
// Address: 20-byte account identifier.
// ---------------------------------------------------------------------------

struct Address {
  std::array<std::uint8_t, 20> bytes{};

  /// Accepts "0x" followed by exactly 40 hex digits (either case).
  static std::optional<Address> parse(std::string_view text) {
    if (text.size() != 42 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
      return std::nullopt;
    }
    Address a;
    for (std::size_t i = 0; i < 20; ++i) {
      const int hi = hex_value(text[2 + 2 * i]);
      const int lo = hex_value(text[3 + 2 * i]);
      if (hi < 0 || lo < 0) return std::nullopt;
      a.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return a;
  }

  static constexpr Address zero() { return Address{}; }

  bool is_zero() const {
    for (auto b : bytes) {
      if (b != 0) return false;
    }
    return true;
  }

  /// Lowercase 0x-prefixed hex.
  std::string hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out = "0x";
    out.reserve(42);
    for (auto b : bytes) {
      out.push_back(kDigits[b >> 4]);
      out.push_back(kDigits[b & 0xF]);
    }
    return out;
  }

  friend bool operator==(const Address&, const Address&) = default;
  friend auto operator<=>(const Address&, const Address&) = default;

 private:
  static int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  }
};

struct AddressHash {
  std::size_t operator()(const Address& a) const noexcept {
    // FNV-1a over the raw bytes.
    std::uint64_t h = 1469598103934665603ULL;
    for (auto b : a.bytes) {
      h ^= b;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// ---------------------------------------------------------------------------
// Closed time interval [from, to].
// ---------------------------------------------------------------------------

struct TimeRange {
  Timestamp from = 0;
  Timestamp to = 0;

  bool contains(Timestamp t) const { return t >= from && t <= to; }
  bool valid() const { return from <= to; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

enum class Status : std::uint8_t { Sale, Transfer };
enum class Origin : std::uint8_t { Normal, Mint };

inline std::string_view to_string(Status s) { return s == Status::Sale ? "Sale" : "Transfer"; }
inline std::string_view to_string(Origin o) { return o == Origin::Mint ? "Mint" : "Normal"; }

}  // namespace nftdisk
