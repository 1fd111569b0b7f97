#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "nftdisk/ingest.hpp"
#include "nftdisk/store.hpp"

namespace nftdisk {

/// Error raised by the fetch client; rate limits carry the server's
/// Retry-After hint and partial runs point at the persisted cursor.
class FetchError : public Error {
 public:
  FetchError(ErrorCode code, std::string message, std::optional<int> retry_after = std::nullopt,
             std::optional<std::size_t> next_page = std::nullopt)
      : Error(code, std::move(message)), retry_after_(retry_after), next_page_(next_page) {}

  std::optional<int> retry_after() const { return retry_after_; }
  std::optional<std::size_t> next_page() const { return next_page_; }

 private:
  std::optional<int> retry_after_;
  std::optional<std::size_t> next_page_;
};

struct FetchOptions {
  std::string contract;
  std::string base_url;  // e.g. https://api.etherscan.io/api
  std::string api_key;
  std::filesystem::path output;
  std::size_t page_size = 1000;
  int timeout_seconds = 30;
};

struct FetchResult {
  std::size_t rows = 0;
  std::size_t pages = 0;
  bool resumed = false;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw Error(ErrorCode::InvalidArgument, "base URL needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

/// Integer wei string to Decimal.
inline Decimal parse_wei(std::string_view s) {
  if (s.empty()) return {};
  Decimal::Raw v = 0;
  constexpr Decimal::Raw kMax = ~Decimal::Raw{0};
  for (char c : s) {
    if (c < '0' || c > '9') throw Error(ErrorCode::MalformedRow, "wei value is not an integer: " + std::string(s));
    const auto digit = static_cast<Decimal::Raw>(c - '0');
    if (v > (kMax - digit) / 10) throw Error(ErrorCode::MalformedRow, "wei value overflows");
    v = v * 10 + digit;
  }
  return Decimal::from_raw(v);
}

inline std::string json_text(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

/// Explorer row -> record. Field mapping: timeStamp, tokenID, from, to and an
/// optional integer wei `value`; rows without a value are transfers.
inline std::optional<TransactionRecord> map_row(const nlohmann::json& row) {
  const auto ts = json_text(row, "timeStamp");
  const auto token = json_text(row, "tokenID");
  Timestamp t = 0;
  TokenId id = 0;
  if (std::from_chars(ts.data(), ts.data() + ts.size(), t).ec != std::errc{} ||
      std::from_chars(token.data(), token.data() + token.size(), id).ec != std::errc{}) {
    throw Error(ErrorCode::MalformedRow, "bad timeStamp/tokenID in explorer row");
  }
  const auto from = Address::parse(json_text(row, "from"));
  const auto to = Address::parse(json_text(row, "to"));
  if (!from || !to) throw Error(ErrorCode::BadAddress, "bad address in explorer row");
  if (*from == *to) return std::nullopt;
  const Decimal value = row.contains("value") ? parse_wei(json_text(row, "value")) : Decimal{};
  return make_record(t, id, value, *from, *to);
}

}  // namespace detail

/// Paginates a token-transfer endpoint for one contract and writes a
/// canonical CSV sorted by timestamp. Progress is kept in <output>.cursor
/// and <output>.partial so an interrupted run resumes where it stopped.
inline FetchResult fetch_transactions(const FetchOptions& opt) {
  namespace fs = std::filesystem;
  if (opt.contract.empty()) throw Error(ErrorCode::InvalidArgument, "contract address is required");
  if (opt.page_size == 0) throw Error(ErrorCode::InvalidArgument, "page size must be positive");
  const auto url = detail::split_url(opt.base_url);
  fs::path cursor_file = opt.output, partial_file = opt.output;
  cursor_file += ".cursor";
  partial_file += ".partial";

  FetchResult result;
  std::size_t page = 1;
  std::uintmax_t partial_bytes = 0;
  if (fs::exists(cursor_file) && fs::exists(partial_file)) {
    const auto c = nlohmann::json::parse(detail::read_file(cursor_file));
    if (c.value("contract", "") == opt.contract) {
      page = c.at("next_page").get<std::size_t>();
      partial_bytes = c.at("partial_bytes").get<std::uintmax_t>();
      result.rows = c.value("rows", std::size_t{0});
      result.resumed = true;
    }
  }
  if (result.resumed) {
    fs::resize_file(partial_file, partial_bytes);  // drop rows written after the last cursor
  } else {
    std::ofstream(partial_file, std::ios::trunc).flush();
  }

  auto save_cursor = [&] {
    detail::write_atomically(cursor_file, nlohmann::json{{"contract", opt.contract},
                                                         {"next_page", page},
                                                         {"partial_bytes", fs::file_size(partial_file)},
                                                         {"rows", result.rows}}
                                                  .dump() +
                                              "\n");
  };

  httplib::Client client(url.origin);
  client.set_connection_timeout(opt.timeout_seconds);
  client.set_read_timeout(opt.timeout_seconds);
  const std::string sep = url.path.find('?') == std::string::npos ? "?" : "&";

  while (true) {
    const std::string target = url.path + sep + "module=account&action=tokennfttx&contractaddress=" + opt.contract +
                               "&page=" + std::to_string(page) + "&offset=" + std::to_string(opt.page_size) +
                               "&sort=asc" + (opt.api_key.empty() ? "" : "&apikey=" + opt.api_key);
    auto res = client.Get(target);
    if (!res) {
      save_cursor();
      throw FetchError(ErrorCode::PartialFetch,
                       "request for page " + std::to_string(page) + " failed: " + httplib::to_string(res.error()),
                       std::nullopt, page);
    }
    if (res->status == 401 || res->status == 403) {
      save_cursor();
      throw FetchError(ErrorCode::AuthFailed, "explorer rejected the API key (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      save_cursor();
      int retry = 1;
      if (res->has_header("Retry-After")) retry = std::max(1, std::atoi(res->get_header_value("Retry-After").c_str()));
      throw FetchError(ErrorCode::RateLimited, "explorer rate limit reached", retry, page);
    }
    if (res->status != 200) {
      save_cursor();
      throw FetchError(ErrorCode::PartialFetch, "HTTP " + std::to_string(res->status) + " on page " + std::to_string(page),
                       std::nullopt, page);
    }
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      save_cursor();
      throw FetchError(ErrorCode::PartialFetch, "explorer returned invalid JSON on page " + std::to_string(page),
                       std::nullopt, page);
    }
    const std::string status = body.value("status", "0");
    const auto& rows = body.contains("result") ? body["result"] : nlohmann::json::array();
    if (status != "1") {
      const std::string message = body.value("message", "");
      const std::string detail = rows.is_string() ? rows.get<std::string>() : message;
      if (detail.find("API Key") != std::string::npos || detail.find("apikey") != std::string::npos) {
        save_cursor();
        throw FetchError(ErrorCode::AuthFailed, "explorer: " + detail);
      }
      if (detail.find("rate limit") != std::string::npos) {
        save_cursor();
        throw FetchError(ErrorCode::RateLimited, "explorer: " + detail, 1, page);
      }
      if (!rows.is_array() || !rows.empty()) {
        save_cursor();
        throw FetchError(ErrorCode::PartialFetch, "explorer: " + detail, std::nullopt, page);
      }
    }
    if (!rows.is_array()) {
      save_cursor();
      throw FetchError(ErrorCode::PartialFetch, "explorer result is not a list", std::nullopt, page);
    }
    {
      std::ofstream out(partial_file, std::ios::app);
      for (const auto& row : rows) {
        if (auto r = detail::map_row(row)) {
          write_csv_row(out, *r);
          ++result.rows;
        }
      }
    }
    ++result.pages;
    ++page;
    save_cursor();
    if (rows.size() < opt.page_size) break;
  }

  std::string csv = "timestamp,token_id,value,from_address,to_address\n" + detail::read_file(partial_file);
  auto parsed = parse_transactions(csv, InputFormat::Csv, {.strict = true});
  std::stable_sort(parsed.records.begin(), parsed.records.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  std::ostringstream sorted;
  write_csv_header(sorted);
  for (const auto& r : parsed.records) write_csv_row(sorted, r);
  detail::write_atomically(opt.output, sorted.str());
  fs::remove(cursor_file);
  fs::remove(partial_file);
  result.rows = parsed.records.size();
  return result;
}

}  // namespace nftdisk
