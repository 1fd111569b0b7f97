#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "nftdisk/core.hpp"

namespace nftdisk::time {

namespace chr = std::chrono;

inline chr::sys_days day_of(Timestamp t) {
  return chr::floor<chr::days>(chr::sys_seconds{chr::seconds{t}});
}

inline Timestamp to_timestamp(chr::sys_days d) {
  return chr::duration_cast<chr::seconds>(d.time_since_epoch()).count();
}

/// First second of the UTC calendar month containing `t`.
inline Timestamp month_start(Timestamp t) {
  const chr::year_month_day ymd{day_of(t)};
  return to_timestamp(chr::sys_days{ymd.year() / ymd.month() / chr::day{1}});
}

/// First second of the following UTC calendar month.
inline Timestamp next_month_start(Timestamp t) {
  const chr::year_month_day ymd{day_of(t)};
  const chr::year_month next = chr::year_month{ymd.year(), ymd.month()} + chr::months{1};
  return to_timestamp(chr::sys_days{next / chr::day{1}});
}

/// "2022-01-11T00:00:00Z"
inline std::string format_iso(Timestamp t) {
  const auto day = day_of(t);
  const chr::year_month_day ymd{day};
  const Timestamp secs = t - to_timestamp(day);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

/// Accepts integer Unix seconds, "YYYY-MM-DD", or "YYYY-MM-DDTHH:MM[:SS][Z]".
inline std::optional<Timestamp> parse_time(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text.find('-') == std::string_view::npos || text.front() == '-') {
    Timestamp v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) return std::nullopt;
    return v;
  }
  std::string s(text);
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.pop_back();
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, se = 0;
  char tail = 0;
  int n = std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &mo, &d, &tail);
  if (n == 3) {
    // date only
  } else if (n == 4 && (tail == 'T' || tail == ' ')) {
    int m = std::sscanf(s.c_str(), "%d-%u-%u%*c%u:%u:%u", &y, &mo, &d, &h, &mi, &se);
    if (m < 5) return std::nullopt;
  } else {
    return std::nullopt;
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{mo}, chr::day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) return std::nullopt;
  return to_timestamp(chr::sys_days{ymd}) + h * 3600 + mi * 60 + se;
}

}  // namespace nftdisk::time
