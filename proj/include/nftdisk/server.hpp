#pragma once

#include <atomic>
#include <charconv>
#include <cstdlib>

#include "httplib.h"
#include "nftdisk/report.hpp"
#include "nftdisk/serialize.hpp"
#include "nftdisk/store.hpp"

namespace nftdisk {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::EmptyBrush:
    case ErrorCode::GroupEmpty:
    case ErrorCode::OutOfRange: return 422;
    case ErrorCode::StoreCorrupt: return 500;
    default: return 400;
  }
}

struct ServerSettings {
  std::filesystem::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;

  /// NFTDISK_DATA_DIR and NFTDISK_PORT override the defaults.
  static ServerSettings from_env() {
    ServerSettings s;
    if (const char* d = std::getenv("NFTDISK_DATA_DIR"); d && *d) s.data_dir = d;
    if (const char* p = std::getenv("NFTDISK_PORT"); p && *p) s.port = std::atoi(p);
    return s;
  }
};

namespace detail {

inline std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  auto v = req.get_param_value(name);
  if (v.empty()) return std::nullopt;
  return v;
}

inline std::uint32_t parse_u32(const std::string& s, const char* what) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be a non-negative integer");
  }
  return v;
}

inline Timestamp parse_time_param(const std::string& s, const char* what) {
  auto t = time::parse_time(s);
  if (!t) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not a timestamp or ISO date");
  return *t;
}

/// Reads from/to/min_tx/metric; absent values keep the session defaults.
inline SessionConfig session_from(const httplib::Request& req, const CollectionDataset& ds) {
  SessionConfig s;
  const auto ext = ds.time_extent();
  auto from = param(req, "from");
  auto to = param(req, "to");
  if (from || to) {
    s.time_range = TimeRange{from ? parse_time_param(*from, "from") : ext.from, to ? parse_time_param(*to, "to") : ext.to};
    if (!s.time_range->valid()) throw Error(ErrorCode::InvalidArgument, "from must not be after to");
  }
  if (auto m = param(req, "min_tx")) s.min_tx = parse_u32(*m, "min_tx");
  if (s.min_tx < 1) throw Error(ErrorCode::InvalidArgument, "min_tx must be >= 1");
  if (auto m = param(req, "metric")) s.metric = parse_metric(*m);
  return s;
}

/// Comma-separated addresses, either 0x-hex or dataset indices.
inline std::vector<AddressIndex> parse_addresses(const std::string& list, const CollectionDataset& ds) {
  std::vector<AddressIndex> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = std::min(list.find(',', start), list.size());
    const std::string item = list.substr(start, end - start);
    if (!item.empty()) {
      if (item.rfind("0x", 0) == 0 || item.rfind("0X", 0) == 0) {
        const auto addr = Address::parse(item);
        if (!addr) throw Error(ErrorCode::BadAddress, "malformed address " + item);
        auto idx = ds.find_address(*addr);
        if (!idx) throw Error(ErrorCode::NotFound, "address " + item + " does not occur in the collection");
        out.push_back(*idx);
      } else {
        const auto idx = parse_u32(item, "address index");
        if (idx >= ds.address_count()) throw Error(ErrorCode::NotFound, "address index out of range");
        out.push_back(idx);
      }
    }
    start = end + 1;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) throw Error(ErrorCode::GroupEmpty, "no addresses given");
  return out;
}

}  // namespace detail

/// Stateless JSON API over a data directory. Every request carries its own
/// configuration; loaded datasets are shared read-only.
class Service {
 public:
  explicit Service(ServerSettings settings)
      : settings_(std::move(settings)), store_(DatasetStore::open_existing(settings_.data_dir)) {
    // SO_REUSEPORT would let a second instance share the port silently.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    routes();
  }

  httplib::Server& http() { return server_; }
  DatasetStore& store() { return store_; }

  /// Binds the port; throws PortInUse when it is taken. Port 0 picks a free
  /// port, reported by bound_port().
  void bind() {
    if (settings_.port == 0) {
      bound_port_ = server_.bind_to_any_port(settings_.host);
      if (bound_port_ <= 0) throw Error(ErrorCode::PortInUse, "could not bind any port");
    } else {
      if (!server_.bind_to_port(settings_.host, settings_.port)) {
        throw Error(ErrorCode::PortInUse, "port " + std::to_string(settings_.port) + " is already in use");
      }
      bound_port_ = settings_.port;
    }
  }

  int bound_port() const { return bound_port_; }
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  using Handler = std::function<Json(const httplib::Request&)>;

  void json_route(const char* method, const std::string& pattern, Handler h) {
    auto wrapped = [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(h(req).dump(), "application/json");
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(error_body(e.code(), e.what()).dump(), "application/json");
      } catch (const Json::exception& e) {
        res.status = 400;
        res.set_content(error_body(ErrorCode::InvalidArgument, e.what()).dump(), "application/json");
      }
    };
    if (std::string_view(method) == "GET") {
      server_.Get(pattern, wrapped);
    } else {
      server_.Post(pattern, wrapped);
    }
  }

  std::shared_ptr<const CollectionDataset> dataset(const httplib::Request& req) {
    return store_.load(req.matches[1].str());
  }

  void routes() {
    const std::string id = R"(/collections/([A-Za-z0-9_.\-]+))";

    json_route("GET", "/collections", [this](const httplib::Request&) {
      Json list = Json::array();
      for (const auto& info : store_.list()) list.push_back(DatasetStore::meta_json(info));
      return list;
    });

    json_route("GET", id + "/disk", [this](const httplib::Request& req) {
      auto ds = dataset(req);
      const auto session = detail::session_from(req, *ds);
      return to_json(*ds, build_disk_layout(*ds, session.disk_config(*ds)));
    });

    json_route("POST", id + "/selection", [this](const httplib::Request& req) {
      auto ds = dataset(req);
      const auto session = detail::session_from(req, *ds);
      const auto body = Json::parse(req.body);
      CircularBrush brush{body.at("angle_start").get<double>(), body.at("angle_end").get<double>(),
                          body.at("r_lo").get<double>(), body.at("r_hi").get<double>()};
      const auto layout = build_disk_layout(*ds, session.disk_config(*ds));
      return to_json(*ds, resolve_circular_brush(layout, brush));
    });

    json_route("GET", id + "/flow/group", [this](const httplib::Request& req) {
      auto ds = dataset(req);
      const auto session = detail::session_from(req, *ds);
      const auto group = detail::parse_addresses(detail::param(req, "addresses").value_or(""), *ds);
      const auto layout = build_disk_layout(*ds, session.disk_config(*ds));
      const auto tl = replay_holdings(*ds, group, session.resolved_range(*ds));
      Json j = to_json(*ds, build_stacked_series(tl, stacking_order(layout, group)));
      Json spans = Json::array();
      if (tl.events.size() >= 2) {
        for (const auto& s : detect_constant_spans(tl, 3)) spans.push_back(to_json(s, tl));
      }
      j["constant_spans"] = std::move(spans);
      j["time_range"] = time_range_json(session.resolved_range(*ds));
      return j;
    });

    json_route("GET", id + "/flow/detail", [this](const httplib::Request& req) {
      auto ds = dataset(req);
      const auto session = detail::session_from(req, *ds);
      const auto group = detail::parse_addresses(detail::param(req, "addresses").value_or(""), *ds);
      const auto layout = build_disk_layout(*ds, session.disk_config(*ds));
      const auto tl = replay_holdings(*ds, group, session.resolved_range(*ds));
      if (tl.events.empty()) throw Error(ErrorCode::OutOfRange, "the group has no events in the time range");
      EventRange range{0, tl.events.size() - 1};
      if (auto lo = detail::param(req, "event_lo")) range.first = detail::parse_u32(*lo, "event_lo");
      if (auto hi = detail::param(req, "event_hi")) range.last = detail::parse_u32(*hi, "event_hi");
      return to_json(*ds, build_flow_detail(tl, range, stacking_order(layout, group)));
    });

    json_route("GET", id + "/report", [this](const httplib::Request& req) {
      auto ds = dataset(req);
      ReportOptions opt;
      if (auto k = detail::param(req, "top")) opt.top_k = detail::parse_u32(*k, "top");
      return to_json(*ds, generate_report(*ds, detail::session_from(req, *ds), opt));
    });

    server_.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(error_body(ErrorCode::NotFound, "no such endpoint").dump(), "application/json");
      }
    });
  }

  ServerSettings settings_;
  DatasetStore store_;
  httplib::Server server_;
  int bound_port_ = 0;
};

}  // namespace nftdisk
