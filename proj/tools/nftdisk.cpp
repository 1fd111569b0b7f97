#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "nftdisk/nftdisk.hpp"

namespace {

using namespace nftdisk;

std::string default_data_dir() {
  const char* d = std::getenv("NFTDISK_DATA_DIR");
  return d && *d ? d : "data";
}

struct RangeFlags {
  std::string from, to;
  std::uint32_t min_tx = 20;
  std::string metric = "AveragePrice";

  void add(CLI::App* cmd) {
    cmd->add_option("--from", from, "range start (unix seconds or ISO-8601)");
    cmd->add_option("--to", to, "range end (unix seconds or ISO-8601)");
    cmd->add_option("--min-tx", min_tx, "address filter threshold")->check(CLI::PositiveNumber);
    cmd->add_option("--metric", metric, "background metric: AveragePrice or TradeVolume");
  }

  SessionConfig session(const CollectionDataset& ds) const {
    SessionConfig s;
    s.min_tx = min_tx;
    s.metric = parse_metric(metric);
    if (!from.empty() || !to.empty()) {
      const auto ext = ds.time_extent();
      auto parse = [](const std::string& v, const char* what) {
        auto t = time::parse_time(v);
        if (!t) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is not a timestamp or ISO date");
        return *t;
      };
      s.time_range = TimeRange{from.empty() ? ext.from : parse(from, "--from"), to.empty() ? ext.to : parse(to, "--to")};
      if (!s.time_range->valid()) throw Error(ErrorCode::InvalidArgument, "--from must not be after --to");
    }
    return s;
  }
};

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << content;
}

InputFormat format_for(const std::string& file, const std::string& flag) {
  if (flag == "csv") return InputFormat::Csv;
  if (flag == "json") return InputFormat::Json;
  if (!flag.empty()) throw Error(ErrorCode::InvalidArgument, "--format must be csv or json");
  return file.ends_with(".json") ? InputFormat::Json : InputFormat::Csv;
}

int run_ingest(const std::string& data_dir, const std::string& file, const std::string& id, const std::string& fmt,
               bool strict) {
  const auto source = detail::read_file(file);
  auto parsed = parse_transactions(source, format_for(file, fmt), {.strict = strict});
  for (const auto& e : parsed.errors) std::cerr << "skipped line " << e.line << ": " << e.reason << "\n";
  for (const auto& w : parsed.warnings) std::cerr << "dropped line " << w.line << ": " << w.reason << "\n";
  const std::size_t rows = parsed.records.size();
  auto ds = build_dataset(std::move(parsed.records), id);
  fs::create_directories(data_dir);
  DatasetStore store(data_dir);
  const auto info = store.save(ds, fs::absolute(file).string());
  std::cout << "ingested " << rows << " transactions, " << info.addresses << " addresses, " << info.tokens
            << " tokens into '" << id << "'\n";
  return 0;
}

int run_fetch(FetchOptions opt) {
  if (const char* key = std::getenv("NFTDISK_EXPLORER_KEY")) opt.api_key = key;
  if (opt.output.empty()) opt.output = opt.contract + ".csv";
  try {
    const auto r = fetch_transactions(opt);
    std::cout << "fetched " << r.rows << " transactions in " << r.pages << " pages" << (r.resumed ? " (resumed)" : "")
              << " -> " << opt.output.string() << "\n";
    return 0;
  } catch (const FetchError& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    if (e.retry_after()) std::cerr << "retry after " << *e.retry_after() << " s\n";
    if (e.next_page()) std::cerr << "progress saved; rerun to resume at page " << *e.next_page() << "\n";
    return 2;
  }
}

int run_report(const std::string& data_dir, const std::string& id, const RangeFlags& flags, std::size_t top,
               bool json) {
  auto store = DatasetStore::open_existing(data_dir);
  const auto ds = store.load(id);
  const auto doc = generate_report(*ds, flags.session(*ds), {.top_k = top});
  if (json) {
    std::cout << to_json(*ds, doc).dump(2) << "\n";
  } else {
    std::cout << to_text(*ds, doc);
  }
  return 0;
}

struct SvgFlags {
  std::string view = "disk";
  std::string out;
  std::string addresses;
  std::size_t event_lo = 0;
  std::optional<std::size_t> event_hi;
  double inner_radius = 0.35, outer_radius = 1.0;
  std::optional<double> circle_radius;
};

int run_export(const std::string& data_dir, const std::string& id, const RangeFlags& flags, const SvgFlags& svgf) {
  auto store = DatasetStore::open_existing(data_dir);
  const auto ds = store.load(id);
  const auto session = flags.session(*ds);
  auto config = session.disk_config(*ds);
  config.inner_radius = svgf.inner_radius;
  config.outer_radius = svgf.outer_radius;
  config.inner_circle_radius = svgf.circle_radius;
  const auto layout = build_disk_layout(*ds, config);
  if (svgf.view == "disk") {
    write_output(svgf.out, svg::export_svg(layout));
    return 0;
  }
  if (svgf.view != "flow" && svgf.view != "group") throw Error(ErrorCode::InvalidArgument, "--view must be disk, flow or group");

  std::vector<AddressIndex> group;
  if (!svgf.addresses.empty()) {
    std::stringstream ss(svgf.addresses);
    for (std::string item; std::getline(ss, item, ',');) {
      if (item.empty()) continue;
      const auto addr = Address::parse(item);
      if (!addr) throw Error(ErrorCode::BadAddress, "malformed address " + item);
      const auto idx = ds->find_address(*addr);
      if (!idx) throw Error(ErrorCode::NotFound, "address " + item + " does not occur in the collection");
      group.push_back(*idx);
    }
    std::sort(group.begin(), group.end());
    group.erase(std::unique(group.begin(), group.end()), group.end());
  } else {
    const auto doc = generate_report(*ds, session);
    if (doc.groups.empty()) throw Error(ErrorCode::GroupEmpty, "no suspicious group; pass --addresses");
    group = doc.groups.front().group.addresses;
  }
  if (group.empty()) throw Error(ErrorCode::GroupEmpty, "no addresses given");
  const auto tl = replay_holdings(*ds, group, session.resolved_range(*ds));
  const auto order = stacking_order(layout, group);
  if (svgf.view == "group") {
    write_output(svgf.out, svg::export_svg(build_stacked_series(tl, order)));
    return 0;
  }
  if (tl.events.empty()) throw Error(ErrorCode::OutOfRange, "the group has no events in the time range");
  const EventRange range{svgf.event_lo, svgf.event_hi.value_or(tl.events.size() - 1)};
  write_output(svgf.out, svg::export_svg(build_flow_detail(tl, range, order)));
  return 0;
}

Service* running = nullptr;

int run_serve(ServerSettings settings) {
  Service service(std::move(settings));
  service.bind();
  running = &service;
  std::signal(SIGINT, [](int) {
    if (running) running->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (running) running->stop();
  });
  std::cerr << "listening on http://127.0.0.1:" << service.bound_port() << "\n";
  service.listen();
  running = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NFT wash-trading analytics"};
  app.require_subcommand(1);
  std::string data_dir = default_data_dir();
  app.add_option("--data-dir", data_dir, "dataset directory (default $NFTDISK_DATA_DIR or ./data)");

  auto* ingest = app.add_subcommand("ingest", "parse a transaction log into the dataset store");
  std::string file, collection, format;
  bool strict = false;
  ingest->add_option("file", file, "CSV or JSON transaction log")->required();
  ingest->add_option("--collection", collection, "collection id")->required();
  ingest->add_option("--format", format, "csv or json (default: by extension)");
  ingest->add_flag("--strict", strict, "abort on the first malformed row");

  auto* fetch = app.add_subcommand("fetch", "download transfers for a contract from a block explorer");
  FetchOptions fopt;
  std::string fetch_out;
  fetch->add_option("contract", fopt.contract, "contract address")->required();
  fetch->add_option("--base-url", fopt.base_url, "explorer API URL")->required();
  fetch->add_option("--output", fetch_out, "CSV file to write (default <contract>.csv)");
  fetch->add_option("--page-size", fopt.page_size, "rows per request");

  auto* report = app.add_subcommand("report", "rank suspicious pairs and groups");
  std::string report_id;
  RangeFlags report_flags;
  std::size_t top = 10;
  bool as_json = false;
  report->add_option("collection", report_id, "collection id")->required();
  report_flags.add(report);
  report->add_option("--top", top, "number of pairs to list");
  report->add_flag("--json", as_json, "machine-readable output");

  auto* exp = app.add_subcommand("export-svg", "render a view to SVG");
  std::string export_id;
  RangeFlags export_flags;
  SvgFlags svgf;
  exp->add_option("collection", export_id, "collection id")->required();
  export_flags.add(exp);
  exp->add_option("--view", svgf.view, "disk, flow or group");
  exp->add_option("--out", svgf.out, "output file (default stdout)");
  exp->add_option("--addresses", svgf.addresses, "comma-separated group (default: top suspicious group)");
  exp->add_option("--event-lo", svgf.event_lo, "first event of the detail view");
  exp->add_option("--event-hi", svgf.event_hi, "last event of the detail view");
  exp->add_option("--inner-radius", svgf.inner_radius, "radius of the earliest time");
  exp->add_option("--outer-radius", svgf.outer_radius, "radius of the latest time");
  exp->add_option("--circle-radius", svgf.circle_radius, "inner circle radius");

  auto* serve = app.add_subcommand("serve", "run the JSON API");
  auto settings = ServerSettings::from_env();
  int port = settings.port;
  serve->add_option("--port", port, "TCP port (default $NFTDISK_PORT or 8080)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return run_ingest(data_dir, file, collection, format, strict);
    if (*fetch) {
      fopt.output = fetch_out;
      return run_fetch(fopt);
    }
    if (*report) return run_report(data_dir, report_id, report_flags, top, as_json);
    if (*exp) return run_export(data_dir, export_id, export_flags, svgf);
    if (*serve) {
      settings.data_dir = data_dir;
      settings.port = port;
      return run_serve(settings);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
