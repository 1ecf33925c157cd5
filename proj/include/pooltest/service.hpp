#pragma once

// HTTP/JSON facade over the optimizer, zone maps, heuristics and sessions.
// Routing lives in Service::handle so it can be exercised without sockets;
// Service::listen binds it to an httplib server.

#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pooltest/codec.hpp"
#include "pooltest/enumeration.hpp"
#include "pooltest/errors.hpp"
#include "pooltest/heuristics.hpp"
#include "pooltest/optimizer.hpp"
#include "pooltest/session.hpp"
#include "pooltest/zones.hpp"

namespace pooltest {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "pooltest-data";
  std::filesystem::path ui_dir;  ///< static files served at / when set
  int optimizer_limit = kOptimizerLimit;
  std::uint64_t max_trials = 10'000'000;
  unsigned zone_threads = 1;

  /// Reads POOLTEST_ADDR ("host:port") and POOLTEST_DATA_DIR on top of the defaults.
  static ServiceConfig from_env() {
    ServiceConfig c;
    if (const char* addr = std::getenv("POOLTEST_ADDR"); addr && *addr) c.set_address(addr);
    if (const char* dir = std::getenv("POOLTEST_DATA_DIR"); dir && *dir) c.data_dir = dir;
    return c;
  }

  void set_address(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos) throw ArgumentError("address must look like host:port");
    host = std::string(addr.substr(0, colon));
    const auto port_text = addr.substr(colon + 1);
    int p = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), p);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || p < 0 || p > 65535) {
      throw ArgumentError("bad port in address '" + std::string(addr) + "'");
    }
    port = p;
  }
};

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

/// HTTP status for each error class.
inline int http_status(const std::exception& e) {
  if (dynamic_cast<const StateError*>(&e)) return 409;
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const UnsupportedSize*>(&e) || dynamic_cast<const ResourceError*>(&e)) return 422;
  if (dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) return 400;
  return 500;
}

inline std::string error_type(int status) {
  switch (status) {
    case 400: return "bad_request";
    case 404: return "not_found";
    case 409: return "conflict";
    case 422: return "unsupported_size";
    default: return "internal";
  }
}

class Service {
 public:
  explicit Service(ServiceConfig config) : config_(std::move(config)) {
    std::filesystem::create_directories(session_dir());
    std::filesystem::create_directories(zone_dir());
    restore_sessions();
  }

  ~Service() {
    stop();
    std::vector<std::jthread> jobs;
    {
      std::lock_guard lock(zones_mu_);
      for (auto& [key, job] : jobs_) {
        if (job->worker.joinable()) jobs.push_back(std::move(job->worker));
      }
    }
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  const ServiceConfig& config() const noexcept { return config_; }

  ServiceResponse handle(const ServiceRequest& req) {
    try {
      return route(req);
    } catch (const std::exception& e) {
      const int status = http_status(e);
      nlohmann::json err{{"type", error_type(status)}, {"message", e.what()}};
      if (auto* u = dynamic_cast<const UnsupportedSize*>(&e)) err["bound"] = u->bound();
      return {status, {{"error", err}}};
    }
  }

  /// Binds and serves until stop(); returns false if the address cannot be bound.
  bool listen() {
    setup_server();
    return server_->listen(config_.host, config_.port);
  }

  /// Binds to a free port on host and returns it; serve with listen_after_bind().
  int bind_any_port() {
    setup_server();
    return server_->bind_to_any_port(config_.host);
  }

  bool listen_after_bind() { return server_->listen_after_bind(); }

  void stop() {
    if (server_) server_->stop();
  }

  void wait_until_ready() const {
    if (server_) server_->wait_until_ready();
  }

  /// Blocks until every zone job has finished.
  void wait_for_zone_jobs() {
    for (;;) {
      bool running = false;
      {
        std::lock_guard lock(zones_mu_);
        for (auto& [key, job] : jobs_) running = running || !job->finished.load();
      }
      if (!running) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

  std::size_t session_count() const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.size();
  }

 private:
  using ZoneKey = std::tuple<int, int, EvalMode>;

  struct ZoneJob {
    std::string id;
    std::atomic<double> progress{0};
    std::atomic<bool> finished{false};
    std::string error;
    std::jthread worker;
  };

  struct SessionEntry {
    std::mutex mu;
    Session session;
    explicit SessionEntry(Session s) : session(std::move(s)) {}
  };

  std::filesystem::path session_dir() const { return config_.data_dir / "sessions"; }
  std::filesystem::path zone_dir() const { return config_.data_dir / "zones"; }

  static std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::stringstream ss(path);
    std::string item;
    while (std::getline(ss, item, '/')) {
      if (!item.empty()) parts.push_back(item);
    }
    return parts;
  }

  static nlohmann::json parse_body(const ServiceRequest& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw ParseError("request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("request body is not JSON: ") + e.what());
    }
  }

  static int parse_int(const std::string& text, const std::string& what) {
    int v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size()) throw ArgumentError(what + " must be an integer");
    return v;
  }

  static std::optional<std::string> query(const ServiceRequest& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end()) return std::nullopt;
    return it->second;
  }

  ServiceResponse route(const ServiceRequest& req) {
    const auto parts = split_path(req.path);
    const auto& m = req.method;
    if (parts.size() < 2 || parts[0] != "v1") throw NotFound("no route for " + req.path);
    const auto& area = parts[1];
    if (area == "health" && parts.size() == 2 && m == "GET") return {200, {{"status", "ok"}}};
    if (area == "procedures" && parts.size() == 3 && parts[2] == "optimal" && m == "POST") {
      return post_optimal(parse_body(req));
    }
    if (area == "procedures" && parts.size() == 3 && parts[2] == "greedy" && m == "POST") {
      return post_greedy(parse_body(req));
    }
    if (area == "zones" && parts.size() == 3 && m == "GET") return get_zones(parse_int(parts[2], "n"), req);
    if (area == "zones" && parts.size() == 4 && parts[3] == "slice" && m == "GET") {
      return get_slice(parse_int(parts[2], "n"), req);
    }
    if (area == "sessions" && parts.size() == 2 && m == "POST") return post_session(parse_body(req));
    if (area == "sessions" && parts.size() == 3 && m == "GET") return {200, snapshot(*find_session(parts[2]))};
    if (area == "sessions" && parts.size() == 3 && m == "DELETE") return delete_session(parts[2]);
    if (area == "sessions" && parts.size() == 4 && parts[3] == "result" && m == "POST") {
      return post_result(parts[2], parse_body(req));
    }
    if (area == "simulations" && parts.size() == 2 && m == "POST") return post_simulation(parse_body(req));
    if (area == "meta" && parts.size() == 3 && parts[2] == "counts" && m == "GET") return get_counts(req);
    throw NotFound("no route for " + m + " " + req.path);
  }

  // --- procedures ----------------------------------------------------------

  ServiceResponse post_optimal(const nlohmann::json& body) {
    if (!body.contains("priors")) throw ArgumentError("missing 'priors'");
    const bool exact = body.value("mode", std::string("float")) == "exact";
    const auto priors = priors_from_json(body["priors"], exact);
    const int n = priors.n();
    const std::string via = body.value("via", std::string("optimizer"));
    Procedure proc;
    if (via == "zones") {
      if (n > kZoneLimit) throw UnsupportedSize("zone lookup over " + std::to_string(n) + " samples", kZoneLimit);
      const ZoneMap& zm = zone_map(n);
      proc = priors.exact ? metaprocedure_at(zm, *priors.exact) : metaprocedure_at(zm, priors.values);
    } else if (via == "optimizer") {
      if (n > config_.optimizer_limit) {
        throw UnsupportedSize("optimal procedure over " + std::to_string(n) + " samples", config_.optimizer_limit);
      }
      proc = priors.exact ? find_optimal(*priors.exact).procedure : find_optimal(priors.values).procedure;
    } else {
      throw ArgumentError("'via' must be 'optimizer' or 'zones'");
    }
    auto out = procedure_report(proc, priors);
    out["via"] = via;
    return {200, out};
  }

  ServiceResponse post_greedy(const nlohmann::json& body) {
    if (!body.contains("priors")) throw ArgumentError("missing 'priors'");
    const auto priors = priors_from_json(body["priors"], body.value("mode", std::string("float")) == "exact");
    return {200, procedure_report(priors.exact ? greedy_procedure(*priors.exact) : greedy_procedure(priors.values), priors)};
  }

  // --- zones ---------------------------------------------------------------

  static void check_zone_n(int n) {
    if (n < 1) throw ArgumentError("n must be at least 1");
    if (n > kZoneLimit) throw UnsupportedSize("zone maps over " + std::to_string(n) + " samples", kZoneLimit);
  }

  ZoneKey zone_key(int n, const ServiceRequest& req) const {
    check_zone_n(n);
    int res = default_zone_resolution(n);
    if (auto r = query(req, "res")) res = parse_int(*r, "res");
    if (res < 1) throw ArgumentError("res must be positive");
    EvalMode mode = EvalMode::kFloat;
    if (auto md = query(req, "mode")) {
      if (*md == "exact") {
        mode = EvalMode::kExact;
      } else if (*md != "float") {
        throw ArgumentError("mode must be 'float' or 'exact'");
      }
    }
    SimplexGrid grid(n, res);
    if (grid.size() > kZoneGridLimit) throw UnsupportedSize("zone grid size", static_cast<int>(kZoneGridLimit));
    return {n, res, mode};
  }

  /// Cached map or nullptr; loads a verified file from the data directory.
  std::shared_ptr<const ZoneMap> cached_zone_map(const ZoneKey& key) {
    std::lock_guard lock(zones_mu_);
    if (auto it = zone_maps_.find(key); it != zone_maps_.end()) return it->second;
    const auto [n, res, mode] = key;
    const auto path = zone_dir() / zone_file_name(n, res, mode);
    if (std::filesystem::exists(path)) {
      try {
        auto zm = std::make_shared<const ZoneMap>(load_zone_map(path));
        zone_maps_[key] = zm;
        return zm;
      } catch (const ParseError&) {
        // A corrupt file is recomputed.
      }
    }
    return nullptr;
  }

  std::shared_ptr<const ZoneMap> compute_and_store(const ZoneKey& key, std::function<void(double)> progress = {}) {
    const auto [n, res, mode] = key;
    ZoneOptions opt;
    opt.resolution = res;
    opt.mode = mode;
    opt.threads = config_.zone_threads;
    opt.progress = std::move(progress);
    auto zm = std::make_shared<const ZoneMap>(compute_metaprocedure(n, opt));
    save_zone_map(*zm, zone_dir() / zone_file_name(n, res, mode));
    std::lock_guard lock(zones_mu_);
    return zone_maps_.emplace(key, zm).first->second;
  }

  /// Default-resolution map, computed synchronously when missing (used by sessions).
  const ZoneMap& zone_map(int n) {
    check_zone_n(n);
    const ZoneKey key{n, default_zone_resolution(n), EvalMode::kFloat};
    auto zm = cached_zone_map(key);
    if (!zm) zm = compute_and_store(key);
    return *zm;
  }

  /// Either the ready map or a 202 response describing the running job.
  std::variant<std::shared_ptr<const ZoneMap>, ServiceResponse> zone_map_or_job(const ZoneKey& key) {
    if (auto zm = cached_zone_map(key)) return zm;
    std::lock_guard lock(zones_mu_);
    if (auto it = zone_maps_.find(key); it != zone_maps_.end()) return it->second;
    const auto [n, res, mode] = key;
    const std::string id = "zonemap-n" + std::to_string(n) + "-r" + std::to_string(res) + "-" + std::string(to_string(mode));
    auto& job = jobs_[key];
    if (job && job->finished.load()) {
      if (!job->error.empty()) {
        const std::string error = job->error;
        job.reset();
        throw ResourceError("zone job " + id + " failed: " + error);
      }
    }
    if (!job) {
      job = std::make_shared<ZoneJob>();
      job->id = id;
      auto* raw = job.get();
      job->worker = std::jthread([this, key, raw] {
        try {
          compute_and_store(key, [raw](double f) { raw->progress.store(f); });
          raw->progress.store(1.0);
        } catch (const std::exception& e) {
          std::lock_guard l(zones_mu_);
          raw->error = e.what();
        }
        raw->finished.store(true);
      });
    }
    return ServiceResponse{202, {{"status", "pending"}, {"job", job->id}, {"progress", job->progress.load()}}};
  }

  ServiceResponse get_zones(int n, const ServiceRequest& req) {
    const auto key = zone_key(n, req);
    auto r = zone_map_or_job(key);
    if (auto* resp = std::get_if<ServiceResponse>(&r)) return *resp;
    const auto& zm = *std::get<std::shared_ptr<const ZoneMap>>(r);
    auto j = zone_header(zm);
    j["status"] = "ready";
    j["tie_extras"] = zm.tie_extras;
    j["file"] = zone_file_name(zm.n, zm.resolution, zm.mode);
    auto orbits = nlohmann::json::array();
    for (const auto& o : orbit_census(zm)) orbits.push_back({{"representative", o.representative}, {"size", o.size()}});
    j["orbits"] = orbits;
    return {200, j};
  }

  ServiceResponse get_slice(int n, const ServiceRequest& req) {
    if (n != 3) throw ArgumentError("slices are defined for n = 3");
    std::string plane_text;
    if (auto p = query(req, "plane")) {
      plane_text = *p;
      if (plane_text.find('=') == std::string::npos) {
        auto v = query(req, "value");
        if (!v) throw ArgumentError("plane needs a value");
        plane_text += "=" + *v;
      }
    } else {
      plane_text = "z=" + query(req, "value").value_or("0.17");
    }
    const auto plane = SlicePlane::parse(plane_text);
    int res = 100;
    if (auto r = query(req, "res")) res = parse_int(*r, "res");
    ServiceRequest zone_req;
    if (auto zr = query(req, "zone_res")) zone_req.query["res"] = *zr;
    auto r = zone_map_or_job(zone_key(n, zone_req));
    if (auto* resp = std::get_if<ServiceResponse>(&r)) return *resp;
    const auto& zm = *std::get<std::shared_ptr<const ZoneMap>>(r);
    const auto s = slice(zm, plane, res);
    auto rows = nlohmann::json::array();
    for (int row = 0; row < s.resolution; ++row) {
      auto line = nlohmann::json::array();
      for (int c = 0; c < s.resolution; ++c) line.push_back(s.at(row, c));
      rows.push_back(std::move(line));
    }
    auto legend = nlohmann::json::array();
    for (auto id : s.legend) legend.push_back({{"id", id}, {"procedure", encode(zm.procedures[id])}});
    return {200,
            {{"n", 3}, {"plane", s.plane.str()}, {"resolution", s.resolution}, {"zone_resolution", zm.resolution},
             {"ids", rows}, {"legend", legend}}};
  }

  // --- sessions ------------------------------------------------------------

  std::string new_session_id() {
    std::lock_guard lock(id_mu_);
    if (!id_rng_) {
      std::random_device rd;
      id_rng_.emplace((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
    }
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>((*id_rng_)()),
                  static_cast<unsigned long long>((*id_rng_)()));
    return buf;
  }

  SessionOptions session_options() {
    SessionOptions opt;
    opt.zones = [this](int k) -> const ZoneMap& { return zone_map(k); };
    return opt;
  }

  static bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
    }
    return true;
  }

  std::shared_ptr<SessionEntry> find_session(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
    return it->second;
  }

  static nlohmann::json snapshot(SessionEntry& e) {
    std::lock_guard lock(e.mu);
    return to_json(e.session);
  }

  void write_snapshot(const nlohmann::json& j) {
    const auto path = session_dir() / (j["id"].get<std::string>() + ".json");
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw ResourceError("cannot write session snapshot " + tmp);
      out << j.dump() << '\n';
      if (!out) throw ResourceError("session snapshot write failed");
    }
    std::filesystem::rename(tmp, path);
  }

  void restore_sessions() {
    for (const auto& entry : std::filesystem::directory_iterator(session_dir())) {
      if (entry.path().extension() != ".json") continue;
      try {
        std::ifstream in(entry.path());
        nlohmann::json j;
        in >> j;
        auto s = session_from_json(j, session_options());
        if (!valid_id(s.id())) continue;
        const auto id = s.id();
        sessions_[id] = std::make_shared<SessionEntry>(std::move(s));
      } catch (const std::exception&) {
        // Unreadable snapshots are left on disk and skipped.
      }
    }
  }

  ServiceResponse post_session(const nlohmann::json& body) {
    if (!body.contains("priors")) throw ArgumentError("missing 'priors'");
    const auto priors = priors_from_json(body["priors"], body.value("mode", std::string("float")) == "exact");
    const Strategy strategy = body.contains("strategy") ? strategy_from_json(body["strategy"]) : Strategy::optimal();
    auto entry = std::make_shared<SessionEntry>(Session(new_session_id(), priors, strategy, session_options()));
    const auto j = to_json(entry->session);
    write_snapshot(j);
    {
      std::unique_lock lock(sessions_mu_);
      sessions_[entry->session.id()] = entry;
    }
    return {201, j};
  }

  ServiceResponse post_result(const std::string& id, const nlohmann::json& body) {
    if (!body.contains("result") || !body["result"].is_string()) throw ArgumentError("missing string 'result'");
    const auto result = parse_result(body["result"].get<std::string>());
    auto entry = find_session(id);
    std::lock_guard lock(entry->mu);
    auto& s = entry->session;
    if (s.complete()) throw StateError("session " + id + " is already complete");
    if (body.contains("pool")) {
      const auto pool = Pool::from_indices(s.n(), body["pool"].get<std::vector<int>>());
      if (!(pool == *s.next_pool())) throw StateError("result is for pool {" + pool_text(pool.mask()) + "}" +
                                                      " but the session expects {" + pool_text(s.next_pool()->mask()) + "}");
    }
    if (body.contains("tests")) {
      if (body["tests"].get<std::size_t>() != s.tests()) {
        throw StateError("result is for test " + std::to_string(body["tests"].get<std::size_t>()) +
                         " but the session has recorded " + std::to_string(s.tests()));
      }
    }
    Session next = s;
    next.record(result);
    const auto j = to_json(next);
    write_snapshot(j);
    s = std::move(next);
    return {200, j};
  }

  ServiceResponse delete_session(const std::string& id) {
    std::shared_ptr<SessionEntry> entry;
    {
      std::unique_lock lock(sessions_mu_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) throw NotFound("no session '" + id + "'");
      entry = it->second;
      sessions_.erase(it);
    }
    std::lock_guard lock(entry->mu);
    std::error_code ec;
    std::filesystem::remove(session_dir() / (id + ".json"), ec);
    return {200, {{"id", id}, {"deleted", true}}};
  }

  // --- simulations and counts ----------------------------------------------

  ServiceResponse post_simulation(const nlohmann::json& body) {
    const Strategy strategy = body.contains("strategy") ? strategy_from_json(body["strategy"]) : Strategy::optimal();
    const auto trials = body.value("trials", std::uint64_t{10000});
    const auto seed = body.value("seed", std::uint64_t{0});
    if (trials < 1) throw ArgumentError("trials must be at least 1");
    if (trials > config_.max_trials) throw UnsupportedSize("trials", static_cast<int>(config_.max_trials));
    SimulationOptions opt;
    opt.session = session_options();
    SimulationReport r;
    if (body.contains("priors")) {
      r = simulate(priors_from_json(body["priors"], body.value("mode", std::string("float")) == "exact"), strategy,
                   trials, seed, opt);
    } else {
      const auto dist = body.value("prior_distribution", std::string());
      if (dist != "uniform") throw ArgumentError("give 'priors' or prior_distribution 'uniform'");
      if (!body.contains("n") || !body["n"].is_number_integer()) throw ArgumentError("uniform priors need integer 'n'");
      r = simulate_uniform(body["n"].get<int>(), strategy, trials, seed, opt);
    }
    return {200, to_json(r)};
  }

  ServiceResponse get_counts(const ServiceRequest& req) {
    const auto n_text = query(req, "n");
    if (!n_text) throw ArgumentError("missing query parameter n");
    const int n = parse_int(*n_text, "n");
    if (n < 1) throw ArgumentError("n must be at least 1");
    const auto count = count_procedures(n);
    nlohmann::json j{{"n", n}};
    auto big = [](const BigInt& v) -> nlohmann::json {
      if (v <= BigInt(std::numeric_limits<std::uint64_t>::max())) return v.convert_to<std::uint64_t>();
      return v.str();
    };
    j["procedures"] = big(count.value);
    j["constant_length"] = big(count_naive(n).value);
    if (n <= kZoneLimit) {
      const ZoneKey key{n, default_zone_resolution(n), EvalMode::kFloat};
      auto zm = cached_zone_map(key);
      if (!zm && n <= 3) zm = compute_and_store(key);
      if (zm) {
        j["zones"] = zm->zone_count();
        j["zone_resolution"] = zm->resolution;
      } else {
        j["zones"] = nullptr;
      }
    } else {
      j["zones"] = nullptr;
    }
    return {200, j};
  }

  // --- transport -----------------------------------------------------------

  void setup_server() {
    if (server_) return;
    server_ = std::make_unique<httplib::Server>();
    auto forward = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ServiceRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      for (const auto& [k, v] : hreq.params) req.query[k] = v;
      req.body = hreq.body;
      const auto resp = handle(req);
      hres.status = resp.status;
      hres.set_content(resp.body.dump(), "application/json");
    };
    server_->Get(R"(/v1/.*)", forward);
    server_->Post(R"(/v1/.*)", forward);
    server_->Delete(R"(/v1/.*)", forward);
    if (!config_.ui_dir.empty() && std::filesystem::is_directory(config_.ui_dir)) {
      server_->set_mount_point("/", config_.ui_dir.string());
    }
  }

  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions_;

  std::recursive_mutex zones_mu_;
  std::map<ZoneKey, std::shared_ptr<const ZoneMap>> zone_maps_;
  std::map<ZoneKey, std::shared_ptr<ZoneJob>> jobs_;

  std::mutex id_mu_;
  std::optional<std::mt19937_64> id_rng_;
};

}  // namespace pooltest
