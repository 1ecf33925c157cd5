#include <catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

#include "pooltest/service.hpp"

using namespace pooltest;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name)
      : path(std::filesystem::temp_directory_path() / ("pooltest-" + name + "-" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

ServiceConfig config_for(const TempDir& d) {
  ServiceConfig c;
  c.data_dir = d.path;
  return c;
}

ServiceResponse call(Service& s, std::string method, std::string path, json body = nullptr,
                     std::map<std::string, std::string> query = {}) {
  ServiceRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  r.query = std::move(query);
  if (!body.is_null()) r.body = body.dump();
  return s.handle(r);
}

}  // namespace

TEST_CASE("optimal procedure endpoint") {
  TempDir dir("optimal");
  Service svc(config_for(dir));
  auto r = call(svc, "POST", "/v1/procedures/optimal", {{"priors", {0.01, 0.17, 0.51}}});
  REQUIRE(r.status == 200);
  CHECK(std::abs(r.body["expected_length"].get<double>() - 1.889) < 0.001);
  CHECK(r.body["procedure"] ==
        "P{1,2,3}[L(000),P{1,2}[L(001),P{1,3}[L(010),P{1}[L(011),P{2,3}[L(100),P{2}[L(101),P{3}[L(110),L(111)]]]]]]]");
  auto e = call(svc, "POST", "/v1/procedures/optimal", {{"priors", {"1/10", "1/5"}}});
  REQUIRE(e.status == 200);
  CHECK(e.body["mode"] == "exact");
  CHECK(e.body["expected_length_exact"] == "69/50");
  auto z = call(svc, "POST", "/v1/procedures/optimal", {{"priors", {0.01, 0.17, 0.51}}, {"via", "zones"}});
  CHECK(z.body["procedure"] == r.body["procedure"]);
  auto g = call(svc, "POST", "/v1/procedures/greedy", {{"priors", {0.01, 0.17, 0.51}}});
  CHECK(std::abs(g.body["expected_length"].get<double>() - 1.96) < 0.005);
}

TEST_CASE("error statuses") {
  TempDir dir("errors");
  Service svc(config_for(dir));
  CHECK(call(svc, "POST", "/v1/procedures/optimal", {{"priors", {0.1, 1.2}}}).status == 400);
  CHECK(call(svc, "POST", "/v1/procedures/optimal", json::object()).status == 400);
  ServiceRequest bad{"POST", "/v1/procedures/optimal", {}, "{not json"};
  CHECK(svc.handle(bad).status == 400);
  const auto big = call(svc, "POST", "/v1/procedures/optimal", {{"priors", std::vector<double>(9, 0.1)}});
  CHECK(big.status == 422);
  CHECK(big.body["error"]["bound"] == kOptimizerLimit);
  CHECK(call(svc, "GET", "/v1/sessions/nope").status == 404);
  CHECK(call(svc, "GET", "/v1/unknown").status == 404);
  CHECK(call(svc, "GET", "/v1/zones/5").status == 422);
  CHECK(call(svc, "GET", "/v1/meta/counts", nullptr, {{"n", "7"}}).status == 422);
  CHECK(call(svc, "POST", "/v1/sessions", {{"priors", {0.1}}, {"strategy", "bogus"}}).status == 400);
}

TEST_CASE("session flow") {
  TempDir dir("flow");
  Service svc(config_for(dir));
  auto c = call(svc, "POST", "/v1/sessions", {{"priors", {0.01, 0.17, 0.51}}, {"strategy", "optimal"}});
  REQUIRE(c.status == 201);
  const auto id = c.body["id"].get<std::string>();
  CHECK(c.body["next_pool"] == json({1, 2, 3}));
  CHECK(std::abs(c.body["expected_remaining"].get<double>() - 1.889) < 0.001);
  auto r = call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "negative"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["status"] == "complete");
  CHECK(r.body["outcome"] == "000");
  CHECK(r.body["tests"] == 1);
  CHECK(call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "negative"}}).status == 409);
  CHECK(call(svc, "GET", "/v1/sessions/" + id).body == r.body);
  CHECK(call(svc, "DELETE", "/v1/sessions/" + id).status == 200);
  CHECK(call(svc, "GET", "/v1/sessions/" + id).status == 404);
  CHECK_FALSE(std::filesystem::exists(dir.path / "sessions" / (id + ".json")));
}

TEST_CASE("stale pool is a conflict") {
  TempDir dir("stale");
  Service svc(config_for(dir));
  auto c = call(svc, "POST", "/v1/sessions", {{"priors", {0.5, 0.5}}, {"strategy", "naive"}});
  const auto id = c.body["id"].get<std::string>();
  CHECK(call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "+"}, {"pool", {2}}}).status == 409);
  CHECK(call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "+"}, {"pool", {1}}}).status == 200);
  CHECK(call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "+"}, {"tests", 0}}).status == 409);
}

TEST_CASE("sessions survive a restart") {
  TempDir dir("restart");
  std::string id;
  json before;
  {
    Service svc(config_for(dir));
    auto c = call(svc, "POST", "/v1/sessions", {{"priors", {0.2, 0.3, 0.1, 0.4}}, {"strategy", "pairing(2,5)"}});
    id = c.body["id"].get<std::string>();
    before = call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "positive"}}).body;
  }
  Service again(config_for(dir));
  CHECK(again.session_count() == 1);
  CHECK(call(again, "GET", "/v1/sessions/" + id).body == before);
  CHECK(call(again, "POST", "/v1/sessions/" + id + "/result", {{"result", "negative"}}).status == 200);
}

TEST_CASE("concurrent results on one session") {
  TempDir dir("race");
  Service svc(config_for(dir));
  for (int round = 0; round < 20; ++round) {
    // One test left: exactly one poster can complete it.
    auto c = call(svc, "POST", "/v1/sessions", {{"priors", {0.3}}, {"strategy", "naive"}});
    const auto id = c.body["id"].get<std::string>();
    std::atomic<int> ok{0};
    std::atomic<int> conflict{0};
    {
      std::vector<std::jthread> posters;
      for (int t = 0; t < 8; ++t) {
        posters.emplace_back([&, t] {
          const auto r = call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", t % 2 ? "positive" : "negative"}});
          (r.status == 200 ? ok : conflict).fetch_add(1);
        });
      }
    }
    CHECK(ok == 1);
    CHECK(conflict == 7);
  }
  // Many steps left: posts naming the same pool never interleave.
  auto c = call(svc, "POST", "/v1/sessions", {{"priors", std::vector<double>(6, 0.6)}, {"strategy", "naive"}});
  const auto id = c.body["id"].get<std::string>();
  std::atomic<int> ok{0};
  std::atomic<int> conflict{0};
  {
    std::vector<std::jthread> posters;
    for (int t = 0; t < 8; ++t) {
      posters.emplace_back([&] {
        const auto r = call(svc, "POST", "/v1/sessions/" + id + "/result", {{"result", "positive"}, {"pool", {1}}});
        (r.status == 200 ? ok : conflict).fetch_add(1);
      });
    }
  }
  CHECK(ok == 1);
  CHECK(conflict == 7);
  CHECK(call(svc, "GET", "/v1/sessions/" + id).body["tests"] == 1);
}

TEST_CASE("counts endpoint") {
  TempDir dir("counts");
  Service svc(config_for(dir));
  auto r = call(svc, "GET", "/v1/meta/counts", nullptr, {{"n", "3"}});
  REQUIRE(r.status == 200);
  CHECK(r.body["procedures"] == 312);
  CHECK(r.body["zones"] == 52);
  CHECK(r.body["constant_length"] == 12);
  CHECK(call(svc, "GET", "/v1/meta/counts", nullptr, {{"n", "4"}}).body["procedures"] == 36585024);
  CHECK(call(svc, "GET", "/v1/meta/counts", nullptr, {{"n", "5"}}).body["procedures"] == "892637893175745991680");
}

TEST_CASE("zone maps are computed as background jobs") {
  TempDir dir("zones");
  Service svc(config_for(dir));
  auto first = call(svc, "GET", "/v1/zones/3");
  CHECK((first.status == 202 || first.status == 200));
  if (first.status == 202) {
    CHECK(first.body["status"] == "pending");
    CHECK(first.body.contains("progress"));
  }
  svc.wait_for_zone_jobs();
  auto ready = call(svc, "GET", "/v1/zones/3");
  REQUIRE(ready.status == 200);
  CHECK(ready.body["zones"] == 52);
  CHECK(ready.body["orbits"].size() == 10);
  CHECK(std::filesystem::exists(dir.path / "zones" / zone_file_name(3, default_zone_resolution(3), EvalMode::kFloat)));

  auto s = call(svc, "GET", "/v1/zones/3/slice", nullptr, {{"plane", "z"}, {"value", "0.17"}, {"res", "40"}});
  REQUIRE(s.status == 200);
  CHECK(s.body["ids"].size() == 40);
  CHECK(s.body["ids"][0].size() == 40);
  std::set<int> legend;
  for (const auto& l : s.body["legend"]) legend.insert(l["id"].get<int>());
  for (const auto& row : s.body["ids"]) {
    for (const auto& id : row) CHECK(legend.count(id.get<int>()) == 1);
  }
  CHECK(legend.size() > 3);
  CHECK(legend.size() <= 52);

  // A fresh service reads the stored file and answers byte-identically.
  Service again(config_for(dir));
  auto reread = call(again, "GET", "/v1/zones/3");
  REQUIRE(reread.status == 200);
  CHECK(reread.body.dump() == ready.body.dump());
}

TEST_CASE("simulation endpoint") {
  TempDir dir("sim");
  Service svc(config_for(dir));
  auto r = call(svc, "POST", "/v1/simulations",
                {{"priors", {0.3, 0.6, 0.1}}, {"strategy", "naive"}, {"trials", 500}, {"seed", 3}});
  REQUIRE(r.status == 200);
  CHECK(r.body["mean_tests"] == 3.0);
  CHECK(r.body["histogram"]["3"] == 500);
  auto u = call(svc, "POST", "/v1/simulations",
                {{"prior_distribution", "uniform"}, {"n", 3}, {"strategy", "greedy"}, {"trials", 300}, {"seed", 3}});
  REQUIRE(u.status == 200);
  CHECK(u.body == call(svc, "POST", "/v1/simulations",
                       {{"prior_distribution", "uniform"}, {"n", 3}, {"strategy", "greedy"}, {"trials", 300}, {"seed", 3}})
                      .body);
  CHECK(call(svc, "POST", "/v1/simulations", {{"strategy", "naive"}}).status == 400);
}

TEST_CASE("http transport") {
  TempDir dir("http");
  Service svc(config_for(dir));
  const int port = svc.bind_any_port();
  REQUIRE(port > 0);
  std::jthread server([&] { svc.listen_after_bind(); });
  svc.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/v1/sessions", R"({"priors":[0.01,0.17,0.51]})", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto id = json::parse(res->body)["id"].get<std::string>();
  auto done = client.Post("/v1/sessions/" + id + "/result", R"({"result":"negative"})", "application/json");
  REQUIRE(done);
  CHECK(json::parse(done->body)["outcome"] == "000");
  auto counts = client.Get("/v1/meta/counts?n=2");
  REQUIRE(counts);
  CHECK(json::parse(counts->body)["procedures"] == 4);
  auto missing = client.Get("/v1/sessions/" + id + "x");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  svc.stop();
}
