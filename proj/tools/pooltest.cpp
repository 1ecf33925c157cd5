// Command-line driver: enumeration, counting, optimization, zone maps,
// slices, heuristics, simulation, interactive sessions and the HTTP service.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pooltest/pooltest.hpp"
#include "pooltest/service.hpp"

using namespace pooltest;
using nlohmann::json;

namespace {

enum ExitCode {
  kOk = 0,
  kInternal = 1,
  kBadArgument = 2,
  kNotFound = 3,
  kUnsupportedSize = 4,
  kResource = 5,
  kState = 6,
};

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ArgumentError*>(&e)) return kBadArgument;
  if (dynamic_cast<const NotFound*>(&e)) return kNotFound;
  if (dynamic_cast<const UnsupportedSize*>(&e)) return kUnsupportedSize;
  if (dynamic_cast<const ResourceError*>(&e)) return kResource;
  if (dynamic_cast<const StateError*>(&e)) return kState;
  return kInternal;
}

struct Globals {
  bool json = false;
  unsigned threads = 0;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (out.empty()) throw ArgumentError("empty prior list");
  return out;
}

PriorVector read_priors(const std::string& text, bool exact) {
  auto p = PriorVector::parse(split_list(text), exact);
  p.check();
  return p;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ResourceError("cannot write " + path);
  return out;
}

unsigned thread_count(const Globals& g) { return g.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : g.threads; }

std::string big_text(const BigInt& v) { return v.str(); }

json big_json(const BigInt& v) {
  if (v <= BigInt(std::numeric_limits<std::uint64_t>::max())) return v.convert_to<std::uint64_t>();
  return v.str();
}

void print_procedure(const json& report, const Globals& g) {
  if (g.json) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  if (report.contains("expected_length_exact")) {
    std::cout << "expected length: " << report["expected_length_exact"].get<std::string>() << " ("
              << format_double(report["expected_length"].get<double>()) << ")\n";
  } else {
    std::cout << "expected length: " << format_double(report["expected_length"].get<double>()) << '\n';
  }
  std::cout << "procedure: " << report["procedure"].get<std::string>() << '\n';
}

// --- subcommand bodies ------------------------------------------------------

struct EnumerateArgs {
  int n = 0;
  bool count_only = false;
  bool prune = false;
  std::string out;
};

void run_enumerate(const EnumerateArgs& a, const Globals& g) {
  PruningFlags flags;
  flags.interchange = a.prune;
  flags.maximal_pools = a.prune;
  std::ofstream file;
  if (!a.out.empty()) file = open_out(a.out);
  std::ostream& list = a.out.empty() ? std::cout : file;
  std::uint64_t count = 0;
  json procs = json::array();
  for (const auto& p : enumerate_procedures(a.n, flags)) {
    ++count;
    if (a.count_only) continue;
    if (g.json && a.out.empty()) {
      procs.push_back(encode(p));
    } else {
      list << encode(p) << '\n';
    }
  }
  if (g.json) {
    json j{{"n", a.n}, {"count", count}, {"pruned", a.prune}};
    if (!a.count_only && a.out.empty()) j["procedures"] = procs;
    std::cout << j.dump(2) << '\n';
  } else if (a.count_only || !a.out.empty()) {
    std::cout << count << '\n';
  }
}

struct CountArgs {
  int n = 0;
  bool naive = false;
  bool catalan = false;
};

void run_count(const CountArgs& a, const Globals& g) {
  CountResult r = a.naive ? count_naive(a.n) : (a.catalan ? catalan_upper_bound(a.n) : count_procedures(a.n));
  const std::string what = a.naive ? "constant_length" : (a.catalan ? "catalan_bound" : "procedures");
  if (g.json) {
    std::cout << json{{"n", a.n}, {"quantity", what}, {"value", big_json(r.value)}, {"method", to_string(r.method)}}.dump(2)
              << '\n';
  } else {
    std::cout << big_text(r.value) << '\n';
  }
}

struct PriorArgs {
  std::string priors;
  bool exact = false;
  std::string tree_out;
};

void write_tree(const std::string& path, const json& report) {
  if (path.empty()) return;
  auto out = open_out(path);
  out << report["procedure"].get<std::string>() << '\n';
}

void run_optimal(const PriorArgs& a, const Globals& g) {
  const auto priors = read_priors(a.priors, a.exact);
  const auto proc = priors.exact ? find_optimal(*priors.exact).procedure : find_optimal(priors.values).procedure;
  const auto report = procedure_report(proc, priors);
  write_tree(a.tree_out, report);
  print_procedure(report, g);
}

void run_greedy(const PriorArgs& a, const Globals& g) {
  const auto priors = read_priors(a.priors, a.exact);
  const auto proc = priors.exact ? greedy_procedure(*priors.exact) : greedy_procedure(priors.values);
  const auto report = procedure_report(proc, priors);
  write_tree(a.tree_out, report);
  print_procedure(report, g);
}

struct ZonesArgs {
  int n = 0;
  int res = 0;
  bool exact = false;
  std::string out;
};

void run_zones(const ZonesArgs& a, const Globals& g) {
  ZoneOptions opt;
  opt.resolution = a.res;
  opt.mode = a.exact ? EvalMode::kExact : EvalMode::kFloat;
  opt.threads = thread_count(g);
  opt.progress = [last = -1](double f) mutable {
    const int pct = static_cast<int>(f * 100);
    if (pct / 10 != last / 10) {
      std::cerr << "zones: " << pct << "%\n";
      last = pct;
    }
  };
  const auto zm = compute_metaprocedure(a.n, opt);
  if (!a.out.empty()) save_zone_map(zm, a.out);
  const auto orbits = orbit_census(zm);
  if (g.json) {
    auto j = zone_header(zm);
    j["tie_extras"] = zm.tie_extras;
    auto oj = json::array();
    for (const auto& o : orbits) oj.push_back({{"representative", o.representative}, {"size", o.size()}});
    j["orbits"] = oj;
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << "n: " << zm.n << "\nresolution: " << zm.resolution << "\nmode: " << to_string(zm.mode)
            << "\nzones: " << zm.zone_count() << "\norbits: " << orbits.size() << '\n';
  std::map<std::size_t, int> sizes;
  for (const auto& o : orbits) ++sizes[o.size()];
  std::cout << "orbit sizes:";
  for (auto it = sizes.rbegin(); it != sizes.rend(); ++it) std::cout << ' ' << it->second << 'x' << it->first;
  std::cout << '\n';
}

struct SliceArgs {
  std::string zonemap;
  std::string plane = "z=0.17";
  int res = 100;
  std::string out;
};

void run_slice(const SliceArgs& a, const Globals& g) {
  const auto zm = load_zone_map(a.zonemap);
  const auto s = slice(zm, SlicePlane::parse(a.plane), a.res);
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << s.csv();
  }
  if (g.json) {
    auto legend = json::array();
    for (auto id : s.legend) legend.push_back({{"id", id}, {"procedure", encode(zm.procedures[id])}});
    json j{{"plane", s.plane.str()}, {"resolution", s.resolution}, {"legend", legend}};
    if (a.out.empty()) {
      auto rows = json::array();
      for (int r = 0; r < s.resolution; ++r) {
        auto row = json::array();
        for (int c = 0; c < s.resolution; ++c) row.push_back(s.at(r, c));
        rows.push_back(std::move(row));
      }
      j["ids"] = rows;
    }
    std::cout << j.dump(2) << '\n';
    return;
  }
  if (a.out.empty()) std::cout << s.csv();
  for (auto id : s.legend) std::cout << "zone " << id << ": " << encode(zm.procedures[id]) << '\n';
}

struct SimulateArgs {
  std::string priors;
  bool exact = false;
  bool uniform = false;
  int n = 0;
  std::string strategy = "optimal";
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a, const Globals& g) {
  SimulationOptions opt;
  opt.threads = static_cast<int>(thread_count(g));
  const auto strategy = Strategy::parse(a.strategy);
  SimulationReport r;
  if (a.uniform) {
    if (!a.priors.empty()) throw ArgumentError("give either --priors or --uniform-priors");
    if (a.n < 1) throw ArgumentError("--uniform-priors needs --n");
    r = simulate_uniform(a.n, strategy, a.trials, a.seed, opt);
  } else {
    if (a.priors.empty()) throw ArgumentError("give --priors or --uniform-priors --n N");
    r = simulate(read_priors(a.priors, a.exact), strategy, a.trials, a.seed, opt);
  }
  if (g.json) {
    std::cout << to_json(r).dump(2) << '\n';
    return;
  }
  std::cout << "strategy: " << r.strategy << "\ntrials: " << r.trials << "\nseed: " << r.seed
            << "\nmean tests: " << format_double(r.mean_tests) << "\nstd error: " << format_double(r.std_error)
            << "\nhistogram:";
  for (const auto& [k, v] : r.histogram) std::cout << ' ' << k << ':' << v;
  std::cout << '\n';
}

struct SessionArgs {
  std::string priors;
  bool exact = false;
  std::string strategy = "optimal";
};

void run_session(const SessionArgs& a, const Globals& g) {
  Session s("cli", read_priors(a.priors, a.exact), Strategy::parse(a.strategy));
  auto show = [&] {
    if (g.json) {
      std::cout << to_json(s).dump() << std::endl;
      return;
    }
    if (auto pool = s.next_pool()) {
      std::cout << "test pool {" << pool_text(pool->mask()) << "}  (expected remaining "
                << format_double(s.expected_remaining()) << ")\nresult [+/-]: " << std::flush;
    }
  };
  show();
  std::string line;
  while (!s.complete() && std::getline(std::cin, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
      show();
      continue;
    }
    const auto last = line.find_last_not_of(" \t\r");
    const auto word = line.substr(first, last - first + 1);
    if (word == "q" || word == "quit") break;
    try {
      s.record(parse_result(word));
    } catch (const ParseError& e) {
      std::cerr << e.what() << '\n';
    }
    show();
  }
  if (!s.complete()) throw StateError("input ended before the session completed");
  if (!g.json) {
    const auto outcome = s.outcome();
    std::cout << "\ncomplete after " << s.tests() << " test" << (s.tests() == 1 ? "" : "s") << " (individual testing: "
              << s.n() << ")\n";
    for (int i = 1; i <= s.n(); ++i) {
      std::cout << "sample " << i << ": " << (((outcome.bits() >> (i - 1)) & 1) ? "infected" : "clean") << '\n';
    }
  }
}

struct ServeArgs {
  std::string addr;
  std::string data;
  std::string ui;
};

Service* g_service = nullptr;

void run_serve(const ServeArgs& a, const Globals& g) {
  auto config = ServiceConfig::from_env();
  if (!a.addr.empty()) config.set_address(a.addr);
  if (!a.data.empty()) config.data_dir = a.data;
  if (!a.ui.empty()) config.ui_dir = a.ui;
  config.zone_threads = thread_count(g);
  Service svc(config);
  g_service = &svc;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  std::cerr << "serving on " << config.host << ':' << config.port << " with data in " << config.data_dir.string() << '\n';
  const bool ok = svc.listen();
  g_service = nullptr;
  if (!ok) throw ResourceError("could not listen on " + config.host + ":" + std::to_string(config.port));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal pool testing with prior infection probabilities"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on stdout");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");

  EnumerateArgs ea;
  auto* enumerate = app.add_subcommand("enumerate", "List every testing procedure for n samples");
  enumerate->add_option("--n", ea.n, "Number of samples")->required();
  enumerate->add_flag("--count-only", ea.count_only, "Print only the number of procedures");
  enumerate->add_flag("--prune", ea.prune, "Skip trees that cannot be optimal anywhere");
  enumerate->add_option("--out", ea.out, "Write encodings to a file");

  CountArgs ca;
  auto* count = app.add_subcommand("count", "Count testing procedures");
  count->add_option("--n", ca.n, "Number of samples")->required();
  auto* naive_flag = count->add_flag("--naive", ca.naive, "Count constant-length procedures");
  count->add_flag("--catalan", ca.catalan, "Catalan-number upper bound")->excludes(naive_flag);

  PriorArgs oa;
  auto* optimal = app.add_subcommand("optimal", "Optimal procedure for given priors");
  optimal->add_option("--priors", oa.priors, "Comma-separated priors, decimals or fractions")->required();
  optimal->add_flag("--exact", oa.exact, "Exact rational arithmetic");
  optimal->add_option("--tree-out", oa.tree_out, "Write the procedure encoding to a file");

  PriorArgs ga;
  auto* greedy = app.add_subcommand("greedy", "Greedy information-gain procedure");
  greedy->add_option("--priors", ga.priors, "Comma-separated priors")->required();
  greedy->add_flag("--exact", ga.exact, "Exact rational arithmetic");
  greedy->add_option("--tree-out", ga.tree_out, "Write the procedure encoding to a file");

  ZonesArgs za;
  auto* zones = app.add_subcommand("zones", "Compute the optimality zone map");
  zones->add_option("--n", za.n, "Number of samples")->required();
  zones->add_option("--res", za.res, "Grid resolution per axis (0 = default)");
  zones->add_flag("--exact", za.exact, "Exact rational arithmetic");
  zones->add_option("--out", za.out, "Write the zone map file");

  SliceArgs sa;
  auto* slice_cmd = app.add_subcommand("slice", "Zone ids on a plane through an n=3 zone map");
  slice_cmd->add_option("--zonemap", sa.zonemap, "Zone map file")->required();
  slice_cmd->add_option("--plane", sa.plane, "Plane such as z=0.17 or sum=1.5");
  slice_cmd->add_option("--res", sa.res, "Cells per side");
  slice_cmd->add_option("--out", sa.out, "Write the id grid as CSV");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo simulation of a strategy");
  sim->add_option("--priors", ma.priors, "Comma-separated priors");
  sim->add_flag("--exact", ma.exact, "Exact priors for the optimal strategy");
  sim->add_flag("--uniform-priors", ma.uniform, "Draw priors uniformly in every trial");
  sim->add_option("--n", ma.n, "Number of samples with --uniform-priors");
  sim->add_option("--strategy", ma.strategy, "naive, optimal, greedy, metaprocedure or pairing(k,seed)");
  sim->add_option("--trials", ma.trials, "Number of trials");
  sim->add_option("--seed", ma.seed, "Random seed");

  SessionArgs xa;
  auto* session = app.add_subcommand("session", "Interactive testing session");
  session->add_option("--priors", xa.priors, "Comma-separated priors")->required();
  session->add_flag("--exact", xa.exact, "Exact rational arithmetic");
  session->add_option("--strategy", xa.strategy, "naive, optimal, greedy, metaprocedure or pairing(k,seed)");

  ServeArgs va;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--addr", va.addr, "host:port (default POOLTEST_ADDR or 127.0.0.1:8080)");
  serve->add_option("--data", va.data, "Data directory (default POOLTEST_DATA_DIR or ./pooltest-data)");
  serve->add_option("--ui", va.ui, "Directory of static files served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadArgument;
  }

  try {
    if (*enumerate) run_enumerate(ea, g);
    if (*count) run_count(ca, g);
    if (*optimal) run_optimal(oa, g);
    if (*greedy) run_greedy(ga, g);
    if (*zones) run_zones(za, g);
    if (*slice_cmd) run_slice(sa, g);
    if (*sim) run_simulate(ma, g);
    if (*session) run_session(xa, g);
    if (*serve) run_serve(va, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
  return kOk;
}
