#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args, const std::string& input = "") {
  std::string cmd = "'" POOLTEST_CLI "' " + args + " 2>/dev/null";
  if (!input.empty()) cmd = "printf '%b' '" + input + "' | " + cmd;
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares stdout with tests/golden/<name>.json; POOLTEST_UPDATE_GOLDEN=1 rewrites the file.
void golden(const std::string& name, const std::string& args, const std::string& input = "") {
  const auto r = run(args, input);
  REQUIRE(r.status == 0);
  const std::filesystem::path path = std::filesystem::path(POOLTEST_GOLDEN_DIR) / (name + ".json");
  if (std::getenv("POOLTEST_UPDATE_GOLDEN")) {
    std::ofstream(path, std::ios::binary) << r.out;
  }
  INFO(name);
  CHECK(r.out == read_file(path));
  // Interactive sessions print one JSON document per line.
  if (name.starts_with("session")) {
    std::istringstream docs(r.out);
    for (std::string line; std::getline(docs, line);) CHECK(nlohmann::json::accept(line));
  } else {
    CHECK(nlohmann::json::accept(r.out));
  }
}

}  // namespace

TEST_CASE("golden json outputs") {
  golden("count-n4", "count --n 4 --json");
  golden("count-n3-naive", "count --n 3 --naive --json");
  golden("count-n6", "count --n 6 --json");
  golden("optimal-fig9", "optimal --priors 0.01,0.17,0.51 --json");
  golden("optimal-exact", "optimal --priors 1/10,1/5 --json");
  golden("greedy-fig9", "greedy --priors 0.01,0.17,0.51 --json");
  golden("enumerate-n2", "enumerate --n 2 --json");
  golden("simulate-fixed", "simulate --priors 0.3,0.6,0.1 --strategy optimal --trials 2000 --seed 7 --json");
  golden("simulate-pairing", "simulate --priors 0.3,0.6,0.1,0.05,0.2 --strategy 'pairing(2,3)' --trials 500 --seed 1 --json");
  golden("zones-n2", "zones --n 2 --res 64 --json");
  golden("session-fig9", "session --priors 0.01,0.17,0.51 --json", "-\\n");
}

TEST_CASE("plain text outputs") {
  CHECK(run("count --n 4").out == "36585024\n");
  CHECK(run("count --n 3 --naive").out == "12\n");
  CHECK(run("enumerate --n 3 --count-only").out == "312\n");
  const auto opt = run("optimal --priors 0.01,0.17,0.51").out;
  CHECK(opt.find("expected length: 1.889") != std::string::npos);
  CHECK(opt.find("P{1,2,3}[L(000),P{1,2}[L(001),P{1,3}[L(010)") != std::string::npos);
  CHECK(run("optimal --exact --priors 0.1,0.2").out.find("69/50") != std::string::npos);
}

TEST_CASE("interactive session") {
  const auto r = run("session --priors 0.01,0.17,0.51", "-\\n");
  CHECK(r.status == 0);
  CHECK(r.out.find("test pool {1,2,3}") != std::string::npos);
  CHECK(r.out.find("complete after 1 test ") != std::string::npos);
  CHECK(r.out.find("sample 3: clean") != std::string::npos);
  const auto naive = run("session --priors 0.9,0.9 --strategy naive", "+\\n-\\n");
  CHECK(naive.out.find("sample 1: infected") != std::string::npos);
  CHECK(naive.out.find("sample 2: clean") != std::string::npos);
  CHECK(run("session --priors 0.9,0.9", "+\\n").status == 6);
}

TEST_CASE("files and exit codes") {
  const auto dir = std::filesystem::temp_directory_path() / ("pooltest-cli-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto zm = (dir / "z3.json").string();
  const auto csv = (dir / "slice.csv").string();
  const auto tree = (dir / "tree.txt").string();
  CHECK(run("zones --n 3 --out " + zm).status == 0);
  const auto s = run("slice --zonemap " + zm + " --plane z=0.17 --res 20 --out " + csv);
  CHECK(s.status == 0);
  CHECK(s.out.find("zone ") != std::string::npos);
  std::ifstream in(csv);
  int rows = 0;
  for (std::string line; std::getline(in, line);) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 19);
  }
  CHECK(rows == 20);
  CHECK(run("optimal --priors 0.1,0.2 --tree-out " + tree).status == 0);
  CHECK(read_file(tree) == "P{1,2}[L(00),P{1}[L(01),P{2}[L(10),L(11)]]]\n");

  CHECK(run("count --n 9").status == 4);
  CHECK(run("optimal --priors 0.1,1.5").status == 2);
  CHECK(run("optimal --priors 0.1,abc").status == 2);
  CHECK(run("slice --zonemap " + (dir / "missing.json").string()).status == 3);
  CHECK(run("zones --n 5").status == 4);
  CHECK(run("simulate --strategy optimal").status == 2);
  CHECK(run("frobnicate").status == 2);
  std::filesystem::remove_all(dir);
}
