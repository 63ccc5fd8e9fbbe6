#include <doctest.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "rsvol/cli.hpp"
#include "rsvol/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = rsvol::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rsvol_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& body = "") const {
    const auto p = (path / name).string();
    if (!body.empty()) std::ofstream(p) << body;
    return p;
  }
};

const char* kModel = R"({
  "regimes": 2,
  "generator": [[-1, 2], [1, -2]],
  "rates": [0.03, 0.05],
  "dividends": [0.0, 0.01],
  "vol_curves": [[[-1, 0.25], [1, 0.15]], [[0, 0.35]]]
})";

std::string slurp(const std::string& p) { return rsvol::read_file(p); }

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("unknown subcommand is a usage error") {
  const Result r = run({"frobnicate"});
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("price writes n*n rows per strike") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  const auto out = t.file("p.csv");
  const Result r = run({"price", "--model", model, "--strikes", "0.8,1.0,1.2", "--maturity", "1",
                        "--state", "1", "--out", out, "--nodes", "201", "--steps", "100"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const std::string csv = slurp(out);
  CHECK(csv.rfind("K,i,j,price\n", 0) == 0);
  CHECK(count_lines(csv) == 1 + 3 * 4);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(t.path)) files.push_back(e.path().filename().string());
  CHECK(files.size() == 2);
}

TEST_CASE("validation errors exit 2") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  const auto bad = t.file("bad.json", R"({"regimes": 2, "generator": [[1, -1], [1, -1]],
      "rates": [0, 0], "dividends": [0, 0], "vol_curves": [[[0, 0.2]], [[0, 0.2]]]})");
  CHECK(run({"mc", "--model", model, "--paths", "10"}).code == 2);
  CHECK(run({"price", "--model", bad, "--strikes", "1"}).code == 2);
  CHECK(run({"price", "--model", t.file("missing.json"), "--strikes", "1"}).code == 2);
  CHECK(run({"price", "--model", model, "--strikes", "1,abc"}).code == 2);
  CHECK(run({"price", "--model", model, "--strikes", "1", "--state", "3"}).code == 2);
  CHECK(run({"stability-scan", "--model", model, "--bumps", "1:0.2"}).code == 2);
}

TEST_CASE("singular normal matrix exits 3") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  const auto data = t.file("d.csv", "y,component_1,component_2\n0,0,0\n");
  const Result r = run({"calibrate", "--model-base", model, "--data", data, "--weights", "0,0,0",
                        "--alpha", "0", "--outer", "0", "--nodes", "201", "--steps", "50"});
  CHECK(r.code == 3);
}

TEST_CASE("mc output is reproducible and thread independent") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  std::vector<std::string> base{"mc", "--model", model, "--paths", "2000", "--seed", "7",
                                "--steps", "50", "--antithetic"};
  auto with = [&](const char* threads) {
    auto a = base;
    a.insert(a.end(), {"--threads", threads});
    return run(a);
  };
  const Result a = with("1"), b = with("1"), c = with("4");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  for (const char* key : {"\"strike\"", "\"maturity\"", "\"paths\"", "\"rows\"", "\"std_error\"", "\"all\""}) {
    CHECK(a.out.find(key) != std::string::npos);
  }
}

TEST_CASE("stability-scan CSV is byte-identical across runs") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  auto scan = [&](const std::string& out, const char* threads) {
    return run({"stability-scan", "--model", model, "--bumps", "1:0.2:0.2;2:0.25:0.15",
                "--amplitudes", "0.02,0.04", "--omega1", "-0.2,0.6", "--omega", "-0.5,0.9",
                "--omega-small", "-0.45,-0.4;0.7,0.75", "--nodes", "201", "--steps", "60", "--out", out,
                "--threads", threads});
  };
  const auto p1 = t.file("s1.csv"), p2 = t.file("s2.csv"), p3 = t.file("s3.csv");
  REQUIRE(scan(p1, "1").code == 0);
  REQUIRE(scan(p2, "1").code == 0);
  REQUIRE(scan(p3, "3").code == 0);
  const std::string s1 = slurp(p1);
  CHECK(s1.rfind("amplitude,lhs,rhs,ratio,extra,unstable\n", 0) == 0);
  CHECK(count_lines(s1) == 5);
  CHECK(s1 == slurp(p2));
  CHECK(s1 == slurp(p3));
}

TEST_CASE("funsol-check JSON keys") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  const Result r = run({"funsol-check", "--model", model, "--nodes", "201", "--steps", "100",
                        "--window", "-1,1"});
  REQUIRE(r.code == 0);
  for (const char* key : {"\"min_gap\"", "\"delta0_star\"", "\"eps0_star\"", "\"violated\""}) {
    CHECK(r.out.find(key) != std::string::npos);
  }
}

TEST_CASE("field and density outputs") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  const Result d = run({"dupire", "--model", model, "--nodes", "101", "--steps", "20",
                        "--level-stride", "10"});
  REQUIRE(d.code == 0);
  CHECK(d.out.rfind("y,tau,component_1,component_2\n", 0) == 0);
  CHECK(count_lines(d.out) == 1 + 3 * 101);
  const Result k = run({"density", "--model", model, "--nodes", "201", "--steps", "50"});
  REQUIRE(k.code == 0);
  CHECK(k.out.rfind("K,i,j,density\n", 0) == 0);
  const Result n = run({"norm-check", "--model", model, "--bump", "1:0.2:0.2", "--nodes", "201",
                        "--steps", "50", "--taus", "0.25,0.5"});
  REQUIRE(n.code == 0);
  CHECK(n.out.find("\"wy_spread\"") != std::string::npos);
}

TEST_CASE("binary exit codes") {
  const char* exe = std::getenv("RSVOL_CLI");
  if (!exe) return;
  const std::string cmd = std::string(exe) + " frobnicate >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 2);
}

TEST_CASE("window options are validated") {
  TempDir t;
  const auto model = t.file("m.json", kModel);
  CHECK(run({"stability-scan", "--model", model, "--bumps", "1:0:0.1", "--omega1", "0.5,0.1"}).code == 2);
  CHECK(run({"stability-scan", "--model", model, "--bumps", "1:0:0.1", "--omega1", "-1,1",
             "--omega", "-0.5,0.5"})
            .code == 2);
}
