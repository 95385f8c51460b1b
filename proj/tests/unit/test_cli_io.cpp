// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "evomax/cli.hpp"
#include "evomax/config.hpp"
#include "evomax/csv.hpp"
#include "evomax/error.hpp"

using namespace evomax;
namespace fs = std::filesystem;

namespace {

const std::string kData = EVOMAX_TEST_DATA;

const char* kMinimal = R"json({
  "states": ["up", "down"],
  "Q": [[-1, 1], [1, -1]],
  "velocity": ["1", "-1"],
  "phi": "sin(u)"
})json";

ErrorCode code_of(const std::string& text, std::string* message = nullptr) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  FAIL("config was accepted");
  return ErrorCode::InvalidArgument;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("evomax_cli_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string only_csv(const fs::path& dir) {
  std::string found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    CHECK(found.empty());
    found = entry.path().string();
  }
  REQUIRE_FALSE(found.empty());
  return found;
}

void check_numeric(const ParsedCsv& csv, const std::vector<std::string>& numeric) {
  for (const auto& row : csv.rows) {
    for (std::size_t i = 0; i < csv.columns.size(); ++i) {
      if (std::find(numeric.begin(), numeric.end(), csv.columns[i]) == numeric.end()) continue;
      double v = 0.0;
      const auto& s = row[i];
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      CHECK(r.ec == std::errc());
      CHECK(r.ptr == s.data() + s.size());
    }
  }
}

}  // namespace

TEST_CASE("minimal config loads with defaults") {
  const auto c = parse_config(kMinimal);
  CHECK(c.states.size() == 2);
  CHECK(c.grid.n_points == 401);
  CHECK(c.grid.mode == BoundaryMode::periodic);
  CHECK(c.n_tau == 600);
  CHECK(c.tau_max_factor == 30.0);
  CHECK(c.order == 3);
  CHECK(c.n_steps == 200);
  CHECK(c.t_end == 1.0);
  CHECK(c.mc_paths == 100000);
  CHECK(c.mc_seed == 42);
  CHECK(c.hash.size() == 16);
  const auto m = build_model(c);
  CHECK(m.grid.size() == 401);
  CHECK(m.velocity(1, 0.3) == -1.0);
}

TEST_CASE("config errors are classified") {
  std::string msg;
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 2], [1, -1]], "velocity": ["1", "-1"],
                    "phi": "sin(u)"})json",
                &msg) == ErrorCode::ValidationError);
  CHECK(msg.find("Q[0]") != std::string::npos);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1"],
                    "phi": "sin(u)"})json") == ErrorCode::SchemaError);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "-1"]})json",
                &msg) == ErrorCode::SchemaError);
  CHECK(msg.find("phi") != std::string::npos);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "-1"],
                    "phi": "sin(u)", "colour": 3})json",
                &msg) == ErrorCode::SchemaError);
  CHECK(msg.find("colour") != std::string::npos);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "-1"],
                    "phi": "sin(u)", "grid": {"n_points": "many"}})json") == ErrorCode::SchemaError);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "-1"],
                    "phi": "sin(u)", "grid": {"n_points": 4}})json") == ErrorCode::ValidationError);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1]], "velocity": ["1", "-1"],
                    "phi": "sin(u)"})json") == ErrorCode::SchemaError);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "+1"],
                    "phi": "sin(u)"})json",
                &msg) == ErrorCode::SyntaxError);
  CHECK(msg.find("velocity[1]") != std::string::npos);
  CHECK(code_of(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]], "velocity": ["1", "-1"],
                    "phi": "sin(x)"})json") == ErrorCode::UnknownVariable);
  CHECK(code_of("{\"states\": [") == ErrorCode::ParseError);
  CHECK_THROWS_AS(load_config(kData + "/does_not_exist.json"), Error);
}

TEST_CASE("config hash ignores formatting only") {
  const auto a = parse_config(kMinimal).hash;
  const auto b = parse_config(R"json({"phi":"sin(u)","velocity":["1","-1"],"Q":[[-1,1],[1,-1]],
                                  "states":["up","down"]})json")
                     .hash;
  const auto c = parse_config(R"json({"states": ["up", "down"], "Q": [[-1, 1], [1, -1]],
                                  "velocity": ["1", "-1"], "phi": "cos(u)"})json")
                     .hash;
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("FNV-1a reference vectors") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  CHECK(hex64(fnv1a64("foobar")) == "85944171f73967e8");
}

TEST_CASE("doubles are written with 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-1e-7) == "-9.9999999999999995e-08");
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = dist(gen);
    const auto s = format_double(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("csv round trip") {
  CsvTable t{{"k", "kind", "value"}, {}};
  t.add_row({std::int64_t{1}, std::string("regular"), 0.25});
  t.add_row({std::int64_t{-1}, std::string("singular"), -3.0});
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  std::stringstream s;
  write_csv(s, t, "0123456789abcdef");
  CHECK(s.str() == std::string("# evomax ") + EVOMAX_VERSION +
                       " config=0123456789abcdef\nk,kind,value\n1,regular,0.25\n-1,singular,-3\n");
  const auto back = read_csv(s);
  CHECK(back.columns == t.columns);
  CHECK(back.rows.size() == 2);
  CHECK(back.rows[1][1] == "singular");
  std::stringstream ragged("k,v\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(ragged), Error);
}

TEST_CASE("grammar examples through the config path") {
  const auto c = parse_config(R"json({"states": ["a", "b"], "Q": [[-1, 1], [1, -1]],
                                  "velocity": ["2+3*4^2", "2^3^2"], "phi": "-u^2"})json");
  const auto m = build_model(c);
  CHECK(m.velocity(0, 0.0) == 50.0);
  CHECK(m.velocity(1, 0.0) == 512.0);
  CHECK(m.phi(3.0) == -9.0);
}

TEST_CASE("cli exit codes") {
  const auto dir = scratch("codes");
  const auto out = dir.string();
  auto bad = run({"expand", "--config", kData + "/bad_q.json", "--out", out});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("RowSumViolation") != std::string::npos);
  CHECK(bad.err.find("Q[0]") != std::string::npos);
  auto flag = run({"expand", "--config", kData + "/small.json", "--bogus"});
  CHECK(flag.code == 2);
  CHECK(flag.err.find("Usage") != std::string::npos);
  CHECK(run({"expand", "--config", kData + "/missing.json", "--out", out}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"mc", "--config", kData + "/small.json", "--eps", "0.1", "--t", "0.5", "--u", "0",
             "--x", "5", "--out", out})
            .code == 2);
  auto cfl = run({"solve", "--config", kData + "/small.json", "--eps", "0.1", "--dt", "1.0",
                  "--out", out});
  CHECK(cfl.code == 3);
  CHECK(cfl.err.find("CflViolation") != std::string::npos);
  CHECK(fs::is_empty(dir));
}

TEST_CASE("mc output is byte-identical and matches the golden file") {
  const auto hash = load_config(kData + "/small.json").hash;
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const auto dir = scratch("mc" + std::to_string(rep));
    const auto r = run({"mc", "--config", kData + "/small.json", "--eps", "0.1", "--t", "0.5",
                        "--u", "1.5708", "--x", "0", "--out", dir.string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find(hash) != std::string::npos);
    const auto path = only_csv(dir);
    CHECK(fs::path(path).filename() == "mc-" + hash + ".csv");
    const auto bytes = slurp(path);
    if (rep == 0) first = bytes;
    CHECK(bytes == first);
  }
  CHECK(first == slurp(kData + "/golden/mc_small.csv"));
  std::istringstream in(first);
  const auto csv = read_csv(in);
  CHECK(csv.columns == std::vector<std::string>{"t", "u", "state", "mean", "stderr", "n_paths", "seed"});
  CHECK(csv.rows.size() == 1);
  check_numeric(csv, csv.columns);
}

TEST_CASE("solve output matches the golden file") {
  const auto dir = scratch("solve");
  const auto r = run({"solve", "--config", kData + "/small.json", "--eps", "0.1", "--t", "0.25,0.5",
                      "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto bytes = slurp(only_csv(dir));
  CHECK(bytes == slurp(kData + "/golden/solve_small.csv"));
  std::istringstream in(bytes);
  const auto csv = read_csv(in);
  CHECK(csv.columns == std::vector<std::string>{"t", "state", "u", "value"});
  CHECK(csv.rows.size() == 2 * 2 * 32);
  check_numeric(csv, csv.columns);
}

TEST_CASE("expand output schema") {
  const auto dir = scratch("expand");
  const auto r = run({"expand", "--config", kData + "/small.json", "--time-stride", "10",
                      "--tau-stride", "30", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(only_csv(dir));
  const auto csv = read_csv(in);
  CHECK(csv.columns ==
        std::vector<std::string>{"k", "kind", "t_or_tau", "state", "u", "value"});
  // 3 times; regular 3 orders x 2 states, corrections 3 orders; 3 tau nodes x 2 orders x 2 states.
  CHECK(csv.rows.size() == 32 * (3 * (3 * 2 + 3) + 3 * 2 * 2));
  check_numeric(csv, {"k", "t_or_tau", "state", "u", "value"});
  for (const auto& row : csv.rows) {
    CHECK((row[1] == "regular" || row[1] == "correction" || row[1] == "singular"));
  }
}

TEST_CASE("sweep writes a certified slope table") {
  const auto dir = scratch("sweep");
  const auto r = run({"sweep", "--config", kData + "/telegraph.json", "--orders", "0,1,2", "--out",
                      dir.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(only_csv(dir));
  const auto csv = read_csv(in);
  CHECK(csv.columns ==
        std::vector<std::string>{"N", "slope", "band_low", "band_high", "certified"});
  REQUIRE(csv.rows.size() == 3);
  for (int n = 0; n < 3; ++n) {
    const auto& row = csv.rows[static_cast<std::size_t>(n)];
    CHECK(row[0] == std::to_string(n));
    const double slope = std::stod(row[1]);
    CHECK(slope >= n + 0.6);
    CHECK(slope <= n + 1.4);
    CHECK(row[4] == "true");
  }
  check_numeric(csv, {"N", "slope", "band_low", "band_high"});
}
