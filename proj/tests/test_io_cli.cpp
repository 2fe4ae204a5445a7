#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sigkex/bench.hpp"
#include "sigkex/io.hpp"
#include "testutil.hpp"

using namespace sigkex;

namespace {

std::string binary_path() {
  const char* env = std::getenv("SIGKEX_BIN");
  return env == nullptr ? "" : env;
}

int run(const std::string& args, std::string* out = nullptr) {
  const std::string path = binary_path();
  REQUIRE(!path.empty());
  const std::string tmp = "/tmp/sigkex_cli_out.txt";
  const int status =
      std::system((path + " " + args + " >" + tmp + " 2>/dev/null").c_str());
  if (out != nullptr) {
    std::ifstream f(tmp);
    std::stringstream ss;
    ss << f.rdbuf();
    *out = ss.str();
  }
  return WEXITSTATUS(status);
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("CSV round trip is bitwise") {
  auto x = testutil::random_path(17, 3, 2024);
  std::stringstream ss;
  write_path_csv(ss, x, true);
  auto back = read_path_csv(ss, true);
  REQUIRE(back.raw().size() == x.raw().size());
  for (std::size_t i = 0; i < x.raw().size(); ++i)
    CHECK(back.raw()[i] == x.raw()[i]);
}

TEST_CASE("CSV diagnostics carry the line number") {
  std::stringstream ss("1.0,2.0\n1.0,oops\n");
  try {
    read_path_csv(ss, false, "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
  }
  std::stringstream ragged("1.0,2.0\n1.0\n");
  CHECK_THROWS_AS(read_path_csv(ragged, false), ParseError);
}

TEST_CASE("JSON path literals") {
  auto j = nlohmann::json::parse(R"({"points": [[0, 0], [1, 2], [3, 1]]})");
  auto x = path_from_json(j);
  CHECK(x.dim() == 2);
  CHECK(x.num_points() == 3);
  CHECK(x.at(2, 0) == 3.0);
  auto round = path_from_json(path_to_json(x));
  for (std::size_t i = 0; i < x.raw().size(); ++i)
    CHECK(round.raw()[i] == x.raw()[i]);
  CHECK_THROWS_AS(path_from_json(nlohmann::json::object()), ParseError);
}

TEST_CASE("generate_path determinism and kinds") {
  auto a = generate_path(PathKind::random_uniform, 150, 4, 9);
  auto b = generate_path(PathKind::random_uniform, 150, 4, 9);
  for (std::size_t i = 0; i < a.raw().size(); ++i)
    CHECK(a.raw()[i] == b.raw()[i]);
  auto c = generate_path(PathKind::random_uniform, 150, 4, 10);
  bool same = true;
  for (std::size_t i = 0; i < a.raw().size(); ++i)
    same = same && a.raw()[i] == c.raw()[i];
  CHECK(!same);
  for (double v : a.raw()) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }

  auto axis = generate_path(PathKind::axis, 0, 3, 0);
  CHECK(axis.dim() == 3);
  CHECK(axis.num_points() == 4);

  auto line = generate_path(PathKind::linear, 4, 2, 0);
  CHECK(line.at(2, 0) == doctest::Approx(0.5));
  CHECK(line.at(2, 1) == doctest::Approx(0.5));
}

TEST_CASE("bench rows carry the exact kernel count") {
  BenchConfig cfg;
  cfg.depths = {1, 2, 3};
  cfg.length = 32;
  cfg.repeats = 1;
  cfg.modes = {"serial"};
  auto rows = run_bench(cfg);
  REQUIRE(rows.size() == 3);
  std::size_t prev = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].kernel_count ==
          (cfg.depth_M + 1) * (std::size_t{1} << cfg.depths[i]));
    CHECK(rows[i].kernel_count > prev);
    prev = rows[i].kernel_count;
  }
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("cli");

TEST_CASE("generate then read back") {
  const std::string csv = "/tmp/sigkex_test_path.csv";
  CHECK(run("generate --generate random-uniform -L 12 -d 2 --seed 5 -o " +
            csv) == 0);
  auto x = read_path_csv_file(csv, false);
  CHECK(x.num_points() == 13);
  CHECK(x.dim() == 2);
  std::remove(csv.c_str());
}

TEST_CASE("coeff subcommand emits value and bound") {
  std::string out;
  CHECK(run("coeff --generate random-uniform -L 20 -d 3 --seed 3 "
            "--index 1,2 --depth-M 2 --gamma 3",
            &out) == 0);
  auto j = nlohmann::json::parse(out);
  CHECK(j["command"] == "coeff");
  CHECK(j["result"]["kind"] == "coefficient");
  CHECK(j["result"]["value"].is_number());
  CHECK(j["result"]["error_bound"].is_number());
  CHECK(j["result"]["kernels"].size() == 3 * 4);
}

TEST_CASE("oracle rejects a malformed CSV with exit 2") {
  const std::string csv = "/tmp/sigkex_bad.csv";
  {
    std::ofstream f(csv);
    f << "0.0,0.0\nnot,a,number\n";
  }
  CHECK(run("oracle --input " + csv + " --truncate 2") == 2);
  std::remove(csv.c_str());
}

TEST_CASE("budget violations exit with code 3") {
  const std::string path = binary_path();
  REQUIRE(!path.empty());
  const int status = std::system(
      ("SIGKEX_MAX_TENSOR_ELEMENTS=10 " + path +
       " oracle --generate random-uniform -L 5 -d 3 --truncate 4 "
       ">/dev/null 2>&1")
          .c_str());
  CHECK(WEXITSTATUS(status) == 3);
}

TEST_CASE("unknown flags exit with code 2") {
  CHECK(run("coeff --definitely-not-a-flag") == 2);
}

TEST_CASE("euler toy model emits a trajectory CSV") {
  std::string out;
  CHECK(run("euler --toy-model --generations 3 --steps 4 --order-N 2 "
            "--t-ep 0.4",
            &out) == 0);
  std::size_t lines = 0;
  for (char ch : out) lines += ch == '\n';
  CHECK(lines == 6);  // header + 5 partition nodes
  CHECK(out.rfind("t,y1,y2,y3,y_overflow", 0) == 0);
}

TEST_CASE("kernel subcommand value matches the library") {
  std::string out;
  CHECK(run("kernel --generate linear -L 4 -d 1 --axis --gamma1 5 --gamma2 5",
            &out) == 0);
  auto j = nlohmann::json::parse(out);
  const double v = j["result"]["value"].get<double>();
  CHECK(testutil::close(v, testutil::bessel_series(1.0), 1e-3));
}

TEST_SUITE_END();
