#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "siscale/cli_run.hpp"
#include "siscale/io.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("siscale_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream f(p);
  f << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const siscale::cli::RunOptions& opts, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = siscale::cli::run(opts, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return rc;
}

}  // namespace

TEST_CASE("dsbs sweep artifact") {
  const fs::path dir = temp_dir("dsbs");
  const fs::path cfg = write_config(
      dir, R"({"p":0.25,"D1":[0.01,0.03],"D2":[0.1,0.3]})");
  siscale::cli::RunOptions opts;
  opts.subcommand = "dsbs";
  opts.config_path = cfg.string();
  opts.out_dir = (dir / "out").string();
  opts.deterministic = true;

  std::string out;
  CHECK(run_cli(opts, &out) == 0);
  CHECK(out.find("d_c=") != std::string::npos);

  const std::string csv = slurp(dir / "out" / "dsbs_sweep.csv");
  CHECK(csv.rfind("D1,D2,region,R_WZ,R_HB", 0) == 0);
  CHECK(csv.find("I-D") != std::string::npos);

  // Re-running reproduces the bytes exactly.
  CHECK(run_cli(opts) == 0);
  CHECK(slurp(dir / "out" / "dsbs_sweep.csv") == csv);
}

TEST_CASE("gaussian artifact") {
  const fs::path dir = temp_dir("gaussian");
  const fs::path cfg = write_config(dir, R"({
    "var_x": 1.0, "noise_increments": [1.0, 1.0, 2.0],
    "distortions": [0.12, 0.25, 0.4], "order": [3, 1, 2]})");
  siscale::cli::RunOptions opts;
  opts.subcommand = "gaussian";
  opts.config_path = cfg.string();
  opts.out_dir = (dir / "out").string();
  opts.deterministic = true;

  std::string out;
  CHECK(run_cli(opts, &out) == 0);
  const std::string csv = slurp(dir / "out" / "stage_rates.csv");
  CHECK(csv.rfind("stage,decoder,rate,cumulative", 0) == 0);
  CHECK(fs::exists(dir / "out" / "active_set.json"));
  CHECK(fs::exists(dir / "out" / "cover_grid.csv"));
}

TEST_CASE("rateloss artifact") {
  const fs::path dir = temp_dir("rateloss");
  const fs::path cfg = write_config(
      dir, R"({"var_x":1.0,"noise_var":1.0,"D1":0.1,"D2":0.3})");
  siscale::cli::RunOptions opts;
  opts.subcommand = "rateloss";
  opts.config_path = cfg.string();
  opts.out_dir = (dir / "out").string();
  CHECK(run_cli(opts) == 0);
  const std::string csv = slurp(dir / "out" / "rateloss_certificates.csv");
  CHECK(csv.find("gap_r1,gap_sum") != std::string::npos);
}

TEST_CASE("region artifact with a small grid") {
  const fs::path dir = temp_dir("region");
  const fs::path cfg = write_config(dir, R"({
    "source": {"px_y1": [[0.375,0.125],[0.125,0.375]],
               "py2_given_y1": [[1.0],[1.0]]},
    "D1": 0.05, "D2": 0.2,
    "bounds": ["outer_cap"], "grid_points": 3, "restarts": 4})");
  siscale::cli::RunOptions opts;
  opts.subcommand = "region";
  opts.config_path = cfg.string();
  opts.out_dir = (dir / "out").string();
  opts.deterministic = true;
  std::string out;
  CHECK(run_cli(opts, &out) == 0);
  const std::string csv = slurp(dir / "out" / "outer_cap.csv");
  CHECK(csv.rfind("r1,r_sum,bound_tag", 0) == 0);
  CHECK(fs::exists(dir / "out" / "outer_cap_witnesses.json"));
}

TEST_CASE("simulate artifact and margin-violated warning") {
  const fs::path dir = temp_dir("simulate");
  const fs::path cfg = write_config(dir, R"({
    "source": {"px_y1": [[0.375,0.125],[0.125,0.375]],
               "py2_given_y1": [[1.0],[1.0]]},
    "aux": {"pv_given_x": [[0.55,0.45],[0.45,0.55]],
            "pw1_given_xv": [[0.53,0.47],[0.53,0.47],[0.47,0.53],[0.47,0.53]],
            "pw2_given_xv": [[0.54,0.46],[0.54,0.46],[0.46,0.54],[0.46,0.54]]},
    "n": [60], "trials": 40, "delta": 0.08,
    "rates": {"rate_v": 0.12, "rate_a": 0.0, "rate_a_prime": 0.0,
              "rate_w1": 0.05, "rate_w2": 0.05, "rate_b": 0.05,
              "rate_c": 0.05}})");
  siscale::cli::RunOptions opts;
  opts.subcommand = "simulate";
  opts.config_path = cfg.string();
  opts.out_dir = (dir / "out").string();
  std::string out;
  const int rc = run_cli(opts, &out);
  CHECK(rc == 0);  // the simulation ran; the label carries the warning
  CHECK(out.find("margin-violated") != std::string::npos);
  CHECK(out.find("warning") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "summary_n60.json"));
  CHECK(fs::exists(dir / "out" / "trend.csv"));
}

TEST_CASE("error reporting") {
  const fs::path dir = temp_dir("errors");
  siscale::cli::RunOptions opts;
  opts.out_dir = (dir / "out").string();

  SUBCASE("missing config file") {
    opts.subcommand = "dsbs";
    opts.config_path = (dir / "nope.json").string();
    std::string err;
    CHECK(run_cli(opts, nullptr, &err) == 2);
    CHECK(err.find("\"error\"") != std::string::npos);
  }
  SUBCASE("malformed json") {
    opts.subcommand = "dsbs";
    opts.config_path = write_config(dir, "{not json").string();
    std::string err;
    CHECK(run_cli(opts, nullptr, &err) == 2);
    CHECK(err.find("parse") != std::string::npos);
  }
  SUBCASE("domain error names the violated precondition") {
    opts.subcommand = "dsbs";
    opts.config_path =
        write_config(dir, R"({"p":0.7,"D1":[0.1],"D2":[0.1]})").string();
    std::string err;
    CHECK(run_cli(opts, nullptr, &err) == 3);
    CHECK(err.find("domain") != std::string::npos);
    CHECK(err.find("(0, 0.5)") != std::string::npos);
  }
  SUBCASE("unknown subcommand") {
    opts.subcommand = "bogus";
    opts.config_path = write_config(dir, "{}").string();
    std::string err;
    CHECK(run_cli(opts, nullptr, &err) == 2);
  }
}

TEST_CASE("source schema") {
  using nlohmann::json;
  const json good = json::parse(R"({
    "px_y1": [[0.375,0.125],[0.125,0.375]],
    "py2_given_y1": [[0.9,0.1],[0.2,0.8]],
    "d1": [[0,2],[2,0]]})");
  const auto spec = siscale::io::load_source(good);
  CHECK(spec.src.x_size() == 2);
  CHECK(spec.src.y2_size() == 2);
  CHECK(spec.d1(0, 1) == doctest::Approx(2.0));
  CHECK(spec.d2.in_gamma_d());  // defaulted Hamming

  CHECK_THROWS_AS(siscale::io::load_source(json::parse(R"({"px_y1":[[1.0]]})")),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      siscale::io::load_source(json::parse(
          R"({"px_y1":[[0.6,0.4]],"py2_given_y1":[[0.5,0.6]]})")),
      std::invalid_argument);
}
