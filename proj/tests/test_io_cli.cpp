#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "helpers.hpp"
#include "slsloc/io.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace slsloc;
namespace fs = std::filesystem;

namespace {

#ifndef SLSLOC_BIN
#define SLSLOC_BIN "slsloc"
#endif

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "slsloc_cli_tests";
  fs::create_directories(dir);
  return dir;
}

RunResult run_cli(const std::string& args) {
  const fs::path out = scratch_dir() / "stdout.txt";
  const std::string cmd = std::string(SLSLOC_BIN) + " " + args + " > " + out.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WEXITSTATUS(raw), ss.str()};
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("system JSON round-trip preserves values and ownership") {
  const auto sys = testing::chain3_system();
  Json meta;
  meta["note"] = "round-trip";
  const Json j = system_to_json(sys, meta);
  CHECK(j.at("state_owner") == Json::array({1, 2, 3}));  // 1-based in the file
  CHECK(j.at("input_owner") == Json::array({1, 3}));

  const auto back = system_from_json(j);
  CHECK(back.A == sys.A);
  CHECK(back.B == sys.B);
  CHECK(back.partition.state_owner == sys.partition.state_owner);
  CHECK(back.partition.num_subsystems == 3);
}

TEST_CASE("system JSON rejects malformed input") {
  Json j = system_to_json(testing::chain3_system());
  j["A"][0][0] = "oops";
  CHECK_THROWS(system_from_json(j));

  Json j2 = system_to_json(testing::chain3_system());
  j2["state_owner"] = Json::array({1, 1, 1});  // subsystems 2, 3 own nothing
  CHECK_THROWS_AS(system_from_json(j2), std::invalid_argument);
}

TEST_CASE("objective JSON round-trip") {
  const auto sys = testing::chain3_system();
  MpcSpec spec;
  spec.horizon = 4;
  spec.q_state = Vec::Constant(3, 1.5);
  spec.r_input = Vec::Constant(2, 0.25);
  spec.state_bounds.lo = Vec::Constant(3, -4.0);
  spec.state_bounds.hi = Vec::Constant(3, 4.0);
  spec.input_bounds = unbounded(2);
  const Json j = objective_to_json(spec);
  CHECK(j.at("input_lo")[0].is_null());  // unbounded side serializes as null

  const auto back = objective_from_json(j, sys, 4);
  CHECK(back.q_state == spec.q_state);
  CHECK(back.state_bounds.lo == spec.state_bounds.lo);
  CHECK(std::isinf(back.input_bounds.hi(0)));
}

TEST_CASE("trace CSV has the documented schema") {
  SimTrace trace;
  trace.states = Mat::Zero(3, 2);
  trace.inputs = Mat::Ones(2, 1);
  trace.step_costs = Vec::Constant(2, 0.5);
  trace.cum_costs = Vec::Constant(2, 0.5);
  trace.cum_costs(1) = 1.0;
  trace.solve_costs = Vec::Zero(2);
  trace.completed_steps = 2;
  const fs::path p = scratch_dir() / "trace.csv";
  write_trace_csv(p.string(), trace);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "tau,x1,x2,u1,step_cost,cum_cost");
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 3);  // final state row has empty input fields
}

TEST_CASE("cli: gen writes a loadable, reproducible system") {
  const fs::path dir = scratch_dir();
  const fs::path sys_a = dir / "gen_a.json";
  const fs::path sys_b = dir / "gen_b.json";
  auto a = run_cli("gen --n 2 --actuation 1.0 --seed 1 -o " + sys_a.string());
  CHECK(a.exit_code == 0);
  auto b = run_cli("gen --n 2 --actuation 1.0 --seed 1 -o " + sys_b.string());
  CHECK(b.exit_code == 0);
  CHECK(file_bytes(sys_a) == file_bytes(sys_b));  // byte-identical under the same seed

  const auto sys = load_system(sys_a.string());
  CHECK(sys.num_subsystems() == 4);
  CHECK(build_interconnection_graph(sys).is_connected());
  CHECK(fs::exists(sys_a.string() + ".manifest.json"));
  const Json manifest = read_json_file(sys_a.string() + ".manifest.json");
  CHECK(manifest.at("command") == "gen");
  CHECK(manifest.at("tool_version") == kToolVersion);
}

TEST_CASE("cli: gen --n 5 baseline") {
  const fs::path out = scratch_dir() / "gen5.json";
  auto r = run_cli("gen --n 5 --edge-prob 0.4 --actuation 1.0 --seed 7 -o " + out.string());
  CHECK(r.exit_code == 0);
  const auto sys = load_system(out.string());
  CHECK(sys.num_subsystems() == 25);
  CHECK(sys.n_u() == 25);
}

TEST_CASE("cli: select finds d = 1 on the chain example") {
  const fs::path sys_path = scratch_dir() / "chain3.json";
  save_system(sys_path.string(), testing::chain3_system());

  const fs::path report_path = scratch_dir() / "report.json";
  auto r = run_cli("select --system " + sys_path.string() + " --horizon 1 -o " +
                   report_path.string());
  CHECK(r.exit_code == 0);
  const Json report = read_json_file(report_path.string());
  CHECK(report.at("d_optimal") == 1);
  CHECK(report.at("per_d")[0].at("rank") == 2);

  // empty search range: d_optimal absent, diagnostic present
  auto r0 = run_cli("select --system " + sys_path.string() + " --horizon 1 --d-max 0 -o " +
                    (scratch_dir() / "report0.json").string());
  CHECK(r0.exit_code == 0);
  const Json report0 = read_json_file((scratch_dir() / "report0.json").string());
  CHECK(report0.at("d_optimal").is_null());
  CHECK_FALSE(report0.at("diagnostic").get<std::string>().empty());
}

TEST_CASE("cli: analyze certifies the chain example") {
  const fs::path sys_path = scratch_dir() / "chain3b.json";
  save_system(sys_path.string(), testing::chain3_system());
  const fs::path cert_path = scratch_dir() / "cert.json";
  auto r = run_cli("analyze --system " + sys_path.string() + " --horizon 1 --d 1 -o " +
                   cert_path.string());
  CHECK(r.exit_code == 0);
  const Json cert = read_json_file(cert_path.string());
  CHECK(cert.at("certified_optimal") == true);
  CHECK(cert.at("rank_found") == 2);

  auto rd = run_cli("analyze --system " + sys_path.string() +
                    " --horizon 1 --d 1 --formulation dynamics-first");
  CHECK(rd.exit_code == 0);
  CHECK(rd.stdout_text.find("\"certified_optimal\": true") != std::string::npos);
}

TEST_CASE("cli: sim on a zero initial state is free") {
  const fs::path sys_path = scratch_dir() / "sim_sys.json";
  auto g = run_cli("gen --n 2 --seed 1 -o " + sys_path.string());
  REQUIRE(g.exit_code == 0);
  const fs::path prefix = scratch_dir() / "sim_zero";
  auto r = run_cli("sim --system " + sys_path.string() +
                   " --horizon 5 --d 1 --steps 5 --x0 zeros -o " + prefix.string());
  CHECK(r.exit_code == 0);
  const Json cmp = read_json_file(prefix.string() + "_comparison.json");
  CHECK(cmp.at("localized").at("realized_cost").get<double>() == doctest::Approx(0.0));
  CHECK(cmp.at("global").at("realized_cost").get<double>() == doctest::Approx(0.0));
  CHECK(fs::exists(prefix.string() + "_localized.csv"));
  CHECK(fs::exists(prefix.string() + "_global.csv"));
}

TEST_CASE("cli: sim with the full pattern matches global MPC") {
  const fs::path sys_path = scratch_dir() / "sim_sys_full.json";
  auto g = run_cli("gen --n 2 --seed 2 -o " + sys_path.string());
  REQUIRE(g.exit_code == 0);
  auto r = run_cli("sim --system " + sys_path.string() +
                   " --horizon 5 --d full --steps 5 --seed 3");
  CHECK(r.exit_code == 0);
  const auto pos = r.stdout_text.find("\"relative_cost_gap\": ");
  REQUIRE(pos != std::string::npos);
  const double gap = std::stod(r.stdout_text.substr(pos + 21));
  CHECK(gap < 1e-6);
}

TEST_CASE("cli: sim accepts an objective file") {
  const fs::path sys_path = scratch_dir() / "sim_sys_obj.json";
  auto g = run_cli("gen --n 2 --seed 5 -o " + sys_path.string());
  REQUIRE(g.exit_code == 0);
  const auto sys = load_system(sys_path.string());
  MpcSpec spec;
  spec.horizon = 4;
  spec.q_state = Vec::Constant(sys.n_x(), 1.0);
  spec.r_input = Vec::Constant(sys.n_u(), 0.5);
  spec.state_bounds = unbounded(sys.n_x());
  spec.input_bounds = unbounded(sys.n_u());
  const fs::path obj_path = scratch_dir() / "objective.json";
  write_json_file(obj_path.string(), objective_to_json(spec));
  auto r = run_cli("sim --system " + sys_path.string() + " --objective " + obj_path.string() +
                   " --horizon 4 --d 1 --steps 4 --seed 1");
  CHECK(r.exit_code == 0);
}

TEST_CASE("cli: sweep classifies every trial") {
  const fs::path out = scratch_dir() / "sweep_test.csv";
  auto r = run_cli("sweep --trials 6 --seed 11 --n-min 2 --n-max 3 -o " + out.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("d_optimal") != std::string::npos);
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) {
    ++rows;
    CHECK((row.find("feasible=") != std::string::npos ||
           row.find("error") != std::string::npos));
  }
  CHECK(rows == 6);
}

TEST_CASE("cli: error paths use distinct exit codes") {
  auto missing = run_cli("select --system /nonexistent/nope.json --horizon 2");
  CHECK(missing.exit_code == 2);

  auto badflag = run_cli("select --no-such-flag");
  CHECK(badflag.exit_code != 0);

  const fs::path bad = scratch_dir() / "bad.json";
  std::ofstream(bad) << "{ not json";
  auto malformed = run_cli("select --system " + bad.string() + " --horizon 2");
  CHECK(malformed.exit_code == 2);
}

TEST_CASE("cli: select on a fully actuated 4x4 mesh returns d = 1") {
  const fs::path sys_path = scratch_dir() / "mesh44.json";
  auto g = run_cli("gen --n 4 --seed 2 -o " + sys_path.string());
  REQUIRE(g.exit_code == 0);
  auto r = run_cli("select --system " + sys_path.string() + " --horizon 5");
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("d_optimal: 1") != std::string::npos);
}

TEST_CASE("cli: fully actuated sweep rows all select d = 1") {
  const fs::path out = scratch_dir() / "sweep_act1.csv";
  auto r = run_cli(
      "sweep --trials 4 --seed 2 --n-min 4 --n-max 5 --act-min 1.0 --act-max 1.0 "
      "--t-min 5 --t-max 5 -o " +
      out.string());
  CHECK(r.exit_code == 0);
  std::ifstream in(out);
  std::string row;
  std::getline(in, row);  // header
  int ok_rows = 0;
  while (std::getline(in, row)) {
    if (row.find("\"ok\"") == std::string::npos) continue;  // generation may hit the resample cap
    ++ok_rows;
    CHECK(row.find("\"ok\",1,") != std::string::npos);  // d_optimal column == 1
  }
  CHECK(ok_rows >= 1);
}

TEST_CASE("cli: bench reports mean and deviation across repetitions") {
  const fs::path out = scratch_dir() / "bench_test.csv";
  auto r = run_cli("bench --sizes 2 --horizons 3 --reps 3 --seed 0 -o " + out.string());
  CHECK(r.exit_code == 0);
  CHECK(r.stdout_text.find("+-") != std::string::npos);
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header.find("rank_s") != std::string::npos);
  int rows = 0;
  std::string row;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 3);
}
