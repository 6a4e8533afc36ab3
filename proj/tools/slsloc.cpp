// slsloc: locality analysis and localized MPC validation for networked LTI
// systems. Subcommands: gen, select, analyze, sim, sweep, bench.

#include "CLI11.hpp"
#include "slsloc/gridgen.hpp"
#include "slsloc/io.hpp"
#include "slsloc/locality_selection.hpp"
#include "slsloc/mpc.hpp"
#include "slsloc/trajectory_analysis.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace slsloc;

constexpr int kExitIo = 2;
constexpr int kExitRuntime = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CommonOpts {
  double tol_feas = 1e-8;
  double tol_rank = -1.0;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--tol-feas", c.tol_feas, "feasibility tolerance");
  cmd->add_option("--tol-rank", c.tol_rank, "rank tolerance (negative: max-dim * eps * sigma_max)");
}

Json argv_json(int argc, char** argv) {
  Json arr = Json::array();
  for (int i = 0; i < argc; ++i) arr.push_back(std::string(argv[i]));
  return arr;
}

SparsityPattern pattern_for(const LtiNetworkSystem& sys, const std::string& d_spec, int T) {
  if (d_spec == "full") return full_sparsity_pattern(sys, T);
  const int d = std::stoi(d_spec);
  if (d < 0) throw std::invalid_argument("--d must be a nonnegative integer or 'full'");
  return build_sparsity_pattern(sys, d, T);
}

Vec parse_x0(const std::string& spec, Index n_x, std::uint64_t seed) {
  if (spec == "ones") return Vec::Ones(n_x);
  if (spec == "zeros") return Vec::Zero(n_x);
  if (spec == "random") {
    SplitRng rng(seed, 11);
    Vec x0(n_x);
    for (Index i = 0; i < n_x; ++i) x0(i) = rng.uniform(-2.0, 2.0);
    return x0;
  }
  // comma-separated list
  Vec x0(n_x);
  std::stringstream ss(spec);
  std::string tok;
  Index i = 0;
  while (std::getline(ss, tok, ',')) {
    if (i >= n_x) throw std::invalid_argument("--x0 has too many entries");
    x0(i++) = std::stod(tok);
  }
  if (i != n_x) throw std::invalid_argument("--x0 has too few entries");
  return x0;
}

// Benchmark objective: random positive diagonal weights, phase bounds
// [-4, 4], frequency bounds [-20, 20] (two states per node, phase first).
MpcSpec benchmark_objective(const LtiNetworkSystem& sys, int T, std::uint64_t seed) {
  SplitRng rng(seed, 10);
  MpcSpec spec;
  spec.horizon = T;
  spec.q_state = Vec(sys.n_x());
  spec.r_input = Vec(sys.n_u());
  for (Index i = 0; i < sys.n_x(); ++i) spec.q_state(i) = rng.uniform(0.1, 2.0);
  for (Index i = 0; i < sys.n_u(); ++i) spec.r_input(i) = rng.uniform(0.1, 2.0);
  spec.state_bounds.lo = Vec(sys.n_x());
  spec.state_bounds.hi = Vec(sys.n_x());
  for (Index i = 0; i < sys.n_x(); ++i) {
    spec.state_bounds.lo(i) = (i % 2 == 0) ? -4.0 : -20.0;
    spec.state_bounds.hi(i) = (i % 2 == 0) ? 4.0 : 20.0;
  }
  spec.input_bounds = unbounded(sys.n_u());
  return spec;
}

int run_gen(const GridGenConfig& cfg, const std::string& out, const Json& argv) {
  const auto t0 = Clock::now();
  const auto sys = generate_mesh_system(cfg);
  const auto graph = build_interconnection_graph(sys);

  Json meta;
  meta["generator"] = "mesh";
  meta["n"] = cfg.n;
  meta["edge_prob"] = cfg.edge_prob;
  meta["actuation_density"] = cfg.actuation_density;
  meta["dt"] = cfg.dt;
  meta["seed"] = cfg.seed;
  if (cfg.target_spectral_radius) meta["target_spectral_radius"] = *cfg.target_spectral_radius;
  save_system(out, sys, meta);

  RunManifest m;
  m.command = "gen";
  m.argv = argv.get<std::vector<std::string>>();
  m.config = meta;
  m.outputs = {out};
  m.wall_seconds = seconds_since(t0);
  write_manifest(out + ".manifest.json", m);

  std::cout << "subsystems: " << sys.num_subsystems() << "\nstates: " << sys.n_x()
            << "\ninputs: " << sys.n_u() << "\nedges: " << graph.num_edges()
            << "\nspectral_radius: " << spectral_radius(sys.A) << "\nwrote " << out << "\n";
  return 0;
}

int run_select(const std::string& system_path, int T, const SelectionOptions& opts,
               const std::string& out, const Json& argv) {
  const auto t0 = Clock::now();
  const auto sys = load_system(system_path);
  const auto report = optimal_locality_size(sys, T, opts);

  Json j = selection_report_to_json(report);
  j["system"] = system_path;
  j["horizon"] = T;
  if (!out.empty()) {
    write_json_file(out, j);
    RunManifest m;
    m.command = "select";
    m.argv = argv.get<std::vector<std::string>>();
    m.config = {{"system", system_path}, {"horizon", T}, {"eps", opts.eps}};
    m.outputs = {out};
    m.wall_seconds = seconds_since(t0);
    write_manifest(out + ".manifest.json", m);
  }

  if (report.d_optimal)
    std::cout << "d_optimal: " << *report.d_optimal << "\n";
  else
    std::cout << "d_optimal: none (" << report.diagnostic << ")\n";
  for (const auto& rec : report.per_d) {
    std::cout << "  d=" << rec.d << " feasible=" << (rec.all_feasible ? "yes" : "no");
    if (rec.all_feasible) std::cout << " rank=" << rec.rank << "/" << rec.target;
    std::cout << " construct_s=" << rec.construct_wall_seconds
              << " per_subsystem_max_s=" << rec.construct_per_subsystem_max_seconds
              << " rank_s=" << rec.rank_seconds << "\n";
  }
  return 0;
}

int run_analyze(const std::string& system_path, int T, const std::string& d_spec,
                const std::string& formulation, const std::string& x0_spec, std::uint64_t seed,
                const CommonOpts& common, const std::string& out, const Json& argv) {
  const auto t0 = Clock::now();
  const auto sys = load_system(system_path);
  const auto pattern = pattern_for(sys, d_spec, T);
  const Vec x0 = parse_x0(x0_spec, sys.n_x(), seed);
  const Formulation form = formulation == "dynamics-first" ? Formulation::dynamics_first
                                                           : Formulation::locality_first;
  const auto cert =
      global_performance_certificate(sys, pattern, T, x0, common.tol_feas, form, common.tol_rank);

  Json j = certificate_to_json(cert);
  j["system"] = system_path;
  j["horizon"] = T;
  j["d"] = d_spec;
  if (!out.empty()) {
    write_json_file(out, j);
    RunManifest m;
    m.command = "analyze";
    m.argv = argv.get<std::vector<std::string>>();
    m.config = {{"system", system_path}, {"horizon", T}, {"d", d_spec}, {"formulation", formulation}};
    m.outputs = {out};
    m.wall_seconds = seconds_since(t0);
    write_manifest(out + ".manifest.json", m);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_sim(const std::string& system_path, int T, const std::string& d_spec, int steps,
            const std::string& objective_path, const std::string& x0_spec, std::uint64_t seed,
            bool skip_global, const CommonOpts& common, const std::string& out, const Json& argv) {
  const auto t0 = Clock::now();
  const auto sys = load_system(system_path);
  MpcSpec spec = objective_path.empty() ? benchmark_objective(sys, T, seed)
                                        : load_objective(objective_path, sys, T);
  spec.horizon = T;
  spec.feas_eps = common.tol_feas;
  const Vec x0 = parse_x0(x0_spec, sys.n_x(), seed);

  MpcSpec loc_spec = spec;
  loc_spec.locality = pattern_for(sys, d_spec, T);
  const auto loc = rolling_horizon_sim(sys, loc_spec, x0, steps, ControllerKind::localized);

  std::optional<SimTrace> glob;
  if (!skip_global) glob = rolling_horizon_sim(sys, spec, x0, steps, ControllerKind::global);

  Json cmp;
  cmp["system"] = system_path;
  cmp["horizon"] = T;
  cmp["d"] = d_spec;
  cmp["steps_requested"] = steps;
  cmp["localized"] = {{"status", to_string(loc.status)},
                      {"completed_steps", loc.completed_steps},
                      {"realized_cost", loc.realized_cost()}};
  if (glob) {
    cmp["global"] = {{"status", to_string(glob->status)},
                     {"completed_steps", glob->completed_steps},
                     {"realized_cost", glob->realized_cost()}};
    const double gap = std::abs(loc.realized_cost() - glob->realized_cost()) /
                       std::max(1.0, std::abs(glob->realized_cost()));
    cmp["relative_cost_gap"] = gap;
  }

  std::vector<std::string> outputs;
  if (!out.empty()) {
    write_trace_csv(out + "_localized.csv", loc);
    outputs.push_back(out + "_localized.csv");
    if (glob) {
      write_trace_csv(out + "_global.csv", *glob);
      outputs.push_back(out + "_global.csv");
    }
    write_json_file(out + "_comparison.json", cmp);
    outputs.push_back(out + "_comparison.json");
    RunManifest m;
    m.command = "sim";
    m.argv = argv.get<std::vector<std::string>>();
    m.config = {{"system", system_path}, {"horizon", T}, {"d", d_spec},
                {"steps", steps},        {"seed", seed},  {"x0", x0_spec}};
    m.outputs = outputs;
    m.wall_seconds = seconds_since(t0);
    write_manifest(out + "_comparison.json.manifest.json", m);
  }
  std::cout << cmp.dump(2) << "\n";

  const bool ok = loc.status == SolveStatus::optimal &&
                  (!glob || glob->status == SolveStatus::optimal);
  return ok ? 0 : kExitRuntime;
}

struct SweepRow {
  int trial = 0;
  std::uint64_t seed = 0;
  int n = 0;
  double actuation = 0.0;
  double rho = 0.0;
  int horizon = 0;
  std::string status = "ok";
  std::optional<int> d_optimal;
  int feasible_rank_deficient = 0;
  std::string outcomes;
};

int run_sweep(int trials, std::uint64_t seed0, int n_min, int n_max, double act_min,
              double act_max, double rho_min, double rho_max, int t_min, int t_max,
              const CommonOpts& common, const std::string& out, const Json& argv) {
  const auto t0 = Clock::now();
  std::vector<SweepRow> rows(trials);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int trial = 0; trial < trials; ++trial) {
    SweepRow row;
    row.trial = trial;
    row.seed = seed0 + static_cast<std::uint64_t>(trial);
    SplitRng rng(row.seed, 20);
    row.n = n_min + static_cast<int>(rng.next() % static_cast<std::uint64_t>(n_max - n_min + 1));
    row.actuation = rng.uniform(act_min, act_max);
    row.rho = rng.uniform(rho_min, rho_max);
    row.horizon = t_min + static_cast<int>(rng.next() % static_cast<std::uint64_t>(t_max - t_min + 1));
    try {
      GridGenConfig cfg;
      cfg.n = row.n;
      cfg.actuation_density = row.actuation;
      cfg.target_spectral_radius = row.rho;
      cfg.seed = row.seed;
      const auto sys = generate_mesh_system(cfg);
      SelectionOptions opts;
      opts.eps = common.tol_feas;
      opts.rank_tol = common.tol_rank;
      const auto report = optimal_locality_size(sys, row.horizon, opts);
      row.d_optimal = report.d_optimal;
      std::ostringstream oss;
      for (const auto& rec : report.per_d) {
        if (rec.d > 1) oss << ";";
        oss << "d=" << rec.d << ":feasible=" << (rec.all_feasible ? 1 : 0);
        if (rec.all_feasible) {
          const bool rank_ok = rec.rank == rec.target;
          oss << ",rank_sufficient=" << (rank_ok ? 1 : 0);
          if (!rank_ok) ++row.feasible_rank_deficient;
        }
      }
      row.outcomes = oss.str();
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows[trial] = std::move(row);
  }

  std::ofstream csv(out);
  if (!csv) {
    std::cerr << "cannot write " << out << "\n";
    return kExitIo;
  }
  csv << "trial,seed,n,actuation_density,spectral_radius,horizon,status,d_optimal,"
         "feasible_rank_deficient,outcomes\n";
  int total_frd = 0;
  for (const auto& r : rows) {
    csv << r.trial << "," << r.seed << "," << r.n << "," << r.actuation << "," << r.rho << ","
        << r.horizon << "," << '"' << r.status << '"' << ",";
    if (r.d_optimal) csv << *r.d_optimal;
    csv << "," << r.feasible_rank_deficient << "," << '"' << r.outcomes << '"' << "\n";
    total_frd += r.feasible_rank_deficient;
  }
  csv.close();

  RunManifest m;
  m.command = "sweep";
  m.argv = argv.get<std::vector<std::string>>();
  m.config = {{"trials", trials}, {"seed", seed0}, {"n_min", n_min}, {"n_max", n_max},
              {"act_min", act_min}, {"act_max", act_max}, {"rho_min", rho_min},
              {"rho_max", rho_max}, {"t_min", t_min}, {"t_max", t_max}};
  m.outputs = {out};
  m.wall_seconds = seconds_since(t0);
  write_manifest(out + ".manifest.json", m);

  std::cout << "trials: " << trials << "\nfeasible-but-rank-deficient (d, trial) pairs: "
            << total_frd << "\nwrote " << out << "\n";
  return 0;
}

int run_bench(const std::vector<int>& sizes, const std::vector<int>& horizons, int reps,
              std::uint64_t seed0, bool compare_serial, const std::string& out,
              const Json& argv) {
  const auto t0 = Clock::now();
  std::ofstream csv(out);
  if (!csv) {
    std::cerr << "cannot write " << out << "\n";
    return kExitIo;
  }
  csv << "n,horizon,rep,seed,d_optimal,construct_wall_s,construct_per_subsystem_max_s,rank_s,"
         "total_select_s,serial_total_s\n";

  for (int n : sizes) {
    for (int T : horizons) {
      std::vector<double> totals, ranks, constructs;
      std::uint64_t seed = seed0;
      for (int rep = 0; rep < reps; ++rep) {
        // scan forward for a seed whose mesh connects within the resample cap
        LtiNetworkSystem sys;
        for (;; ++seed) {
          GridGenConfig cfg;
          cfg.n = n;
          cfg.seed = seed;
          try {
            sys = generate_mesh_system(cfg);
            break;
          } catch (const std::runtime_error&) {
          }
        }

        const auto ts = Clock::now();
        const auto report = optimal_locality_size(sys, T);
        const double total = seconds_since(ts);

        double serial_total = -1.0;
        if (compare_serial) {
          SelectionOptions sopts;
          sopts.parallel = false;
          sopts.gram_rank = false;
          const auto tser = Clock::now();
          (void)optimal_locality_size(sys, T, sopts);
          serial_total = seconds_since(tser);
        }

        const auto& rec = report.per_d.back();
        csv << n << "," << T << "," << rep << "," << seed << ","
            << (report.d_optimal ? *report.d_optimal : -1) << "," << rec.construct_wall_seconds
            << "," << rec.construct_per_subsystem_max_seconds << "," << rec.rank_seconds << ","
            << total << "," << serial_total << "\n";
        totals.push_back(total);
        ranks.push_back(rec.rank_seconds);
        constructs.push_back(rec.construct_per_subsystem_max_seconds);
        ++seed;
      }
      auto stats = [](const std::vector<double>& v) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(var / v.size()));
      };
      const auto [tm, ts_] = stats(totals);
      const auto [rm, rs] = stats(ranks);
      const auto [cm, cs] = stats(constructs);
      std::cout << "n=" << n << " T=" << T << " reps=" << reps << ": total " << tm << " +- " << ts_
                << " s; rank " << rm << " +- " << rs << " s; construct(per-subsystem max) " << cm
                << " +- " << cs << " s\n";
    }
  }
  csv.close();

  RunManifest m;
  m.command = "bench";
  m.argv = argv.get<std::vector<std::string>>();
  m.config = {{"sizes", sizes}, {"horizons", horizons}, {"reps", reps}, {"seed", seed0}};
  m.outputs = {out};
  m.wall_seconds = seconds_since(t0);
  write_manifest(out + ".manifest.json", m);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"locality analysis and localized MPC validation for networked LTI systems"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  const Json argvj = argv_json(argc, argv);

  // gen
  GridGenConfig gen_cfg;
  std::string gen_out;
  double gen_rho = -1.0;
  auto* gen = app.add_subcommand("gen", "generate a random mesh benchmark system");
  gen->add_option("--n", gen_cfg.n, "mesh side length");
  gen->add_option("--edge-prob", gen_cfg.edge_prob, "edge sampling probability");
  gen->add_option("--actuation", gen_cfg.actuation_density, "fraction of actuated subsystems");
  gen->add_option("--dt", gen_cfg.dt, "discretization step");
  gen->add_option("--rho", gen_rho, "target spectral radius (default: leave unscaled)");
  gen->add_option("--seed", gen_cfg.seed, "RNG seed");
  gen->add_option("-o,--output", gen_out, "output system JSON")->required();

  // select
  std::string sel_system, sel_out;
  int sel_T = 15;
  int sel_dmax = -1;
  bool sel_all = false, sel_serial = false;
  CommonOpts sel_common;
  auto* sel = app.add_subcommand("select", "find the optimal locality size d");
  sel->add_option("--system", sel_system, "system JSON")->required();
  sel->add_option("--horizon", sel_T, "prediction horizon");
  sel->add_option("--d-max", sel_dmax, "largest d to try (default: graph diameter)");
  sel->add_flag("--all", sel_all, "evaluate every d up to d-max");
  sel->add_flag("--serial-rank", sel_serial, "use the serial SVD reference for the rank step");
  sel->add_option("-o,--output", sel_out, "report JSON");
  add_common(sel, sel_common);

  // analyze
  std::string an_system, an_out, an_d = "1", an_form = "locality-first", an_x0 = "ones";
  int an_T = 15;
  std::uint64_t an_seed = 0;
  CommonOpts an_common;
  auto* an = app.add_subcommand("analyze", "certificate for one locality pattern");
  an->add_option("--system", an_system, "system JSON")->required();
  an->add_option("--horizon", an_T, "prediction horizon");
  an->add_option("--d", an_d, "locality size (integer or 'full')");
  an->add_option("--formulation", an_form, "locality-first | dynamics-first")
      ->check(CLI::IsMember({"locality-first", "dynamics-first"}));
  an->add_option("--x0", an_x0, "ones | random | comma list (zero vector rejected)");
  an->add_option("--seed", an_seed, "seed for --x0 random");
  an->add_option("-o,--output", an_out, "certificate JSON");
  add_common(an, an_common);

  // sim
  std::string sim_system, sim_out, sim_d = "1", sim_obj, sim_x0 = "random";
  int sim_T = 10, sim_steps = 20;
  std::uint64_t sim_seed = 0;
  bool sim_skip_global = false;
  CommonOpts sim_common;
  auto* sim = app.add_subcommand("sim", "closed-loop localized vs global MPC comparison");
  sim->add_option("--system", sim_system, "system JSON")->required();
  sim->add_option("--horizon", sim_T, "prediction horizon");
  sim->add_option("--d", sim_d, "locality size (integer or 'full')");
  sim->add_option("--steps", sim_steps, "closed-loop steps");
  sim->add_option("--objective", sim_obj, "objective JSON (default: random diagonal LQR)");
  sim->add_option("--x0", sim_x0, "random | zeros | comma list");
  sim->add_option("--seed", sim_seed, "seed for the random objective / x0");
  sim->add_flag("--skip-global", sim_skip_global, "run only the localized controller");
  sim->add_option("-o,--output", sim_out, "output prefix for trace CSVs and comparison JSON");
  add_common(sim, sim_common);

  // sweep
  int sw_trials = 100, sw_nmin = 2, sw_nmax = 4, sw_tmin = 3, sw_tmax = 10;
  double sw_amin = 0.2, sw_amax = 1.0, sw_rmin = 0.5, sw_rmax = 2.5;
  std::uint64_t sw_seed = 0;
  std::string sw_out = "sweep.csv";
  CommonOpts sw_common;
  auto* sw = app.add_subcommand("sweep", "randomized selection sweep, one CSV row per trial");
  sw->add_option("--trials", sw_trials, "number of trials");
  sw->add_option("--seed", sw_seed, "base seed");
  sw->add_option("--n-min", sw_nmin, "smallest mesh side");
  sw->add_option("--n-max", sw_nmax, "largest mesh side");
  sw->add_option("--act-min", sw_amin, "actuation density lower bound");
  sw->add_option("--act-max", sw_amax, "actuation density upper bound");
  sw->add_option("--rho-min", sw_rmin, "spectral radius lower bound");
  sw->add_option("--rho-max", sw_rmax, "spectral radius upper bound");
  sw->add_option("--t-min", sw_tmin, "horizon lower bound");
  sw->add_option("--t-max", sw_tmax, "horizon upper bound");
  sw->add_option("-o,--output", sw_out, "sweep CSV");
  add_common(sw, sw_common);

  // bench
  std::vector<int> bn_sizes{4, 5};
  std::vector<int> bn_horizons{5, 15};
  int bn_reps = 5;
  std::uint64_t bn_seed = 0;
  bool bn_serial = false;
  std::string bn_out = "bench.csv";
  auto* bn = app.add_subcommand("bench", "construct vs rank phase timings");
  bn->add_option("--sizes", bn_sizes, "mesh side lengths");
  bn->add_option("--horizons", bn_horizons, "prediction horizons");
  bn->add_option("--reps", bn_reps, "repetitions per point");
  bn->add_option("--seed", bn_seed, "base seed");
  bn->add_flag("--compare-serial", bn_serial, "also time the serial reference pipeline");
  bn->add_option("-o,--output", bn_out, "timing CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (gen_rho > 0.0) gen_cfg.target_spectral_radius = gen_rho;
      return run_gen(gen_cfg, gen_out, argvj);
    }
    if (sel->parsed()) {
      SelectionOptions opts;
      opts.eps = sel_common.tol_feas;
      opts.rank_tol = sel_common.tol_rank;
      opts.evaluate_all = sel_all;
      opts.gram_rank = !sel_serial;
      if (sel_dmax >= 0) opts.d_max = sel_dmax;
      return run_select(sel_system, sel_T, opts, sel_out, argvj);
    }
    if (an->parsed())
      return run_analyze(an_system, an_T, an_d, an_form, an_x0, an_seed, an_common, an_out, argvj);
    if (sim->parsed())
      return run_sim(sim_system, sim_T, sim_d, sim_steps, sim_obj, sim_x0, sim_seed,
                     sim_skip_global, sim_common, sim_out, argvj);
    if (sw->parsed())
      return run_sweep(sw_trials, sw_seed, sw_nmin, sw_nmax, sw_amin, sw_amax, sw_rmin, sw_rmax,
                       sw_tmin, sw_tmax, sw_common, sw_out, argvj);
    if (bn->parsed())
      return run_bench(bn_sizes, bn_horizons, bn_reps, bn_seed, bn_serial, bn_out, argvj);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
