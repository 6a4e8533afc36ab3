#include "slsloc/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace slsloc {

namespace {

std::vector<int> owners_from_json(const Json& j, const char* field) {
  std::vector<int> out;
  for (const auto& v : j.at(field)) out.push_back(v.get<int>() - 1);  // file ids are 1-based
  return out;
}

Json owners_to_json(const std::vector<int>& owners) {
  Json arr = Json::array();
  for (int o : owners) arr.push_back(o + 1);
  return arr;
}

Vec vec_from_json(const Json& j) {
  Vec v(j.size());
  Index i = 0;
  for (const auto& e : j) v(i++) = e.get<double>();
  return v;
}

Json vec_to_json(const Vec& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vec bound_from_json(const Json& j, Index n, double fallback) {
  if (j.is_null()) return Vec::Constant(n, fallback);
  Vec v(n);
  Index i = 0;
  for (const auto& e : j) {
    if (i >= n) throw std::invalid_argument("objective: bound length mismatch");
    v(i++) = e.is_null() ? fallback : e.get<double>();
  }
  if (i != n) throw std::invalid_argument("objective: bound length mismatch");
  return v;
}

}  // namespace

Mat mat_from_json(const Json& j) {
  const Index rows = static_cast<Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  const Index cols = static_cast<Index>(j.at(0).size());
  Mat m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Index>(row.size()) != cols)
      throw std::invalid_argument("matrix: ragged rows in JSON");
    for (Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  if (!all_finite(m)) throw std::invalid_argument("matrix: non-finite entries in JSON");
  return m;
}

Json mat_to_json(const Mat& m) {
  Json rows = Json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

LtiNetworkSystem system_from_json(const Json& j) {
  LtiNetworkSystem sys;
  sys.A = mat_from_json(j.at("A"));
  sys.B = mat_from_json(j.at("B"));
  if (sys.B.rows() == 0) sys.B = Mat::Zero(sys.A.rows(), 0);  // unactuated system
  sys.partition.state_owner = owners_from_json(j, "state_owner");
  sys.partition.input_owner = owners_from_json(j, "input_owner");
  int max_owner = -1;
  for (int o : sys.partition.state_owner) max_owner = std::max(max_owner, o);
  for (int o : sys.partition.input_owner) max_owner = std::max(max_owner, o);
  sys.partition.num_subsystems = max_owner + 1;
  validate_system(sys);
  return sys;
}

Json system_to_json(const LtiNetworkSystem& sys, const Json& meta) {
  Json j;
  j["A"] = mat_to_json(sys.A);
  j["B"] = mat_to_json(sys.B);
  j["state_owner"] = owners_to_json(sys.partition.state_owner);
  j["input_owner"] = owners_to_json(sys.partition.input_owner);
  if (!meta.empty()) j["meta"] = meta;
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setw(2) << j << "\n";
}

LtiNetworkSystem load_system(const std::string& path) { return system_from_json(read_json_file(path)); }

void save_system(const std::string& path, const LtiNetworkSystem& sys, const Json& meta) {
  write_json_file(path, system_to_json(sys, meta));
}

MpcSpec objective_from_json(const Json& j, const LtiNetworkSystem& sys, int horizon) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  MpcSpec spec;
  spec.horizon = horizon;
  spec.q_state = vec_from_json(j.at("Q"));
  spec.r_input = vec_from_json(j.at("R"));
  if (j.contains("Q_terminal") && !j.at("Q_terminal").is_null())
    spec.q_terminal = vec_from_json(j.at("Q_terminal"));
  spec.state_bounds.lo = bound_from_json(j.value("state_lo", Json()), sys.n_x(), -inf);
  spec.state_bounds.hi = bound_from_json(j.value("state_hi", Json()), sys.n_x(), inf);
  spec.input_bounds.lo = bound_from_json(j.value("input_lo", Json()), sys.n_u(), -inf);
  spec.input_bounds.hi = bound_from_json(j.value("input_hi", Json()), sys.n_u(), inf);
  validate_mpc_spec(sys, spec);
  return spec;
}

Json objective_to_json(const MpcSpec& spec) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto bound = [&](const Vec& v, double unb) {
    Json arr = Json::array();
    for (Index i = 0; i < v.size(); ++i) {
      if (v(i) == unb)
        arr.push_back(nullptr);
      else
        arr.push_back(v(i));
    }
    return arr;
  };
  Json j;
  j["Q"] = vec_to_json(spec.q_state);
  j["R"] = vec_to_json(spec.r_input);
  if (spec.q_terminal.size() > 0) j["Q_terminal"] = vec_to_json(spec.q_terminal);
  j["state_lo"] = bound(spec.state_bounds.lo, -inf);
  j["state_hi"] = bound(spec.state_bounds.hi, inf);
  j["input_lo"] = bound(spec.input_bounds.lo, -inf);
  j["input_hi"] = bound(spec.input_bounds.hi, inf);
  return j;
}

MpcSpec load_objective(const std::string& path, const LtiNetworkSystem& sys, int horizon) {
  return objective_from_json(read_json_file(path), sys, horizon);
}

Json certificate_to_json(const PerformanceCertificate& cert) {
  Json j;
  j["feasible"] = cert.feasible;
  j["feasibility_residual"] = cert.feasibility_residual;
  j["rank_found"] = cert.rank_found;
  j["rank_target"] = cert.rank_target;
  j["certified_optimal"] = cert.certified_optimal;
  j["formulation"] = to_string(cert.formulation);
  j["tolerance"] = cert.tolerance;
  j["rank_tolerance_used"] = cert.rank_tolerance_used;
  j["wall_times"] = {{"construct_seconds", cert.construct_seconds},
                     {"rank_seconds", cert.rank_seconds}};
  return j;
}

Json selection_report_to_json(const LocalitySelectionReport& report) {
  Json j;
  if (report.d_optimal)
    j["d_optimal"] = *report.d_optimal;
  else
    j["d_optimal"] = nullptr;
  j["d_max"] = report.d_max;
  j["x0_mode"] = report.x0_mode;
  if (!report.diagnostic.empty()) j["diagnostic"] = report.diagnostic;
  Json per_d = Json::array();
  for (const auto& rec : report.per_d) {
    Json r;
    r["d"] = rec.d;
    r["all_feasible"] = rec.all_feasible;
    r["rank"] = rec.rank;
    r["target"] = rec.target;
    r["certified"] = rec.certified;
    r["infeasible_subsystems"] = rec.infeasible_subsystems;
    r["construct_wall_seconds"] = rec.construct_wall_seconds;
    r["construct_per_subsystem_max_seconds"] = rec.construct_per_subsystem_max_seconds;
    r["rank_seconds"] = rec.rank_seconds;
    per_d.push_back(std::move(r));
  }
  j["per_d"] = std::move(per_d);
  return j;
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  out << "tau";
  for (Index i = 0; i < trace.states.cols(); ++i) out << ",x" << i + 1;
  for (Index i = 0; i < trace.inputs.cols(); ++i) out << ",u" << i + 1;
  out << ",step_cost,cum_cost\n";
  for (Index t = 0; t < trace.states.rows(); ++t) {
    out << t;
    for (Index i = 0; i < trace.states.cols(); ++i) out << "," << trace.states(t, i);
    const bool has_input = t < trace.inputs.rows();
    for (Index i = 0; i < trace.inputs.cols(); ++i) {
      out << ",";
      if (has_input) out << trace.inputs(t, i);
    }
    out << ",";
    if (has_input) out << trace.step_costs(t);
    out << ",";
    if (has_input) out << trace.cum_costs(t);
    out << "\n";
  }
}

void write_manifest(const std::string& path, const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["tool_version"] = kToolVersion;
  j["config"] = m.config;
  j["outputs"] = m.outputs;
  j["wall_seconds"] = m.wall_seconds;
  write_json_file(path, j);
}

}  // namespace slsloc
