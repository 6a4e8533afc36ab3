#pragma once

#include "slsloc/locality_selection.hpp"
#include "slsloc/mpc.hpp"

#include "json.hpp"

#include <string>

namespace slsloc {

inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::json;

// System file: {"A": row-major array of arrays, "B": ..., "state_owner":
// 1-based ids, "input_owner": 1-based ids, "meta": optional object}.
LtiNetworkSystem system_from_json(const Json& j);
Json system_to_json(const LtiNetworkSystem& sys, const Json& meta = Json::object());

LtiNetworkSystem load_system(const std::string& path);
void save_system(const std::string& path, const LtiNetworkSystem& sys,
                 const Json& meta = Json::object());

// Objective file: {"Q": diag entries, "R": diag entries, optional
// "Q_terminal", optional "state_lo"/"state_hi"/"input_lo"/"input_hi"
// (null entries mean unbounded)}.
MpcSpec objective_from_json(const Json& j, const LtiNetworkSystem& sys, int horizon);
Json objective_to_json(const MpcSpec& spec);
MpcSpec load_objective(const std::string& path, const LtiNetworkSystem& sys, int horizon);

Json certificate_to_json(const PerformanceCertificate& cert);
Json selection_report_to_json(const LocalitySelectionReport& report);

// Trace CSV: tau, state..., input..., step_cost, cum_cost. The final state
// row carries empty input/cost fields.
void write_trace_csv(const std::string& path, const SimTrace& trace);

/// Everything needed to reproduce a CLI run: the exact argv, the effective
/// configuration, seeds, and the artifacts written.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  Json config;
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& m);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

Mat mat_from_json(const Json& j);
Json mat_to_json(const Mat& m);

}  // namespace slsloc
