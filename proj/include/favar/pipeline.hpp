#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "favar/error.hpp"

namespace favar {

enum class Stage {
  Config = 1,
  Panel = 2,
  Factors = 3,
  Smoothing = 4,
  Narrative = 5,
  Var = 6,
  Identify = 7,
  Analysis = 8,
  Report = 9,
};

std::string stage_name(Stage s);

// Error tagged with the pipeline stage it halted; the CLI maps the stage
// to a distinct exit code.
struct StageError : Error {
  Stage stage;
  StageError(Stage s, const std::string& msg)
      : Error(stage_name(s) + ": " + msg), stage(s) {}
};

// Flat sectioned config ("section.key" keys). Every knob the pipeline uses
// is visible here and overridable from the CLI.
struct PipelineConfig {
  // io
  std::string panel_path;
  std::string events_path;
  std::string out_dir = "out";
  // panel
  std::string balance_policy = "drop_series";  // or drop_rows
  // factors
  int r = 0;  // 0 = choose by ICR2
  int r_max = 8;
  bool diagonal_phi = false;
  // smoothing
  bool use_smoothed_factors = true;
  // narrative
  bool exogenous_only = true;
  std::vector<int> granger_lags = {4, 8, 12};
  std::vector<std::string> granger_predictors;  // panel ids
  std::string federal_pit_id;  // optional panel ids for the federal columns
  std::string federal_cit_id;
  // var
  std::vector<std::string> observables;  // panel ids, Table-5 order
  int p = 4;
  bool tax_endogenous = true;
  // identify
  std::string identify_mode = "rejection";  // rejection | penalty
  int restricted_horizon = 4;
  int draws = 1000;
  long max_attempts = 1000000;
  double penalty_slope = 100.0;
  std::map<std::string, std::string> sign_table;  // variable id -> "+"/"-"
  // analysis
  int horizon = 20;
  double gamma = 0.90;
  int bootstrap_b = 100;
  bool bootstrap_reidentify = false;
  std::vector<int> cum_horizons = {4, 12};
  std::vector<int> fevd_horizons = {1, 5, 10, 15, 20};
  bool cum_include_impact = false;
  std::vector<std::string> observable_irf_ids;  // empty = all non-VAR panel series
  std::vector<int> reliability_r = {1, 2, 3, 4, 5};
  long reliability_attempts = 2000;
  // run
  std::uint64_t seed = 0;
  bool seed_set = false;

  // Raw key -> value view of the effective configuration.
  std::map<std::string, std::string> flat() const;
};

PipelineConfig parse_config_file(const std::string& path);
PipelineConfig parse_config_text(const std::string& text);

// Applies "section.key=value" overrides (CLI flags route through this).
void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Validates ranges and mandatory fields; throws StageError(Config).
void validate_config(const PipelineConfig& cfg);

// FNV-1a hash of the effective configuration, hex.
std::string config_hash(const PipelineConfig& cfg);

struct StageTiming {
  std::string name;
  double ms = 0.0;
};

struct RunManifest {
  std::string tool_version;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<std::string, std::string> config;
  std::string status = "ok";
  std::string failed_stage;
  bool partial = false;
  std::vector<StageTiming> timings;
  std::vector<std::string> outputs;
  std::map<std::string, std::string> notes;
};

// Stages included in a run; later stages imply their prerequisites.
enum RunParts : unsigned {
  kRunPanel = 1u << 0,
  kRunFactors = 1u << 1,
  kRunSmoothing = 1u << 2,
  kRunNarrative = 1u << 3,
  kRunVar = 1u << 4,
  kRunIdentify = 1u << 5,
  kRunIrf = 1u << 6,
  kRunFevd = 1u << 7,
  kRunDiagnose = 1u << 8,
  kRunReport = 1u << 9,
  kRunAll = 0x3ffu,
};

// Executes the requested stages, writes their artifacts under
// cfg.out_dir, and writes manifest.json (also on failure, flagged
// partial). Throws StageError after recording the failure.
RunManifest run_pipeline(const PipelineConfig& cfg, unsigned parts = kRunAll);

std::string tool_version();

}  // namespace favar
