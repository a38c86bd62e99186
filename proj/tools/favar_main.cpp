#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "favar/csv.hpp"
#include "favar/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;  // section.key=value overrides
  std::string panel, events, out_dir, mode;
  long seed = -1;
  int r = -1, p = -1, draws = -1, bootstrap = -1, horizon = -1, k_horizon = -1;
  double gamma = -1.0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config_path, "Pipeline config file (INI sections)");
  cmd->add_option("--set", f.sets, "Override a config key, e.g. --set identify.draws=500");
  cmd->add_option("--panel", f.panel, "Panel CSV path (io.panel)");
  cmd->add_option("--events", f.events, "Narrative events CSV path (io.events)");
  cmd->add_option("--out", f.out_dir, "Output directory (io.out_dir)");
  cmd->add_option("--seed", f.seed, "Master seed (run.seed)");
  cmd->add_option("--r", f.r, "Number of factors, 0 = auto (factors.r)");
  cmd->add_option("--p", f.p, "VAR lag order (var.p)");
  cmd->add_option("--draws", f.draws, "Accepted draws target (identify.draws)");
  cmd->add_option("--mode", f.mode, "Identification mode (identify.mode)");
  cmd->add_option("--k", f.k_horizon, "Restricted horizon (identify.k_horizon)");
  cmd->add_option("--bootstrap", f.bootstrap, "Bootstrap replications (analysis.bootstrap)");
  cmd->add_option("--gamma", f.gamma, "Band level (analysis.gamma)");
  cmd->add_option("--horizon", f.horizon, "IRF horizon (analysis.horizon)");
}

favar::PipelineConfig build_config(const CommonFlags& f) {
  favar::PipelineConfig cfg;
  if (!f.config_path.empty()) cfg = favar::parse_config_file(f.config_path);
  auto set = [&](const std::string& key, const std::string& value) {
    try {
      favar::apply_override(cfg, key, value);
    } catch (const favar::Error& e) {
      throw favar::StageError(favar::Stage::Config, e.what());
    }
  };
  if (!f.panel.empty()) set("io.panel", f.panel);
  if (!f.events.empty()) set("io.events", f.events);
  if (!f.out_dir.empty()) set("io.out_dir", f.out_dir);
  if (f.seed >= 0) set("run.seed", std::to_string(f.seed));
  if (f.r >= 0) set("factors.r", std::to_string(f.r));
  if (f.p >= 0) set("var.p", std::to_string(f.p));
  if (f.draws >= 0) set("identify.draws", std::to_string(f.draws));
  if (!f.mode.empty()) set("identify.mode", f.mode);
  if (f.k_horizon >= 0) set("identify.k_horizon", std::to_string(f.k_horizon));
  if (f.bootstrap >= 0) set("analysis.bootstrap", std::to_string(f.bootstrap));
  if (f.gamma >= 0) set("analysis.gamma", favar::fmt_num(f.gamma));
  if (f.horizon >= 0) set("analysis.horizon", std::to_string(f.horizon));
  for (const auto& kv : f.sets) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw favar::StageError(favar::Stage::Config, "--set wants key=value, got '" + kv + "'");
    set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

int run_parts(const CommonFlags& f, unsigned parts) {
  try {
    favar::PipelineConfig cfg = build_config(f);
    favar::RunManifest manifest = favar::run_pipeline(cfg, parts);
    std::printf("ok: %zu artifacts in %s\n", manifest.outputs.size(), cfg.out_dir.c_str());
    return 0;
  } catch (const favar::StageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.stage);
  } catch (const favar::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-augmented VAR toolkit with narrative tax shock identification"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    unsigned parts;
  };
  const std::vector<Sub> subs = {
      {"ingest", "Load, transform and standardize the panel", favar::kRunPanel},
      {"factors", "Estimate factors and information criteria", favar::kRunFactors},
      {"smooth", "Trend-cycle decomposition of the factors", favar::kRunSmoothing},
      {"granger", "Narrative tax rates and Granger exogeneity tests", favar::kRunNarrative},
      {"estimate", "Fit the reduced-form VAR", favar::kRunVar},
      {"identify", "Sign-restriction identification of the tax shocks", favar::kRunIdentify},
      {"irf", "Structural IRFs with bootstrap bands", favar::kRunIrf},
      {"fevd", "Forecast error variance decomposition", favar::kRunFevd},
      {"diagnose", "Median-target and reliability diagnostics", favar::kRunDiagnose},
      {"report", "Everything plus the markdown report", favar::kRunAll},
      {"run-all", "Full pipeline, all artifacts", favar::kRunAll},
  };

  std::vector<CommonFlags> flags(subs.size());
  std::vector<std::pair<CLI::App*, unsigned>> cmds;
  for (size_t i = 0; i < subs.size(); ++i) {
    CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
    add_common_flags(cmd, flags[i]);
    cmds.emplace_back(cmd, subs[i].parts);
  }

  CLI11_PARSE(app, argc, argv);

  for (size_t i = 0; i < cmds.size(); ++i)
    if (cmds[i].first->parsed()) return run_parts(flags[i], cmds[i].second);
  return 1;
}
