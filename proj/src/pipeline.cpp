#include "favar/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "favar/analysis.hpp"
#include "favar/csv.hpp"
#include "favar/factors.hpp"
#include "favar/identify.hpp"
#include "favar/narrative.hpp"
#include "favar/panel.hpp"
#include "favar/rng.hpp"
#include "favar/smoothing.hpp"
#include "favar/var_model.hpp"

namespace favar {

std::string tool_version() { return "favar 0.1.0"; }

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Config: return "config";
    case Stage::Panel: return "panel";
    case Stage::Factors: return "factors";
    case Stage::Smoothing: return "smoothing";
    case Stage::Narrative: return "narrative";
    case Stage::Var: return "var";
    case Stage::Identify: return "identify";
    case Stage::Analysis: return "analysis";
    case Stage::Report: return "report";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail("config key '" + key + "': expected a boolean, got '" + v + "'");
}

long to_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long x = std::stol(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail("config key '" + key + "': expected an integer, got '" + v + "'");
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail("config key '" + key + "': expected a number, got '" + v + "'");
}

std::vector<std::string> to_string_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> to_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  for (const auto& s : to_string_list(v)) out.push_back(static_cast<int>(to_long(s, key)));
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

void apply_override(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "io.panel") cfg.panel_path = value;
  else if (key == "io.events") cfg.events_path = value;
  else if (key == "io.out_dir") cfg.out_dir = value;
  else if (key == "panel.balance") cfg.balance_policy = value;
  else if (key == "factors.r") cfg.r = static_cast<int>(to_long(value, key));
  else if (key == "factors.r_max") cfg.r_max = static_cast<int>(to_long(value, key));
  else if (key == "factors.diagonal_phi") cfg.diagonal_phi = to_bool(value, key);
  else if (key == "smoothing.use_smoothed") cfg.use_smoothed_factors = to_bool(value, key);
  else if (key == "narrative.exogenous_only") cfg.exogenous_only = to_bool(value, key);
  else if (key == "narrative.granger_lags") cfg.granger_lags = to_int_list(value, key);
  else if (key == "narrative.predictors") cfg.granger_predictors = to_string_list(value);
  else if (key == "narrative.federal_pit") cfg.federal_pit_id = value;
  else if (key == "narrative.federal_cit") cfg.federal_cit_id = value;
  else if (key == "var.observables") cfg.observables = to_string_list(value);
  else if (key == "var.p") cfg.p = static_cast<int>(to_long(value, key));
  else if (key == "var.tax_entry") {
    if (value == "endogenous") cfg.tax_endogenous = true;
    else if (value == "exogenous") cfg.tax_endogenous = false;
    else fail("config key 'var.tax_entry' must be endogenous or exogenous");
  } else if (key == "identify.mode") cfg.identify_mode = value;
  else if (key == "identify.k_horizon") cfg.restricted_horizon = static_cast<int>(to_long(value, key));
  else if (key == "identify.draws") cfg.draws = static_cast<int>(to_long(value, key));
  else if (key == "identify.max_attempts") cfg.max_attempts = to_long(value, key);
  else if (key == "identify.penalty_slope") cfg.penalty_slope = to_double(value, key);
  else if (key.rfind("identify.sign.", 0) == 0) {
    std::string id = key.substr(std::string("identify.sign.").size());
    if (id.empty()) fail("empty variable id in sign restriction key");
    cfg.sign_table[id] = value;
  } else if (key == "analysis.horizon") cfg.horizon = static_cast<int>(to_long(value, key));
  else if (key == "analysis.gamma") cfg.gamma = to_double(value, key);
  else if (key == "analysis.bootstrap") cfg.bootstrap_b = static_cast<int>(to_long(value, key));
  else if (key == "analysis.bootstrap_reidentify") cfg.bootstrap_reidentify = to_bool(value, key);
  else if (key == "analysis.cum_horizons") cfg.cum_horizons = to_int_list(value, key);
  else if (key == "analysis.fevd_horizons") cfg.fevd_horizons = to_int_list(value, key);
  else if (key == "analysis.cum_include_impact") cfg.cum_include_impact = to_bool(value, key);
  else if (key == "analysis.observable_irfs") cfg.observable_irf_ids = to_string_list(value);
  else if (key == "analysis.reliability_r") cfg.reliability_r = to_int_list(value, key);
  else if (key == "analysis.reliability_attempts") cfg.reliability_attempts = to_long(value, key);
  else if (key == "run.seed") {
    cfg.seed = static_cast<std::uint64_t>(to_long(value, key));
    cfg.seed_set = true;
  } else {
    fail("unknown config key '" + key + "'");
  }
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty()) fail("config line " + std::to_string(lineno) + ": key outside any section");
    apply_override(cfg, section + "." + key, value);
  }
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StageError(Stage::Config, "cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(Stage::Config, e.what());
  }
}

std::map<std::string, std::string> PipelineConfig::flat() const {
  std::map<std::string, std::string> m;
  m["io.panel"] = panel_path;
  m["io.events"] = events_path;
  m["io.out_dir"] = out_dir;
  m["panel.balance"] = balance_policy;
  m["factors.r"] = std::to_string(r);
  m["factors.r_max"] = std::to_string(r_max);
  m["factors.diagonal_phi"] = diagonal_phi ? "true" : "false";
  m["smoothing.use_smoothed"] = use_smoothed_factors ? "true" : "false";
  m["narrative.exogenous_only"] = exogenous_only ? "true" : "false";
  m["narrative.granger_lags"] = join_ints(granger_lags);
  m["narrative.predictors"] = join(granger_predictors);
  m["narrative.federal_pit"] = federal_pit_id;
  m["narrative.federal_cit"] = federal_cit_id;
  m["var.observables"] = join(observables);
  m["var.p"] = std::to_string(p);
  m["var.tax_entry"] = tax_endogenous ? "endogenous" : "exogenous";
  m["identify.mode"] = identify_mode;
  m["identify.k_horizon"] = std::to_string(restricted_horizon);
  m["identify.draws"] = std::to_string(draws);
  m["identify.max_attempts"] = std::to_string(max_attempts);
  m["identify.penalty_slope"] = fmt_num(penalty_slope);
  for (const auto& [id, s] : sign_table) m["identify.sign." + id] = s;
  m["analysis.horizon"] = std::to_string(horizon);
  m["analysis.gamma"] = fmt_num(gamma);
  m["analysis.bootstrap"] = std::to_string(bootstrap_b);
  m["analysis.bootstrap_reidentify"] = bootstrap_reidentify ? "true" : "false";
  m["analysis.cum_horizons"] = join_ints(cum_horizons);
  m["analysis.fevd_horizons"] = join_ints(fevd_horizons);
  m["analysis.cum_include_impact"] = cum_include_impact ? "true" : "false";
  m["analysis.observable_irfs"] = join(observable_irf_ids);
  m["analysis.reliability_r"] = join_ints(reliability_r);
  m["analysis.reliability_attempts"] = std::to_string(reliability_attempts);
  m["run.seed"] = seed_set ? std::to_string(seed) : "";
  return m;
}

void validate_config(const PipelineConfig& cfg) {
  auto bad = [](const std::string& msg) { throw StageError(Stage::Config, msg); };
  if (cfg.panel_path.empty()) bad("io.panel is required");
  if (!std::filesystem::exists(cfg.panel_path)) bad("panel file not found: " + cfg.panel_path);
  if (cfg.events_path.empty()) bad("io.events is required");
  if (!std::filesystem::exists(cfg.events_path)) bad("events file not found: " + cfg.events_path);
  if (!cfg.seed_set) bad("run.seed is required (no wall-clock seeding)");
  if (cfg.balance_policy != "drop_series" && cfg.balance_policy != "drop_rows")
    bad("panel.balance must be drop_series or drop_rows");
  if (cfg.r < 0) bad("factors.r must be >= 0 (0 selects by ICR2)");
  if (cfg.r_max < 1) bad("factors.r_max must be >= 1");
  if (cfg.p < 1) bad("var.p must be >= 1");
  if (cfg.observables.empty()) bad("var.observables must list at least one panel series");
  if (cfg.identify_mode != "rejection" && cfg.identify_mode != "penalty")
    bad("identify.mode must be rejection or penalty");
  if (cfg.restricted_horizon < 0) bad("identify.k_horizon must be >= 0");
  if (cfg.draws < 1) bad("identify.draws must be >= 1");
  if (cfg.max_attempts < 1) bad("identify.max_attempts must be >= 1");
  if (cfg.penalty_slope <= 0) bad("identify.penalty_slope must be positive");
  if (cfg.horizon < 1) bad("analysis.horizon must be >= 1");
  if (cfg.gamma <= 0.0 || cfg.gamma >= 1.0) bad("analysis.gamma must be in (0,1)");
  if (cfg.bootstrap_b < 100) bad("analysis.bootstrap must be >= 100");
  for (int h : cfg.cum_horizons)
    if (h < 0 || h > cfg.horizon) bad("analysis.cum_horizons entries must be in 0..horizon");
  for (int h : cfg.fevd_horizons)
    if (h < 1) bad("analysis.fevd_horizons entries must be >= 1");
  for (int l : cfg.granger_lags)
    if (l < 1) bad("narrative.granger_lags entries must be >= 1");
  for (int r : cfg.reliability_r)
    if (r < 1) bad("analysis.reliability_r entries must be >= 1");
  if (cfg.reliability_attempts < 1) bad("analysis.reliability_attempts must be >= 1");
}

std::string config_hash(const PipelineConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : cfg.flat()) {
    if (k == "io.out_dir") continue;  // where results land does not change them
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Pipeline state and artifact writers

namespace {

struct GrangerRow {
  std::string predictor;
  int lags = 0;
  std::optional<GrangerResult> fed_pit, narr_pit, fed_cit, narr_cit;
};

struct ShockResults {
  std::string name;                       // "pit" / "cit"
  DrawSet draws;                          // endogenous mode
  std::vector<Eigen::MatrixXd> cloud;     // per accepted draw, (H+1) x n
  Eigen::MatrixXd median_path;            // (H+1) x n
  Eigen::VectorXd benchmark_alpha;        // impulse column used for FEVD
  Eigen::VectorXd benchmark_q;
  std::optional<MtResult> mt;
  std::optional<IrfSet> bands;            // bootstrap
  std::optional<FevdTable> fevd_table;
  Eigen::MatrixXd observable_paths;       // (H+1) x m_obs
};

struct ReliabilityRow {
  int r = 0;
  double rmse = 0.0;
  double explained_pct = 0.0;
  double corr_pit = std::numeric_limits<double>::quiet_NaN();
  double corr_cit = std::numeric_limits<double>::quiet_NaN();
};

struct State {
  TimeSeriesPanel transformed;
  TimeSeriesPanel panel;  // standardized, balanced
  DropLog drops;
  int r_used = 0;
  ICResult ic;
  FactorModel fm;       // r_used factors
  FactorModel fm_wide;  // r_max factors, for the importance table
  FactorTransition transition;
  std::vector<TrendCycleDecomposition> fit_u, fit_c;
  std::vector<LrTestResult> lr;
  Eigen::MatrixXd factor_paths;  // T x r (smoothed or raw per config)
  NarrativeTaxSeries taxes;
  std::vector<GrangerRow> granger;
  std::vector<std::vector<std::string>> summary_stats;
  std::vector<std::string> var_ids;
  Eigen::MatrixXd var_data;  // T x n
  Eigen::MatrixXd exog;      // T x 2 in exogenous-tax mode
  VarModel var;
  SignRestrictionSpec spec_pit, spec_cit;
  ShockResults pit, cit;
  std::vector<ReliabilityRow> reliability;
  std::vector<std::string> observable_ids;  // loading-based IRF targets
  unsigned done = 0;  // RunParts mask of completed stages
};

class Emitter {
 public:
  Emitter(std::string dir, std::vector<std::string>* outputs)
      : dir_(std::move(dir)), outputs_(outputs) {
    std::filesystem::create_directories(dir_);
  }

  void csv(const std::string& name, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    write_csv_file(dir_ + "/" + name, header, rows);
    outputs_->push_back(name);
  }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ + "/" + name);
    if (!out) fail("cannot write " + dir_ + "/" + name);
    out << content;
    outputs_->push_back(name);
  }

 private:
  std::string dir_;
  std::vector<std::string>* outputs_;
};

std::string fmt_fixed(double x, int digits) {
  if (std::isnan(x)) return "";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

// ---------------------------------------------------------------------------
// Stage implementations

void stage_panel(const PipelineConfig& cfg, State& st, Emitter& em) {
  TimeSeriesPanel raw = load_panel_file(cfg.panel_path);
  st.transformed = apply_transforms(raw);
  BalancePolicy policy = cfg.balance_policy == "drop_rows" ? BalancePolicy::DropRows
                                                           : BalancePolicy::DropSeries;
  st.panel = standardize_and_balance(st.transformed, policy, &st.drops);

  // Emitted in loadable panel form (all series already stationary, code 1).
  std::vector<std::string> tcode_row{"tcode"}, group_row{"group"};
  for (const auto& m : st.panel.metas) {
    tcode_row.push_back("1");
    group_row.push_back(m.group);
  }
  std::vector<std::vector<std::string>> rows{tcode_row, group_row};
  for (int i = 0; i < st.panel.rows(); ++i) {
    std::vector<std::string> row{st.panel.dates[i].str()};
    for (int j = 0; j < st.panel.cols(); ++j) row.push_back(fmt_num(st.panel.values(i, j)));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"date"};
  for (const auto& m : st.panel.metas) header.push_back(m.id);
  em.csv("panel_standardized.csv", header, rows);

  std::vector<std::vector<std::string>> drop_rows;
  for (const auto& id : st.drops.dropped_series) drop_rows.push_back({"series", id});
  for (const auto& d : st.drops.dropped_rows) drop_rows.push_back({"row", d.str()});
  em.csv("balance_drop_log.csv", {"kind", "id_or_date"}, drop_rows);
}

void stage_factors(const PipelineConfig& cfg, State& st, Emitter& em) {
  const int max_r = std::min(st.panel.rows(), st.panel.cols());
  const int r_max = std::min(cfg.r_max, max_r);
  st.ic = select_num_factors(st.panel, r_max);
  st.r_used = cfg.r > 0 ? cfg.r : st.ic.r_hat_icr2;
  if (st.r_used > max_r) fail("factors.r exceeds min(N,T) = " + std::to_string(max_r));
  st.fm = estimate_factors(st.panel, st.r_used);
  st.fm_wide = r_max == st.r_used ? st.fm : estimate_factors(st.panel, r_max);
  st.transition = fit_factor_transition(st.fm, cfg.diagonal_phi);

  std::vector<std::string> fh{"date"};
  for (int k = 1; k <= st.r_used; ++k) fh.push_back("F" + std::to_string(k));
  std::vector<std::vector<std::string>> frows;
  for (int i = 0; i < st.panel.rows(); ++i) {
    std::vector<std::string> row{st.panel.dates[i].str()};
    for (int k = 0; k < st.r_used; ++k) row.push_back(fmt_num(st.fm.factors(i, k)));
    frows.push_back(std::move(row));
  }
  em.csv("factors.csv", fh, frows);

  std::vector<std::string> lh{"id"};
  for (int k = 1; k <= st.r_used; ++k) lh.push_back("F" + std::to_string(k));
  std::vector<std::vector<std::string>> lrows;
  for (int j = 0; j < st.panel.cols(); ++j) {
    std::vector<std::string> row{st.panel.metas[j].id};
    for (int k = 0; k < st.r_used; ++k) row.push_back(fmt_num(st.fm.loadings(j, k)));
    lrows.push_back(std::move(row));
  }
  em.csv("loadings.csv", lh, lrows);

  std::vector<std::vector<std::string>> icrows;
  for (int r = 1; r <= st.ic.r_max; ++r)
    icrows.push_back({std::to_string(r), fmt_num(st.ic.icr1[r - 1]), fmt_num(st.ic.icr2[r - 1])});
  em.csv("ic_table.csv", {"r", "ICR1", "ICR2"}, icrows);

  Eigen::VectorXd xi = idiosyncratic_cov(st.panel, st.fm);
  std::vector<std::vector<std::string>> xirows;
  for (int j = 0; j < st.panel.cols(); ++j)
    xirows.push_back({st.panel.metas[j].id, fmt_num(xi[j])});
  em.csv("idiosyncratic_variance.csv", {"id", "variance"}, xirows);

  std::vector<std::string> th{"equation"};
  for (int k = 1; k <= st.r_used; ++k) th.push_back("phi_F" + std::to_string(k));
  for (int k = 1; k <= st.r_used; ++k) th.push_back("se_F" + std::to_string(k));
  std::vector<std::vector<std::string>> trows;
  for (int i = 0; i < st.r_used; ++i) {
    std::vector<std::string> row{"F" + std::to_string(i + 1)};
    for (int k = 0; k < st.r_used; ++k) row.push_back(fmt_num(st.transition.phi(i, k)));
    for (int k = 0; k < st.r_used; ++k) row.push_back(fmt_num(st.transition.phi_se(i, k)));
    trows.push_back(std::move(row));
  }
  em.csv("factor_transition.csv", th, trows);

  // Table-3 layout: component importance for the first r_max components.
  std::vector<std::string> ph{"statistic"};
  for (int k = 1; k <= r_max; ++k) ph.push_back("PC" + std::to_string(k));
  std::vector<std::string> sd_row{"std_dev"}, pr_row{"proportion"}, cu_row{"cumulative"};
  for (int k = 0; k < r_max; ++k) {
    sd_row.push_back(fmt_num(std::sqrt(st.fm_wide.eigenvalues[k])));
    pr_row.push_back(fmt_num(st.fm_wide.explained[k]));
    cu_row.push_back(fmt_num(st.fm_wide.cumulative[k]));
  }
  em.csv("pc_importance.csv", ph, {sd_row, pr_row, cu_row});
}

void stage_smoothing(const PipelineConfig& cfg, State& st, Emitter& em) {
  const int t_len = st.panel.rows();
  st.factor_paths.resize(t_len, st.r_used);
  st.fit_u.clear();
  st.fit_c.clear();
  st.lr.clear();
  for (int k = 0; k < st.r_used; ++k) {
    Eigen::VectorXd f = st.fm.factors.col(k);
    st.fit_u.push_back(fit_local_linear_trend(f, false));
    st.fit_c.push_back(fit_local_linear_trend(f, true));
    st.lr.push_back(lr_test(st.fit_u.back().loglik, st.fit_c.back().loglik, t_len));
    st.factor_paths.col(k) = cfg.use_smoothed_factors ? st.fit_u.back().trend : f;

    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < t_len; ++i)
      rows.push_back({st.panel.dates[i].str(), fmt_num(f[i]), fmt_num(st.fit_u.back().trend[i]),
                      fmt_num(st.fit_u.back().cycle[i])});
    em.csv("factor" + std::to_string(k + 1) + "_trendcycle.csv",
           {"date", "factor", "trend", "cycle"}, rows);
  }

  std::vector<std::vector<std::string>> srows;
  for (int k = 0; k < st.r_used; ++k)
    srows.push_back({"F" + std::to_string(k + 1), fmt_num(st.fit_u[k].sigma2_omega),
                     fmt_num(st.fit_u[k].q), fmt_num(st.fit_u[k].loglik),
                     fmt_num(st.fit_c[k].loglik), fmt_num(st.lr[k].stat),
                     std::to_string(st.lr[k].dof), fmt_num(st.lr[k].p_value)});
  em.csv("smoothing_summary.csv",
         {"factor", "sigma2_omega_hat", "q_hat", "loglik_unconstrained", "loglik_constrained",
          "lr_stat", "lr_dof", "lr_p"},
         srows);
}

void stage_narrative(const PipelineConfig& cfg, State& st, Emitter& em) {
  auto events = load_events_file(cfg.events_path);
  st.taxes = compute_narrative_rates(events, st.panel.dates, cfg.exogenous_only);

  std::vector<std::vector<std::string>> rrows;
  for (size_t i = 0; i < st.taxes.dates.size(); ++i)
    rrows.push_back({st.taxes.dates[i].str(), fmt_num(st.taxes.pit_rate[i]),
                     fmt_num(st.taxes.cit_rate[i])});
  em.csv("narrative_rates.csv", {"date", "pit_rate", "cit_rate"}, rrows);

  auto col_of = [&](const std::string& id) -> std::optional<Eigen::VectorXd> {
    if (id.empty()) return std::nullopt;
    int j = st.panel.col_index(id);
    if (j < 0) fail("series '" + id + "' not found in the balanced panel");
    return st.panel.values.col(j);
  };
  std::optional<Eigen::VectorXd> fed_pit = col_of(cfg.federal_pit_id);
  std::optional<Eigen::VectorXd> fed_cit = col_of(cfg.federal_cit_id);

  st.granger.clear();
  for (const auto& pred_id : cfg.granger_predictors) {
    int j = st.panel.col_index(pred_id);
    if (j < 0) fail("granger predictor '" + pred_id + "' not found in the balanced panel");
    Eigen::VectorXd pred = st.panel.values.col(j);
    for (int lags : cfg.granger_lags) {
      GrangerRow row;
      row.predictor = pred_id;
      row.lags = lags;
      if (fed_pit) row.fed_pit = granger_exogeneity_test(*fed_pit, pred, lags, pred_id);
      row.narr_pit = granger_exogeneity_test(st.taxes.pit_rate, pred, lags, pred_id);
      if (fed_cit) row.fed_cit = granger_exogeneity_test(*fed_cit, pred, lags, pred_id);
      row.narr_cit = granger_exogeneity_test(st.taxes.cit_rate, pred, lags, pred_id);
      st.granger.push_back(std::move(row));
    }
  }

  // Table-2 layout: summary statistics of the tax rates (percent) and the
  // VAR observables on their transformed, unstandardized scale.
  st.summary_stats.clear();
  auto& stat_rows = st.summary_stats;
  auto stat_row = [&](const std::string& label, const Eigen::VectorXd& v) {
    double mean = v.mean();
    double sd = std::sqrt((v.array() - mean).square().sum() / (v.size() - 1));
    stat_rows.push_back(
        {label, fmt_num(mean), fmt_num(sd), fmt_num(v.maxCoeff()), fmt_num(v.minCoeff())});
  };
  stat_row("Narrative PIT", st.taxes.pit_rate);
  stat_row("Narrative CIT", st.taxes.cit_rate);
  auto transformed_col = [&](const std::string& id) -> Eigen::VectorXd {
    int j = st.transformed.col_index(id);
    if (j < 0) fail("series '" + id + "' not found in the transformed panel");
    return st.transformed.values.col(j);
  };
  if (!cfg.federal_pit_id.empty()) stat_row("Federal PIT", transformed_col(cfg.federal_pit_id));
  if (!cfg.federal_cit_id.empty()) stat_row("Federal CIT", transformed_col(cfg.federal_cit_id));
  for (const auto& id : cfg.observables) stat_row(id, transformed_col(id));
  em.csv("summary_stats.csv", {"variable", "mean", "std_dev", "max", "min"}, stat_rows);

  std::vector<std::vector<std::string>> grows;
  auto cellf = [](const std::optional<GrangerResult>& g) {
    return g ? fmt_num(g->f_stat) : "";
  };
  auto cellp = [](const std::optional<GrangerResult>& g) {
    return g ? fmt_num(g->p_value) : "";
  };
  for (const auto& row : st.granger)
    grows.push_back({row.predictor, std::to_string(row.lags), cellf(row.fed_pit),
                     cellp(row.fed_pit), cellf(row.narr_pit), cellp(row.narr_pit),
                     cellf(row.fed_cit), cellp(row.fed_cit), cellf(row.narr_cit),
                     cellp(row.narr_cit)});
  em.csv("granger_table.csv",
         {"predictor", "lags", "federal_pit_F", "federal_pit_p", "narrative_pit_F",
          "narrative_pit_p", "federal_cit_F", "federal_cit_p", "narrative_cit_F",
          "narrative_cit_p"},
         grows);
}

// VAR data in Table-5 order: observables, factors, then PIT and CIT when
// endogenous (exogenous mode moves the taxes to the exogenous block).
void build_var_inputs(const PipelineConfig& cfg, State& st) {
  const int t_len = st.panel.rows();
  std::vector<Eigen::VectorXd> cols;
  st.var_ids.clear();
  for (const auto& id : cfg.observables) {
    int j = st.panel.col_index(id);
    if (j < 0) fail("VAR observable '" + id + "' not found in the balanced panel");
    st.var_ids.push_back(id);
    cols.push_back(st.panel.values.col(j));
  }
  for (int k = 0; k < st.r_used; ++k) {
    st.var_ids.push_back("F" + std::to_string(k + 1));
    cols.push_back(st.factor_paths.col(k));
  }
  if (cfg.tax_endogenous) {
    st.var_ids.push_back("PIT");
    cols.push_back(st.taxes.pit_rate);
    st.var_ids.push_back("CIT");
    cols.push_back(st.taxes.cit_rate);
    st.exog.resize(0, 0);
  } else {
    st.exog.resize(t_len, 2);
    st.exog.col(0) = st.taxes.pit_rate;
    st.exog.col(1) = st.taxes.cit_rate;
  }
  st.var_data.resize(t_len, static_cast<int>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) st.var_data.col(static_cast<int>(j)) = cols[j];
}

void stage_var(const PipelineConfig& cfg, State& st, Emitter& em) {
  build_var_inputs(cfg, st);
  std::vector<std::string> exog_ids;
  if (!cfg.tax_endogenous) exog_ids = {"PIT", "CIT"};
  st.var = fit_var(st.var_data, cfg.p, st.var_ids, st.exog, exog_ids);
  em.text("var_model.json", var_model_to_json(st.var));
}

SignRestrictionSpec build_spec(const PipelineConfig& cfg, const std::vector<std::string>& var_ids,
                               const std::string& shock_id) {
  SignRestrictionSpec spec;
  spec.restricted_horizon = cfg.restricted_horizon;
  spec.penalty_slope = cfg.penalty_slope;
  spec.signs.assign(var_ids.size(), Sign::Unrestricted);
  for (const auto& [id, s] : cfg.sign_table) {
    auto it = std::find(var_ids.begin(), var_ids.end(), id);
    if (it == var_ids.end())
      fail("sign restriction on '" + id + "' which is not a VAR variable");
    spec.signs[it - var_ids.begin()] = parse_sign(s);
  }
  auto it = std::find(var_ids.begin(), var_ids.end(), shock_id);
  if (it == var_ids.end()) fail("shock variable '" + shock_id + "' not in the VAR");
  spec.shock_var = static_cast<int>(it - var_ids.begin());
  if (spec.restricted_count() == 0)
    fail("no sign restrictions configured (identify.sign.<id> keys)");
  return spec;
}

void stage_identify(const PipelineConfig& cfg, State& st, Emitter& em, RunManifest& manifest) {
  if (!cfg.tax_endogenous) return;  // nothing to rotate; taxes are observed shocks
  st.spec_pit = build_spec(cfg, st.var_ids, "PIT");
  st.spec_cit = build_spec(cfg, st.var_ids, "CIT");
  IdentifyMode mode =
      cfg.identify_mode == "penalty" ? IdentifyMode::Penalty : IdentifyMode::Rejection;

  auto run_one = [&](ShockResults& res, const SignRestrictionSpec& spec, std::uint64_t stream) {
    res.draws = identify_tax_shock(st.var, spec, cfg.draws, cfg.max_attempts,
                                   Rng::mix(cfg.seed, stream), mode);
    std::vector<std::vector<std::string>> rows;
    for (size_t d = 0; d < res.draws.accepted.size(); ++d) {
      const auto& iv = res.draws.accepted[d].iv;
      std::vector<std::string> row{std::to_string(d), fmt_num(iv.penalty),
                                   iv.meets_signs ? "1" : "0"};
      for (int j = 0; j < iv.alpha.size(); ++j) row.push_back(fmt_num(iv.alpha[j]));
      rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"draw", "penalty", "meets_signs"};
    for (const auto& id : st.var_ids) header.push_back("alpha_" + id);
    em.csv("impulse_draws_" + res.name + ".csv", header, rows);
    manifest.notes["acceptance_rate_" + res.name] = fmt_num(res.draws.acceptance_rate());
    manifest.notes["attempts_" + res.name] = std::to_string(res.draws.n_attempted);
  };
  st.pit.name = "pit";
  st.cit.name = "cit";
  run_one(st.pit, st.spec_pit, 101);
  run_one(st.cit, st.spec_cit, 102);
}

// Analysis for one endogenous-mode shock: draw cloud at the full horizon,
// median target, bootstrap bands, FEVD, observable paths.
void analyze_shock(const PipelineConfig& cfg, State& st, ShockResults& res,
                   const SignRestrictionSpec& spec, std::uint64_t boot_stream,
                   const Eigen::MatrixXd& obs_loadings, unsigned parts) {
  std::vector<Eigen::MatrixXd> psi = reduced_form_irf(st.var, cfg.horizon);
  res.cloud.clear();
  res.cloud.reserve(res.draws.accepted.size());
  for (const auto& d : res.draws.accepted) res.cloud.push_back(structural_irf(psi, d.iv.alpha));

  if (res.cloud.size() >= 2) {
    res.mt = median_target_select(res.cloud);
    const auto& sel = res.draws.accepted[res.mt->selected_draw].iv;
    res.benchmark_alpha = sel.alpha;
    res.benchmark_q = sel.q;
  } else {
    res.benchmark_alpha = res.draws.accepted.front().iv.alpha;
    res.benchmark_q = res.draws.accepted.front().iv.q;
  }
  IrfSet cloud_set = IrfSet::from_draws(res.cloud, cfg.gamma);
  res.median_path = cloud_set.median;

  if (parts & kRunIrf) {
    ImpulseVector bench;
    bench.q = res.benchmark_q;
    bench.alpha = res.benchmark_alpha;
    BootstrapConfig bc;
    bc.replications = cfg.bootstrap_b;
    bc.gamma = cfg.gamma;
    bc.horizon = cfg.horizon;
    bc.seed = Rng::mix(cfg.seed, boot_stream);
    bc.reidentify = cfg.bootstrap_reidentify;
    bc.reident_attempts = cfg.reliability_attempts;
    res.bands = bootstrap_bands(st.var_data, st.var, spec, bench, bc, st.exog);
    res.observable_paths = res.median_path * obs_loadings.transpose();
  }
  if (parts & kRunFevd) res.fevd_table = fevd(st.var, res.benchmark_alpha, cfg.fevd_horizons);
}

// Exogenous-tax mode: the impulse is the estimated dynamic-multiplier
// column scaled to a one-s.d. cut of the observed tax series.
void analyze_shock_exog(const PipelineConfig& cfg, State& st, ShockResults& res, int tax_col,
                        std::uint64_t boot_stream, const Eigen::MatrixXd& obs_loadings,
                        unsigned parts) {
  Eigen::VectorXd tax = st.exog.col(tax_col);
  double mean = tax.mean();
  double sd = std::sqrt((tax.array() - mean).square().sum() / (tax.size() - 1));
  if (sd <= 0.0) fail("tax series " + res.name + " has zero variance");
  Eigen::VectorXd alpha = -sd * st.var.exog_coeffs.col(tax_col);
  res.benchmark_alpha = alpha;
  res.median_path = structural_irf(st.var, alpha, cfg.horizon);

  if (parts & kRunIrf) {
    BootstrapConfig bc;
    bc.replications = cfg.bootstrap_b;
    bc.gamma = cfg.gamma;
    bc.horizon = cfg.horizon;
    bc.seed = Rng::mix(cfg.seed, boot_stream);
    ImpulseMapper mapper = [tax_col, sd](const VarModel& refit, int) {
      return Eigen::VectorXd(-sd * refit.exog_coeffs.col(tax_col));
    };
    res.bands = bootstrap_bands(st.var_data, st.var, mapper, bc, st.exog);
    res.observable_paths = res.median_path * obs_loadings.transpose();
  }

  if (parts & kRunFevd) {
    // Taxes treated as orthogonal white-noise shocks with their sample
    // variances in the forecast-error total.
    int h_max = *std::max_element(cfg.fevd_horizons.begin(), cfg.fevd_horizons.end());
    std::vector<Eigen::MatrixXd> psi = reduced_form_irf(st.var, h_max - 1);
    Eigen::VectorXd sds(st.exog.cols());
    for (int k = 0; k < st.exog.cols(); ++k) {
      double m = st.exog.col(k).mean();
      sds[k] = std::sqrt((st.exog.col(k).array() - m).square().sum() / (st.exog.rows() - 1));
    }
    FevdTable table;
    table.horizons = cfg.fevd_horizons;
    const int n = st.var.n();
    table.shares.resize(n, static_cast<int>(cfg.fevd_horizons.size()));
    Eigen::VectorXd shock_acc = Eigen::VectorXd::Zero(n), total_acc = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd shock_cum(h_max, n), total_cum(h_max, n);
    for (int s = 0; s < h_max; ++s) {
      shock_acc += (psi[s] * alpha).array().square().matrix();
      total_acc += (psi[s] * st.var.sigma_u * psi[s].transpose()).diagonal();
      for (int k = 0; k < st.exog.cols(); ++k)
        total_acc += (psi[s] * (sds[k] * st.var.exog_coeffs.col(k))).array().square().matrix();
      shock_cum.row(s) = shock_acc.transpose();
      total_cum.row(s) = total_acc.transpose();
    }
    for (size_t k = 0; k < cfg.fevd_horizons.size(); ++k)
      for (int j = 0; j < n; ++j)
        table.shares(j, static_cast<int>(k)) =
            100.0 * shock_cum(cfg.fevd_horizons[k] - 1, j) / total_cum(cfg.fevd_horizons[k] - 1, j);
    res.fevd_table = table;
  }
}

void emit_shock_outputs(const PipelineConfig& cfg, const State& st, const ShockResults& res,
                        Emitter& em, unsigned parts) {
  if (parts & kRunIrf) {
    // The band file is one coherent percentile set from the bootstrap
    // cloud; the sign-draw median goes to the mt_* comparison file.
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < st.var.n(); ++j)
      for (int h = 0; h <= cfg.horizon; ++h)
        rows.push_back({st.var_ids[j], std::to_string(h), fmt_num(res.bands->median(h, j)),
                        fmt_num(res.bands->lower(h, j)), fmt_num(res.bands->upper(h, j))});
    em.csv("irf_" + res.name + ".csv", {"variable", "horizon", "median", "lower", "upper"}, rows);

    if (res.mt) {
      const Eigen::MatrixXd& mt_path = res.cloud[res.mt->selected_draw];
      std::vector<std::vector<std::string>> mtrows;
      for (int j = 0; j < st.var.n(); ++j)
        for (int h = 0; h <= cfg.horizon; ++h)
          mtrows.push_back({st.var_ids[j], std::to_string(h), fmt_num(mt_path(h, j)),
                            fmt_num(res.median_path(h, j)), fmt_num(res.bands->lower(h, j)),
                            fmt_num(res.bands->upper(h, j))});
      em.csv("mt_irf_" + res.name + ".csv",
             {"variable", "horizon", "mt_response", "draw_median", "lower", "upper"}, mtrows);
    }

    if (res.observable_paths.size() > 0) {
      std::vector<std::vector<std::string>> orows;
      for (size_t m = 0; m < st.observable_ids.size(); ++m)
        for (int h = 0; h <= cfg.horizon; ++h)
          orows.push_back({st.observable_ids[m], std::to_string(h),
                           fmt_num(res.observable_paths(h, static_cast<int>(m)))});
      em.csv("observable_irf_" + res.name + ".csv", {"variable", "horizon", "response"}, orows);
    }
  }

  if (parts & kRunFevd) {
    std::vector<std::string> header{"variable"};
    for (int h : res.fevd_table->horizons) header.push_back("h" + std::to_string(h));
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < st.var.n(); ++j) {
      std::vector<std::string> row{st.var_ids[j]};
      for (int k = 0; k < res.fevd_table->shares.cols(); ++k)
        row.push_back(fmt_num(res.fevd_table->shares(j, k)));
      rows.push_back(std::move(row));
    }
    em.csv("fevd_" + res.name + ".csv", header, rows);
  }

  if ((parts & kRunDiagnose) && res.mt) {
    std::vector<std::vector<std::string>> rows;
    for (size_t d = 0; d < res.mt->per_draw_gaps.size(); ++d)
      rows.push_back({std::to_string(d), fmt_num(res.mt->per_draw_gaps[d]),
                      static_cast<int>(d) == res.mt->selected_draw ? "1" : "0"});
    em.csv("mt_report_" + res.name + ".csv", {"draw", "gap", "selected"}, rows);
  }
}

void stage_analysis(const PipelineConfig& cfg, State& st, Emitter& em, RunManifest& manifest,
                    unsigned parts) {
  // Loading-based IRF targets: configured ids, else every panel series not
  // already in the VAR.
  st.observable_ids = cfg.observable_irf_ids;
  if (st.observable_ids.empty()) {
    for (const auto& m : st.panel.metas)
      if (std::find(st.var_ids.begin(), st.var_ids.end(), m.id) == st.var_ids.end())
        st.observable_ids.push_back(m.id);
  }
  Eigen::MatrixXd targets(st.panel.rows(), static_cast<int>(st.observable_ids.size()));
  for (size_t m = 0; m < st.observable_ids.size(); ++m) {
    int j = st.panel.col_index(st.observable_ids[m]);
    if (j < 0) fail("observable IRF target '" + st.observable_ids[m] + "' not in the panel");
    targets.col(static_cast<int>(m)) = st.panel.values.col(j);
  }
  Eigen::MatrixXd obs_loadings = observable_loadings(targets, st.var_data);

  if (cfg.tax_endogenous) {
    analyze_shock(cfg, st, st.pit, st.spec_pit, 201, obs_loadings, parts);
    analyze_shock(cfg, st, st.cit, st.spec_cit, 202, obs_loadings, parts);
  } else {
    st.pit.name = "pit";
    st.cit.name = "cit";
    analyze_shock_exog(cfg, st, st.pit, 0, 201, obs_loadings, parts);
    analyze_shock_exog(cfg, st, st.cit, 1, 202, obs_loadings, parts);
  }
  emit_shock_outputs(cfg, st, st.pit, em, parts);
  emit_shock_outputs(cfg, st, st.cit, em, parts);

  if (parts & kRunIrf) {
    // Table-6 layout: cumulative responses per shock and horizon.
    Eigen::MatrixXd cum_pit =
        cumulative_irf(st.pit.median_path, cfg.cum_horizons, cfg.cum_include_impact);
    Eigen::MatrixXd cum_cit =
        cumulative_irf(st.cit.median_path, cfg.cum_horizons, cfg.cum_include_impact);
    std::vector<std::string> header{"variable"};
    for (int h : cfg.cum_horizons) header.push_back("pit_h" + std::to_string(h));
    for (int h : cfg.cum_horizons) header.push_back("cit_h" + std::to_string(h));
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < st.var.n(); ++j) {
      std::vector<std::string> row{st.var_ids[j]};
      for (int k = 0; k < cum_pit.cols(); ++k) row.push_back(fmt_num(cum_pit(j, k)));
      for (int k = 0; k < cum_cit.cols(); ++k) row.push_back(fmt_num(cum_cit(j, k)));
      rows.push_back(std::move(row));
    }
    em.csv("cumulative_irf.csv", header, rows);
  }

  if (parts & kRunDiagnose) {
    st.reliability.clear();
    const int max_r = std::min(st.panel.rows(), st.panel.cols());
    for (int r : cfg.reliability_r) {
      if (r > max_r) continue;
      ReliabilityRow row;
      row.r = r;
      FactorModel fm_r = r == st.r_used ? st.fm : estimate_factors(st.panel, r);
      row.rmse = std::sqrt(fm_r.ssr / (st.panel.rows() * static_cast<double>(st.panel.cols())));
      row.explained_pct = 100.0 * fm_r.cumulative[r - 1];

      if (cfg.tax_endogenous) {
        Eigen::MatrixXd paths(st.panel.rows(), r);
        for (int k = 0; k < r; ++k)
          paths.col(k) = cfg.use_smoothed_factors
                             ? fit_local_linear_trend(fm_r.factors.col(k), false).trend
                             : fm_r.factors.col(k);
        std::vector<std::string> ids = cfg.observables;
        std::vector<Eigen::VectorXd> cols;
        for (const auto& id : cfg.observables)
          cols.push_back(st.panel.values.col(st.panel.col_index(id)));
        for (int k = 0; k < r; ++k) {
          ids.push_back("F" + std::to_string(k + 1));
          cols.push_back(paths.col(k));
        }
        ids.push_back("PIT");
        cols.push_back(st.taxes.pit_rate);
        ids.push_back("CIT");
        cols.push_back(st.taxes.cit_rate);
        Eigen::MatrixXd data(st.panel.rows(), static_cast<int>(cols.size()));
        for (size_t j = 0; j < cols.size(); ++j) data.col(static_cast<int>(j)) = cols[j];
        try {
          VarModel var_r = fit_var(data, cfg.p, ids);
          auto corr_for = [&](const std::string& shock_id, std::uint64_t stream,
                              const Eigen::VectorXd& tax) {
            SignRestrictionSpec spec = build_spec(cfg, ids, shock_id);
            DrawSet ds = identify_tax_shock(var_r, spec, 1, cfg.reliability_attempts,
                                            Rng::mix(cfg.seed, stream + r), IdentifyMode::Penalty);
            Eigen::VectorXd shock = structural_shock_series(var_r, ds.accepted.front().iv.q);
            return correlation(shock, tax.tail(shock.size()));
          };
          row.corr_pit = corr_for("PIT", 301, st.taxes.pit_rate);
          row.corr_cit = corr_for("CIT", 401, st.taxes.cit_rate);
        } catch (const Error&) {
          // identification infeasible for this factor count; correlations
          // stay empty in the table
        }
      }
      st.reliability.push_back(row);
    }

    std::vector<std::vector<std::string>> rrows, crows;
    for (const auto& row : st.reliability) {
      rrows.push_back({std::to_string(row.r), fmt_num(row.rmse), fmt_num(row.explained_pct),
                       fmt_num(row.rmse), fmt_num(row.explained_pct)});
      crows.push_back({std::to_string(row.r), fmt_num(row.corr_pit), fmt_num(row.corr_cit)});
    }
    em.csv("reliability.csv",
           {"factors", "rmse_pit", "explained_variation_pit", "rmse_cit",
            "explained_variation_cit"},
           rrows);
    em.csv("shock_correlations.csv", {"factors", "corr_pit", "corr_cit"}, crows);
  }

  manifest.notes["spectral_radius"] = fmt_num(st.var.spectral_radius);
  manifest.notes["design_condition"] = fmt_num(st.var.design_condition);
}

// ---------------------------------------------------------------------------
// Report

std::string markdown_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  out += "\n";
  return out;
}

std::string markdown_table(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string>>& rows) {
  std::string out = markdown_row(header);
  std::vector<std::string> rule(header.size(), "---");
  out += markdown_row(rule);
  for (const auto& r : rows) out += markdown_row(r);
  return out;
}

std::string render_report(const PipelineConfig& cfg, const State& st,
                          const RunManifest& manifest) {
  std::ostringstream md;
  md << "# FAVAR pipeline report\n\n";
  md << "- tool: " << manifest.tool_version << "\n";
  md << "- seed: " << manifest.seed << "\n";
  md << "- config hash: " << manifest.config_hash << "\n";
  md << "- tax entry: " << (cfg.tax_endogenous ? "endogenous" : "exogenous") << "\n";
  if (manifest.status != "ok")
    md << "\n**Run failed at stage `" << manifest.failed_stage
       << "`; sections below reflect completed stages only.**\n";

  if (st.done & kRunPanel) {
    md << "\n## Panel\n\n";
    md << "- balanced panel: " << st.panel.rows() << " quarters x " << st.panel.cols()
       << " series (" << st.panel.dates.front().str() << " to " << st.panel.dates.back().str()
       << ")\n";
    md << "- dropped series: " << st.drops.dropped_series.size()
       << ", dropped rows: " << st.drops.dropped_rows.size() << "\n";
  }

  if (st.done & kRunFactors) {
    md << "\n## Factor selection\n\n";
    md << "- factors used: " << st.r_used << " (ICR1 picks " << st.ic.r_hat_icr1
       << ", ICR2 picks " << st.ic.r_hat_icr2 << ", r_max " << st.ic.r_max << ")\n\n";
    std::vector<std::string> header{"statistic"};
    for (int k = 1; k <= st.ic.r_max; ++k) header.push_back("PC" + std::to_string(k));
    std::vector<std::string> sd{"Std dev"}, pr{"Proportion of variance"}, cu{"Cumulative"};
    for (int k = 0; k < st.ic.r_max; ++k) {
      sd.push_back(fmt_fixed(std::sqrt(st.fm_wide.eigenvalues[k]), 3));
      pr.push_back(fmt_fixed(st.fm_wide.explained[k], 3));
      cu.push_back(fmt_fixed(st.fm_wide.cumulative[k], 3));
    }
    md << markdown_table(header, {sd, pr, cu});
    md << "\n";
    std::vector<std::vector<std::string>> icrows;
    for (int r = 1; r <= st.ic.r_max; ++r)
      icrows.push_back({std::to_string(r), fmt_fixed(st.ic.icr1[r - 1], 4),
                        fmt_fixed(st.ic.icr2[r - 1], 4)});
    md << markdown_table({"r", "ICR1", "ICR2"}, icrows);
  }

  if (st.done & kRunSmoothing) {
    md << "\n## Trend-cycle decomposition\n\n";
    std::vector<std::vector<std::string>> rows;
    for (size_t k = 0; k < st.fit_u.size(); ++k)
      rows.push_back({"F" + std::to_string(k + 1), fmt_fixed(st.fit_u[k].sigma2_omega, 6),
                      fmt_fixed(st.fit_u[k].q, 2), fmt_fixed(st.fit_u[k].loglik, 3),
                      fmt_fixed(st.fit_c[k].loglik, 3),
                      fmt_fixed(st.lr[k].stat, 2) + " (" + fmt_fixed(st.lr[k].p_value, 3) + ")"});
    md << markdown_table({"factor", "sigma2_omega", "q", "lnL unconstrained", "lnL constrained",
                          "LR (p)"},
                         rows);
  }

  if ((st.done & kRunNarrative) && !st.summary_stats.empty()) {
    md << "\n## Summary statistics\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : st.summary_stats) {
      std::vector<std::string> row{r[0]};
      for (size_t k = 1; k < r.size(); ++k) {
        double v = std::stod(r[k]);
        row.push_back(fmt_fixed(v, 3));
      }
      rows.push_back(std::move(row));
    }
    md << markdown_table({"Variable", "Mean", "Std. dev", "Max", "Min"}, rows);
  }

  if (st.done & kRunNarrative) {
    md << "\n## Granger causality\n\n";
    std::vector<std::vector<std::string>> rows;
    auto cell = [](const std::optional<GrangerResult>& g) {
      return g ? fmt_fixed(g->f_stat, 2) + " (" + fmt_fixed(g->p_value, 2) + ")" : "-";
    };
    for (const auto& g : st.granger)
      rows.push_back({g.predictor, std::to_string(g.lags), cell(g.fed_pit), cell(g.narr_pit),
                      cell(g.fed_cit), cell(g.narr_cit)});
    md << markdown_table(
        {"Variable", "Lags", "Federal PIT", "Narrative PIT", "Federal CIT", "Narrative CIT"},
        rows);
  }

  if (st.done & kRunIdentify && cfg.tax_endogenous) {
    md << "\n## Identification\n\n";
    md << "- mode: " << cfg.identify_mode << ", K = " << cfg.restricted_horizon
       << ", penalty slope " << fmt_num(cfg.penalty_slope) << "\n";
    md << "- PIT: " << st.pit.draws.accepted.size() << " accepted of "
       << st.pit.draws.n_attempted << " attempts\n";
    md << "- CIT: " << st.cit.draws.accepted.size() << " accepted of "
       << st.cit.draws.n_attempted << " attempts\n";
  }

  if (st.done & kRunIrf) {
    md << "\n## Cumulative impulse responses\n\n";
    Eigen::MatrixXd cum_pit =
        cumulative_irf(st.pit.median_path, cfg.cum_horizons, cfg.cum_include_impact);
    Eigen::MatrixXd cum_cit =
        cumulative_irf(st.cit.median_path, cfg.cum_horizons, cfg.cum_include_impact);
    std::vector<std::string> header{"Variable"};
    for (int h : cfg.cum_horizons) header.push_back("PIT " + std::to_string(h) + "q");
    for (int h : cfg.cum_horizons) header.push_back("CIT " + std::to_string(h) + "q");
    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < st.var.n(); ++j) {
      std::vector<std::string> row{st.var_ids[j]};
      for (int k = 0; k < cum_pit.cols(); ++k) row.push_back(fmt_fixed(cum_pit(j, k), 2));
      for (int k = 0; k < cum_cit.cols(); ++k) row.push_back(fmt_fixed(cum_cit(j, k), 2));
      rows.push_back(std::move(row));
    }
    md << markdown_table(header, rows);
  }

  if ((st.done & kRunFevd) && st.pit.fevd_table) {
    auto fevd_md = [&](const ShockResults& res, const std::string& label) {
      md << "\n## Forecast error variance decomposition (" << label << ")\n\n";
      std::vector<std::string> header{"Variable"};
      for (int h : res.fevd_table->horizons) header.push_back(std::to_string(h));
      std::vector<std::vector<std::string>> rows;
      for (int j = 0; j < st.var.n(); ++j) {
        std::vector<std::string> row{st.var_ids[j]};
        for (int k = 0; k < res.fevd_table->shares.cols(); ++k)
          row.push_back(fmt_fixed(res.fevd_table->shares(j, k), 2));
        rows.push_back(std::move(row));
      }
      md << markdown_table(header, rows);
    };
    fevd_md(st.pit, "personal income tax");
    fevd_md(st.cit, "corporate income tax");
  }

  if ((st.done & kRunDiagnose) && !st.reliability.empty()) {
    md << "\n## Model reliability\n\n";
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : st.reliability)
      rows.push_back({std::to_string(row.r) + "-Factor", fmt_fixed(row.rmse, 3),
                      fmt_fixed(row.explained_pct, 1), fmt_fixed(row.rmse, 3),
                      fmt_fixed(row.explained_pct, 1)});
    md << markdown_table({"Model", "RMSE (PIT)", "Explained variation (PIT)", "RMSE (CIT)",
                          "Explained variation (CIT)"},
                         rows);
    md << "\nShock/narrative correlations are in `shock_correlations.csv`";
    if (st.pit.mt)
      md << "; the PIT median-target draw is #" << st.pit.mt->selected_draw << " with gap "
         << fmt_fixed(st.pit.mt->gap, 2);
    if (st.cit.mt)
      md << ", the CIT one #" << st.cit.mt->selected_draw << " with gap "
         << fmt_fixed(st.cit.mt->gap, 2);
    md << ".\n";
  }

  md << "\n## Figure data files\n\n";
  for (const auto& f : manifest.outputs)
    if (f.size() > 4 && f.substr(f.size() - 4) == ".csv") md << "- `" << f << "`\n";
  return md.str();
}

void write_manifest(const PipelineConfig& cfg, const RunManifest& manifest) {
  nlohmann::json j;
  j["tool"] = manifest.tool_version;
  j["seed"] = manifest.seed;
  j["config_hash"] = manifest.config_hash;
  j["config"] = manifest.config;
  j["status"] = manifest.status;
  if (!manifest.failed_stage.empty()) j["failed_stage"] = manifest.failed_stage;
  j["partial"] = manifest.partial;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& t : manifest.timings) stages.push_back({{"name", t.name}, {"ms", t.ms}});
  j["stages"] = std::move(stages);
  j["outputs"] = manifest.outputs;
  j["notes"] = manifest.notes;
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream out(cfg.out_dir + "/manifest.json");
  out << j.dump(2) << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

RunManifest run_pipeline(const PipelineConfig& cfg, unsigned parts) {
  RunManifest manifest;
  manifest.tool_version = tool_version();
  manifest.seed = cfg.seed;
  manifest.config = cfg.flat();
  manifest.config_hash = config_hash(cfg);

  validate_config(cfg);

  // Later stages need everything before them.
  unsigned needed = parts;
  if (parts & (kRunIrf | kRunFevd | kRunDiagnose | kRunReport))
    needed |= kRunIdentify | kRunVar | kRunNarrative | kRunSmoothing | kRunFactors | kRunPanel;
  if (parts & kRunIdentify) needed |= kRunVar | kRunNarrative | kRunSmoothing | kRunFactors | kRunPanel;
  if (parts & kRunVar) needed |= kRunNarrative | kRunSmoothing | kRunFactors | kRunPanel;
  if (parts & kRunNarrative) needed |= kRunPanel;
  if (parts & kRunSmoothing) needed |= kRunFactors | kRunPanel;
  if (parts & kRunFactors) needed |= kRunPanel;

  State st;
  Emitter em(cfg.out_dir, &manifest.outputs);

  auto run_stage = [&](unsigned bit, Stage tag, auto&& fn) {
    if (!(needed & bit)) return;
    auto t0 = std::chrono::steady_clock::now();
    try {
      fn();
    } catch (const StageError&) {
      manifest.status = "failed";
      manifest.failed_stage = stage_name(tag);
      manifest.partial = true;
      throw;
    } catch (const Error& e) {
      manifest.status = "failed";
      manifest.failed_stage = stage_name(tag);
      manifest.partial = true;
      throw StageError(tag, e.what());
    }
    auto t1 = std::chrono::steady_clock::now();
    manifest.timings.push_back(
        {stage_name(tag), std::chrono::duration<double, std::milli>(t1 - t0).count()});
    st.done |= bit;
  };

  try {
    run_stage(kRunPanel, Stage::Panel, [&] { stage_panel(cfg, st, em); });
    run_stage(kRunFactors, Stage::Factors, [&] {
      stage_factors(cfg, st, em);
      manifest.notes["factors_used"] = std::to_string(st.r_used);
      manifest.notes["r_hat_icr1"] = std::to_string(st.ic.r_hat_icr1);
      manifest.notes["r_hat_icr2"] = std::to_string(st.ic.r_hat_icr2);
    });
    run_stage(kRunSmoothing, Stage::Smoothing, [&] { stage_smoothing(cfg, st, em); });
    run_stage(kRunNarrative, Stage::Narrative, [&] { stage_narrative(cfg, st, em); });
    run_stage(kRunVar, Stage::Var, [&] { stage_var(cfg, st, em); });
    run_stage(kRunIdentify, Stage::Identify, [&] { stage_identify(cfg, st, em, manifest); });
    unsigned analysis_parts = needed & (kRunIrf | kRunFevd | kRunDiagnose);
    if (analysis_parts)
      run_stage(analysis_parts, Stage::Analysis,
                [&] { stage_analysis(cfg, st, em, manifest, analysis_parts); });
    run_stage(kRunReport, Stage::Report,
              [&] { em.text("report.md", render_report(cfg, st, manifest)); });
  } catch (...) {
    // Record what was produced before the failure; partial outputs are
    // flagged in the manifest and named in the report.
    if (needed & kRunReport) {
      try {
        em.text("report.md", render_report(cfg, st, manifest));
      } catch (...) {
      }
    }
    write_manifest(cfg, manifest);
    throw;
  }
  write_manifest(cfg, manifest);
  manifest.outputs.push_back("manifest.json");
  return manifest;
}

}  // namespace favar
