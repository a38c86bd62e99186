#include "favar/narrative.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "favar/csv.hpp"
#include "favar/error.hpp"
#include "favar/stats.hpp"

namespace favar {

std::string tax_type_name(TaxType t) { return t == TaxType::PIT ? "PIT" : "CIT"; }

TaxType parse_tax_type(const std::string& s) {
  if (s == "PIT" || s == "pit") return TaxType::PIT;
  if (s == "CIT" || s == "cit") return TaxType::CIT;
  fail("unknown tax type '" + s + "' (want PIT or CIT)");
}

std::vector<NarrativeEvent> load_events(std::istream& csv) {
  auto rows = read_csv_rows(csv);
  if (rows.empty()) fail("events CSV is empty");
  const std::vector<std::string> want = {"quarter",   "tax_type",  "liability_change",
                                         "base_prev", "act_label", "exogenous"};
  if (rows[0].size() != want.size())
    fail("events CSV header must be quarter,tax_type,liability_change,base_prev,act_label,exogenous");
  for (size_t j = 0; j < want.size(); ++j)
    if (rows[0][j] != want[j]) fail("events CSV header column " + std::to_string(j + 1) +
                                    " is '" + rows[0][j] + "', want '" + want[j] + "'");
  std::vector<NarrativeEvent> events;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != want.size()) fail("events CSV row " + std::to_string(i + 1) + " is ragged");
    NarrativeEvent ev;
    ev.quarter = Quarter::parse(row[0]);
    ev.tax_type = parse_tax_type(row[1]);
    try {
      ev.liability_change = std::stod(row[2]);
      ev.base_prev = std::stod(row[3]);
    } catch (const std::exception&) {
      fail("non-numeric value in events CSV row " + std::to_string(i + 1));
    }
    ev.act_label = row[4];
    if (row[5] == "1" || row[5] == "true")
      ev.exogenous = true;
    else if (row[5] == "0" || row[5] == "false")
      ev.exogenous = false;
    else
      fail("bad exogenous flag '" + row[5] + "' in events CSV row " + std::to_string(i + 1));
    if (ev.base_prev <= 0.0)
      fail("nonpositive base " + fmt_num(ev.base_prev) + " for act '" + ev.act_label + "'");
    events.push_back(std::move(ev));
  }
  return events;
}

std::vector<NarrativeEvent> load_events_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open events file: " + path);
  return load_events(in);
}

NarrativeTaxSeries compute_narrative_rates(const std::vector<NarrativeEvent>& events,
                                           const std::vector<Quarter>& grid,
                                           bool exogenous_only) {
  if (grid.empty()) fail("empty date grid");
  std::map<int, int> grid_pos;
  for (size_t i = 0; i < grid.size(); ++i) grid_pos[grid[i].index()] = static_cast<int>(i);

  NarrativeTaxSeries out;
  out.dates = grid;
  out.pit_rate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  out.cit_rate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (const auto& ev : events) {
    if (exogenous_only && !ev.exogenous) continue;
    if (ev.base_prev <= 0.0)
      fail("nonpositive base for act '" + ev.act_label + "'");
    auto it = grid_pos.find(ev.quarter.index());
    if (it == grid_pos.end())
      fail("event '" + ev.act_label + "' dated " + ev.quarter.str() + " outside the grid " +
           grid.front().str() + ".." + grid.back().str());
    double rate = 100.0 * ev.liability_change / ev.base_prev;
    if (ev.tax_type == TaxType::PIT)
      out.pit_rate[it->second] += rate;
    else
      out.cit_rate[it->second] += rate;
  }
  return out;
}

GrangerResult granger_exogeneity_test(const Eigen::VectorXd& tax,
                                      const Eigen::VectorXd& predictor, int lags,
                                      const std::string& predictor_id) {
  if (lags < 1) fail("granger test needs lags >= 1");
  if (tax.size() != predictor.size()) fail("granger test: series lengths differ");
  const int t_len = static_cast<int>(tax.size());
  const int t_eff = t_len - lags;
  const int k_unres = 1 + 2 * lags;
  if (t_len <= 2 * lags + 2 || t_eff - k_unres < 1)
    fail("granger test: insufficient observations (T=" + std::to_string(t_len) + ", lags=" +
         std::to_string(lags) + ")");

  Eigen::VectorXd y = tax.tail(t_eff);
  Eigen::MatrixXd x_res(t_eff, 1 + lags);
  Eigen::MatrixXd x_unres(t_eff, k_unres);
  for (int i = 0; i < t_eff; ++i) {
    x_res(i, 0) = 1.0;
    x_unres(i, 0) = 1.0;
    for (int l = 1; l <= lags; ++l) {
      x_res(i, l) = tax[i + lags - l];
      x_unres(i, l) = tax[i + lags - l];
      x_unres(i, lags + l) = predictor[i + lags - l];
    }
  }

  // Rank-revealing solve: duplicated or collinear columns reduce to a
  // projection on the effective column space, so the SSRs stay defined.
  auto ssr_of = [&](const Eigen::MatrixXd& x) {
    Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
    return (y - x * beta).squaredNorm();
  };
  double ssr_r = ssr_of(x_res);
  double ssr_u = ssr_of(x_unres);
  if (ssr_u > ssr_r) ssr_u = ssr_r;  // nested models, guard rounding

  double scale = y.squaredNorm();
  if (ssr_u <= 1e-12 * std::max(scale, 1.0))
    fail("granger test: perfectly collinear regressors leave no residual variance" +
         (predictor_id.empty() ? std::string() : " (predictor '" + predictor_id + "')"));

  GrangerResult res;
  res.predictor_id = predictor_id;
  res.lags = lags;
  res.f_stat = ((ssr_r - ssr_u) / lags) / (ssr_u / (t_eff - k_unres));
  if (res.f_stat < 0.0) res.f_stat = 0.0;
  res.p_value = f_sf(res.f_stat, lags, t_eff - k_unres);
  return res;
}

}  // namespace favar
