#include "favar/panel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "favar/csv.hpp"
#include "favar/error.hpp"

namespace favar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell.empty()) return kNaN;  // missing, not zero
  size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    fail("non-numeric cell '" + cell + "' at " + where);
  }
  if (pos != cell.size()) fail("non-numeric cell '" + cell + "' at " + where);
  return v;
}

}  // namespace

int TimeSeriesPanel::col_index(const std::string& id) const {
  for (size_t j = 0; j < metas.size(); ++j)
    if (metas[j].id == id) return static_cast<int>(j);
  return -1;
}

TimeSeriesPanel load_panel(std::istream& csv) {
  auto rows = read_csv_rows(csv);
  if (rows.size() < 3) fail("panel CSV needs a date header, a tcode row and data rows");

  const auto& header = rows[0];
  if (header.empty() || header[0] != "date")
    fail("panel CSV row 1 must start with 'date'");
  const size_t n = header.size() - 1;
  if (n == 0) fail("panel CSV has no series columns");

  TimeSeriesPanel panel;
  panel.metas.resize(n);
  std::set<std::string> seen;
  for (size_t j = 0; j < n; ++j) {
    const std::string& id = header[j + 1];
    if (id.empty()) fail("empty series id in column " + std::to_string(j + 2));
    if (!seen.insert(id).second) fail("duplicate series id '" + id + "'");
    panel.metas[j].id = id;
  }

  const auto& tcode_row = rows[1];
  if (tcode_row.empty() || tcode_row[0] != "tcode")
    fail("panel CSV row 2 must start with 'tcode'");
  if (tcode_row.size() != n + 1)
    fail("tcode row has " + std::to_string(tcode_row.size() - 1) + " entries, want " +
         std::to_string(n));
  for (size_t j = 0; j < n; ++j) {
    double v = parse_cell(tcode_row[j + 1], "tcode row");
    int code = static_cast<int>(v);
    if (std::isnan(v) || code != v || code < 1 || code > 7)
      fail("invalid transform code '" + tcode_row[j + 1] + "' for series '" +
           panel.metas[j].id + "' (must be 1..7)");
    panel.metas[j].transform_code = code;
  }

  size_t first_data = 2;
  if (rows.size() > 2 && !rows[2].empty() && rows[2][0] == "group") {
    const auto& group_row = rows[2];
    if (group_row.size() != n + 1) fail("group row entry count mismatch");
    for (size_t j = 0; j < n; ++j) panel.metas[j].group = group_row[j + 1];
    first_data = 3;
  }

  const size_t t = rows.size() - first_data;
  if (t == 0) fail("panel CSV has no data rows");
  panel.values.resize(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
  panel.dates.reserve(t);
  for (size_t i = 0; i < t; ++i) {
    const auto& row = rows[first_data + i];
    if (row.size() != n + 1)
      fail("ragged row at " + (row.empty() ? std::string("?") : row[0]) + ": " +
           std::to_string(row.size() - 1) + " values, want " + std::to_string(n));
    Quarter d = Quarter::parse(row[0]);
    if (!panel.dates.empty()) {
      if (d.index() != panel.dates.back().index() + 1)
        fail("dates must advance by one quarter: " + panel.dates.back().str() + " -> " +
             d.str());
    }
    panel.dates.push_back(d);
    for (size_t j = 0; j < n; ++j)
      panel.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_cell(row[j + 1], row[0] + "/" + panel.metas[j].id);
  }
  return panel;
}

TimeSeriesPanel load_panel_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open panel file: " + path);
  return load_panel(in);
}

int transform_loss(int code) {
  switch (code) {
    case 1:
    case 4:
      return 0;
    case 2:
    case 5:
      return 1;
    case 3:
    case 6:
    case 7:
      return 2;
    default:
      fail("invalid transform code " + std::to_string(code));
  }
}

namespace {

// Transforms one column; output aligned with the input grid, with the
// first transform_loss(code) entries undefined. NaNs propagate.
Eigen::VectorXd transform_column(const Eigen::VectorXd& x, int code, const std::string& id) {
  const Eigen::Index t = x.size();
  auto check_log = [&](Eigen::Index i) {
    if (!std::isnan(x[i]) && x[i] <= 0.0)
      fail("nonpositive value " + fmt_num(x[i]) + " under log transform in series '" + id +
           "'");
  };
  Eigen::VectorXd out = Eigen::VectorXd::Constant(t, kNaN);
  switch (code) {
    case 1:
      out = x;
      break;
    case 2:
      for (Eigen::Index i = 1; i < t; ++i) out[i] = x[i] - x[i - 1];
      break;
    case 3:
      for (Eigen::Index i = 2; i < t; ++i) out[i] = x[i] - 2 * x[i - 1] + x[i - 2];
      break;
    case 4:
      for (Eigen::Index i = 0; i < t; ++i) {
        check_log(i);
        out[i] = std::log(x[i]);
      }
      break;
    case 5:
      for (Eigen::Index i = 0; i < t; ++i) check_log(i);
      for (Eigen::Index i = 1; i < t; ++i) out[i] = std::log(x[i]) - std::log(x[i - 1]);
      break;
    case 6:
      for (Eigen::Index i = 0; i < t; ++i) check_log(i);
      for (Eigen::Index i = 2; i < t; ++i)
        out[i] = std::log(x[i]) - 2 * std::log(x[i - 1]) + std::log(x[i - 2]);
      break;
    case 7: {
      // growth rate first, then its first difference
      Eigen::VectorXd g = Eigen::VectorXd::Constant(t, kNaN);
      for (Eigen::Index i = 1; i < t; ++i) {
        if (!std::isnan(x[i - 1]) && x[i - 1] == 0.0)
          fail("zero value prevents ratio transform (code 7) in series '" + id + "'");
        g[i] = x[i] / x[i - 1] - 1.0;
      }
      for (Eigen::Index i = 2; i < t; ++i) out[i] = g[i] - g[i - 1];
      break;
    }
    default:
      fail("invalid transform code " + std::to_string(code));
  }
  return out;
}

}  // namespace

TimeSeriesPanel apply_transforms(const TimeSeriesPanel& panel) {
  const int t = panel.rows();
  const int n = panel.cols();
  int loss = 0;
  for (const auto& m : panel.metas) loss = std::max(loss, transform_loss(m.transform_code));
  if (t - loss < 2)
    fail("panel too short for its transform codes: " + std::to_string(t) +
         " rows, largest differencing order " + std::to_string(loss));

  TimeSeriesPanel out;
  out.metas = panel.metas;
  out.standardized = false;
  out.dates.assign(panel.dates.begin() + loss, panel.dates.end());
  out.values.resize(t - loss, n);
  for (int j = 0; j < n; ++j) {
    if (t - transform_loss(panel.metas[j].transform_code) < 2)
      fail("series '" + panel.metas[j].id + "' too short for code " +
           std::to_string(panel.metas[j].transform_code));
    Eigen::VectorXd col = transform_column(panel.values.col(j), panel.metas[j].transform_code,
                                           panel.metas[j].id);
    out.values.col(j) = col.tail(t - loss);
    for (int i = 0; i < t - loss; ++i) {
      double v = out.values(i, j);
      if (!std::isnan(v) && !std::isfinite(v))
        fail("non-finite transformed value in series '" + panel.metas[j].id + "' at " +
             out.dates[i].str());
    }
  }
  return out;
}

TimeSeriesPanel standardize_and_balance(const TimeSeriesPanel& panel, BalancePolicy policy,
                                        DropLog* log) {
  const int t = panel.rows();
  const int n = panel.cols();

  std::vector<int> keep_cols, keep_rows;
  if (policy == BalancePolicy::DropSeries) {
    for (int j = 0; j < n; ++j) {
      bool complete = true;
      for (int i = 0; i < t; ++i)
        if (std::isnan(panel.values(i, j))) {
          complete = false;
          break;
        }
      if (complete)
        keep_cols.push_back(j);
      else if (log)
        log->dropped_series.push_back(panel.metas[j].id);
    }
    for (int i = 0; i < t; ++i) keep_rows.push_back(i);
  } else {
    for (int j = 0; j < n; ++j) keep_cols.push_back(j);
    for (int i = 0; i < t; ++i) {
      bool complete = true;
      for (int j = 0; j < n; ++j)
        if (std::isnan(panel.values(i, j))) {
          complete = false;
          break;
        }
      if (complete)
        keep_rows.push_back(i);
      else if (log)
        log->dropped_rows.push_back(panel.dates[i]);
    }
    // Row dropping must not break the quarterly grid invariant.
    for (size_t k = 1; k < keep_rows.size(); ++k)
      if (panel.dates[keep_rows[k]].index() != panel.dates[keep_rows[k - 1]].index() + 1)
        fail("row-drop balancing would leave a gap in the quarterly grid at " +
             panel.dates[keep_rows[k]].str() + "; use the drop-series policy");
  }
  if (keep_cols.empty() || keep_rows.empty()) fail("empty panel after balancing");

  TimeSeriesPanel out;
  out.standardized = true;
  out.dates.reserve(keep_rows.size());
  for (int i : keep_rows) out.dates.push_back(panel.dates[i]);
  out.metas.reserve(keep_cols.size());
  for (int j : keep_cols) out.metas.push_back(panel.metas[j]);
  const int tt = static_cast<int>(keep_rows.size());
  const int nn = static_cast<int>(keep_cols.size());
  if (tt < 2) fail("need at least 2 rows to standardize");
  out.values.resize(tt, nn);
  for (int jj = 0; jj < nn; ++jj)
    for (int ii = 0; ii < tt; ++ii)
      out.values(ii, jj) = panel.values(keep_rows[ii], keep_cols[jj]);

  for (int j = 0; j < nn; ++j) {
    double mean = out.values.col(j).mean();
    double ss = (out.values.col(j).array() - mean).square().sum();
    double sd = std::sqrt(ss / (tt - 1));
    if (sd == 0.0)
      fail("series '" + out.metas[j].id + "' has zero variance, cannot standardize");
    out.values.col(j) = (out.values.col(j).array() - mean) / sd;
  }
  return out;
}

}  // namespace favar
