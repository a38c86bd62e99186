#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "favar/dates.hpp"

namespace favar {

struct SeriesMeta {
  std::string id;
  std::string group;
  int transform_code = 1;  // 1..7, Stock-Watson convention
};

// Balanced (after standardize_and_balance) T x N quarterly panel.
// Missing cells are NaN until balancing removes them.
struct TimeSeriesPanel {
  std::vector<Quarter> dates;     // length T, strictly increasing, quarterly
  Eigen::MatrixXd values;         // T x N
  std::vector<SeriesMeta> metas;  // length N
  bool standardized = false;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }

  // Column index of a series id, or -1.
  int col_index(const std::string& id) const;
};

// Panel CSV layout: row 1 "date,<id>,..."; row 2 "tcode,<code>,...";
// optional row 3 "group,<label>,..."; data rows "<YYYY-Qq>,<value>,..."
// with empty cells for missing observations.
TimeSeriesPanel load_panel(std::istream& csv);
TimeSeriesPanel load_panel_file(const std::string& path);

// Stationarity transforms per series code:
//   1 level, 2 diff, 3 double diff, 4 log, 5 dlog, 6 double dlog,
//   7 diff of (x_t/x_{t-1} - 1).
// All series are truncated to the common range implied by the largest
// differencing order present in the panel.
TimeSeriesPanel apply_transforms(const TimeSeriesPanel& panel);

// Rows lost at the start of the sample by a transform code.
int transform_loss(int code);

enum class BalancePolicy { DropSeries, DropRows };

struct DropLog {
  std::vector<std::string> dropped_series;
  std::vector<Quarter> dropped_rows;
};

// Removes remaining missing values per policy, then scales every column
// to mean 0 and sample (T-1) standard deviation 1.
TimeSeriesPanel standardize_and_balance(const TimeSeriesPanel& panel,
                                        BalancePolicy policy = BalancePolicy::DropSeries,
                                        DropLog* log = nullptr);

}  // namespace favar
