#pragma once

#include <Eigen/Dense>
#include <sstream>
#include <string>
#include <vector>

#include "favar/panel.hpp"
#include "favar/rng.hpp"
#include "favar/var_model.hpp"

namespace favar::testing {

// Builds a loaded panel directly (transform codes all 1 unless given).
inline TimeSeriesPanel make_panel(const Eigen::MatrixXd& values, std::vector<int> codes = {},
                                  bool standardized = false) {
  TimeSeriesPanel p;
  p.values = values;
  p.standardized = standardized;
  for (int i = 0; i < values.rows(); ++i) p.dates.push_back(Quarter::from_index(7836 + i));
  for (int j = 0; j < values.cols(); ++j) {
    SeriesMeta m;
    m.id = "S" + std::to_string(j + 1);
    m.transform_code = codes.empty() ? 1 : codes[j];
    p.metas.push_back(m);
  }
  return p;
}

inline TimeSeriesPanel standardized_panel(const Eigen::MatrixXd& raw) {
  return standardize_and_balance(make_panel(raw));
}

// Random matrix with iid N(0,1) entries.
inline Eigen::MatrixXd randn(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// Simulates a VAR(1) path y_t = a y_{t-1} + chol_l e_t, burn-in discarded.
inline Eigen::MatrixXd simulate_var1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& chol_l,
                                     int t_len, Rng& rng, int burn = 100) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd out(t_len, n);
  for (int t = -burn; t < t_len; ++t) {
    Eigen::VectorXd e(n);
    for (int i = 0; i < n; ++i) e[i] = rng.normal();
    y = a * y + chol_l * e;
    if (t >= 0) out.row(t) = y.transpose();
  }
  return out;
}

inline std::string csv_fixture_3x5() {
  return
      "date,GDP,CPI,INV\n"
      "tcode,1,1,1\n"
      "group,NIPA,Prices,NIPA\n"
      "1959-Q1,1.0,2.0,3.0\n"
      "1959-Q2,1.5,2.5,3.5\n"
      "1959-Q3,2.0,3.0,4.0\n"
      "1959-Q4,2.5,3.5,4.5\n"
      "1960-Q1,3.0,4.0,5.0\n";
}

}  // namespace favar::testing
