#pragma once

#include <Eigen/Dense>
#include <vector>

#include "favar/panel.hpp"

namespace favar {

// Principal-component factor model under the loading normalization
// L'L/N = I. Factor scores are then X L / N.
struct FactorModel {
  Eigen::MatrixXd loadings;     // N x r
  Eigen::MatrixXd factors;      // T x r
  Eigen::VectorXd eigenvalues;  // r, sample-covariance (T-1) scale, descending
  Eigen::VectorXd explained;    // r shares of total variance
  Eigen::VectorXd cumulative;   // r partial sums of `explained`
  double ssr = 0.0;             // reconstruction sum of squared residuals
};

FactorModel estimate_factors(const TimeSeriesPanel& panel, int r);
FactorModel estimate_factors_matrix(const Eigen::MatrixXd& x, int r);

struct ICResult {
  int r_max = 0;
  std::vector<double> icr1;  // index r-1 holds criterion at r factors
  std::vector<double> icr2;
  int r_hat_icr1 = 1;
  int r_hat_icr2 = 1;
};

// Information criteria over r = 1..r_max; the objective is
// ln(SSR(r)/(NT)) plus the criterion-specific penalty. Ties break toward
// smaller r.
ICResult select_num_factors(const TimeSeriesPanel& panel, int r_max);
ICResult select_num_factors_matrix(const Eigen::MatrixXd& x, int r_max);

// Diagonal of the idiosyncratic residual covariance, (1/T) sum of squared
// reconstruction residuals per series.
Eigen::VectorXd idiosyncratic_cov(const TimeSeriesPanel& panel, const FactorModel& model);

struct FactorTransition {
  Eigen::MatrixXd phi;        // r x r
  Eigen::MatrixXd phi_se;     // r x r OLS standard errors
  Eigen::MatrixXd resid_cov;  // r x r
};

// VAR(1) of F_t on F_{t-1} by OLS (factors are mean zero by construction,
// so no intercept). `diagonal` restricts phi to per-factor AR(1)s.
FactorTransition fit_factor_transition(const FactorModel& model, bool diagonal = false);

}  // namespace favar
