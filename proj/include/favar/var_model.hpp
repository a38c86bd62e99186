#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace favar {

// Reduced-form VAR(p) with intercept, fitted equation by equation. An
// optional exogenous block (e.g. tax rates entered exogenously) is
// appended to the regressors.
struct VarModel {
  std::vector<std::string> var_ids;  // length n
  int p = 1;
  Eigen::VectorXd intercept;               // n
  std::vector<Eigen::MatrixXd> coeffs;     // A_1..A_p, each n x n
  Eigen::MatrixXd exog_coeffs;             // n x m (0 x 0 when absent)
  std::vector<std::string> exog_ids;       // length m
  Eigen::MatrixXd residuals;               // (T-p) x n
  Eigen::MatrixXd sigma_u;                 // n x n, denominator T-p
  Eigen::MatrixXd chol;                    // lower triangular, chol * chol' = sigma_u
  double spectral_radius = 0.0;            // companion matrix; diagnostic only
  double design_condition = 0.0;           // regressor conditioning; diagnostic only

  int n() const { return static_cast<int>(intercept.size()); }
  bool stationary() const { return spectral_radius < 1.0; }
};

VarModel fit_var(const Eigen::MatrixXd& data, int p,
                 const std::vector<std::string>& ids = {},
                 const Eigen::MatrixXd& exog = Eigen::MatrixXd(),
                 const std::vector<std::string>& exog_ids = {});

// Lower-triangular L with L L' = sigma; rejects non-PD input and reports
// the smallest eigenvalue.
Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma);

// Psi_0..Psi_H moving-average matrices, Psi_0 = I.
std::vector<Eigen::MatrixXd> reduced_form_irf(const VarModel& model, int horizon);

// JSON manifest of the fitted model (coefficients, sigma, chol).
std::string var_model_to_json(const VarModel& model);

}  // namespace favar
