#include "favar/var_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include <nlohmann/json.hpp>

#include "favar/csv.hpp"
#include "favar/error.hpp"

namespace favar {

VarModel fit_var(const Eigen::MatrixXd& data, int p, const std::vector<std::string>& ids,
                 const Eigen::MatrixXd& exog, const std::vector<std::string>& exog_ids) {
  const int t_len = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  const int m = static_cast<int>(exog.cols());
  if (p < 1) fail("fit_var: lag order must be >= 1");
  if (n < 1) fail("fit_var: empty data");
  if (m > 0 && exog.rows() != t_len) fail("fit_var: exogenous block length mismatch");
  const int t_eff = t_len - p;
  const int k = 1 + n * p + m;
  if (t_eff <= k - 1)
    fail("fit_var: too few observations (T=" + std::to_string(t_len) + ", need > " +
         std::to_string(n * p + m + 1) + ")");

  Eigen::MatrixXd x(t_eff, k);
  Eigen::MatrixXd y = data.bottomRows(t_eff);
  for (int i = 0; i < t_eff; ++i) {
    x(i, 0) = 1.0;
    for (int l = 1; l <= p; ++l)
      x.block(i, 1 + (l - 1) * n, 1, n) = data.row(i + p - l);
    if (m > 0) x.block(i, 1 + n * p, 1, m) = exog.row(i + p);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < k)
    fail("fit_var: rank-deficient regressor matrix (rank " + std::to_string(qr.rank()) +
         " of " + std::to_string(k) + ")");
  Eigen::MatrixXd beta = qr.solve(y);  // k x n
  // conditioning of the design, from the pivoted R diagonal; large values
  // mean individual coefficients are not separately interpretable even
  // though fitted values and innovation-span responses are fine
  Eigen::VectorXd rdiag = qr.matrixR().diagonal().cwiseAbs();
  double design_condition = rdiag.maxCoeff() / rdiag.minCoeff();

  VarModel model;
  model.p = p;
  model.var_ids = ids;
  if (model.var_ids.empty())
    for (int j = 0; j < n; ++j) model.var_ids.push_back("y" + std::to_string(j + 1));
  model.exog_ids = exog_ids;
  model.intercept = beta.row(0).transpose();
  model.coeffs.reserve(p);
  for (int l = 0; l < p; ++l)
    model.coeffs.push_back(beta.middleRows(1 + l * n, n).transpose());
  if (m > 0) model.exog_coeffs = beta.bottomRows(m).transpose();
  model.residuals = y - x * beta;
  model.sigma_u = model.residuals.transpose() * model.residuals / static_cast<double>(t_eff);
  model.chol = cholesky_factor(model.sigma_u);
  model.design_condition = design_condition;

  // Companion-matrix spectral radius (diagnostic; stationarity not enforced).
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * p, n * p);
  for (int l = 0; l < p; ++l) comp.block(0, l * n, n, n) = model.coeffs[l];
  if (p > 1)
    comp.block(n, 0, n * (p - 1), n * (p - 1)) = Eigen::MatrixXd::Identity(n * (p - 1), n * (p - 1));
  model.spectral_radius = comp.eigenvalues().cwiseAbs().maxCoeff();
  return model;
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols()) fail("cholesky_factor: matrix not square");
  double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) fail("cholesky_factor: matrix not symmetric (max asymmetry " + fmt_num(asym) + ")");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    double min_eig = es.eigenvalues().minCoeff();
    fail("cholesky_factor: matrix not positive definite (smallest eigenvalue " +
         fmt_num(min_eig) + ")");
  }
  return llt.matrixL();
}

std::vector<Eigen::MatrixXd> reduced_form_irf(const VarModel& model, int horizon) {
  if (horizon < 0) fail("reduced_form_irf: horizon must be >= 0");
  const int n = model.n();
  std::vector<Eigen::MatrixXd> psi;
  psi.reserve(horizon + 1);
  psi.push_back(Eigen::MatrixXd::Identity(n, n));
  for (int h = 1; h <= horizon; ++h) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= std::min(h, model.p); ++j) acc += model.coeffs[j - 1] * psi[h - j];
    psi.push_back(std::move(acc));
  }
  return psi;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string var_model_to_json(const VarModel& model) {
  nlohmann::json j;
  j["var_ids"] = model.var_ids;
  j["p"] = model.p;
  j["intercept"] = std::vector<double>(model.intercept.data(),
                                       model.intercept.data() + model.intercept.size());
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& a : model.coeffs) coeffs.push_back(matrix_json(a));
  j["coeffs"] = std::move(coeffs);
  if (model.exog_coeffs.size() > 0) {
    j["exog_ids"] = model.exog_ids;
    j["exog_coeffs"] = matrix_json(model.exog_coeffs);
  }
  j["sigma_u"] = matrix_json(model.sigma_u);
  j["chol"] = matrix_json(model.chol);
  j["spectral_radius"] = model.spectral_radius;
  j["design_condition"] = model.design_condition;
  return j.dump(2);
}

}  // namespace favar
