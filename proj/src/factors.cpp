#include "favar/factors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "favar/csv.hpp"
#include "favar/error.hpp"

namespace favar {

namespace {

// Eigendecomposition of the smaller Gram matrix (X'X if N <= T, else
// XX'), returning the top r_keep eigenpairs in descending order.
// Eigenvalues are on the X'X scale either way.
struct GramEig {
  Eigen::VectorXd values;   // descending, length min(N,T)
  Eigen::MatrixXd vectors;  // columns matching `values`
  bool used_transpose;      // true when XX' was decomposed
};

GramEig gram_eig(const Eigen::MatrixXd& x) {
  const Eigen::Index t = x.rows(), n = x.cols();
  GramEig out;
  out.used_transpose = t < n;
  Eigen::MatrixXd gram =
      out.used_transpose ? Eigen::MatrixXd(x * x.transpose()) : Eigen::MatrixXd(x.transpose() * x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  if (es.info() != Eigen::Success) fail("eigendecomposition failed on the panel Gram matrix");
  const Eigen::Index m = gram.rows();
  out.values.resize(m);
  out.vectors.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {  // ascending -> descending
    out.values[i] = std::max(0.0, es.eigenvalues()[m - 1 - i]);
    out.vectors.col(i) = es.eigenvectors().col(m - 1 - i);
  }
  return out;
}

void check_standardized(const TimeSeriesPanel& panel) {
  if (!panel.standardized) fail("panel must be standardized before factor estimation");
}

}  // namespace

FactorModel estimate_factors_matrix(const Eigen::MatrixXd& x, int r) {
  const Eigen::Index t = x.rows(), n = x.cols();
  if (r < 1 || r > std::min(t, n))
    fail("factor count r=" + std::to_string(r) + " out of range 1.." +
         std::to_string(std::min(t, n)));

  GramEig eig = gram_eig(x);
  if (eig.values[0] <= 0.0) fail("panel Gram matrix has no positive eigenvalues");
  const double rank_tol = eig.values[0] * 1e-12;
  if (eig.values[r - 1] <= rank_tol)
    fail("numerically singular covariance: eigenvalue " + std::to_string(r) + " is " +
         fmt_num(eig.values[r - 1]) + " against leading " + fmt_num(eig.values[0]));

  FactorModel model;
  model.loadings.resize(n, r);
  if (!eig.used_transpose) {
    // V_r are orthonormal eigenvectors of X'X; Lambda = sqrt(N) V_r.
    model.loadings = std::sqrt(static_cast<double>(n)) * eig.vectors.leftCols(r);
  } else {
    // v_i = X'u_i / sqrt(mu_i) from the XX' eigenvectors.
    for (int i = 0; i < r; ++i)
      model.loadings.col(i) = std::sqrt(static_cast<double>(n)) *
                              (x.transpose() * eig.vectors.col(i)) / std::sqrt(eig.values[i]);
  }

  // Sign convention: the largest-magnitude loading in each column is positive.
  for (int i = 0; i < r; ++i) {
    Eigen::Index arg = 0;
    model.loadings.col(i).cwiseAbs().maxCoeff(&arg);
    if (model.loadings(arg, i) < 0.0) model.loadings.col(i) = -model.loadings.col(i);
  }

  model.factors = x * model.loadings / static_cast<double>(n);

  const double total_ssq = x.squaredNorm();
  model.ssr = std::max(0.0, total_ssq - eig.values.head(r).sum());
  model.eigenvalues = eig.values.head(r) / static_cast<double>(t - 1);
  model.explained = eig.values.head(r) / total_ssq;
  model.cumulative.resize(r);
  double run = 0.0;
  for (int i = 0; i < r; ++i) {
    run += model.explained[i];
    model.cumulative[i] = run;
  }
  return model;
}

FactorModel estimate_factors(const TimeSeriesPanel& panel, int r) {
  check_standardized(panel);
  return estimate_factors_matrix(panel.values, r);
}

ICResult select_num_factors_matrix(const Eigen::MatrixXd& x, int r_max) {
  const Eigen::Index t = x.rows(), n = x.cols();
  if (r_max < 1 || r_max > std::min(t, n)) fail("r_max out of range");

  GramEig eig = gram_eig(x);
  const double total_ssq = x.squaredNorm();
  const double nt = static_cast<double>(n) * static_cast<double>(t);
  const double size_term = (static_cast<double>(n) + static_cast<double>(t)) / nt;
  const double pen1 = size_term * std::log(nt / (static_cast<double>(n) + static_cast<double>(t)));
  const double pen2 = size_term * std::log(static_cast<double>(std::min(n, t)));

  ICResult res;
  res.r_max = r_max;
  res.icr1.resize(r_max);
  res.icr2.resize(r_max);
  double top_sum = 0.0;
  for (int r = 1; r <= r_max; ++r) {
    top_sum += eig.values[r - 1];
    double ssr = std::max(0.0, total_ssq - top_sum);
    double fit = std::log(ssr / nt);  // -inf at an exact fit, which argmin handles
    res.icr1[r - 1] = fit + r * pen1;
    res.icr2[r - 1] = fit + r * pen2;
  }
  auto argmin = [&](const std::vector<double>& v) {
    int best = 1;
    for (int r = 2; r <= r_max; ++r)
      if (v[r - 1] < v[best - 1]) best = r;  // strict: ties keep the smaller r
    return best;
  };
  res.r_hat_icr1 = argmin(res.icr1);
  res.r_hat_icr2 = argmin(res.icr2);
  return res;
}

ICResult select_num_factors(const TimeSeriesPanel& panel, int r_max) {
  check_standardized(panel);
  return select_num_factors_matrix(panel.values, r_max);
}

Eigen::VectorXd idiosyncratic_cov(const TimeSeriesPanel& panel, const FactorModel& model) {
  const Eigen::Index t = panel.values.rows(), n = panel.values.cols();
  if (model.loadings.rows() != n || model.factors.rows() != t)
    fail("factor model dimensions do not match the panel");
  Eigen::MatrixXd resid = panel.values - model.factors * model.loadings.transpose();
  return resid.array().square().colwise().sum() / static_cast<double>(t);
}

FactorTransition fit_factor_transition(const FactorModel& model, bool diagonal) {
  const Eigen::Index t = model.factors.rows();
  const Eigen::Index r = model.factors.cols();
  if (t < r + 2) fail("too few observations for the factor VAR(1): T=" + std::to_string(t));

  Eigen::MatrixXd x = model.factors.topRows(t - 1);     // F_{t-1}
  Eigen::MatrixXd y = model.factors.bottomRows(t - 1);  // F_t

  FactorTransition out;
  out.phi = Eigen::MatrixXd::Zero(r, r);
  out.phi_se = Eigen::MatrixXd::Zero(r, r);

  if (diagonal) {
    for (Eigen::Index i = 0; i < r; ++i) {
      double sxx = x.col(i).squaredNorm();
      if (sxx <= 0.0) fail("degenerate factor path in diagonal transition fit");
      double b = x.col(i).dot(y.col(i)) / sxx;
      out.phi(i, i) = b;
      double ssr = (y.col(i) - b * x.col(i)).squaredNorm();
      out.phi_se(i, i) = std::sqrt(ssr / static_cast<double>(t - 2) / sxx);
    }
  } else {
    Eigen::MatrixXd xtx = x.transpose() * x;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (!lu.isInvertible()) fail("rank-deficient regressor matrix in factor VAR(1)");
    Eigen::MatrixXd xtx_inv = lu.inverse();
    out.phi = (xtx_inv * (x.transpose() * y)).transpose();  // row i: eq for factor i
    Eigen::MatrixXd resid = y - x * out.phi.transpose();
    for (Eigen::Index i = 0; i < r; ++i) {
      double s2 = resid.col(i).squaredNorm() / static_cast<double>(t - 1 - r);
      out.phi_se.row(i) = (s2 * xtx_inv.diagonal().array()).sqrt().transpose();
    }
  }
  Eigen::MatrixXd resid = y - x * out.phi.transpose();
  out.resid_cov = resid.transpose() * resid / static_cast<double>(t - 1);
  return out;
}

}  // namespace favar
