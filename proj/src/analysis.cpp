#include "favar/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "favar/error.hpp"
#include "favar/rng.hpp"

namespace favar {

Eigen::MatrixXd structural_irf(const std::vector<Eigen::MatrixXd>& psi,
                               const Eigen::VectorXd& alpha) {
  const int n = static_cast<int>(alpha.size());
  if (psi.empty() || psi[0].cols() != n) fail("structural_irf: dimension mismatch");
  Eigen::MatrixXd out(static_cast<int>(psi.size()), n);
  for (size_t h = 0; h < psi.size(); ++h) out.row(static_cast<int>(h)) = (psi[h] * alpha).transpose();
  return out;
}

Eigen::MatrixXd structural_irf(const VarModel& model, const Eigen::VectorXd& alpha, int horizon) {
  if (alpha.size() != model.n()) fail("structural_irf: alpha does not match the model");
  return structural_irf(reduced_form_irf(model, horizon), alpha);
}

namespace {

// Linear-interpolation percentile (R type 7) of an already-sorted vector.
double percentile_sorted(const std::vector<double>& sorted, double prob) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = prob * (n - 1);
  size_t lo = static_cast<size_t>(pos);
  if (lo >= n - 1) return sorted[n - 1];
  double frac = pos - lo;
  return (1.0 - frac) * sorted[lo] + frac * sorted[lo + 1];
}

}  // namespace

IrfSet IrfSet::from_draws(std::vector<Eigen::MatrixXd> draws, double gamma) {
  if (draws.empty()) fail("IrfSet: no draws");
  if (gamma <= 0.0 || gamma >= 1.0) fail("IrfSet: band level must be in (0,1)");
  const int rows = static_cast<int>(draws[0].rows());
  const int cols = static_cast<int>(draws[0].cols());
  for (const auto& d : draws)
    if (d.rows() != rows || d.cols() != cols) fail("IrfSet: inconsistent draw shapes");

  IrfSet set;
  set.horizon = rows - 1;
  set.gamma = gamma;
  set.median.resize(rows, cols);
  set.lower.resize(rows, cols);
  set.upper.resize(rows, cols);
  std::vector<double> cell(draws.size());
  const double lo_p = (1.0 - gamma) / 2.0;
  for (int h = 0; h < rows; ++h) {
    for (int j = 0; j < cols; ++j) {
      for (size_t d = 0; d < draws.size(); ++d) cell[d] = draws[d](h, j);
      std::sort(cell.begin(), cell.end());
      set.median(h, j) = percentile_sorted(cell, 0.5);
      set.lower(h, j) = percentile_sorted(cell, lo_p);
      set.upper(h, j) = percentile_sorted(cell, 1.0 - lo_p);
    }
  }
  set.per_draw = std::move(draws);
  return set;
}

IrfSet bootstrap_bands(const Eigen::MatrixXd& data, const VarModel& fitted,
                       const ImpulseMapper& alpha_of, const BootstrapConfig& cfg,
                       const Eigen::MatrixXd& exog) {
  if (cfg.replications < 100) fail("bootstrap needs at least 100 replications");
  const int t_len = static_cast<int>(data.rows());
  const int n = fitted.n();
  const int p = fitted.p;
  const int t_eff = t_len - p;
  const bool has_exog = exog.cols() > 0;

  std::vector<Eigen::MatrixXd> draws;
  draws.reserve(cfg.replications);
  long failures = 0;
  for (int b = 0; b < cfg.replications; ++b) {
    Rng rng(Rng::mix(cfg.seed, 0x0b00u + static_cast<std::uint64_t>(b)));
    // Rebuild pseudo-data with resampled residual rows on the original
    // initial conditions.
    Eigen::MatrixXd pseudo(t_len, n);
    pseudo.topRows(p) = data.topRows(p);
    for (int t = p; t < t_len; ++t) {
      Eigen::VectorXd y = fitted.intercept;
      for (int l = 1; l <= p; ++l) y += fitted.coeffs[l - 1] * pseudo.row(t - l).transpose();
      if (has_exog) y += fitted.exog_coeffs * exog.row(t).transpose();
      y += fitted.residuals.row(static_cast<int>(rng.uniform_int(t_eff))).transpose();
      pseudo.row(t) = y.transpose();
    }
    try {
      VarModel refit = fit_var(pseudo, p, fitted.var_ids, exog, fitted.exog_ids);
      draws.push_back(structural_irf(refit, alpha_of(refit, b), cfg.horizon));
    } catch (const Error&) {
      ++failures;
    }
  }
  double fail_rate = static_cast<double>(failures) / cfg.replications;
  if (draws.empty() || fail_rate > cfg.fail_threshold)
    fail("bootstrap: replication failure rate " + std::to_string(fail_rate) +
         " exceeds threshold " + std::to_string(cfg.fail_threshold));
  return IrfSet::from_draws(std::move(draws), cfg.gamma);
}

IrfSet bootstrap_bands(const Eigen::MatrixXd& data, const VarModel& fitted,
                       const SignRestrictionSpec& spec, const ImpulseVector& benchmark,
                       const BootstrapConfig& cfg, const Eigen::MatrixXd& exog) {
  ImpulseMapper mapper;
  if (cfg.reidentify) {
    mapper = [&spec, &cfg](const VarModel& refit, int b) {
      DrawSet ds = identify_tax_shock(refit, spec, 1, cfg.reident_attempts,
                                      Rng::mix(cfg.seed, 0x1d00u + static_cast<std::uint64_t>(b)),
                                      IdentifyMode::Penalty);
      return ds.accepted.front().iv.alpha;
    };
  } else {
    mapper = [&spec, &benchmark](const VarModel& refit, int) {
      Eigen::VectorXd alpha = refit.chol * benchmark.q;
      if (alpha[spec.shock_var] > 0.0) alpha = -alpha;  // keep the cut orientation
      return alpha;
    };
  }
  return bootstrap_bands(data, fitted, mapper, cfg, exog);
}

Eigen::MatrixXd cumulative_irf(const Eigen::MatrixXd& median_irf, const std::vector<int>& horizons,
                               bool include_impact) {
  const int h_max = static_cast<int>(median_irf.rows()) - 1;
  const int n = static_cast<int>(median_irf.cols());
  Eigen::MatrixXd out(n, static_cast<int>(horizons.size()));
  for (size_t k = 0; k < horizons.size(); ++k) {
    int hz = horizons[k];
    if (hz < 0 || hz > h_max) fail("cumulative horizon " + std::to_string(hz) + " outside 0.." +
                                   std::to_string(h_max));
    for (int j = 0; j < n; ++j) {
      double acc = include_impact ? median_irf(0, j) : 0.0;
      for (int h = 1; h <= hz; ++h) acc += median_irf(h, j);
      out(j, static_cast<int>(k)) = acc;
    }
  }
  return out;
}

FevdTable fevd(const VarModel& model, const Eigen::VectorXd& alpha,
               const std::vector<int>& horizons) {
  if (alpha.size() != model.n()) fail("fevd: alpha does not match the model");
  if (horizons.empty()) fail("fevd: no horizons requested");
  int h_max = *std::max_element(horizons.begin(), horizons.end());
  for (int h : horizons)
    if (h < 1) fail("fevd horizons must be >= 1");
  std::vector<Eigen::MatrixXd> psi = reduced_form_irf(model, h_max - 1);

  const int n = model.n();
  FevdTable table;
  table.horizons = horizons;
  table.shares.resize(n, static_cast<int>(horizons.size()));
  // Cumulative-through-h shock and total forecast-error variances.
  Eigen::MatrixXd shock_cum = Eigen::MatrixXd::Zero(h_max, n);
  Eigen::MatrixXd total_cum = Eigen::MatrixXd::Zero(h_max, n);
  Eigen::VectorXd shock_acc = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd total_acc = Eigen::VectorXd::Zero(n);
  for (int s = 0; s < h_max; ++s) {
    Eigen::VectorXd resp = psi[s] * alpha;
    shock_acc += resp.array().square().matrix();
    total_acc += (psi[s] * model.sigma_u * psi[s].transpose()).diagonal();
    shock_cum.row(s) = shock_acc.transpose();
    total_cum.row(s) = total_acc.transpose();
  }
  for (size_t k = 0; k < horizons.size(); ++k) {
    int h = horizons[k];
    for (int j = 0; j < n; ++j) {
      double total = total_cum(h - 1, j);
      if (total <= 0.0) fail("fevd: zero total forecast variance for variable " +
                             std::to_string(j) + " at horizon " + std::to_string(h));
      table.shares(j, static_cast<int>(k)) = 100.0 * shock_cum(h - 1, j) / total;
    }
  }
  return table;
}

Eigen::MatrixXd observable_loadings(const Eigen::MatrixXd& targets,
                                    const Eigen::MatrixXd& regressors) {
  if (targets.rows() != regressors.rows()) fail("observable_loadings: row count mismatch");
  const int t_len = static_cast<int>(regressors.rows());
  const int k = static_cast<int>(regressors.cols());
  Eigen::MatrixXd x(t_len, k + 1);
  x.col(0).setOnes();
  x.rightCols(k) = regressors;
  Eigen::MatrixXd beta = x.colPivHouseholderQr().solve(targets);  // (k+1) x m
  return beta.bottomRows(k).transpose();
}

Eigen::VectorXd observable_irf(const Eigen::VectorXd& loadings_row,
                               const Eigen::MatrixXd& regressor_irfs) {
  if (loadings_row.size() != regressor_irfs.cols())
    fail("observable_irf: loadings length " + std::to_string(loadings_row.size()) +
         " does not match " + std::to_string(regressor_irfs.cols()) + " regressor paths");
  return regressor_irfs * loadings_row;
}

MtResult median_target_select(const std::vector<Eigen::MatrixXd>& per_draw_irfs) {
  const size_t n_draws = per_draw_irfs.size();
  if (n_draws < 2) fail("median-target needs at least 2 draws");
  const int rows = static_cast<int>(per_draw_irfs[0].rows());
  const int cols = static_cast<int>(per_draw_irfs[0].cols());

  // Pointwise median and cross-draw sd per cell.
  Eigen::MatrixXd med(rows, cols), sd(rows, cols);
  std::vector<double> cell(n_draws);
  for (int h = 0; h < rows; ++h)
    for (int j = 0; j < cols; ++j) {
      double mean = 0.0;
      for (size_t d = 0; d < n_draws; ++d) {
        cell[d] = per_draw_irfs[d](h, j);
        mean += cell[d];
      }
      mean /= n_draws;
      double ss = 0.0;
      for (size_t d = 0; d < n_draws; ++d) ss += (cell[d] - mean) * (cell[d] - mean);
      sd(h, j) = std::sqrt(ss / (n_draws - 1));
      std::sort(cell.begin(), cell.end());
      med(h, j) = percentile_sorted(cell, 0.5);
    }

  MtResult res;
  res.per_draw_gaps.resize(n_draws, 0.0);
  for (size_t d = 0; d < n_draws; ++d) {
    double gap = 0.0;
    for (int h = 0; h < rows; ++h)
      for (int j = 0; j < cols; ++j) {
        if (sd(h, j) <= 0.0) continue;
        double z = (per_draw_irfs[d](h, j) - med(h, j)) / sd(h, j);
        gap += z * z;
      }
    res.per_draw_gaps[d] = gap;
    if (res.selected_draw < 0 || gap < res.gap) {
      res.selected_draw = static_cast<int>(d);
      res.gap = gap;
    }
  }
  return res;
}

Eigen::VectorXd structural_shock_series(const VarModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.n()) fail("structural_shock_series: q does not match the model");
  // eps_t = L^{-1} u_t rowwise; the identified shock is its q-projection.
  Eigen::MatrixXd eps = model.chol.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd(model.residuals.transpose()));
  return eps.transpose() * q;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) fail("correlation: length mismatch");
  double ma = a.mean(), mb = b.mean();
  Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom == 0.0) fail("correlation: zero variance input");
  return (da * db).sum() / denom;
}

}  // namespace favar
