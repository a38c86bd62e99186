#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "favar/identify.hpp"
#include "favar/var_model.hpp"

namespace favar {

// Structural responses to the impulse column alpha; row h = Psi_h * alpha.
Eigen::MatrixXd structural_irf(const VarModel& model, const Eigen::VectorXd& alpha, int horizon);
Eigen::MatrixXd structural_irf(const std::vector<Eigen::MatrixXd>& psi,
                               const Eigen::VectorXd& alpha);

// Pointwise median and percentile bands over a cloud of (H+1) x n response
// paths (sign-restriction draws or bootstrap replications).
struct IrfSet {
  int horizon = 0;
  double gamma = 0.9;
  std::vector<Eigen::MatrixXd> per_draw;
  Eigen::MatrixXd median, lower, upper;

  static IrfSet from_draws(std::vector<Eigen::MatrixXd> draws, double gamma);
};

struct BootstrapConfig {
  int replications = 200;
  double gamma = 0.90;
  int horizon = 20;
  std::uint64_t seed = 0;
  bool reidentify = false;        // false: reuse the benchmark q per replication
  long reident_attempts = 20000;  // penalty-mode search budget when reidentifying
  double fail_threshold = 0.5;    // tolerated replication failure rate
};

// Maps a refitted model to the impulse column whose IRF is collected; the
// replication index makes seeded re-identification reproducible.
using ImpulseMapper = std::function<Eigen::VectorXd(const VarModel&, int replication)>;

// Recursive-design residual bootstrap: resample residual rows, rebuild
// pseudo-data from the fitted system, refit, and collect structural IRFs
// of alpha_of(refit). Replications where the refit or mapping throws are
// counted against fail_threshold.
IrfSet bootstrap_bands(const Eigen::MatrixXd& data, const VarModel& fitted,
                       const ImpulseMapper& alpha_of, const BootstrapConfig& cfg,
                       const Eigen::MatrixXd& exog = Eigen::MatrixXd());

// Sign-restriction variant: reuse the benchmark q through each
// replication's Cholesky factor (cut orientation preserved), or re-search
// with the penalty method when cfg.reidentify is set.
IrfSet bootstrap_bands(const Eigen::MatrixXd& data, const VarModel& fitted,
                       const SignRestrictionSpec& spec, const ImpulseVector& benchmark,
                       const BootstrapConfig& cfg,
                       const Eigen::MatrixXd& exog = Eigen::MatrixXd());

// Sums of median responses over h = 1..horizon (impact excluded unless
// include_impact). Returns n x horizons.size().
Eigen::MatrixXd cumulative_irf(const Eigen::MatrixXd& median_irf, const std::vector<int>& horizons,
                               bool include_impact = false);

// Forecast-error variance shares of one unit structural shock, percent.
struct FevdTable {
  std::vector<int> horizons;
  Eigen::MatrixXd shares;  // n x horizons.size()
};
FevdTable fevd(const VarModel& model, const Eigen::VectorXd& alpha,
               const std::vector<int>& horizons);

// OLS loadings (intercept dropped) of each target column on the regressor
// columns; rows index targets.
Eigen::MatrixXd observable_loadings(const Eigen::MatrixXd& targets,
                                    const Eigen::MatrixXd& regressors);

// Response path of an out-of-VAR observable: loadings_row stacked against
// the regressors' IRF paths.
Eigen::VectorXd observable_irf(const Eigen::VectorXd& loadings_row,
                               const Eigen::MatrixXd& regressor_irfs);

// Fry-Pagan Median-Target: the draw minimizing the summed squared
// standardized gap to the pointwise median. Cells with zero cross-draw
// dispersion are excluded.
struct MtResult {
  int selected_draw = -1;
  double gap = 0.0;
  std::vector<double> per_draw_gaps;
};
MtResult median_target_select(const std::vector<Eigen::MatrixXd>& per_draw_irfs);

// Structural shock path implied by an impulse direction: q' L^{-1} u_t.
Eigen::VectorXd structural_shock_series(const VarModel& model, const Eigen::VectorXd& q);

// Pearson correlation.
double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace favar
