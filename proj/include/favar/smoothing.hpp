#pragma once

#include <Eigen/Dense>

namespace favar {

// State-space trend/cycle split of one factor path. The state is
// (trend_t, slope_t) with
//   trend_t = trend_{t-1} + slope_t,  slope_t = slope_{t-1} + omega_t,
// and the cycle is the measurement noise. With sigma2_cycle = 1 and
// sigma2_omega = 1/lambda the smoothed trend is the HP(lambda) trend.
struct TrendCycleDecomposition {
  Eigen::VectorXd trend;  // smoothed trend, length T
  Eigen::VectorXd cycle;  // factor - trend
  Eigen::VectorXd slope;  // smoothed slope path
  double sigma2_cycle = 1.0;
  double sigma2_omega = 0.0;
  double q = 0.0;       // sigma2_cycle / sigma2_omega
  double loglik = 0.0;  // average per included observation
  int optimizer_iterations = 0;
};

// constrained: fix sigma2_omega = 1/1600 (the HP quarterly restriction);
// otherwise maximize the likelihood over sigma2_omega. sigma2_cycle is the
// scale normalization (= 1) in both cases.
TrendCycleDecomposition fit_local_linear_trend(const Eigen::VectorXd& factor, bool constrained);

// Average prediction-error-decomposition log likelihood at a given slope
// variance (sigma2_cycle fixed at 1), as used by the MLE.
double local_linear_trend_loglik(const Eigen::VectorXd& factor, double sigma2_omega);

struct LrTestResult {
  double stat = 0.0;
  int dof = 2;
  double p_value = 1.0;
};

// LR = -2 T (loglik_constrained - loglik_unconstrained) on per-observation
// average log likelihoods, chi-square with 2 dof.
LrTestResult lr_test(double loglik_unconstrained, double loglik_constrained, int T);

// Direct penalized-least-squares HP trend via a sparse solve of
// (I + lambda D'D) trend = series. Kept free of any Kalman code so the
// two routes cross-check each other.
Eigen::VectorXd hp_filter_oracle(const Eigen::VectorXd& series, double lambda);

}  // namespace favar
