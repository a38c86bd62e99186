#include "favar/smoothing.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "favar/csv.hpp"
#include "favar/error.hpp"
#include "favar/stats.hpp"

namespace favar {

namespace {

constexpr double kDiffuseVariance = 1e7;
constexpr int kDiffuseBurnIn = 2;  // prediction errors dropped from the likelihood

struct FilterOutput {
  double avg_loglik = 0.0;
  Eigen::VectorXd trend, slope;  // smoothed states
};

// Kalman filter + RTS smoother for the (trend, slope) system. The
// transition is T = [[1,1],[0,1]] with state noise R eta, R = (1,1)',
// eta ~ N(0, s2_omega); the measurement adds cycle noise s2_cycle.
FilterOutput kalman_smooth(const Eigen::VectorXd& y, double s2_cycle, double s2_omega,
                           bool want_states) {
  const int t_len = static_cast<int>(y.size());
  Eigen::Matrix2d trans;
  trans << 1, 1, 0, 1;
  Eigen::Matrix2d q_state;
  q_state << s2_omega, s2_omega, s2_omega, s2_omega;

  std::vector<Eigen::Vector2d> a_pred(t_len), a_filt(t_len);
  std::vector<Eigen::Matrix2d> p_pred(t_len), p_filt(t_len);

  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Matrix2d p = kDiffuseVariance * Eigen::Matrix2d::Identity();

  double loglik = 0.0;
  int used = 0;
  for (int t = 0; t < t_len; ++t) {
    a_pred[t] = a;
    p_pred[t] = p;
    double v = y[t] - a[0];
    double f = p(0, 0) + s2_cycle;
    if (!(f > 0.0) || !std::isfinite(f))
      fail("Kalman filter: non-positive prediction variance at t=" + std::to_string(t));
    if (t >= kDiffuseBurnIn) {
      loglik += -0.5 * (std::log(2.0 * M_PI) + std::log(f) + v * v / f);
      ++used;
    }
    Eigen::Vector2d gain = p.col(0) / f;
    Eigen::Vector2d a_upd = a + gain * v;
    Eigen::Matrix2d p_upd = p - gain * p.row(0);
    p_upd = 0.5 * (p_upd + p_upd.transpose()).eval();
    a_filt[t] = a_upd;
    p_filt[t] = p_upd;
    a = trans * a_upd;
    p = trans * p_upd * trans.transpose() + q_state;
    p = 0.5 * (p + p.transpose()).eval();
  }

  FilterOutput out;
  out.avg_loglik = loglik / used;
  if (!want_states) return out;

  // Fixed-interval smoother, backward pass.
  out.trend.resize(t_len);
  out.slope.resize(t_len);
  Eigen::Vector2d a_next = a_filt[t_len - 1];
  Eigen::Matrix2d p_next = p_filt[t_len - 1];
  out.trend[t_len - 1] = a_next[0];
  out.slope[t_len - 1] = a_next[1];
  for (int t = t_len - 2; t >= 0; --t) {
    Eigen::Matrix2d pred = trans * p_filt[t] * trans.transpose() + q_state;
    Eigen::Matrix2d gain = p_filt[t] * trans.transpose() * pred.inverse();
    Eigen::Vector2d a_sm = a_filt[t] + gain * (a_next - trans * a_filt[t]);
    Eigen::Matrix2d p_sm = p_filt[t] + gain * (p_next - pred) * gain.transpose();
    out.trend[t] = a_sm[0];
    out.slope[t] = a_sm[1];
    a_next = a_sm;
    p_next = 0.5 * (p_sm + p_sm.transpose()).eval();
  }
  return out;
}

}  // namespace

double local_linear_trend_loglik(const Eigen::VectorXd& factor, double sigma2_omega) {
  if (factor.size() < 10) fail("local linear trend fit needs T >= 10");
  if (sigma2_omega < 0.0) fail("sigma2_omega must be nonnegative");
  return kalman_smooth(factor, 1.0, sigma2_omega, false).avg_loglik;
}

TrendCycleDecomposition fit_local_linear_trend(const Eigen::VectorXd& factor, bool constrained) {
  const int t_len = static_cast<int>(factor.size());
  if (t_len < 10) fail("local linear trend fit needs T >= 10, got " + std::to_string(t_len));
  for (int i = 0; i < t_len; ++i)
    if (!std::isfinite(factor[i])) fail("non-finite input at t=" + std::to_string(i));

  TrendCycleDecomposition out;
  out.sigma2_cycle = 1.0;

  int iterations = 0;
  double s2_omega = 1.0 / 1600.0;
  if (!constrained) {
    // Profile likelihood over ln(sigma2_omega): coarse grid scan, then a
    // golden-section refinement inside the bracketing interval.
    auto objective = [&](double log_s2) {
      ++iterations;
      return -kalman_smooth(factor, 1.0, std::exp(log_s2), false).avg_loglik;
    };
    const double lo_bound = std::log(1e-12), hi_bound = std::log(1e6);
    const int grid_n = 73;
    double best_x = lo_bound, best_f = std::numeric_limits<double>::infinity();
    std::vector<double> grid_f(grid_n);
    for (int i = 0; i < grid_n; ++i) {
      double xg = lo_bound + (hi_bound - lo_bound) * i / (grid_n - 1);
      grid_f[i] = objective(xg);
      if (grid_f[i] < best_f) {
        best_f = grid_f[i];
        best_x = xg;
      }
    }
    if (!std::isfinite(best_f))
      fail("trend MLE failed to converge: non-finite likelihood over the search grid after " +
           std::to_string(iterations) + " evaluations");
    double step = (hi_bound - lo_bound) / (grid_n - 1);
    double a = std::max(lo_bound, best_x - step), b = std::min(hi_bound, best_x + step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = objective(c), fd = objective(d);
    while (b - a > 1e-10) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = objective(d);
      }
    }
    s2_omega = std::exp(0.5 * (a + b));
  }

  FilterOutput fo = kalman_smooth(factor, 1.0, s2_omega, true);
  out.sigma2_omega = s2_omega;
  out.q = out.sigma2_cycle / s2_omega;
  out.loglik = fo.avg_loglik;
  out.optimizer_iterations = iterations;
  out.trend = fo.trend;
  out.slope = fo.slope;
  out.cycle = factor - fo.trend;
  return out;
}

LrTestResult lr_test(double loglik_unconstrained, double loglik_constrained, int T) {
  if (T < 1) fail("lr_test: T must be positive");
  if (loglik_unconstrained < loglik_constrained - 1e-8)
    fail("lr_test: unconstrained loglik " + fmt_num(loglik_unconstrained) +
         " below constrained " + fmt_num(loglik_constrained) + " (arguments swapped?)");
  LrTestResult res;
  res.stat = -2.0 * static_cast<double>(T) * (loglik_constrained - loglik_unconstrained);
  if (res.stat < 0.0) res.stat = 0.0;  // within the 1e-8 tolerance band
  res.dof = 2;
  res.p_value = chi_square_sf(res.stat, res.dof);
  return res;
}

Eigen::VectorXd hp_filter_oracle(const Eigen::VectorXd& series, double lambda) {
  const int t_len = static_cast<int>(series.size());
  if (lambda <= 0.0) fail("hp_filter_oracle: lambda must be positive");
  if (t_len < 4) fail("hp_filter_oracle: need T >= 4");

  // A = I + lambda D'D with D the (T-2) x T second-difference operator.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(3 * t_len));
  Eigen::SparseMatrix<double> d(t_len - 2, t_len);
  for (int i = 0; i < t_len - 2; ++i) {
    trips.emplace_back(i, i, 1.0);
    trips.emplace_back(i, i + 1, -2.0);
    trips.emplace_back(i, i + 2, 1.0);
  }
  d.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseMatrix<double> a(t_len, t_len);
  a.setIdentity();
  a += lambda * Eigen::SparseMatrix<double>(d.transpose() * d);

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(a);
  if (solver.info() != Eigen::Success) fail("hp_filter_oracle: sparse factorization failed");
  Eigen::VectorXd trend = solver.solve(series);
  // One step of iterative refinement; the system is ill-conditioned for
  // large lambda.
  trend += solver.solve(series - a * trend);
  return trend;
}

}  // namespace favar
