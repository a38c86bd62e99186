#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "favar/error.hpp"
#include "favar/var_model.hpp"
#include "test_helpers.hpp"

using namespace favar;
using favar::testing::randn;
using favar::testing::simulate_var1;

TEST_CASE("fit_var recovers a known VAR(1) on a long sample") {
  Rng rng(80);
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.1, 0.0, 0.3;
  Eigen::MatrixXd data = simulate_var1(a, Eigen::MatrixXd::Identity(2, 2), 12000, rng);
  VarModel m = fit_var(data, 1);
  CHECK((m.coeffs[0] - a).cwiseAbs().maxCoeff() < 0.03);
  CHECK(m.intercept.cwiseAbs().maxCoeff() < 0.1);
  CHECK((m.sigma_u - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
  CHECK(m.spectral_radius == doctest::Approx(0.5).epsilon(0.2));
  CHECK(m.stationary());
  CHECK(m.design_condition >= 1.0);
  CHECK(m.design_condition < 1e3);  // well-conditioned simulated design
}

TEST_CASE("fit_var on white noise: coefficients within 3 standard errors of zero") {
  Rng rng(81);
  const int t_len = 2000, n = 2, p = 2;
  Eigen::MatrixXd data = randn(t_len, n, rng);
  VarModel m = fit_var(data, p);
  // standard errors from the OLS formula, per equation
  const int t_eff = t_len - p;
  Eigen::MatrixXd x(t_eff, 1 + n * p);
  for (int i = 0; i < t_eff; ++i) {
    x(i, 0) = 1.0;
    for (int l = 1; l <= p; ++l) x.block(i, 1 + (l - 1) * n, 1, n) = data.row(i + p - l);
  }
  Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  for (int eq = 0; eq < n; ++eq) {
    double s2 = m.residuals.col(eq).squaredNorm() / (t_eff - (1 + n * p));
    for (int l = 0; l < p; ++l)
      for (int j = 0; j < n; ++j) {
        double se = std::sqrt(s2 * xtx_inv(1 + l * n + j, 1 + l * n + j));
        CHECK(std::abs(m.coeffs[l](eq, j)) < 3.0 * se);
      }
  }
}

TEST_CASE("fit_var residuals are orthogonal to the regressors") {
  Rng rng(82);
  Eigen::MatrixXd a(3, 3);
  a << 0.4, 0.1, 0.0, -0.2, 0.5, 0.1, 0.0, 0.0, 0.3;
  Eigen::MatrixXd data = simulate_var1(a, Eigen::MatrixXd::Identity(3, 3), 400, rng);
  VarModel m = fit_var(data, 2);
  const int t_eff = 400 - 2;
  Eigen::MatrixXd x(t_eff, 1 + 3 * 2);
  for (int i = 0; i < t_eff; ++i) {
    x(i, 0) = 1.0;
    for (int l = 1; l <= 2; ++l) x.block(i, 1 + (l - 1) * 3, 1, 3) = data.row(i + 2 - l);
  }
  Eigen::MatrixXd cross = x.transpose() * m.residuals / t_eff;
  CHECK(cross.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_var size and rank guards") {
  Rng rng(83);
  Eigen::MatrixXd tiny = randn(4, 2, rng);
  CHECK_THROWS_WITH_AS(fit_var(tiny, 2), doctest::Contains("too few observations"), Error);
  // duplicated column makes the lagged regressors collinear
  Eigen::MatrixXd dup(40, 2);
  dup.col(0) = randn(40, 1, rng);
  dup.col(1) = 2.0 * dup.col(0);
  CHECK_THROWS_WITH_AS(fit_var(dup, 1), doctest::Contains("rank-deficient"), Error);
}

TEST_CASE("exogenous regressors are estimated alongside the lags") {
  Rng rng(84);
  const int t_len = 3000;
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.0, 0.0, 0.4;
  Eigen::MatrixXd exog = randn(t_len, 1, rng);
  Eigen::MatrixXd b(2, 1);
  b << 1.5, -0.7;
  Eigen::MatrixXd data(t_len, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  for (int t = 0; t < t_len; ++t) {
    Eigen::VectorXd e(2);
    e << rng.normal(), rng.normal();
    y = a * y + b * exog.row(t).transpose() + e;
    data.row(t) = y.transpose();
  }
  VarModel m = fit_var(data, 1, {"y1", "y2"}, exog, {"x"});
  CHECK((m.exog_coeffs - b).cwiseAbs().maxCoeff() < 0.05);
  CHECK((m.coeffs[0] - a).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("cholesky_factor") {
  SUBCASE("identity") {
    Eigen::MatrixXd l = cholesky_factor(Eigen::MatrixXd::Identity(3, 3));
    CHECK((l - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("2x2 hand example") {
    Eigen::MatrixXd s(2, 2);
    s << 4, 2, 2, 3;
    Eigen::MatrixXd l = cholesky_factor(s);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 0) == doctest::Approx(1.0));
    CHECK(l(0, 1) == doctest::Approx(0.0));
    CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("non-PD input reports the smallest eigenvalue") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 2, 2, 1;  // eigenvalues 3 and -1
    CHECK_THROWS_WITH_AS(cholesky_factor(s), doctest::Contains("-1"), Error);
  }
  SUBCASE("asymmetric input is rejected") {
    Eigen::MatrixXd s(2, 2);
    s << 1, 0.5, 0.2, 1;
    CHECK_THROWS_WITH_AS(cholesky_factor(s), doctest::Contains("not symmetric"), Error);
  }
  SUBCASE("round trip on random PD matrices") {
    Rng rng(85);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::MatrixXd g = randn(5, 5, rng);
      Eigen::MatrixXd s = g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(5, 5);
      Eigen::MatrixXd l = cholesky_factor(s);
      CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() < 1e-8);
      for (int i = 0; i < 5; ++i) CHECK(l(i, i) > 0.0);
    }
  }
}

TEST_CASE("reduced_form_irf") {
  SUBCASE("univariate AR(1) gives the geometric sequence") {
    Rng rng(86);
    Eigen::MatrixXd data(500, 1);
    double y = 0.0;
    for (int t = 0; t < 500; ++t) {
      y = 0.5 * y + rng.normal();
      data(t, 0) = y;
    }
    VarModel m = fit_var(data, 1);
    m.coeffs[0](0, 0) = 0.5;  // exact coefficient for the oracle check
    auto psi = reduced_form_irf(m, 6);
    for (int h = 0; h <= 6; ++h) CHECK(psi[h](0, 0) == doctest::Approx(std::pow(0.5, h)));
  }
  SUBCASE("zero coefficients: identity at impact, zero after") {
    Rng rng(87);
    VarModel m = fit_var(randn(100, 2, rng), 1);
    m.coeffs[0].setZero();
    auto psi = reduced_form_irf(m, 4);
    CHECK((psi[0] - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    for (int h = 1; h <= 4; ++h) CHECK(psi[h].cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("bivariate VAR(2) matches zero-noise simulation of a unit impulse") {
    Rng rng(88);
    Eigen::MatrixXd data = randn(300, 2, rng);
    VarModel m = fit_var(data, 2);
    const int h_max = 10;
    auto psi = reduced_form_irf(m, h_max);
    for (int j = 0; j < 2; ++j) {
      // simulate the fitted system with a one-unit innovation in eq j,
      // zero noise elsewhere, intercept suppressed
      Eigen::MatrixXd path = Eigen::MatrixXd::Zero(h_max + 3, 2);
      for (int t = 2; t < h_max + 3; ++t) {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
        for (int l = 1; l <= 2; ++l) y += m.coeffs[l - 1] * path.row(t - l).transpose();
        if (t == 2) y += Eigen::VectorXd::Unit(2, j);
        path.row(t) = y.transpose();
      }
      for (int h = 0; h <= h_max; ++h)
        CHECK((psi[h].col(j) - path.row(2 + h).transpose()).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("model JSON dump carries the full coefficient set") {
  Rng rng(89);
  Eigen::MatrixXd data = randn(120, 2, rng);
  VarModel m = fit_var(data, 2, {"GDP", "CPI"});
  auto j = nlohmann::json::parse(var_model_to_json(m));
  CHECK(j["p"] == 2);
  CHECK(j["var_ids"][0] == "GDP");
  CHECK(j["coeffs"].size() == 2);
  CHECK(j["sigma_u"].size() == 2);
  CHECK(j["chol"][0][1] == doctest::Approx(0.0));
  CHECK(j.contains("spectral_radius"));
}
