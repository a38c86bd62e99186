#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "favar/analysis.hpp"
#include "favar/error.hpp"
#include "test_helpers.hpp"

using namespace favar;
using favar::testing::randn;
using favar::testing::simulate_var1;

namespace {

VarModel toy_model(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigma) {
  Rng rng(321);
  const int n = static_cast<int>(a.rows());
  VarModel m = fit_var(randn(60 + 4 * n, n, rng), 1);
  m.coeffs[0] = a;
  m.intercept.setZero();
  m.sigma_u = sigma;
  m.chol = cholesky_factor(sigma);
  return m;
}

}  // namespace

TEST_CASE("structural_irf") {
  SUBCASE("static model: impact only") {
    VarModel m = toy_model(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2));
    Eigen::MatrixXd irf = structural_irf(m, Eigen::VectorXd::Unit(2, 0), 5);
    CHECK(irf(0, 0) == doctest::Approx(1.0));
    CHECK(irf(0, 1) == doctest::Approx(0.0));
    CHECK(irf.bottomRows(5).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("univariate geometric path with alpha = 2") {
    Eigen::MatrixXd a(1, 1), s(1, 1);
    a << 0.5;
    s << 1.0;
    VarModel m = toy_model(a, s);
    Eigen::VectorXd alpha(1);
    alpha << 2.0;
    Eigen::MatrixXd irf = structural_irf(m, alpha, 4);
    for (int h = 0; h <= 4; ++h) CHECK(irf(h, 0) == doctest::Approx(2.0 * std::pow(0.5, h)));
  }
  SUBCASE("matches a zero-noise simulation oracle") {
    Rng rng(200);
    Eigen::MatrixXd data = simulate_var1(
        (Eigen::MatrixXd(2, 2) << 0.4, 0.2, -0.1, 0.5).finished(),
        Eigen::MatrixXd::Identity(2, 2), 400, rng);
    VarModel m = fit_var(data, 2);
    Eigen::VectorXd alpha = m.chol.col(0);
    const int h_max = 12;
    Eigen::MatrixXd irf = structural_irf(m, alpha, h_max);
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(h_max + 3, 2);
    for (int t = 2; t < h_max + 3; ++t) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
      for (int l = 1; l <= 2; ++l) y += m.coeffs[l - 1] * path.row(t - l).transpose();
      if (t == 2) y += alpha;
      path.row(t) = y.transpose();
    }
    for (int h = 0; h <= h_max; ++h)
      CHECK((irf.row(h) - path.row(2 + h)).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("IrfSet percentiles") {
  Rng rng(201);
  std::vector<Eigen::MatrixXd> draws;
  for (int d = 0; d < 200; ++d) draws.push_back(randn(6, 2, rng));
  IrfSet set = IrfSet::from_draws(draws, 0.90);
  SUBCASE("median sits inside the bands everywhere") {
    for (int h = 0; h < 6; ++h)
      for (int j = 0; j < 2; ++j) {
        CHECK(set.lower(h, j) <= set.median(h, j));
        CHECK(set.median(h, j) <= set.upper(h, j));
      }
  }
  SUBCASE("bands widen as the level increases") {
    IrfSet narrow = IrfSet::from_draws(draws, 0.60);
    IrfSet wide = IrfSet::from_draws(draws, 0.95);
    for (int h = 0; h < 6; ++h)
      for (int j = 0; j < 2; ++j) {
        CHECK(wide.lower(h, j) <= narrow.lower(h, j) + 1e-12);
        CHECK(wide.upper(h, j) >= narrow.upper(h, j) - 1e-12);
      }
  }
}

TEST_CASE("bootstrap bands") {
  Rng rng(202);
  Eigen::MatrixXd a(2, 2);
  a << 0.5, 0.1, 0.0, 0.4;
  Eigen::MatrixXd data = simulate_var1(a, Eigen::MatrixXd::Identity(2, 2), 200, rng);
  VarModel m = fit_var(data, 1);
  SignRestrictionSpec spec;
  spec.signs = {Sign::Positive, Sign::Negative};
  spec.shock_var = 1;
  spec.restricted_horizon = 1;
  DrawSet ds = identify_tax_shock(m, spec, 50, 100000, 31);
  ImpulseVector bench = ds.accepted.front().iv;

  BootstrapConfig bc;
  bc.replications = 100;
  bc.horizon = 8;
  bc.seed = 5150;
  SUBCASE("median lies within the bands and runs are bitwise reproducible") {
    IrfSet b1 = bootstrap_bands(data, m, spec, bench, bc);
    IrfSet b2 = bootstrap_bands(data, m, spec, bench, bc);
    CHECK((b1.median - b2.median).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b1.lower - b2.lower).cwiseAbs().maxCoeff() == 0.0);
    CHECK((b1.upper - b2.upper).cwiseAbs().maxCoeff() == 0.0);
    for (int h = 0; h <= 8; ++h)
      for (int j = 0; j < 2; ++j) {
        CHECK(b1.lower(h, j) <= b1.median(h, j));
        CHECK(b1.median(h, j) <= b1.upper(h, j));
      }
  }
  SUBCASE("re-identification per replication also works") {
    bc.reidentify = true;
    bc.reident_attempts = 200;
    IrfSet b = bootstrap_bands(data, m, spec, bench, bc);
    CHECK(b.per_draw.size() == 100);
  }
  SUBCASE("replication count below 100 is rejected") {
    bc.replications = 50;
    CHECK_THROWS_WITH_AS(bootstrap_bands(data, m, spec, bench, bc),
                         doctest::Contains("at least 100"), Error);
  }
  SUBCASE("excess replication failures surface as an error with the rate") {
    ImpulseMapper always_fails = [](const VarModel&, int) -> Eigen::VectorXd {
      throw Error("identification failed");
    };
    CHECK_THROWS_WITH_AS(bootstrap_bands(data, m, always_fails, bc),
                         doctest::Contains("failure rate"), Error);
  }
}

TEST_CASE("cumulative_irf") {
  SUBCASE("constant response of 1 sums to the horizon") {
    Eigen::MatrixXd irf = Eigen::MatrixXd::Ones(13, 1);
    Eigen::MatrixXd cum = cumulative_irf(irf, {4, 12});
    CHECK(cum(0, 0) == doctest::Approx(4.0));
    CHECK(cum(0, 1) == doctest::Approx(12.0));
  }
  SUBCASE("post-impact convention: responses 1,2,3 after impact give 3 at horizon 2") {
    Eigen::MatrixXd irf(4, 1);
    irf << 9.0, 1.0, 2.0, 3.0;  // impact row is excluded
    Eigen::MatrixXd cum = cumulative_irf(irf, {2});
    CHECK(cum(0, 0) == doctest::Approx(3.0));
    Eigen::MatrixXd with_impact = cumulative_irf(irf, {2}, true);
    CHECK(with_impact(0, 0) == doctest::Approx(12.0));
  }
  SUBCASE("additivity across horizons") {
    Rng rng(203);
    Eigen::MatrixXd irf = randn(21, 3, rng);
    Eigen::MatrixXd cum = cumulative_irf(irf, {4, 12});
    for (int j = 0; j < 3; ++j) {
      double tail = 0.0;
      for (int h = 5; h <= 12; ++h) tail += irf(h, j);
      CHECK(cum(j, 1) == doctest::Approx(cum(j, 0) + tail));
    }
  }
  SUBCASE("horizon beyond the path is rejected") {
    Eigen::MatrixXd irf = Eigen::MatrixXd::Ones(5, 1);
    CHECK_THROWS_WITH_AS(cumulative_irf(irf, {9}), doctest::Contains("outside"), Error);
  }
}

TEST_CASE("fevd") {
  SUBCASE("single-variable model: the shock is all of the variance") {
    Eigen::MatrixXd a(1, 1), s(1, 1);
    a << 0.6;
    s << 2.0;
    VarModel m = toy_model(a, s);
    FevdTable t = fevd(m, m.chol.col(0), {1, 5, 10});
    for (int k = 0; k < 3; ++k) CHECK(t.shares(0, k) == doctest::Approx(100.0));
  }
  SUBCASE("diagonal static model: first shock owns the first variable only") {
    VarModel m = toy_model(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2));
    FevdTable t = fevd(m, Eigen::VectorXd::Unit(2, 0), {1, 4});
    CHECK(t.shares(0, 0) == doctest::Approx(100.0));
    CHECK(t.shares(1, 0) == doctest::Approx(0.0));
    CHECK(t.shares(0, 1) == doctest::Approx(100.0));
    CHECK(t.shares(1, 1) == doctest::Approx(0.0));
  }
  SUBCASE("full Cholesky shock set sums to 100 per cell on random stable VARs") {
    Rng rng(204);
    for (int rep = 0; rep < 5; ++rep) {
      const int n = 3 + rep % 2;
      Eigen::MatrixXd a = 0.5 * randn(n, n, rng) / std::sqrt(static_cast<double>(n));
      Eigen::MatrixXd g = randn(n, n, rng);
      Eigen::MatrixXd sigma = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
      VarModel m = toy_model(a, sigma);
      std::vector<int> horizons = {1, 5, 20};
      Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n, 3);
      for (int j = 0; j < n; ++j) total += fevd(m, m.chol.col(j), horizons).shares;
      CHECK((total.array() - 100.0).abs().maxCoeff() < 1e-6);
    }
  }
  SUBCASE("shares stay within [0, 100]") {
    Rng rng(205);
    Eigen::MatrixXd g = randn(3, 3, rng);
    VarModel m = toy_model(0.4 * Eigen::MatrixXd::Identity(3, 3),
                           g * g.transpose() + Eigen::MatrixXd::Identity(3, 3));
    FevdTable t = fevd(m, m.chol.col(1), {1, 10});
    CHECK(t.shares.minCoeff() >= 0.0);
    CHECK(t.shares.maxCoeff() <= 100.0 + 1e-9);
  }
}

TEST_CASE("observable loadings and IRFs") {
  SUBCASE("zero loadings give a zero path") {
    Rng rng(206);
    Eigen::MatrixXd reg_irfs = randn(21, 4, rng);
    Eigen::VectorXd path = observable_irf(Eigen::VectorXd::Zero(4), reg_irfs);
    CHECK(path.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("unit loading on one regressor reproduces its IRF") {
    Rng rng(207);
    Eigen::MatrixXd reg_irfs = randn(21, 4, rng);
    Eigen::VectorXd path = observable_irf(Eigen::VectorXd::Unit(4, 2), reg_irfs);
    CHECK((path - reg_irfs.col(2)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("linear combinations superpose") {
    Rng rng(208);
    Eigen::MatrixXd reg_irfs = randn(21, 3, rng);
    Eigen::VectorXd w(3);
    w << 0.5, 0.2, 0.0;
    Eigen::VectorXd path = observable_irf(w, reg_irfs);
    Eigen::VectorXd manual = 0.5 * reg_irfs.col(0) + 0.2 * reg_irfs.col(1);
    CHECK((path - manual).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("loadings recover an exact linear observable") {
    Rng rng(209);
    Eigen::MatrixXd regs = randn(120, 3, rng);
    Eigen::VectorXd w(3);
    w << 0.5, 0.2, -1.0;
    Eigen::MatrixXd target = regs * w + Eigen::MatrixXd::Constant(120, 1, 3.0);
    Eigen::MatrixXd lam = observable_loadings(target, regs);
    CHECK((lam.row(0).transpose() - w).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("mismatched lengths are rejected") {
    CHECK_THROWS_WITH_AS(observable_irf(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Zero(5, 4)),
                         doctest::Contains("does not match"), Error);
  }
}

TEST_CASE("median_target_select") {
  SUBCASE("hand-computed gaps with a constant cell excluded") {
    // three draws on a 1x3 grid; middle cell has zero cross-draw sd
    Eigen::MatrixXd a(1, 3), b(1, 3), c(1, 3);
    a << 0.0, 2.0, 5.0;
    b << 1.0, 2.0, 7.0;
    c << 4.0, 2.0, 6.0;
    MtResult r = median_target_select({a, b, c});
    // cell 1: median 1, sd sqrt(13/3); cell 3: median 6, sd 1
    CHECK(r.per_draw_gaps[0] == doctest::Approx(3.0 / 13.0 + 1.0).epsilon(1e-12));
    CHECK(r.per_draw_gaps[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.per_draw_gaps[2] == doctest::Approx(27.0 / 13.0).epsilon(1e-12));
    CHECK(r.selected_draw == 1);
    CHECK(r.gap == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("a draw equal to the pointwise median has gap 0 and is selected") {
    Eigen::MatrixXd a(1, 2), b(1, 2), c(1, 2);
    a << 0.0, 5.0;
    b << 1.0, 6.0;
    c << 4.0, 7.0;
    MtResult r = median_target_select({a, b, c});
    CHECK(r.selected_draw == 1);
    CHECK(r.gap == doctest::Approx(0.0));
  }
  SUBCASE("selected gap is the minimum over draws") {
    Rng rng(210);
    std::vector<Eigen::MatrixXd> draws;
    for (int d = 0; d < 40; ++d) draws.push_back(randn(5, 3, rng));
    MtResult r = median_target_select(draws);
    for (double g : r.per_draw_gaps) CHECK(r.gap <= g);
  }
  SUBCASE("fewer than two draws is an error") {
    CHECK_THROWS_WITH_AS(median_target_select({Eigen::MatrixXd::Zero(3, 3)}),
                         doctest::Contains("at least 2"), Error);
  }
}

TEST_CASE("structural shock series recovers the generating shock") {
  Rng rng(211);
  const int t_len = 150, n = 3;
  Eigen::MatrixXd g = randn(n, n, rng);
  Eigen::MatrixXd sigma = g * g.transpose() + Eigen::MatrixXd::Identity(n, n);
  VarModel m = toy_model(Eigen::MatrixXd::Zero(n, n), sigma);
  Eigen::MatrixXd eps = randn(t_len, n, rng);
  m.residuals = eps * m.chol.transpose();  // u_t = L eps_t
  Eigen::VectorXd rec = structural_shock_series(m, Eigen::VectorXd::Unit(n, 0));
  CHECK((rec - eps.col(0)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(correlation(rec, eps.col(0)) == doctest::Approx(1.0));
}

TEST_CASE("correlation stays within [-1, 1] and validates input") {
  Rng rng(212);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::VectorXd a = randn(50, 1, rng);
    Eigen::VectorXd b = randn(50, 1, rng);
    double c = correlation(a, b);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }
  CHECK_THROWS_AS(correlation(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(4)), Error);
  CHECK_THROWS_WITH_AS(correlation(Eigen::VectorXd::Ones(5), Eigen::VectorXd::Zero(5)),
                       doctest::Contains("zero variance"), Error);
}
