#include "favar/identify.hpp"

#include <cmath>

#include "favar/csv.hpp"
#include "favar/error.hpp"

namespace favar {

int SignRestrictionSpec::restricted_count() const {
  int c = 0;
  for (Sign s : signs)
    if (s != Sign::Unrestricted) ++c;
  return c;
}

Sign parse_sign(const std::string& s) {
  if (s == "+" || s == "pos" || s == "positive") return Sign::Positive;
  if (s == "-" || s == "neg" || s == "negative") return Sign::Negative;
  if (s == "0" || s == "." || s == "u" || s == "unrestricted") return Sign::Unrestricted;
  fail("unknown sign '" + s + "' (want +, - or unrestricted)");
}

std::string sign_name(Sign s) {
  switch (s) {
    case Sign::Positive: return "+";
    case Sign::Negative: return "-";
    default: return "0";
  }
}

ImpulseVector draw_candidate(const Eigen::MatrixXd& chol_l, Rng& rng) {
  const int n = static_cast<int>(chol_l.rows());
  ImpulseVector iv;
  iv.q.resize(n);
  double norm2 = 0.0;
  do {
    for (int i = 0; i < n; ++i) iv.q[i] = rng.normal();
    norm2 = iv.q.squaredNorm();
  } while (norm2 == 0.0);
  iv.q /= std::sqrt(norm2);
  iv.alpha = chol_l * iv.q;
  return iv;
}

std::pair<bool, double> evaluate_restrictions(const Eigen::MatrixXd& irf,
                                              const SignRestrictionSpec& spec,
                                              const Eigen::VectorXd& scales) {
  const int n = static_cast<int>(irf.cols());
  if (static_cast<int>(spec.signs.size()) != n)
    fail("sign spec has " + std::to_string(spec.signs.size()) + " entries for " +
         std::to_string(n) + " variables");
  if (spec.restricted_count() == 0) fail("sign spec restricts no variable");
  const int horizons = static_cast<int>(irf.rows());

  bool ok = true;
  double penalty = 0.0;
  for (int j = 0; j < n; ++j) {
    if (spec.signs[j] == Sign::Unrestricted) continue;
    if (scales[j] <= 0.0) fail("zero scale for restricted variable " + std::to_string(j));
    double s = spec.signs[j] == Sign::Positive ? 1.0 : -1.0;
    for (int h = 0; h < horizons; ++h) {
      double x = -s * irf(h, j) / scales[j];  // > 0 on violation
      penalty += x <= 0.0 ? x : spec.penalty_slope * x;
      if (x >= 0.0) ok = false;  // strict sign required
    }
  }
  return {ok, penalty};
}

namespace {

struct EvalContext {
  const std::vector<Eigen::MatrixXd>& psi;  // Psi_0..Psi_K
  const SignRestrictionSpec& spec;
  const Eigen::VectorXd& scales;
};

// Orients alpha as a cut (shock variable impact <= 0), computes the
// restricted-horizon responses and scores them.
AcceptedDraw score_candidate(ImpulseVector iv, const EvalContext& ctx) {
  if (iv.alpha[ctx.spec.shock_var] > 0.0) {
    iv.q = -iv.q;
    iv.alpha = -iv.alpha;
  }
  const int n = static_cast<int>(iv.alpha.size());
  const int k_len = static_cast<int>(ctx.psi.size());
  Eigen::MatrixXd irf(k_len, n);
  for (int h = 0; h < k_len; ++h) irf.row(h) = (ctx.psi[h] * iv.alpha).transpose();
  auto [ok, pen] = evaluate_restrictions(irf, ctx.spec, ctx.scales);
  iv.meets_signs = ok;
  iv.penalty = pen;
  return {std::move(iv), std::move(irf)};
}

// Deterministic coordinate search on the sphere around the best random
// candidate, shrinking the step until the penalty stops moving.
AcceptedDraw polish_on_sphere(AcceptedDraw best, const Eigen::MatrixXd& chol_l,
                              const EvalContext& ctx) {
  const int n = static_cast<int>(best.iv.q.size());
  double step = 0.1;
  while (step > 1e-9) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      for (double dir : {1.0, -1.0}) {
        Eigen::VectorXd qc = best.iv.q;
        qc[i] += dir * step;
        double nrm = qc.norm();
        if (nrm == 0.0) continue;
        qc /= nrm;
        ImpulseVector cand;
        cand.q = qc;
        cand.alpha = chol_l * qc;
        AcceptedDraw scored = score_candidate(std::move(cand), ctx);
        if (scored.iv.penalty < best.iv.penalty - 1e-8) {
          best = std::move(scored);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

DrawSet identify_tax_shock(const VarModel& model, const SignRestrictionSpec& spec, int n_target,
                           long max_attempts, std::uint64_t seed, IdentifyMode mode) {
  const int n = model.n();
  if (static_cast<int>(spec.signs.size()) != n) fail("sign spec does not match the VAR");
  if (spec.shock_var < 0 || spec.shock_var >= n) fail("shock variable index out of range");
  if (spec.restricted_horizon < 0) fail("restricted horizon K must be >= 0");
  if (mode == IdentifyMode::Rejection && n_target < 1) fail("n_target must be >= 1");
  if (max_attempts < 1) fail("max_attempts must be >= 1");

  std::vector<Eigen::MatrixXd> psi = reduced_form_irf(model, spec.restricted_horizon);
  Eigen::VectorXd scales = model.sigma_u.diagonal().cwiseSqrt();
  EvalContext ctx{psi, spec, scales};

  DrawSet set;
  set.seed = seed;
  set.mode = mode;

  if (mode == IdentifyMode::Rejection) {
    for (long i = 0; i < max_attempts; ++i) {
      Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
      ++set.n_attempted;
      AcceptedDraw d = score_candidate(draw_candidate(model.chol, rng), ctx);
      if (d.iv.meets_signs) {
        set.accepted.push_back(std::move(d));
        if (static_cast<int>(set.accepted.size()) >= n_target) break;
      }
    }
    if (set.accepted.empty())
      fail("identification found no admissible draw in " + std::to_string(set.n_attempted) +
           " attempts (acceptance rate 0)");
  } else {
    AcceptedDraw best;
    for (long i = 0; i < max_attempts; ++i) {
      Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(i)));
      ++set.n_attempted;
      AcceptedDraw d = score_candidate(draw_candidate(model.chol, rng), ctx);
      if (i == 0 || d.iv.penalty < best.iv.penalty) best = std::move(d);
    }
    best = polish_on_sphere(std::move(best), model.chol, ctx);
    set.accepted.push_back(std::move(best));
  }
  return set;
}

}  // namespace favar
