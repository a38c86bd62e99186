#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "favar/rng.hpp"
#include "favar/var_model.hpp"

namespace favar {

enum class Sign { Unrestricted, Positive, Negative };

// Sign pattern for one identified tax shock. Signs are stated for a tax
// *cut*: candidate impulse vectors are flipped so the shock variable's own
// impact response is negative, and a '+' then means the variable rises
// after the cut.
struct SignRestrictionSpec {
  std::vector<Sign> signs;      // aligned with the model's var_ids
  int restricted_horizon = 4;   // K: restrictions bind for h = 0..K
  int shock_var = 0;            // index of the tax rate defining the shock
  double penalty_slope = 100.0;

  int restricted_count() const;
};

struct ImpulseVector {
  Eigen::VectorXd q;      // unit n-vector
  Eigen::VectorXd alpha;  // L * q, the one-s.d. impact column
  bool meets_signs = false;
  double penalty = 0.0;
};

// One accepted (or candidate) draw together with the structural responses
// h = 0..K used to evaluate it (rows are horizons).
struct AcceptedDraw {
  ImpulseVector iv;
  Eigen::MatrixXd irf;  // (K+1) x n
};

enum class IdentifyMode { Rejection, Penalty };

struct DrawSet {
  std::vector<AcceptedDraw> accepted;
  long n_attempted = 0;
  std::uint64_t seed = 0;
  IdentifyMode mode = IdentifyMode::Rejection;

  double acceptance_rate() const {
    return n_attempted > 0 ? static_cast<double>(accepted.size()) / n_attempted : 0.0;
  }
};

// q uniform on the unit sphere (normalized standard normals), alpha = L q.
ImpulseVector draw_candidate(const Eigen::MatrixXd& chol_l, Rng& rng);

// Sign check and Uhlig penalty on scale-normalized responses. `scales`
// are per-variable normalizers (the VAR residual standard deviations in
// the pipeline). Returns (meets_signs, penalty).
std::pair<bool, double> evaluate_restrictions(const Eigen::MatrixXd& irf,
                                              const SignRestrictionSpec& spec,
                                              const Eigen::VectorXd& scales);

// Rejection mode: draw until n_target candidates satisfy every restriction
// or max_attempts is exhausted. Penalty mode: keep the penalty-minimizing
// candidate over max_attempts draws and polish it on the sphere. Per-draw
// seeds derive from (seed, draw index), so results do not depend on
// execution order.
DrawSet identify_tax_shock(const VarModel& model, const SignRestrictionSpec& spec, int n_target,
                           long max_attempts, std::uint64_t seed,
                           IdentifyMode mode = IdentifyMode::Rejection);

Sign parse_sign(const std::string& s);
std::string sign_name(Sign s);

}  // namespace favar
