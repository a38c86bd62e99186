#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "favar/dates.hpp"

namespace favar {

enum class TaxType { PIT, CIT };

std::string tax_type_name(TaxType t);
TaxType parse_tax_type(const std::string& s);

// One legislated liability change, dated at its quarter of effect.
// liability_change and base_prev are in the same (billions) units; the
// base is personal taxable income or corporate profits at t-1.
struct NarrativeEvent {
  Quarter quarter;
  TaxType tax_type = TaxType::PIT;
  double liability_change = 0.0;
  double base_prev = 0.0;
  std::string act_label;
  bool exogenous = true;
};

// Events CSV: quarter,tax_type,liability_change,base_prev,act_label,exogenous
std::vector<NarrativeEvent> load_events(std::istream& csv);
std::vector<NarrativeEvent> load_events_file(const std::string& path);

// Quarterly tax-rate series in percent, zero outside event quarters.
struct NarrativeTaxSeries {
  std::vector<Quarter> dates;
  Eigen::VectorXd pit_rate;
  Eigen::VectorXd cit_rate;
};

// rate = 100 * liability_change / base_prev at the event quarter, summed
// over same-type events sharing a quarter. Only exogenous events enter
// unless exogenous_only is false.
NarrativeTaxSeries compute_narrative_rates(const std::vector<NarrativeEvent>& events,
                                           const std::vector<Quarter>& grid,
                                           bool exogenous_only = true);

struct GrangerResult {
  std::string predictor_id;
  int lags = 0;
  double f_stat = 0.0;
  double p_value = 1.0;
};

// F test of whether `lags` lags of the predictor improve an AR(lags)
// regression of the tax series (intercept included). Collinear regressors
// are handled by projecting on the effective column space.
GrangerResult granger_exogeneity_test(const Eigen::VectorXd& tax,
                                      const Eigen::VectorXd& predictor, int lags,
                                      const std::string& predictor_id = "");

}  // namespace favar
