#pragma once

namespace favar {

// Upper-tail probabilities used for test p-values (boost::math backed).
double chi_square_sf(double x, int dof);
double f_sf(double x, int d1, int d2);

}  // namespace favar
