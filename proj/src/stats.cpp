#include "favar/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

#include "favar/error.hpp"

namespace favar {

double chi_square_sf(double x, int dof) {
  if (dof < 1) fail("chi_square_sf: dof must be >= 1");
  if (x <= 0.0) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, x));
}

double f_sf(double x, int d1, int d2) {
  if (d1 < 1 || d2 < 1) fail("f_sf: degrees of freedom must be >= 1");
  if (x <= 0.0) return 1.0;
  boost::math::fisher_f dist(static_cast<double>(d1), static_cast<double>(d2));
  return boost::math::cdf(boost::math::complement(dist, x));
}

}  // namespace favar
