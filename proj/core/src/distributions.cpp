#include "ivqr/common/distributions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "ivqr/common/error.hpp"

namespace ivqr {

namespace {
const boost::math::normal_distribution<double> kStandardNormal{0.0, 1.0};
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw NumericalError("normal_quantile: probability must lie in (0,1)", "domain");
  }
  return boost::math::quantile(kStandardNormal, p);
}

double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw NumericalError("normal_upper_quantile: probability must lie in (0,1)", "domain");
  }
  return boost::math::quantile(boost::math::complement(kStandardNormal, q));
}

double normal_cdf(double x) { return boost::math::cdf(kStandardNormal, x); }

double normal_pdf(double x) { return boost::math::pdf(kStandardNormal, x); }

double chi_squared_upper_quantile(double df, double alpha) {
  if (!(df > 0.0)) {
    throw NumericalError("chi-squared degrees of freedom must be positive", "domain");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw NumericalError("significance level must lie in (0,1)", "domain");
  }
  const boost::math::chi_squared_distribution<double> dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

}  // namespace ivqr
