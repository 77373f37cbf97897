#pragma once

namespace ivqr {

/// Standard normal quantile Φ^{-1}(p) for p in (0,1).
double normal_quantile(double p);

/// Φ^{-1}(1 - q) computed from the upper tail probability q directly, which
/// keeps full relative accuracy when q is tiny (e.g. q = n^{-2}).
double normal_upper_quantile(double q);

double normal_cdf(double x);
double normal_pdf(double x);

/// Upper-α quantile of χ²(df): the c with P(χ²(df) > c) = α.
double chi_squared_upper_quantile(double df, double alpha);

}  // namespace ivqr
