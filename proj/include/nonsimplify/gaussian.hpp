#pragma once

namespace nonsimplify {

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal density.
double norm_pdf(double x);

/// Standard normal quantile function on (0, 1).
/// Throws InvalidArgument for p outside (0, 1).
double norm_quantile(double p);

/// P(N1 <= h, N2 <= k) for a standard bivariate normal pair with
/// correlation rho in (-1, 1). Absolute error below 1e-13 over the
/// whole parameter range. Throws InvalidArgument if |rho| >= 1.
double bvn_cdf(double h, double k, double rho);

} // namespace nonsimplify
