#pragma once

namespace sacheck {

/// Standard normal CDF, computed as erfc(-z/sqrt(2))/2 so the lower tail keeps full relative accuracy.
double gaussian_cdf(double z) noexcept;

/// log of the standard normal density.
double gaussian_log_pdf(double z) noexcept;

/// Inverse standard normal CDF for p in (0, 1).
///
/// Acklam's rational approximation followed by one Halley step against
/// gaussian_cdf; absolute error is below 1e-9 over the whole interval.
/// Throws DomainError when p is not strictly inside (0, 1).
double normal_quantile(double p);

/// Upper-tail probability P(chi^2_dof > t), via the regularized incomplete gamma Q(dof/2, t/2).
/// Throws DomainError for t < 0 or dof < 1.
double chisq_sf(double t, int dof);

}  // namespace sacheck
