#include "sacheck/special.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "sacheck/error.hpp"

namespace sacheck {

double gaussian_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double gaussian_log_pdf(double z) noexcept {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return -0.5 * z * z - kHalfLog2Pi;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie strictly inside (0, 1)");

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement. In the upper tail work with the complement to avoid cancellation.
  const double e = (p > 0.5) ? -(0.5 * std::erfc(x / std::numbers::sqrt2) - (1.0 - p)) : gaussian_cdf(x) - p;
  const double u = e * std::exp(-gaussian_log_pdf(x));
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double chisq_sf(double t, int dof) {
  if (dof < 1) throw DomainError("chisq_sf: degrees of freedom must be >= 1");
  if (!(t >= 0.0)) throw DomainError("chisq_sf: statistic must be non-negative");
  if (t == 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * t);
}

}  // namespace sacheck
