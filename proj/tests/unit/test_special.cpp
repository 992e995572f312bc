#include <gtest/gtest.h>

#include <cmath>

#include "sacheck/error.hpp"
#include "sacheck/special.hpp"

using namespace sacheck;

TEST(GaussianCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(gaussian_cdf(0.0), 0.5);
  EXPECT_NEAR(gaussian_cdf(1.959964), 0.975, 1e-6);
}

TEST(GaussianCdf, MatchesErfIdentity) {
  for (double z = -8.0; z <= 8.0; z += 0.05)
    EXPECT_NEAR(gaussian_cdf(z), 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))), 1e-12) << z;
}

TEST(GaussianCdf, Symmetry) {
  for (double z = 0.0; z <= 10.0; z += 0.1) EXPECT_NEAR(gaussian_cdf(z) + gaussian_cdf(-z), 1.0, 1e-14);
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-15);
  // Bisection on the erf-based CDF as the reference.
  double lo = 0.0, hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < 0.975 ? lo : hi) = mid;
  }
  EXPECT_NEAR(normal_quantile(0.975), lo, 1e-9);
  EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
}

TEST(NormalQuantile, RoundTrip) {
  for (double p : {1e-300, 1e-100, 1e-12, 1e-6, 0.001, 0.02, 0.1, 0.3, 0.5, 0.7, 0.9, 0.98, 0.999, 1 - 1e-9, 1 - 1e-12})
    EXPECT_NEAR(gaussian_cdf(normal_quantile(p)), p, 1e-9) << p;
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    EXPECT_NEAR(gaussian_cdf(normal_quantile(p)), p, 1e-9);
  }
}

TEST(NormalQuantile, RejectsBoundary) {
  EXPECT_THROW(normal_quantile(0.0), DomainError);
  EXPECT_THROW(normal_quantile(1.0), DomainError);
  EXPECT_THROW(normal_quantile(std::nan("")), DomainError);
}

TEST(ChisqSf, ZeroStatistic) {
  for (int dof = 1; dof <= 10; ++dof) EXPECT_DOUBLE_EQ(chisq_sf(0.0, dof), 1.0);
}

TEST(ChisqSf, OneDegreeOfFreedomIdentity) {
  for (double t = 0.01; t < 60.0; t *= 1.3)
    EXPECT_NEAR(chisq_sf(t, 1), 2.0 * (1.0 - 0.5 * (1.0 + std::erf(std::sqrt(t) / std::sqrt(2.0)))), 1e-10) << t;
}

TEST(ChisqSf, TwoDegreesOfFreedomIdentity) {
  for (double t = 0.0; t < 80.0; t += 0.37) EXPECT_NEAR(chisq_sf(t, 2), std::exp(-t / 2.0), 1e-12) << t;
}

TEST(ChisqSf, RejectsInvalidInput) {
  EXPECT_THROW(chisq_sf(-1.0, 2), DomainError);
  EXPECT_THROW(chisq_sf(1.0, 0), DomainError);
}
