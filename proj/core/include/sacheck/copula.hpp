#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sacheck/rng.hpp"

namespace sacheck {

enum class CopulaFamily { Clayton };

/// Lower and upper clamp applied to uniforms inside likelihood evaluation.
inline constexpr double kUnitFloor = 1e-12;

/// A point of the open unit square, e.g. a pair of probability-integral-transform values.
struct UnitPair {
  double u1;
  double u2;
};

/// Link between the copula parameter and the unrestricted calibration scale: eta = log(theta).
struct LogLink {
  static double forward(double theta);
  static double inverse(double eta) noexcept;
};

/// Copula family plus dependence parameter theta.
///
/// Only the positive-dependence Clayton branch is supported, so theta > 0 is
/// enforced on construction.
class CopulaParam {
 public:
  static CopulaParam clayton(double theta);
  static CopulaParam from_eta(double eta, CopulaFamily family = CopulaFamily::Clayton);

  CopulaFamily family() const noexcept { return family_; }
  double theta() const noexcept { return theta_; }
  double eta() const { return LogLink::forward(theta_); }
  double tau() const noexcept;

 private:
  CopulaParam(CopulaFamily family, double theta) noexcept : family_(family), theta_(theta) {}

  CopulaFamily family_;
  double theta_;
};

// Family-dispatching API. Interior means strictly inside (0, 1); boundary input throws DomainError.

double density(UnitPair p, const CopulaParam& c);
double log_density(UnitPair p, const CopulaParam& c);
/// C(u1, u2); accepts the closed unit square.
double cdf(UnitPair p, const CopulaParam& c);
/// h(u1 | u2) = dC(u1, u2)/du2, the conditional CDF of U1 given U2 = u2.
double h_function(double u1, double u2, const CopulaParam& c);
std::vector<UnitPair> sample(const CopulaParam& c, std::size_t n, Rng& rng);
/// Sum of log densities.
double loglik(std::span<const UnitPair> pairs, const CopulaParam& c);

/// Kendall's tau <-> Clayton theta. tau_to_theta rejects tau outside (0.01, 0.99).
CopulaParam tau_to_theta(double tau);
double theta_to_tau(const CopulaParam& c) noexcept;

namespace clayton {

/// Pair pre-transformed to a = -log(u1), b = -log(u2) after clamping, reused
/// across the many likelihood evaluations an optimizer performs.
struct LogPair {
  double a;
  double b;
};

LogPair prepare(UnitPair p);
std::vector<LogPair> prepare(std::span<const UnitPair> pairs);

/// log c(u1, u2; theta = exp(eta)).
double log_density_eta(const LogPair& p, double eta) noexcept;

struct EtaDerivatives {
  double value;
  double d1;  ///< d/d eta
  double d2;  ///< d^2/d eta^2
};

EtaDerivatives log_density_eta_derivs(const LogPair& p, double eta) noexcept;

}  // namespace clayton

}  // namespace sacheck
