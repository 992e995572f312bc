#include "sacheck/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sacheck/error.hpp"

namespace sacheck {

namespace {

bool interior(double u) noexcept { return u > 0.0 && u < 1.0; }

void require_interior(UnitPair p, const char* where) {
  if (!interior(p.u1) || !interior(p.u2))
    throw DomainError(std::string(where) + ": arguments must lie strictly inside (0, 1)");
}

double clamp_unit(double u) noexcept { return std::clamp(u, kUnitFloor, 1.0 - kUnitFloor); }

// log S with S = exp(theta a) + exp(theta b) - 1, a, b >= 0.
double log_s(double theta, double a, double b) noexcept {
  const double ta = theta * a;
  const double tb = theta * b;
  const double m = std::max(ta, tb);
  if (m < 30.0) return std::log1p(std::expm1(ta) + std::expm1(tb));
  const double k = std::min(ta, tb);
  return m + std::log1p(std::exp(k - m) - std::exp(-m));
}

}  // namespace

double LogLink::forward(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ParameterError("log link: theta must be positive and finite");
  return std::log(theta);
}

double LogLink::inverse(double eta) noexcept { return std::exp(eta); }

CopulaParam CopulaParam::clayton(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw ParameterError("Clayton theta must be positive and finite, got " + std::to_string(theta));
  return CopulaParam(CopulaFamily::Clayton, theta);
}

CopulaParam CopulaParam::from_eta(double eta, CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Clayton:
      return clayton(LogLink::inverse(eta));
  }
  throw ParameterError("unknown copula family");
}

double CopulaParam::tau() const noexcept { return theta_to_tau(*this); }

CopulaParam tau_to_theta(double tau) {
  if (!(tau > 0.01 && tau < 0.99))
    throw DomainError("Kendall tau must lie in (0.01, 0.99) for the Clayton branch, got " + std::to_string(tau));
  return CopulaParam::clayton(2.0 * tau / (1.0 - tau));
}

double theta_to_tau(const CopulaParam& c) noexcept { return c.theta() / (c.theta() + 2.0); }

namespace clayton {

LogPair prepare(UnitPair p) {
  require_interior(p, "clayton::prepare");
  return {-std::log(clamp_unit(p.u1)), -std::log(clamp_unit(p.u2))};
}

std::vector<LogPair> prepare(std::span<const UnitPair> pairs) {
  std::vector<LogPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(prepare(p));
  return out;
}

double log_density_eta(const LogPair& p, double eta) noexcept {
  const double theta = std::exp(eta);
  return std::log1p(theta) + (1.0 + theta) * (p.a + p.b) - (2.0 + 1.0 / theta) * log_s(theta, p.a, p.b);
}

EtaDerivatives log_density_eta_derivs(const LogPair& p, double eta) noexcept {
  const double theta = std::exp(eta);
  const double ta = theta * p.a;
  const double tb = theta * p.b;
  const double m = std::max(ta, tb);
  const double ea = std::exp(ta - m);
  const double eb = std::exp(tb - m);
  const double den = ea + eb - std::exp(-m);  // S * exp(-m)
  const double r1 = (p.a * ea + p.b * eb) / den;  // S'/S
  const double r2 = (p.a * p.a * ea + p.b * p.b * eb) / den;  // S''/S
  const double ls = log_s(theta, p.a, p.b);

  const double inv = 1.0 / theta;
  const double value = std::log1p(theta) + (1.0 + theta) * (p.a + p.b) - (2.0 + inv) * ls;
  // Derivatives in theta, then chain rule to eta.
  const double g = 1.0 / (1.0 + theta) + (p.a + p.b) + ls * inv * inv - (2.0 + inv) * r1;
  const double h = -1.0 / ((1.0 + theta) * (1.0 + theta)) - 2.0 * ls * inv * inv * inv + 2.0 * r1 * inv * inv -
                   (2.0 + inv) * (r2 - r1 * r1);
  return {value, theta * g, theta * g + theta * theta * h};
}

double log_density(const LogPair& p, double theta) noexcept {
  return std::log1p(theta) + (1.0 + theta) * (p.a + p.b) - (2.0 + 1.0 / theta) * log_s(theta, p.a, p.b);
}

double cdf(UnitPair p, double theta) noexcept {
  if (p.u1 <= 0.0 || p.u2 <= 0.0) return 0.0;
  const double a = -std::log(std::min(p.u1, 1.0));
  const double b = -std::log(std::min(p.u2, 1.0));
  return std::exp(-log_s(theta, a, b) / theta);
}

double h_function(double u1, double u2, double theta) noexcept {
  const double a = -std::log(u1);
  const double b = -std::log(u2);
  return std::exp((theta + 1.0) * b - (1.0 + 1.0 / theta) * log_s(theta, a, b));
}

UnitPair conditional_inverse(double w, double u2, double theta) noexcept {
  // u1 = ((w^{-theta/(1+theta)} - 1) u2^{-theta} + 1)^{-1/theta}, evaluated in log space.
  const double lw = -std::log(w);
  const double lu2 = -std::log(u2);
  const double y = theta / (1.0 + theta) * lw;
  const double log_expm1_y = y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
  const double x = log_expm1_y + theta * lu2;
  const double softplus = x > 30.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  const double u1 = std::exp(-softplus / theta);
  return {std::clamp(u1, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0)), u2};
}

}  // namespace clayton

double density(UnitPair p, const CopulaParam& c) { return std::exp(log_density(p, c)); }

double log_density(UnitPair p, const CopulaParam& c) {
  require_interior(p, "copula density");
  switch (c.family()) {
    case CopulaFamily::Clayton:
      return clayton::log_density(clayton::prepare(p), c.theta());
  }
  throw ParameterError("unknown copula family");
}

double cdf(UnitPair p, const CopulaParam& c) {
  if (!(p.u1 >= 0.0 && p.u1 <= 1.0 && p.u2 >= 0.0 && p.u2 <= 1.0))
    throw DomainError("copula cdf: arguments must lie in [0, 1]");
  switch (c.family()) {
    case CopulaFamily::Clayton:
      return clayton::cdf(p, c.theta());
  }
  throw ParameterError("unknown copula family");
}

double h_function(double u1, double u2, const CopulaParam& c) {
  require_interior({u1, u2}, "h_function");
  switch (c.family()) {
    case CopulaFamily::Clayton:
      return clayton::h_function(u1, u2, c.theta());
  }
  throw ParameterError("unknown copula family");
}

std::vector<UnitPair> sample(const CopulaParam& c, std::size_t n, Rng& rng) {
  if (n == 0) throw ParameterError("sample: n must be at least 1");
  std::vector<UnitPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = rng.uniform();
    const double w = rng.uniform();
    out.push_back(clayton::conditional_inverse(w, u2, c.theta()));
  }
  return out;
}

double loglik(std::span<const UnitPair> pairs, const CopulaParam& c) {
  if (pairs.empty()) throw ProcedureError("loglik: no pairs");
  double total = 0.0;
  for (const auto& p : pairs) total += log_density(p, c);
  return total;
}

}  // namespace sacheck
