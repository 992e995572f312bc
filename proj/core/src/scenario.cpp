#include "sacheck/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "sacheck/copula.hpp"
#include "sacheck/error.hpp"
#include "sacheck/special.hpp"

namespace sacheck {

namespace {
constexpr int kGrid = 201;
}

std::string_view to_string(ScenarioId id) noexcept {
  switch (id) {
    case ScenarioId::Sc1: return "sc1";
    case ScenarioId::Sc2: return "sc2";
    case ScenarioId::Sc3: return "sc3";
  }
  return "?";
}

ScenarioId parse_scenario(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "sc1") return ScenarioId::Sc1;
  if (s == "sc2") return ScenarioId::Sc2;
  if (s == "sc3") return ScenarioId::Sc3;
  throw ParameterError("unknown scenario '" + std::string(name) + "'");
}

Scenario::Scenario(ScenarioId id, double beta, int padding, bool clip, double sigma1, double sigma2)
    : id_(id), beta_(beta), padding_(padding), clip_(clip), sigma1_(sigma1), sigma2_(sigma2) {
  if (!std::isfinite(beta)) throw ParameterError("scenario beta must be finite");
  if (padding < 0) throw ParameterError("scenario padding must be non-negative");
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma2))
    throw ParameterError("scenario standard deviations must be positive");
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double t = raw_tau(i / double(kGrid - 1), j / double(kGrid - 1));
      if (t > kTauLo && t < kTauHi) continue;
      if (!clip_)
        throw ParameterError("scenario " + std::string(to_string(id)) + " with beta " + std::to_string(beta) +
                             " puts Kendall's tau outside (0.01, 0.99)");
      clipped_ = true;
    }
  }
}

double Scenario::raw_tau(double x1, double x2) const noexcept {
  switch (id_) {
    case ScenarioId::Sc1: return 0.5;
    case ScenarioId::Sc2: {
      const double index = (x1 + 3.0 * x2) / std::sqrt(10.0);
      return 0.5 + beta_ * std::sin(10.0 * index);
    }
    case ScenarioId::Sc3: return 0.5 + beta_ * 2.0 * (x1 + std::cos(6.0 * x2) - 0.45) / 3.0;
  }
  return 0.5;
}

double Scenario::tau(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() < 2) throw ParameterError("scenario covariate vector needs at least two entries");
  const double t = raw_tau(x(0), x(1));
  // Inside the grid-validated band a margin keeps tau_to_theta's open interval safe.
  constexpr double margin = 1e-9;
  return clip_ ? std::clamp(t, kTauLo + margin, kTauHi - margin) : t;
}

double Scenario::mean1(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return 0.6 * std::sin(5.0 * x(0)) - 0.9 * std::sin(2.0 * x(1));
}

double Scenario::mean2(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return 0.6 * std::sin(3.0 * x(0) + 5.0 * x(1));
}

Dataset Scenario::generate(std::size_t n, Rng& rng) const {
  if (n < 1) throw ParameterError("gen_scenario: n must be at least 1");
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(n), dim());
  d.y1.resize(n);
  d.y2.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int c = 0; c < dim(); ++c) d.X(r, c) = rng.uniform();
    const auto row = d.X.row(r);
    const auto pair = sample(tau_to_theta(tau(row)), 1, rng).front();
    d.y1[i] = mean1(row) + sigma1_ * normal_quantile(pair.u1);
    d.y2[i] = mean2(row) + sigma2_ * normal_quantile(pair.u2);
  }
  return d;
}

}  // namespace sacheck
