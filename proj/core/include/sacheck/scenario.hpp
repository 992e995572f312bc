#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>

#include "sacheck/dataset.hpp"
#include "sacheck/rng.hpp"

namespace sacheck {

enum class ScenarioId { Sc1, Sc2, Sc3 };

std::string_view to_string(ScenarioId id) noexcept;
/// "sc1".."sc3", case-insensitive.
ScenarioId parse_scenario(std::string_view name);

/// Simulation design: two covariates on [0,1]^2 drive the means and Kendall's tau,
/// optionally padded with irrelevant uniform covariates.
///
///   f1(x) = 0.6 sin(5 x1) - 0.9 sin(2 x2),  f2(x) = 0.6 sin(3 x1 + 5 x2)
///   sc1: tau = 0.5
///   sc2: tau = 0.5 + beta sin(10 x'w), w = (1, 3) / sqrt(10)
///   sc3: tau = 0.5 + beta * 2 (x1 + cos(6 x2) - 0.45) / 3
class Scenario {
 public:
  static constexpr double kDefaultBeta = 0.25;
  static constexpr double kDefaultSigma = 0.2;
  static constexpr double kTauLo = 0.01;
  static constexpr double kTauHi = 0.99;

  /// Validates tau on a grid over [0,1]^2. Out-of-band values are an error
  /// unless `clip` is set, in which case tau is clipped and clipped() is true.
  explicit Scenario(ScenarioId id, double beta = kDefaultBeta, int padding = 0, bool clip = false,
                    double sigma1 = kDefaultSigma, double sigma2 = kDefaultSigma);

  ScenarioId id() const noexcept { return id_; }
  double beta() const noexcept { return beta_; }
  int padding() const noexcept { return padding_; }
  int dim() const noexcept { return 2 + padding_; }
  double sigma1() const noexcept { return sigma1_; }
  double sigma2() const noexcept { return sigma2_; }
  bool clipped() const noexcept { return clipped_; }

  /// Only the first two coordinates are used.
  double tau(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double mean1(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double mean2(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  Dataset generate(std::size_t n, Rng& rng) const;

 private:
  double raw_tau(double x1, double x2) const noexcept;

  ScenarioId id_;
  double beta_;
  int padding_;
  bool clip_;
  bool clipped_ = false;
  double sigma1_;
  double sigma2_;
};

inline Dataset gen_scenario(const Scenario& s, std::size_t n, Rng& rng) { return s.generate(n, rng); }

}  // namespace sacheck
