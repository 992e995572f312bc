#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace sacheck {

/// One evaluated point of the leave-one-out bandwidth search.
struct BandwidthScore {
  Eigen::VectorXd bandwidth;
  double cv_error;  ///< mean squared leave-one-out residual
};

/// Gaussian marginal regression y = f(x) + sigma * e with a Nadaraya-Watson
/// (product Gaussian kernel) estimate of f and a constant sigma.
///
/// sigma is the root mean squared leave-one-out residual, floored at 1e-8.
/// Covariate columns with zero spread carry no information and get an
/// infinite bandwidth; if every column is constant the fit is the global mean.
class MarginalFit {
 public:
  static constexpr double kSigmaFloor = 1e-8;
  static constexpr std::size_t kMinObservations = 20;
  static constexpr int kGridPoints = 10;

  /// bandwidth: per-covariate bandwidths, or nullopt for leave-one-out CV over
  /// a log grid of 10 points per dimension scaled by the covariate standard deviation.
  static MarginalFit fit(const Eigen::MatrixXd& X, std::span<const double> y,
                         std::optional<Eigen::VectorXd> bandwidth = std::nullopt);

  double mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  double sigma() const noexcept { return sigma_; }

  /// Phi((y - f(x)) / sigma), clamped to [1e-12, 1 - 1e-12].
  double pit(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const;
  /// log of the Gaussian density of y given x.
  double log_density(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const;

  /// Leave-one-out fitted means at the training rows.
  const std::vector<double>& loo_fitted() const noexcept { return loo_fitted_; }
  /// PIT values of the training rows computed from their leave-one-out means.
  std::vector<double> training_pit() const;

  const Eigen::VectorXd& bandwidth() const noexcept { return bandwidth_; }
  double cv_error() const noexcept { return cv_error_; }
  const std::vector<BandwidthScore>& cv_path() const noexcept { return cv_path_; }
  bool sigma_floored() const noexcept { return sigma_floored_; }
  bool degenerate_covariates() const noexcept { return degenerate_; }
  std::size_t training_size() const noexcept { return y_->size(); }

 private:
  MarginalFit() = default;

  std::shared_ptr<const Eigen::MatrixXd> X_;
  std::shared_ptr<const std::vector<double>> y_;
  Eigen::VectorXd bandwidth_;
  Eigen::VectorXd inv_two_h2_;  ///< 1 / (2 h_d^2), zero for inactive columns
  std::vector<double> loo_fitted_;
  std::vector<BandwidthScore> cv_path_;
  double global_mean_ = 0.0;
  double sigma_ = 1.0;
  double cv_error_ = 0.0;
  bool sigma_floored_ = false;
  bool degenerate_ = false;
  bool all_degenerate_ = false;
};

}  // namespace sacheck
