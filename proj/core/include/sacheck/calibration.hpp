#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sacheck/bspline.hpp"
#include "sacheck/copula.hpp"

namespace sacheck {

enum class CalibrationBackend { Constant, LocalLikelihood, SingleIndex };

std::string_view to_string(CalibrationBackend b) noexcept;
/// Accepts "constant", "local" / "local_likelihood", "single_index" / "single-index".
CalibrationBackend parse_backend(std::string_view name);

/// Search box for the calibration value; theta = exp(eta) stays in (4.5e-5, 2.2e4).
inline constexpr double kEtaMin = -10.0;
inline constexpr double kEtaMax = 10.0;

struct EtaPrediction {
  double eta;
  bool fallback;  ///< local likelihood only: no kernel mass near the query, nearest neighbours used
};

struct SingleIndexConfig {
  int interior_knots = 8;
  int penalty_order = 2;  ///< order of the coefficient difference penalty
  int max_alternations = 50;
  double rel_tol = 1e-8;
  int random_starts = 5;  ///< best-scoring screened random directions used as starts
  int screen_directions = 64;  ///< random directions scored by a profile spline fit
  bool slope_start = true;  ///< add the local-likelihood slope direction as a start
  std::optional<Eigen::VectorXd> start_direction;  ///< extra start tried first (e.g. a warm start)
  std::vector<double> lambda_grid{1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0};
  std::optional<double> lambda;  ///< fixed penalty weight; skips cross-validation
  double pilot_lambda = 1.0;  ///< penalty used during the multi-start phase when lambda is selected by CV
  int cv_folds = 5;
  std::uint64_t seed = 0;
};

/// Fitted calibration function x -> eta(x).
class CalibrationFit {
 public:
  struct Constant {
    double eta;
  };
  struct LocalLikelihood {
    std::shared_ptr<const Eigen::MatrixXd> X;
    std::shared_ptr<const std::vector<clayton::LogPair>> pairs;
    Eigen::VectorXd bandwidth;
    Eigen::VectorXd inv_two_h2;
    std::vector<double> cv_bandwidth_factors;
    std::vector<double> cv_scores;
  };
  struct SingleIndex {
    Eigen::VectorXd direction;
    CubicBSpline spline;
    Eigen::VectorXd coef;
    double lambda;
    double penalized_loglik;
    int alternations;
    std::vector<double> cv_lambdas;
    std::vector<double> cv_scores;
  };
  using State = std::variant<Constant, LocalLikelihood, SingleIndex>;

  CalibrationFit(State state, double loglik, std::vector<std::string> flags)
      : state_(std::move(state)), loglik_(loglik), flags_(std::move(flags)) {}

  CalibrationBackend backend() const noexcept;
  const State& state() const noexcept { return state_; }

  double predict_eta(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  EtaPrediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  std::vector<double> predict_eta_rows(const Eigen::MatrixXd& X) const;

  /// Unpenalized copula log-likelihood of the training pairs at the fitted calibration.
  double loglik() const noexcept { return loglik_; }

  /// Non-fatal conditions ("boundary", "not_converged", ...). Empty for a clean fit.
  const std::vector<std::string>& flags() const noexcept { return flags_; }
  bool flagged() const noexcept { return !flags_.empty(); }

 private:
  State state_;
  double loglik_;
  std::vector<std::string> flags_;
};

/// Reduced model: scalar eta maximizing the Clayton likelihood, Brent search on [-10, 10].
/// Flags "boundary" when the optimum is within 1e-3 of the search box.
CalibrationFit fit_constant(std::span<const UnitPair> pairs);

/// Kernel-weighted local likelihood: eta(x) = argmax sum_i K_h(x_i - x) log c(u_i; exp(eta)).
/// bandwidth nullopt selects a common scale factor (times the covariate standard deviations)
/// by leave-one-out likelihood cross-validation.
CalibrationFit fit_local_likelihood(const Eigen::MatrixXd& X, std::span<const UnitPair> pairs,
                                    std::optional<Eigen::VectorXd> bandwidth = std::nullopt);

/// Single-index calibration eta(x) = s(x^T w), ||w|| = 1, s a penalized cubic B-spline.
CalibrationFit fit_single_index(const Eigen::MatrixXd& X, std::span<const UnitPair> pairs,
                                const SingleIndexConfig& config = {});

namespace detail {

/// argmax over eta in [kEtaMin, kEtaMax] of sum_j w_j log c(p_j; exp(eta)), by
/// safeguarded Newton on the score. Weights are used where positive; `active`
/// optionally restricts the sum to a subset of indices.
struct WeightedMax {
  double eta;
  bool boundary;
};
WeightedMax maximize_weighted(std::span<const clayton::LogPair> pairs, std::span<const double> weights,
                              std::span<const std::size_t> active, double start);

double loglik_at(std::span<const clayton::LogPair> pairs, double eta) noexcept;

/// Local-likelihood slope direction used to seed the single-index fit.
Eigen::VectorXd local_slope_direction(const Eigen::MatrixXd& X, std::span<const clayton::LogPair> pairs);

/// Unit norm with the first non-zero coordinate positive.
Eigen::VectorXd canonical_direction(Eigen::VectorXd w);

}  // namespace detail

}  // namespace sacheck
