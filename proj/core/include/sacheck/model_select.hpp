#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>

#include "sacheck/calibration.hpp"
#include "sacheck/dataset.hpp"
#include "sacheck/marginal.hpp"
#include "sacheck/rng.hpp"

namespace sacheck {

/// Per-draw, per-observation log densities (rows are draws t = 1..M, columns observations i = 1..n).
struct DrawsMatrix {
  Eigen::MatrixXd joint;  ///< log P(y1_i, y2_i | omega_t)
  Eigen::MatrixXd m1;  ///< log P(y1_i | omega_t)
  Eigen::MatrixXd m2;  ///< log P(y2_i | omega_t)

  Eigen::Index draws() const noexcept { return joint.rows(); }
  Eigen::Index observations() const noexcept { return joint.cols(); }

  /// Throws ProcedureError when empty, non-finite, or (with margins) inconsistently shaped.
  void validate(bool with_margins) const;
};

/// Cross-validated pseudo marginal likelihood estimate, -sum_i log(mean_t exp(-l_ti)). Larger is better.
double cvml(const DrawsMatrix& d);

/// Conditional CVML estimate from the joint and both marginal blocks. Larger is better.
double ccvml(const DrawsMatrix& d);

struct Waic {
  double waic;  ///< -2 fit + 2 penalty; smaller is better
  double fit;  ///< sum_i log mean_t exp(l_ti)
  double penalty;  ///< sum_i sample variance over t of l_ti
};

/// Requires at least two draws.
Waic waic(const DrawsMatrix& d);

enum class ModelKind { Full, Reduced };

/// Two Gaussian margins plus a calibration function.
struct JointModel {
  MarginalFit margin1;
  MarginalFit margin2;
  CalibrationFit calibration;

  struct LogDensities {
    double joint;
    double m1;
    double m2;
  };
  LogDensities evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y1, double y2) const;
};

struct JointModelOptions {
  CalibrationBackend full_backend = CalibrationBackend::SingleIndex;
  std::optional<Eigen::VectorXd> bandwidth1;
  std::optional<Eigen::VectorXd> bandwidth2;
  std::optional<Eigen::VectorXd> local_bandwidth;
  SingleIndexConfig single_index{};
};

/// Fits both margins, then the calibration (options.full_backend for the full model,
/// a constant for the reduced one) on leave-one-out PIT values of the same data.
JointModel fit_joint_model(const Dataset& d, ModelKind kind, const JointModelOptions& options);

using JointFitter = std::function<JointModel(const Dataset&)>;

/// Fitter for bootstrap refits: smoothing parameters (marginal bandwidths, spline
/// penalty, single-index start) are chosen once on `data` and held fixed across resamples.
JointFitter make_resample_fitter(const Dataset& data, ModelKind kind, const JointModelOptions& options);

/// B nonparametric bootstrap refits of `train`, each evaluated on every row of `eval`.
/// A failed refit is retried once with a fresh resample before the call fails.
DrawsMatrix bootstrap_draws(const Dataset& train, const Dataset& eval, const JointFitter& fitter, std::size_t B,
                            Rng& rng);

/// Generic criteria for the full and reduced model on one dataset, both from bootstrap
/// draws over the same resamples. "prefers_full" encodes each criterion's direction.
struct CriteriaComparison {
  double cvml_full;
  double cvml_reduced;
  double ccvml_full;
  double ccvml_reduced;
  Waic waic_full;
  Waic waic_reduced;

  bool cvml_prefers_full() const noexcept { return cvml_full > cvml_reduced; }
  bool ccvml_prefers_full() const noexcept { return ccvml_full > ccvml_reduced; }
  bool waic_prefers_full() const noexcept { return waic_full.waic < waic_reduced.waic; }
};

CriteriaComparison compare_full_reduced(const Dataset& d, std::size_t B, std::uint64_t seed,
                                        const JointModelOptions& options = {});

}  // namespace sacheck
