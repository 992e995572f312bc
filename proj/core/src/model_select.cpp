#include "sacheck/model_select.hpp"

#include <cmath>
#include <limits>

#include "sacheck/error.hpp"

namespace sacheck {

namespace {

// log sum_t exp(v_t) over one column.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

std::vector<UnitPair> loo_pairs(const MarginalFit& m1, const MarginalFit& m2) {
  const auto u1 = m1.training_pit();
  const auto u2 = m2.training_pit();
  std::vector<UnitPair> out(u1.size());
  for (std::size_t i = 0; i < u1.size(); ++i) out[i] = {u1[i], u2[i]};
  return out;
}

}  // namespace

void DrawsMatrix::validate(bool with_margins) const {
  if (joint.rows() < 1 || joint.cols() < 1) throw ProcedureError("draws matrix is empty");
  if (!joint.allFinite()) throw ProcedureError("draws matrix has non-finite joint entries");
  if (with_margins) {
    if (m1.rows() != joint.rows() || m1.cols() != joint.cols() || m2.rows() != joint.rows() ||
        m2.cols() != joint.cols())
      throw ProcedureError("draws matrix blocks have inconsistent shapes");
    if (!m1.allFinite() || !m2.allFinite()) throw ProcedureError("draws matrix has non-finite marginal entries");
  }
}

double cvml(const DrawsMatrix& d) {
  d.validate(false);
  const double log_m = std::log(static_cast<double>(d.draws()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.observations(); ++i) total -= log_sum_exp(-d.joint.col(i)) - log_m;
  return total;
}

double ccvml(const DrawsMatrix& d) {
  d.validate(true);
  const double log_m = std::log(static_cast<double>(d.draws()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.observations(); ++i) {
    const Eigen::VectorXd given2 = d.m2.col(i) - d.joint.col(i);  // 1 / P(y1 | y2) per draw
    const Eigen::VectorXd given1 = d.m1.col(i) - d.joint.col(i);
    total += (log_sum_exp(given2) - log_m) + (log_sum_exp(given1) - log_m);
  }
  return -0.5 * total;
}

Waic waic(const DrawsMatrix& d) {
  d.validate(false);
  const auto M = d.draws();
  if (M < 2) throw ProcedureError("waic: need at least two draws for the variance penalty");
  const double log_m = std::log(static_cast<double>(M));
  double fit = 0.0, penalty = 0.0;
  for (Eigen::Index i = 0; i < d.observations(); ++i) {
    const auto col = d.joint.col(i);
    fit += log_sum_exp(col) - log_m;
    const double mean = col.mean();
    penalty += (col.array() - mean).square().sum() / static_cast<double>(M - 1);
  }
  return {-2.0 * fit + 2.0 * penalty, fit, penalty};
}

JointModel::LogDensities JointModel::evaluate(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y1,
                                              double y2) const {
  const double l1 = margin1.log_density(x, y1);
  const double l2 = margin2.log_density(x, y2);
  const auto pair = clayton::prepare(UnitPair{margin1.pit(x, y1), margin2.pit(x, y2)});
  const double lc = clayton::log_density_eta(pair, calibration.predict_eta(x));
  return {l1 + l2 + lc, l1, l2};
}

JointModel fit_joint_model(const Dataset& d, ModelKind kind, const JointModelOptions& options) {
  d.validate();
  auto m1 = MarginalFit::fit(d.X, d.y1, options.bandwidth1);
  auto m2 = MarginalFit::fit(d.X, d.y2, options.bandwidth2);
  const auto pairs = loo_pairs(m1, m2);
  if (kind == ModelKind::Reduced) return {std::move(m1), std::move(m2), fit_constant(pairs)};
  switch (options.full_backend) {
    case CalibrationBackend::Constant:
      return {std::move(m1), std::move(m2), fit_constant(pairs)};
    case CalibrationBackend::LocalLikelihood:
      return {std::move(m1), std::move(m2), fit_local_likelihood(d.X, pairs, options.local_bandwidth)};
    case CalibrationBackend::SingleIndex:
      return {std::move(m1), std::move(m2), fit_single_index(d.X, pairs, options.single_index)};
  }
  throw ParameterError("unknown calibration backend");
}

JointFitter make_resample_fitter(const Dataset& data, ModelKind kind, const JointModelOptions& options) {
  const JointModel pilot = fit_joint_model(data, kind, options);
  JointModelOptions fixed = options;
  fixed.bandwidth1 = pilot.margin1.bandwidth();
  fixed.bandwidth2 = pilot.margin2.bandwidth();
  if (const auto* si = std::get_if<CalibrationFit::SingleIndex>(&pilot.calibration.state())) {
    fixed.single_index.lambda = si->lambda;
    fixed.single_index.start_direction = si->direction;
    fixed.single_index.random_starts = 0;
    fixed.single_index.slope_start = false;
  }
  if (const auto* ll = std::get_if<CalibrationFit::LocalLikelihood>(&pilot.calibration.state()))
    fixed.local_bandwidth = ll->bandwidth;
  return [kind, fixed](const Dataset& resample) { return fit_joint_model(resample, kind, fixed); };
}

DrawsMatrix bootstrap_draws(const Dataset& train, const Dataset& eval, const JointFitter& fitter, std::size_t B,
                            Rng& rng) {
  if (B < 2) throw ParameterError("bootstrap_draws: need at least 2 draws");
  train.validate();
  eval.validate();
  if (train.dim() != eval.dim()) throw ProcedureError("bootstrap_draws: covariate dimensions differ");
  const auto n = train.size();
  const auto m = static_cast<Eigen::Index>(eval.size());
  DrawsMatrix out{Eigen::MatrixXd(static_cast<Eigen::Index>(B), m), Eigen::MatrixXd(static_cast<Eigen::Index>(B), m),
                  Eigen::MatrixXd(static_cast<Eigen::Index>(B), m)};
  std::vector<std::size_t> rows(n);
  for (std::size_t b = 0; b < B; ++b) {
    for (int attempt = 0;; ++attempt) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
      try {
        const JointModel model = fitter(train.subset(rows));
        const auto t = static_cast<Eigen::Index>(b);
        for (Eigen::Index i = 0; i < m; ++i) {
          const auto ld = model.evaluate(eval.X.row(i), eval.y1[static_cast<std::size_t>(i)],
                                         eval.y2[static_cast<std::size_t>(i)]);
          if (!std::isfinite(ld.joint)) throw ProcedureError("non-finite log density");
          out.joint(t, i) = ld.joint;
          out.m1(t, i) = ld.m1;
          out.m2(t, i) = ld.m2;
        }
        break;
      } catch (const Error& e) {
        if (attempt >= 1)
          throw ProcedureError(std::string("bootstrap refit failed twice: ") + e.what(), "bootstrap");
      }
    }
  }
  return out;
}

CriteriaComparison compare_full_reduced(const Dataset& d, std::size_t B, std::uint64_t seed,
                                        const JointModelOptions& options) {
  JointModelOptions opts = options;
  opts.single_index.seed = Rng::substream(seed, {stream_key("pilot")}).seed();
  const auto full = make_resample_fitter(d, ModelKind::Full, opts);
  const auto reduced = make_resample_fitter(d, ModelKind::Reduced, opts);
  // Common resamples for both models.
  Rng rng_full = Rng::substream(seed, {stream_key("bootstrap")});
  Rng rng_reduced = rng_full;
  const auto draws_full = bootstrap_draws(d, d, full, B, rng_full);
  const auto draws_reduced = bootstrap_draws(d, d, reduced, B, rng_reduced);
  return {cvml(draws_full),  cvml(draws_reduced),  ccvml(draws_full),
          ccvml(draws_reduced), waic(draws_full), waic(draws_reduced)};
}

}  // namespace sacheck
