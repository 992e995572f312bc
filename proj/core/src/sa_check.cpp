#include <algorithm>

#include "sacheck/error.hpp"
#include "sacheck/marginal.hpp"
#include "sacheck/sa_tests.hpp"

namespace sacheck {

namespace {

// Bins smaller than this make bin-wise correlations meaningless.
constexpr std::size_t kPipelineMinBin = 5;

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const ProcedureError& e) {
    if (!e.stage().empty()) throw;
    throw ProcedureError(e.what(), name);
  } catch (const Error& e) {
    throw ProcedureError(e.what(), name);
  }
}

CalibrationFit fit_calibration(const Eigen::MatrixXd& X, std::span<const UnitPair> pairs, const SaCheckConfig& cfg) {
  switch (cfg.backend) {
    case CalibrationBackend::Constant:
      return fit_constant(pairs);
    case CalibrationBackend::LocalLikelihood:
      return fit_local_likelihood(X, pairs);
    case CalibrationBackend::SingleIndex: {
      SingleIndexConfig si = cfg.single_index;
      si.seed = Rng::substream(cfg.seed, {stream_key("calibration")}).seed();
      return fit_single_index(X, pairs, si);
    }
  }
  throw ParameterError("unknown calibration backend");
}

}  // namespace

PreparedTestSet prepare_sa_check(const Dataset& d, const SaCheckConfig& config) {
  stage("input", [&] {
    d.validate();
    return 0;
  });
  Rng split_rng = Rng::substream(config.seed, {stream_key("split")});
  const auto [train_idx, test_idx] =
      stage("split", [&] { return split_indices(d.size(), config.train_fraction, split_rng); });
  const Dataset train = d.subset(train_idx);
  const Dataset test = d.subset(test_idx);

  const auto [m1, m2] = stage("margins", [&] {
    return std::pair{MarginalFit::fit(train.X, train.y1), MarginalFit::fit(train.X, train.y2)};
  });

  PreparedTestSet out;
  out.n_train = train.size();
  out.n_test = test.size();
  out.sigma1 = m1.sigma();
  out.sigma2 = m2.sigma();
  if (m1.sigma_floored() || m2.sigma_floored()) out.flags.emplace_back("sigma_floored");
  if (m1.degenerate_covariates()) out.flags.emplace_back("degenerate_covariates");

  const auto u1 = m1.training_pit();
  const auto u2 = m2.training_pit();
  std::vector<UnitPair> train_pairs(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) train_pairs[i] = {u1[i], u2[i]};

  const auto cal = stage("calibration", [&] { return fit_calibration(train.X, train_pairs, config); });
  for (const auto& f : cal.flags()) out.flags.push_back("calibration_" + f);

  out.U.resize(test.size());
  out.eta_hat.resize(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto x = test.X.row(static_cast<Eigen::Index>(i));
    out.U[i] = {m1.pit(x, test.y1[i]), m2.pit(x, test.y2[i])};
    out.eta_hat[i] = cal.predict_eta(x);
  }
  return out;
}

SaCheckReport run_sa_tests(const PreparedTestSet& prepared, const SaCheckConfig& config) {
  const auto bins = stage("binning", [&] { return assign_bins(prepared.eta_hat, config.K, kPipelineMinBin); });
  Rng perm_rng = Rng::substream(config.seed, {stream_key("permutation"), config.K});
  auto m1 = stage("method1", [&] {
    return permutation_test(prepared.U, bins, config.J, config.alpha, perm_rng, config.threads);
  });
  auto m2 = stage("method2", [&] { return chisq_test(prepared.U, bins, config.alpha); });

  SaCheckDiagnostics diag;
  diag.n_train = prepared.n_train;
  diag.n_test = prepared.n_test;
  diag.bin_sizes = bins.sizes;
  diag.boundaries = bins.boundaries;
  const auto [lo, hi] = std::minmax_element(prepared.eta_hat.begin(), prepared.eta_hat.end());
  diag.eta_min = *lo;
  diag.eta_max = *hi;
  diag.sigma1 = prepared.sigma1;
  diag.sigma2 = prepared.sigma2;
  diag.flags = prepared.flags;
  return {std::move(m1), std::move(m2), std::move(diag)};
}

SaCheckReport run_sa_check(const Dataset& d, const SaCheckConfig& config) {
  return run_sa_tests(prepare_sa_check(d, config), config);
}

}  // namespace sacheck
