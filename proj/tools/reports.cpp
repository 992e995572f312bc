#include "reports.hpp"

#include <algorithm>
#include <cmath>

namespace sacheck::cli {

using json = nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Infinite bandwidths (constant covariates) have no JSON representation.
json bandwidths(const Eigen::VectorXd& h) {
  json out = json::array();
  for (Eigen::Index i = 0; i < h.size(); ++i) out.push_back(std::isfinite(h[i]) ? json(h[i]) : json(nullptr));
  return out;
}

}  // namespace

json to_json(const TestResult& r) {
  json out{{"method", to_string(r.method)},
           {"statistic", r.statistic},
           {"p_value", r.p_value},
           {"reject", r.reject},
           {"K", r.K},
           {"alpha", r.alpha},
           {"critical_value", r.critical_value},
           {"per_bin_rho", r.per_bin_rho},
           {"bin_sizes", r.bin_sizes},
           {"flags", r.flags}};
  if (r.method == TestMethod::Permutation) out["permutations"] = r.permutations;
  return out;
}

json to_json(const SaCheckDiagnostics& d) {
  return {{"n_train", d.n_train}, {"n_test", d.n_test},   {"bin_sizes", d.bin_sizes},
          {"eta_min", d.eta_min}, {"eta_max", d.eta_max}, {"bin_boundaries", d.boundaries},
          {"sigma1", d.sigma1},   {"sigma2", d.sigma2},   {"flags", d.flags}};
}

json margin_json(const MarginalFit& m, const char* response) {
  return {{"response", response},
          {"sigma", m.sigma()},
          {"sigma_floored", m.sigma_floored()},
          {"bandwidth", bandwidths(m.bandwidth())},
          {"cv_error", m.cv_error()},
          {"degenerate_covariates", m.degenerate_covariates()}};
}

json calibration_json(const CalibrationFit& fit) {
  json out{{"backend", to_string(fit.backend())}, {"loglik", fit.loglik()}, {"flags", fit.flags()}};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, CalibrationFit::Constant>) {
          const auto p = CopulaParam::from_eta(s.eta);
          out["eta"] = s.eta;
          out["theta"] = p.theta();
          out["tau"] = p.tau();
        } else if constexpr (std::is_same_v<S, CalibrationFit::LocalLikelihood>) {
          out["bandwidth"] = bandwidths(s.bandwidth);
          out["cv_bandwidth_factors"] = s.cv_bandwidth_factors;
          out["cv_scores"] = s.cv_scores;
        } else {
          out["direction"] = vec(s.direction);
          out["direction_norm"] = s.direction.norm();
          out["lambda"] = s.lambda;
          out["alternations"] = s.alternations;
          out["penalized_loglik"] = s.penalized_loglik;
          out["cv_lambdas"] = s.cv_lambdas;
          out["cv_scores"] = s.cv_scores;
        }
      },
      fit.state());
  return out;
}

json eta_grid_json(const CalibrationFit& fit, const Eigen::MatrixXd& X) {
  const auto q = X.cols();
  const Eigen::RowVectorXd lo = X.colwise().minCoeff();
  const Eigen::RowVectorXd hi = X.colwise().maxCoeff();
  std::vector<Eigen::RowVectorXd> points;
  if (q <= 2) {
    constexpr int levels = 5;
    const int total = q == 1 ? levels : levels * levels;
    for (int k = 0; k < total; ++k) {
      Eigen::RowVectorXd x(q);
      x(0) = lo(0) + (hi(0) - lo(0)) * (k % levels) / double(levels - 1);
      if (q == 2) x(1) = lo(1) + (hi(1) - lo(1)) * (k / levels) / double(levels - 1);
      points.push_back(x);
    }
  } else {
    constexpr int levels = 9;
    const Eigen::RowVectorXd center = X.colwise().mean();
    for (Eigen::Index d = 0; d < q; ++d) {
      for (int k = 0; k < levels; ++k) {
        Eigen::RowVectorXd x = center;
        x(d) = lo(d) + (hi(d) - lo(d)) * k / double(levels - 1);
        points.push_back(x);
      }
    }
  }
  json pts = json::array();
  std::vector<double> eta;
  for (const auto& x : points) {
    pts.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    eta.push_back(fit.predict_eta(x));
  }
  const auto train = fit.predict_eta_rows(X);
  const auto [mn, mx] = std::minmax_element(train.begin(), train.end());
  double mean = 0.0;
  for (double e : train) mean += e;
  mean /= double(train.size());
  return {{"points", pts},
          {"eta", eta},
          {"training_summary", {{"min", *mn}, {"max", *mx}, {"mean", mean}}}};
}

}  // namespace sacheck::cli
