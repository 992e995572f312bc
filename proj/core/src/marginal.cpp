#include "sacheck/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sacheck/copula.hpp"
#include "sacheck/error.hpp"
#include "sacheck/special.hpp"

namespace sacheck {

namespace {

constexpr double kMinFactor = 0.02;
constexpr double kMaxFactor = 2.0;

struct LooResult {
  std::vector<double> fitted;
  double mse;
};

// Leave-one-out Nadaraya-Watson means for the kernel exp(-sum_d c_d (x_id - x_jd)^2).
LooResult leave_one_out(const Eigen::MatrixXd& X, std::span<const double> y, const Eigen::VectorXd& c) {
  const auto n = static_cast<std::size_t>(X.rows());
  const auto q = X.cols();
  std::vector<double> num(n, 0.0), den(n, 0.0), best(n, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> nearest(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double e = 0.0;
      for (Eigen::Index d = 0; d < q; ++d) {
        const double diff = X(ii, d) - X(jj, d);
        e -= c[d] * diff * diff;
      }
      const double w = std::exp(e);
      num[i] += w * y[j];
      den[i] += w;
      num[j] += w * y[i];
      den[j] += w;
      if (e > best[i]) best[i] = e, nearest[i] = j;
      if (e > best[j]) best[j] = e, nearest[j] = i;
    }
  }
  LooResult out{std::vector<double>(n), 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    out.fitted[i] = den[i] > 1e-250 ? num[i] / den[i] : y[nearest[i]];
    const double r = y[i] - out.fitted[i];
    out.mse += r * r;
  }
  out.mse /= static_cast<double>(n);
  return out;
}

Eigen::VectorXd kernel_coefficients(const Eigen::VectorXd& h) {
  Eigen::VectorXd c(h.size());
  for (Eigen::Index d = 0; d < h.size(); ++d) c[d] = std::isinf(h[d]) ? 0.0 : 1.0 / (2.0 * h[d] * h[d]);
  return c;
}

}  // namespace

MarginalFit MarginalFit::fit(const Eigen::MatrixXd& X, std::span<const double> y,
                             std::optional<Eigen::VectorXd> bandwidth) {
  const auto n = y.size();
  if (static_cast<std::size_t>(X.rows()) != n) throw ProcedureError("fit_margin: X and y lengths differ");
  if (n < kMinObservations) throw ProcedureError("fit_margin: need at least 20 observations");
  if (X.cols() == 0) throw ProcedureError("fit_margin: no covariates");
  if (!X.allFinite() || !std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); }))
    throw ProcedureError("fit_margin: non-finite input");
  const auto q = X.cols();

  MarginalFit m;
  m.X_ = std::make_shared<const Eigen::MatrixXd>(X);
  m.y_ = std::make_shared<const std::vector<double>>(y.begin(), y.end());
  m.global_mean_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  Eigen::VectorXd sd(q);
  std::vector<Eigen::Index> active;
  for (Eigen::Index d = 0; d < q; ++d) {
    const auto col = X.col(d);
    const double mu = col.mean();
    sd[d] = std::sqrt((col.array() - mu).square().mean());
    if (sd[d] > 1e-12 * (1.0 + std::abs(mu))) active.push_back(d);
  }
  m.degenerate_ = static_cast<Eigen::Index>(active.size()) < q;
  m.all_degenerate_ = active.empty();

  if (bandwidth) {
    if (bandwidth->size() != q) throw ParameterError("fit_margin: bandwidth dimension mismatch");
    for (Eigen::Index d = 0; d < q; ++d)
      if (!((*bandwidth)[d] > 0.0)) throw ParameterError("fit_margin: bandwidths must be positive");
    m.bandwidth_ = *bandwidth;
    for (Eigen::Index d = 0; d < q; ++d)
      if (std::find(active.begin(), active.end(), d) == active.end())
        m.bandwidth_[d] = std::numeric_limits<double>::infinity();
  } else if (m.all_degenerate_) {
    m.bandwidth_ = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::infinity());
  } else {
    std::vector<double> factors(kGridPoints);
    for (int g = 0; g < kGridPoints; ++g)
      factors[static_cast<std::size_t>(g)] =
          kMinFactor * std::pow(kMaxFactor / kMinFactor, static_cast<double>(g) / (kGridPoints - 1));

    auto make_h = [&](const std::vector<int>& idx) {
      Eigen::VectorXd h = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::infinity());
      for (std::size_t a = 0; a < active.size(); ++a)
        h[active[a]] = sd[active[a]] * factors[static_cast<std::size_t>(idx[a])];
      return h;
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> best_idx(active.size(), kGridPoints / 2);
    auto evaluate = [&](const std::vector<int>& idx) {
      Eigen::VectorXd h = make_h(idx);
      const double mse = leave_one_out(X, y, kernel_coefficients(h)).mse;
      m.cv_path_.push_back({h, mse});
      if (mse < best) {
        best = mse;
        best_idx = idx;
      }
    };

    if (active.size() <= 2) {
      // Exhaustive product grid.
      std::vector<int> idx(active.size(), 0);
      while (true) {
        evaluate(idx);
        std::size_t a = 0;
        while (a < idx.size() && ++idx[a] == kGridPoints) idx[a++] = 0;
        if (a == idx.size()) break;
      }
    } else {
      // Coordinate-wise search over the same grid; the product grid is too large.
      evaluate(best_idx);
      for (int sweep = 0; sweep < 5; ++sweep) {
        const auto before = best_idx;
        for (std::size_t a = 0; a < active.size(); ++a) {
          auto trial = best_idx;
          for (int g = 0; g < kGridPoints; ++g) {
            if (g == before[a]) continue;
            trial[a] = g;
            evaluate(trial);
          }
        }
        if (best_idx == before) break;
      }
    }
    m.bandwidth_ = make_h(best_idx);
  }

  m.inv_two_h2_ = kernel_coefficients(m.bandwidth_);
  if (m.all_degenerate_) {
    // Global mean; leave-one-out mean excludes the point itself.
    const double total = m.global_mean_ * static_cast<double>(n);
    m.loo_fitted_.resize(n);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      m.loo_fitted_[i] = (total - y[i]) / static_cast<double>(n - 1);
      mse += (y[i] - m.loo_fitted_[i]) * (y[i] - m.loo_fitted_[i]);
    }
    m.cv_error_ = mse / static_cast<double>(n);
  } else {
    auto loo = leave_one_out(X, y, m.inv_two_h2_);
    m.loo_fitted_ = std::move(loo.fitted);
    m.cv_error_ = loo.mse;
  }
  m.sigma_ = std::sqrt(m.cv_error_);
  if (!(m.sigma_ >= kSigmaFloor)) {
    m.sigma_ = kSigmaFloor;
    m.sigma_floored_ = true;
  }
  return m;
}

double MarginalFit::mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (all_degenerate_) return global_mean_;
  const auto& X = *X_;
  const auto& y = *y_;
  if (x.size() != X.cols()) throw ParameterError("MarginalFit::mean: covariate dimension mismatch");
  // Online log-sum-exp so a query far from the data falls back to its nearest neighbours.
  double m = -std::numeric_limits<double>::infinity();
  double num = 0.0, den = 0.0;
  for (Eigen::Index j = 0; j < X.rows(); ++j) {
    double e = 0.0;
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
      const double diff = x[d] - X(j, d);
      e -= inv_two_h2_[d] * diff * diff;
    }
    if (e > m) {
      const double scale = std::exp(m - e);
      num *= scale;
      den *= scale;
      m = e;
    }
    const double w = std::exp(e - m);
    num += w * y[static_cast<std::size_t>(j)];
    den += w;
  }
  return num / den;
}

double MarginalFit::pit(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const {
  return std::clamp(gaussian_cdf((y - mean(x)) / sigma_), kUnitFloor, 1.0 - kUnitFloor);
}

double MarginalFit::log_density(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) const {
  return gaussian_log_pdf((y - mean(x)) / sigma_) - std::log(sigma_);
}

std::vector<double> MarginalFit::training_pit() const {
  const auto& y = *y_;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = std::clamp(gaussian_cdf((y[i] - loo_fitted_[i]) / sigma_), kUnitFloor, 1.0 - kUnitFloor);
  return out;
}

}  // namespace sacheck
