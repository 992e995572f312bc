#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sacheck/calibration.hpp"
#include "sacheck/error.hpp"
#include "sacheck/rng.hpp"

namespace sacheck {

namespace {

constexpr std::size_t kMinPairs = 50;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Iterates whose calibration leaves this band are rejected by the line searches.
constexpr double kEtaGuard = 15.0;

using clayton::LogPair;

struct SplineFit {
  CubicBSpline basis;
  Eigen::VectorXd coef;
  double loglik;
  double penalized;
};

// Penalized spline fit of eta_i = s(z_i) for fixed index values z.
class SplineProblem {
 public:
  SplineProblem(std::span<const LogPair> pairs, std::span<const double> z, std::span<const std::size_t> rows,
                double lo, double hi, int knots, int order, double lambda)
      : pairs_(pairs), basis_(lo, hi, knots), penalty_(basis_.difference_penalty(order)), lambda_(lambda) {
    locals_.reserve(rows.size());
    rows_.assign(rows.begin(), rows.end());
    for (auto r : rows) locals_.push_back(basis_.evaluate(z[r]));
  }

  const CubicBSpline& basis() const { return basis_; }

  double eta(std::size_t k, const Eigen::VectorXd& coef) const {
    const auto& l = locals_[k];
    double s = 0.0;
    for (int j = 0; j < CubicBSpline::kOrder; ++j) s += coef[l.first + j] * l.value[static_cast<std::size_t>(j)];
    return s;
  }

  double loglik(const Eigen::VectorXd& coef) const {
    double total = 0.0;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      const double e = eta(k, coef);
      if (!(std::abs(e) <= kEtaGuard)) return kNegInf;
      total += clayton::log_density_eta(pairs_[rows_[k]], e);
    }
    return total;
  }

  double penalty(const Eigen::VectorXd& coef) const { return lambda_ * coef.dot(penalty_ * coef); }

  SplineFit fit(double eta0, const Eigen::VectorXd* warm) const {
    const int p = basis_.size();
    Eigen::VectorXd coef = Eigen::VectorXd::Constant(p, eta0);
    double obj = loglik(coef) - penalty(coef);
    if (warm && warm->size() == p) {
      const double w_obj = loglik(*warm) - penalty(*warm);
      if (w_obj > obj) {
        coef = *warm;
        obj = w_obj;
      }
    }
    Eigen::VectorXd g(p);
    Eigen::MatrixXd H(p, p);
    for (int it = 0; it < 100; ++it) {
      g.setZero();
      H.setZero();
      for (std::size_t k = 0; k < rows_.size(); ++k) {
        const auto& l = locals_[k];
        const auto d = clayton::log_density_eta_derivs(pairs_[rows_[k]], eta(k, coef));
        const double curv = std::min(d.d2, 0.0);
        for (int a = 0; a < CubicBSpline::kOrder; ++a) {
          const double va = l.value[static_cast<std::size_t>(a)];
          g[l.first + a] += d.d1 * va;
          for (int b = 0; b < CubicBSpline::kOrder; ++b)
            H(l.first + a, l.first + b) += curv * va * l.value[static_cast<std::size_t>(b)];
        }
      }
      g -= 2.0 * lambda_ * penalty_ * coef;
      Eigen::MatrixXd neg = -H + 2.0 * lambda_ * penalty_;
      neg.diagonal().array() += 1e-8 * (1.0 + neg.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd delta = neg.ldlt().solve(g);
      if (!delta.allFinite()) break;

      double t = 1.0;
      bool improved = false;
      Eigen::VectorXd trial;
      double trial_obj = obj;
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        trial = coef + t * delta;
        trial_obj = loglik(trial) - penalty(trial);
        if (trial_obj > obj) {
          improved = true;
          break;
        }
      }
      if (!improved) break;
      const double gain = trial_obj - obj;
      coef = trial;
      obj = trial_obj;
      if (gain < 1e-12 * (1.0 + std::abs(obj))) break;
    }
    return {basis_, coef, loglik(coef), obj};
  }

 private:
  std::span<const LogPair> pairs_;
  CubicBSpline basis_;
  Eigen::MatrixXd penalty_;
  double lambda_;
  std::vector<std::size_t> rows_;
  std::vector<CubicBSpline::Local> locals_;
};

std::vector<double> index_values(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
  const Eigen::VectorXd z = X * w;
  return {z.data(), z.data() + z.size()};
}

struct Iterate {
  Eigen::VectorXd direction;
  SplineFit spline;
  int alternations;
  bool converged;
};

class SingleIndexFitter {
 public:
  SingleIndexFitter(const Eigen::MatrixXd& X, std::span<const LogPair> pairs, const SingleIndexConfig& cfg,
                    double eta0)
      : X_(X), pairs_(pairs), cfg_(cfg), eta0_(eta0), all_rows_(pairs.size()) {
    std::iota(all_rows_.begin(), all_rows_.end(), std::size_t{0});
  }

  SplineFit fit_spline(const Eigen::VectorXd& w, double lambda, const Eigen::VectorXd* warm) const {
    const auto z = index_values(X_, w);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    SplineProblem prob(pairs_, z, all_rows_, *lo, *hi, cfg_.interior_knots, cfg_.penalty_order, lambda);
    return prob.fit(eta0_, warm);
  }

  // Copula log-likelihood as a function of the direction with the spline held fixed.
  double direction_loglik(const Eigen::VectorXd& w, const SplineFit& s) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      const double e = s.basis.value(s.coef, X_.row(i).dot(w));
      if (!(std::abs(e) <= kEtaGuard)) return kNegInf;
      total += clayton::log_density_eta(pairs_[static_cast<std::size_t>(i)], e);
    }
    return total;
  }

  Eigen::VectorXd direction_gradient(const Eigen::VectorXd& w, const SplineFit& s) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < X_.rows(); ++i) {
      const double z = X_.row(i).dot(w);
      const double slope = s.basis.derivative(s.coef, z);
      if (slope == 0.0) continue;
      const auto d = clayton::log_density_eta_derivs(pairs_[static_cast<std::size_t>(i)], s.basis.value(s.coef, z));
      g += d.d1 * slope * X_.row(i).transpose();
    }
    return g;
  }

  Iterate alternate(Eigen::VectorXd w, double lambda) const {
    const bool can_rotate = w.size() > 1;
    SplineFit spline = fit_spline(w, lambda, nullptr);
    double obj = spline.penalized;
    Iterate best{w, spline, 0, false};
    double step = 0.2;  // radians
    for (int it = 1; it <= cfg_.max_alternations; ++it) {
      best.alternations = it;
      if (!can_rotate) {
        best.converged = true;
        break;
      }
      // Projected gradient step on the unit sphere with backtracking.
      const Eigen::VectorXd g = direction_gradient(w, spline);
      const Eigen::VectorXd tangent = g - g.dot(w) * w;
      const double tnorm = tangent.norm();
      Eigen::VectorXd next_w = w;
      if (tnorm > 1e-12) {
        const double base = direction_loglik(w, spline);
        double t = std::min(0.5, 2.0 * step);
        for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
          Eigen::VectorXd cand = (w + (t / tnorm) * tangent).normalized();
          if (direction_loglik(cand, spline) > base) {
            next_w = cand;
            step = t;
            break;
          }
        }
      }
      const SplineFit next_spline = fit_spline(next_w, lambda, &spline.coef);
      const double next_obj = next_spline.penalized;
      // The knot range follows the index, so a direction step can lower the refitted
      // objective; no further gain means the alternation has reached its fixed point.
      const double change = next_obj - obj;
      w = next_w;
      spline = next_spline;
      if (next_obj > best.spline.penalized) {
        best.direction = w;
        best.spline = spline;
      }
      obj = next_obj;
      if (change <= cfg_.rel_tol * (1.0 + std::abs(obj))) {
        best.converged = true;
        break;
      }
    }
    return best;
  }

  // K-fold cross-validated held-out log-likelihood for each candidate lambda at a fixed direction.
  std::vector<double> cv_lambda(const Eigen::VectorXd& w, Rng& rng) const {
    const auto z = index_values(X_, w);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    const auto n = pairs_.size();
    const int folds = std::max(2, cfg_.cv_folds);
    const auto perm = random_permutation(n, rng);
    std::vector<int> fold(n);
    for (std::size_t k = 0; k < n; ++k) fold[perm[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));

    std::vector<double> scores;
    for (double lambda : cfg_.lambda_grid) {
      double score = 0.0;
      for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
        SplineProblem prob(pairs_, z, train, *lo, *hi, cfg_.interior_knots, cfg_.penalty_order, lambda);
        const auto s = prob.fit(eta0_, nullptr);
        SplineProblem held(pairs_, z, test, *lo, *hi, cfg_.interior_knots, cfg_.penalty_order, 0.0);
        score += held.loglik(s.coef);
      }
      scores.push_back(score);
    }
    return scores;
  }

 private:
  const Eigen::MatrixXd& X_;
  std::span<const LogPair> pairs_;
  const SingleIndexConfig& cfg_;
  double eta0_;
  std::vector<std::size_t> all_rows_;
};

}  // namespace

CalibrationFit fit_single_index(const Eigen::MatrixXd& X, std::span<const UnitPair> pairs,
                                const SingleIndexConfig& config) {
  if (pairs.size() < kMinPairs) throw ProcedureError("fit_single_index: need at least 50 pairs");
  if (static_cast<std::size_t>(X.rows()) != pairs.size())
    throw ProcedureError("fit_single_index: covariates and pairs differ in length");
  if (X.cols() < 1) throw ProcedureError("fit_single_index: no covariates");
  if (config.interior_knots < 0 || config.max_alternations < 1)
    throw ParameterError("fit_single_index: invalid configuration");
  if (!config.lambda && config.lambda_grid.empty()) throw ParameterError("fit_single_index: empty lambda grid");
  const auto q = X.cols();

  const auto prepared = clayton::prepare(pairs);
  const double eta0 = fit_constant(pairs).predict_eta(X.row(0));
  SingleIndexFitter fitter(X, prepared, config, eta0);
  Rng rng = Rng::substream(config.seed, {stream_key("single_index")});

  std::vector<Eigen::VectorXd> starts;
  if (q == 1) {
    starts.push_back(Eigen::VectorXd::Ones(1));
  } else {
    if (config.start_direction) {
      if (config.start_direction->size() != q) throw ParameterError("fit_single_index: start direction dimension");
      starts.push_back(detail::canonical_direction(*config.start_direction));
    }
    if (config.slope_start) starts.push_back(detail::local_slope_direction(X, prepared));
    if (config.random_starts > 0) {
      // Screen random directions by their profile fit and keep the best few as starts.
      const int pool = std::max(config.random_starts, config.screen_directions);
      std::vector<std::pair<double, Eigen::VectorXd>> scored;
      for (int s = 0; s < pool; ++s) {
        Eigen::VectorXd w(q);
        for (Eigen::Index d = 0; d < q; ++d) w[d] = rng.normal();
        w = detail::canonical_direction(w);
        const double score = fitter.fit_spline(w, config.lambda.value_or(config.pilot_lambda), nullptr).penalized;
        scored.emplace_back(std::isfinite(score) ? score : kNegInf, std::move(w));
      }
      std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (int s = 0; s < config.random_starts; ++s) starts.push_back(scored[static_cast<std::size_t>(s)].second);
    }
    if (starts.empty()) starts.push_back(detail::canonical_direction(Eigen::VectorXd::Ones(q)));
  }

  const double phase_lambda = config.lambda.value_or(config.pilot_lambda);
  std::vector<Iterate> candidates;
  for (const auto& start : starts) candidates.push_back(fitter.alternate(start, phase_lambda));

  double lambda = phase_lambda;
  std::vector<double> cv_scores;
  std::optional<Iterate> best;
  if (config.lambda) {
    for (auto& it : candidates) {
      if (!best) {
        best = std::move(it);
        continue;
      }
      const double a = it.spline.penalized, b = best->spline.penalized;
      const bool tie = std::abs(a - b) <= 1e-10 * (1.0 + std::abs(b));
      if ((!tie && a > b) ||
          (tie && (it.direction - starts.front()).norm() < (best->direction - starts.front()).norm()))
        best = std::move(it);
    }
  } else {
    // Candidates are compared on held-out likelihood over the same folds, so a
    // wiggly true index is not beaten by a smooth spurious one at the pilot penalty.
    const Rng cv_rng = rng.derive({stream_key("cv_folds")});
    double best_score = kNegInf;
    std::size_t best_c = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      Rng fold_rng = cv_rng;
      const auto scores = fitter.cv_lambda(candidates[c].direction, fold_rng);
      for (std::size_t k = 0; k < scores.size(); ++k) {
        if (!std::isfinite(scores[k])) continue;
        // Within a candidate ties go to the smoother fit; across candidates earlier starts win ties.
        const bool take = best_c == candidates.size() || (c == best_c && scores[k] >= best_score) ||
                          (c != best_c && scores[k] > best_score + 1e-9 * (1.0 + std::abs(best_score)));
        if (!take) continue;
        best_score = scores[k];
        best_c = c;
        lambda = config.lambda_grid[k];
        cv_scores = scores;
      }
    }
    if (best_c < candidates.size()) best = candidates[best_c];
    if (!best) best = candidates.front();
    best = fitter.alternate(best->direction, lambda);
  }

  // Sign identifiability: flip the index if needed and refit the ridge function on it.
  Eigen::VectorXd w = best->direction;
  const Eigen::VectorXd canon = detail::canonical_direction(w);
  SplineFit spline = best->spline;
  if (canon.dot(w) < 0.0) {
    w = canon;
    spline = fitter.fit_spline(w, lambda, nullptr);
  } else {
    w = canon;
  }

  std::vector<std::string> flags;
  if (!best->converged) flags.emplace_back("not_converged");
  CalibrationFit::SingleIndex state{w,      spline.basis, spline.coef, lambda, spline.penalized, best->alternations,
                                    config.lambda ? std::vector<double>{} : config.lambda_grid, cv_scores};
  return CalibrationFit(std::move(state), spline.loglik, std::move(flags));
}

}  // namespace sacheck
