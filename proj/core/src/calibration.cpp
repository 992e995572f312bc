#include "sacheck/calibration.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "sacheck/error.hpp"

namespace sacheck {

namespace {

constexpr double kBoundaryTol = 1e-3;
constexpr std::size_t kMinConstantPairs = 10;
constexpr std::size_t kMinLocalPairs = 50;
// All-zero kernel weights: every exponent below this underflows exp().
constexpr double kUnderflowExponent = -700.0;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Eigen::VectorXd column_sd(const Eigen::MatrixXd& X) {
  Eigen::VectorXd sd(X.cols());
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    const double mu = X.col(d).mean();
    sd[d] = std::sqrt((X.col(d).array() - mu).square().mean());
  }
  return sd;
}

Eigen::VectorXd inverse_two_h2(const Eigen::VectorXd& h) {
  Eigen::VectorXd c(h.size());
  for (Eigen::Index d = 0; d < h.size(); ++d) c[d] = (h[d] > 0 && std::isfinite(h[d])) ? 1.0 / (2.0 * h[d] * h[d]) : 0.0;
  return c;
}

// Kernel weights around x, relative to the largest one when everything underflows.
bool kernel_weights(const Eigen::MatrixXd& X, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                    const Eigen::VectorXd& c, std::vector<double>& w) {
  const auto n = X.rows();
  w.resize(static_cast<std::size_t>(n));
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    double e = 0.0;
    for (Eigen::Index d = 0; d < X.cols(); ++d) {
      const double diff = x[d] - X(j, d);
      e -= c[d] * diff * diff;
    }
    w[static_cast<std::size_t>(j)] = e;
    best = std::max(best, e);
  }
  const bool fallback = best < kUnderflowExponent;
  const double shift = fallback ? best : 0.0;
  for (auto& v : w) v = std::exp(v - shift);
  return fallback;
}

// Indices whose weight is not negligible relative to the largest.
void significant(std::span<const double> w, std::vector<std::size_t>& active) {
  active.clear();
  const double top = *std::max_element(w.begin(), w.end());
  const double cut = top * 1e-12;
  for (std::size_t j = 0; j < w.size(); ++j)
    if (w[j] > cut) active.push_back(j);
}

void require_pairs(std::span<const UnitPair> pairs, std::size_t min, const char* where) {
  if (pairs.size() < min)
    throw ProcedureError(std::string(where) + ": need at least " + std::to_string(min) + " pairs");
}

}  // namespace

std::string_view to_string(CalibrationBackend b) noexcept {
  switch (b) {
    case CalibrationBackend::Constant:
      return "constant";
    case CalibrationBackend::LocalLikelihood:
      return "local_likelihood";
    case CalibrationBackend::SingleIndex:
      return "single_index";
  }
  return "unknown";
}

CalibrationBackend parse_backend(std::string_view name) {
  if (name == "constant") return CalibrationBackend::Constant;
  if (name == "local" || name == "local_likelihood" || name == "local-likelihood")
    return CalibrationBackend::LocalLikelihood;
  if (name == "single_index" || name == "single-index") return CalibrationBackend::SingleIndex;
  throw ParameterError("unknown calibration backend '" + std::string(name) + "'");
}

namespace detail {

double loglik_at(std::span<const clayton::LogPair> pairs, double eta) noexcept {
  double total = 0.0;
  for (const auto& p : pairs) total += clayton::log_density_eta(p, eta);
  return total;
}

WeightedMax maximize_weighted(std::span<const clayton::LogPair> pairs, std::span<const double> weights,
                              std::span<const std::size_t> active, double start) {
  auto score = [&](double eta) {
    double s = 0.0, ds = 0.0;
    auto add = [&](std::size_t j) {
      const auto d = clayton::log_density_eta_derivs(pairs[j], eta);
      s += weights[j] * d.d1;
      ds += weights[j] * d.d2;
    };
    if (active.empty()) {
      for (std::size_t j = 0; j < pairs.size(); ++j) add(j);
    } else {
      for (auto j : active) add(j);
    }
    return std::pair{s, ds};
  };

  double lo = kEtaMin, hi = kEtaMax;
  if (score(lo).first <= 0.0) return {lo, true};
  if (score(hi).first >= 0.0) return {hi, true};

  double x = std::clamp(start, lo + 1e-6, hi - 1e-6);
  for (int it = 0; it < 200; ++it) {
    const auto [s, ds] = score(x);
    if (s > 0.0) lo = x;
    else hi = x;
    if (s == 0.0) break;
    double next = (ds < 0.0) ? x - s / ds : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - x) < 1e-12 * (1.0 + std::abs(x)) || (hi - lo) < 1e-12;
    x = next;
    if (done) break;
  }
  return {x, false};
}

Eigen::VectorXd canonical_direction(Eigen::VectorXd w) {
  const double norm = w.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    w.setZero();
    w[0] = 1.0;
    return w;
  }
  w /= norm;
  for (Eigen::Index d = 0; d < w.size(); ++d) {
    if (std::abs(w[d]) > 1e-14) {
      if (w[d] < 0.0) w = -w;
      break;
    }
  }
  return w;
}

Eigen::VectorXd local_slope_direction(const Eigen::MatrixXd& X, std::span<const clayton::LogPair> pairs) {
  const auto n = X.rows();
  const auto q = X.cols();
  if (q == 1) return Eigen::VectorXd::Ones(1);
  // Local likelihood with a fixed half-standard-deviation bandwidth at up to 100 evenly spaced
  // training points, then the least-squares slope of those estimates on x.
  const Eigen::VectorXd c = inverse_two_h2(0.5 * column_sd(X));
  const Eigen::Index m = std::min<Eigen::Index>(n, 100);
  Eigen::MatrixXd design(m, q + 1);
  Eigen::VectorXd target(m);
  std::vector<double> w;
  std::vector<std::size_t> active;
  const double eta0 = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = (k * n) / m;
    kernel_weights(X, X.row(i), c, w);
    significant(w, active);
    target[k] = maximize_weighted(pairs, w, active, eta0).eta;
    design(k, 0) = 1.0;
    design.row(k).tail(q) = X.row(i);
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
  return canonical_direction(beta.tail(q));
}

}  // namespace detail

CalibrationBackend CalibrationFit::backend() const noexcept {
  return std::visit(overloaded{[](const Constant&) { return CalibrationBackend::Constant; },
                               [](const LocalLikelihood&) { return CalibrationBackend::LocalLikelihood; },
                               [](const SingleIndex&) { return CalibrationBackend::SingleIndex; }},
                    state_);
}

EtaPrediction CalibrationFit::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return std::visit(
      overloaded{
          [](const Constant& s) { return EtaPrediction{s.eta, false}; },
          [&](const LocalLikelihood& s) {
            if (x.size() != s.X->cols()) throw ParameterError("predict_eta: covariate dimension mismatch");
            std::vector<double> w;
            std::vector<std::size_t> active;
            const bool fallback = kernel_weights(*s.X, x, s.inv_two_h2, w);
            significant(w, active);
            return EtaPrediction{detail::maximize_weighted(*s.pairs, w, active, 0.0).eta, fallback};
          },
          [&](const SingleIndex& s) {
            if (x.size() != s.direction.size()) throw ParameterError("predict_eta: covariate dimension mismatch");
            const double z = x.dot(s.direction.transpose());
            return EtaPrediction{std::clamp(s.spline.value(s.coef, z), kEtaMin, kEtaMax), false};
          }},
      state_);
}

double CalibrationFit::predict_eta(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return predict(x).eta; }

std::vector<double> CalibrationFit::predict_eta_rows(const Eigen::MatrixXd& X) const {
  std::vector<double> out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_eta(X.row(i));
  return out;
}

CalibrationFit fit_constant(std::span<const UnitPair> pairs) {
  require_pairs(pairs, kMinConstantPairs, "fit_constant");
  const auto prepared = clayton::prepare(pairs);
  auto negative = [&](double eta) { return -detail::loglik_at(prepared, eta); };
  constexpr int bits = std::numeric_limits<double>::digits / 2;
  boost::uintmax_t max_iter = 500;
  auto [eta, neg] = boost::math::tools::brent_find_minima(negative, kEtaMin, kEtaMax, bits, max_iter);
  // Brent stops near half precision; polish with safeguarded Newton on the score.
  const std::vector<double> unit(prepared.size(), 1.0);
  const auto polished = detail::maximize_weighted(prepared, unit, {}, eta);
  if (!polished.boundary) {
    eta = polished.eta;
    neg = -detail::loglik_at(prepared, eta);
  }
  std::vector<std::string> flags;
  if (eta - kEtaMin < kBoundaryTol || kEtaMax - eta < kBoundaryTol) flags.emplace_back("boundary");
  return CalibrationFit(CalibrationFit::Constant{eta}, -neg, std::move(flags));
}

CalibrationFit fit_local_likelihood(const Eigen::MatrixXd& X, std::span<const UnitPair> pairs,
                                    std::optional<Eigen::VectorXd> bandwidth) {
  require_pairs(pairs, kMinLocalPairs, "fit_local_likelihood");
  if (static_cast<std::size_t>(X.rows()) != pairs.size())
    throw ProcedureError("fit_local_likelihood: covariates and pairs differ in length");
  const auto q = X.cols();
  const auto n = pairs.size();

  CalibrationFit::LocalLikelihood state;
  state.X = std::make_shared<const Eigen::MatrixXd>(X);
  state.pairs = std::make_shared<const std::vector<clayton::LogPair>>(clayton::prepare(pairs));
  const auto& lp = *state.pairs;
  const double eta_global = fit_constant(pairs).predict_eta(X.row(0));

  const Eigen::VectorXd sd = column_sd(X);
  if (bandwidth) {
    if (bandwidth->size() != q) throw ParameterError("fit_local_likelihood: bandwidth dimension mismatch");
    if ((bandwidth->array() <= 0.0).any()) throw ParameterError("fit_local_likelihood: bandwidths must be positive");
    state.bandwidth = *bandwidth;
  } else {
    // Leave-one-out likelihood cross-validation over a common scale factor.
    constexpr int kGrid = 8;
    constexpr double lo = 0.05, hi = 5.0;
    double best_score = -std::numeric_limits<double>::infinity();
    double best_factor = hi;
    std::vector<double> w;
    std::vector<std::size_t> active;
    for (int g = 0; g < kGrid; ++g) {
      const double factor = lo * std::pow(hi / lo, static_cast<double>(g) / (kGrid - 1));
      const Eigen::VectorXd c = inverse_two_h2(factor * sd);
      double score = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        kernel_weights(X, X.row(static_cast<Eigen::Index>(i)), c, w);
        w[i] = 0.0;
        significant(w, active);
        const double eta = detail::maximize_weighted(lp, w, active, eta_global).eta;
        score += clayton::log_density_eta(lp[i], eta);
      }
      state.cv_bandwidth_factors.push_back(factor);
      state.cv_scores.push_back(score);
      // Ties go to the smoother fit.
      if (score >= best_score) {
        best_score = score;
        best_factor = factor;
      }
    }
    state.bandwidth = best_factor * sd;
    for (Eigen::Index d = 0; d < q; ++d)
      if (!(state.bandwidth[d] > 0.0)) state.bandwidth[d] = std::numeric_limits<double>::infinity();
  }
  state.inv_two_h2 = inverse_two_h2(state.bandwidth);

  // Training log-likelihood and fallback bookkeeping at the training covariates.
  CalibrationFit fit(state, 0.0, {});
  double ll = 0.0;
  bool any_fallback = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pred = fit.predict(X.row(static_cast<Eigen::Index>(i)));
    any_fallback = any_fallback || pred.fallback;
    ll += clayton::log_density_eta(lp[i], pred.eta);
  }
  std::vector<std::string> flags;
  if (any_fallback) flags.emplace_back("nearest_neighbour_fallback");
  return CalibrationFit(std::move(state), ll, std::move(flags));
}

}  // namespace sacheck
