#include "sacheck/sa_tests.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "sacheck/error.hpp"
#include "sacheck/parallel.hpp"
#include "sacheck/special.hpp"

namespace sacheck {

namespace {

constexpr std::size_t kMinPermutationBin = 3;
constexpr std::size_t kMinChisqBin = 20;
constexpr double kVarianceFloor = 1e-12;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
}

std::vector<double> midranks(std::span<const double> v) {
  const auto n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
    i = j + 1;
  }
  return r;
}

Correlation correlation(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return {0.0, true};
  return {std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0), false};
}

// Global sort order of one coordinate with tie groups, so bin-local ranks of any
// bin assignment can be produced in a single linear pass.
struct RankOrder {
  std::vector<std::size_t> order;
  std::vector<std::size_t> group_end;  // exclusive end index in `order` of each tie group

  explicit RankOrder(std::span<const double> v) : order(v.size()) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    for (std::size_t i = 0; i < order.size(); ++i)
      if (i + 1 == order.size() || v[order[i + 1]] != v[order[i]]) group_end.push_back(i + 1);
  }

  // Midranks within each bin.
  void bin_ranks(std::span<const std::size_t> bin_of, std::size_t K, std::vector<double>& rank,
                 std::vector<double>& count, std::vector<double>& tie) const {
    std::fill(count.begin(), count.end(), 0.0);
    std::size_t start = 0;
    for (auto end : group_end) {
      if (end - start == 1) {
        const auto i = order[start];
        rank[i] = ++count[bin_of[i]];
      } else {
        std::fill(tie.begin(), tie.end(), 0.0);
        for (std::size_t k = start; k < end; ++k) tie[bin_of[order[k]]] += 1.0;
        for (std::size_t k = start; k < end; ++k) {
          const auto b = bin_of[order[k]];
          rank[order[k]] = count[b] + 0.5 * (tie[b] + 1.0);
        }
        for (std::size_t b = 0; b < K; ++b) count[b] += tie[b];
      }
      start = end;
    }
  }
};

// Bin-wise Spearman correlations for one assignment of observations to bins.
class BinSpearman {
 public:
  BinSpearman(std::span<const UnitPair> U, std::size_t K) : K_(K), n_(U.size()) {
    std::vector<double> a(n_), b(n_);
    for (std::size_t i = 0; i < n_; ++i) a[i] = U[i].u1, b[i] = U[i].u2;
    first_ = RankOrder(a);
    second_ = RankOrder(b);
  }

  struct Scratch {
    std::vector<double> r1, r2, count, tie;
    std::vector<double> s1, s2, s11, s22, s12, n;
  };

  Scratch scratch() const {
    Scratch s;
    s.r1.resize(n_);
    s.r2.resize(n_);
    s.count.resize(K_);
    s.tie.resize(K_);
    for (auto* v : {&s.s1, &s.s2, &s.s11, &s.s22, &s.s12, &s.n}) v->resize(K_);
    return s;
  }

  std::vector<Correlation> compute(std::span<const std::size_t> bin_of, Scratch& s) const {
    first_.bin_ranks(bin_of, K_, s.r1, s.count, s.tie);
    second_.bin_ranks(bin_of, K_, s.r2, s.count, s.tie);
    for (auto* v : {&s.s1, &s.s2, &s.s11, &s.s22, &s.s12, &s.n}) std::fill(v->begin(), v->end(), 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto b = bin_of[i];
      const double x = s.r1[i], y = s.r2[i];
      s.s1[b] += x;
      s.s2[b] += y;
      s.s11[b] += x * x;
      s.s22[b] += y * y;
      s.s12[b] += x * y;
      s.n[b] += 1.0;
    }
    std::vector<Correlation> out(K_);
    for (std::size_t b = 0; b < K_; ++b) {
      const double m = s.n[b];
      const double sxx = s.s11[b] - s.s1[b] * s.s1[b] / m;
      const double syy = s.s22[b] - s.s2[b] * s.s2[b] / m;
      const double sxy = s.s12[b] - s.s1[b] * s.s2[b] / m;
      // Relative threshold: with distinct ranks sxx is of order m^3.
      if (!(sxx > 1e-9) || !(syy > 1e-9)) out[b] = {0.0, true};
      else out[b] = {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
    }
    return out;
  }

 private:
  std::size_t K_;
  std::size_t n_;
  RankOrder first_{std::span<const double>{}};
  RankOrder second_{std::span<const double>{}};
};

double range_of(const std::vector<Correlation>& r) {
  const auto [lo, hi] = std::minmax_element(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.rho < b.rho; });
  return hi->rho - lo->rho;
}

void check_aligned(std::span<const UnitPair> U, std::size_t n, const char* where) {
  if (U.size() != n) throw ProcedureError(std::string(where) + ": PIT pairs and calibration predictions differ in length");
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                            Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("split: train fraction must lie in (0, 1)");
  if (n < 40) throw ProcedureError("split: need at least 40 observations");
  const auto n1 = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n1 < 10 || n - n1 < 10) throw ProcedureError("split: training and test parts need at least 10 rows each");
  auto perm = random_permutation(n, rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_data(const Dataset& d, double train_fraction, Rng& rng) {
  d.validate();
  const auto [train, test] = split_indices(d.size(), train_fraction, rng);
  return {d.subset(train), d.subset(test)};
}

BinAssignment assign_bins(std::span<const double> eta_hat, std::size_t K, std::size_t min_bin_size) {
  if (K < 2) throw ParameterError("assign_bins: need at least 2 bins");
  const auto n = eta_hat.size();
  min_bin_size = std::max<std::size_t>(min_bin_size, 2);
  if (n / K < min_bin_size)
    throw ProcedureError("assign_bins: " + std::to_string(n) + " observations cannot fill " + std::to_string(K) +
                         " bins of at least " + std::to_string(min_bin_size));
  for (double e : eta_hat)
    if (!std::isfinite(e)) throw ProcedureError("assign_bins: non-finite calibration prediction");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eta_hat[a] < eta_hat[b]; });

  BinAssignment out;
  out.K = K;
  out.labels.assign(n, 0);
  const std::size_t base = n / K, extra = n % K;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    out.sizes.push_back(size);
    out.boundaries.push_back(eta_hat[order[pos]]);
    for (std::size_t j = 0; j < size; ++j) out.labels[order[pos + j]] = k;
    pos += size;
  }
  out.boundaries.push_back(eta_hat[order.back()]);
  return out;
}

Correlation spearman_rho(std::span<const UnitPair> pairs) {
  if (pairs.size() < 3) throw ProcedureError("spearman_rho: need at least 3 pairs");
  std::vector<double> a(pairs.size()), b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) a[i] = pairs[i].u1, b[i] = pairs[i].u2;
  const auto ra = midranks(a), rb = midranks(b);
  return correlation(ra, rb);
}

Correlation pearson_rho(std::span<const UnitPair> pairs) {
  if (pairs.size() < 3) throw ProcedureError("pearson_rho: need at least 3 pairs");
  std::vector<double> a(pairs.size()), b(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) a[i] = pairs[i].u1, b[i] = pairs[i].u2;
  return correlation(a, b);
}

std::string_view to_string(TestMethod m) noexcept {
  return m == TestMethod::Permutation ? "permutation" : "chisq";
}

TestResult permutation_test(std::span<const UnitPair> U, std::span<const double> eta_hat, std::size_t K,
                            std::size_t J, double alpha, Rng& rng, unsigned threads) {
  check_aligned(U, eta_hat.size(), "permutation_test");
  return permutation_test(U, assign_bins(eta_hat, K, kMinPermutationBin), J, alpha, rng, threads);
}

TestResult permutation_test(std::span<const UnitPair> U, const BinAssignment& bins, std::size_t J, double alpha,
                            Rng& rng, unsigned threads) {
  check_aligned(U, bins.labels.size(), "permutation_test");
  check_alpha(alpha);
  if (J < 99) throw ParameterError("permutation_test: need at least 99 permutations");
  for (auto s : bins.sizes)
    if (s < kMinPermutationBin) throw ProcedureError("permutation_test: every bin needs at least 3 observations");
  const auto n = U.size();
  const auto K = bins.K;

  BinSpearman spearman(U, K);
  auto scratch = spearman.scratch();
  const auto observed = spearman.compute(bins.labels, scratch);

  TestResult res{TestMethod::Permutation, range_of(observed), 1.0, K, alpha, false, {}, bins.sizes, J, 0.0, {}};
  for (const auto& c : observed) {
    res.per_bin_rho.push_back(c.rho);
    if (c.degenerate && res.flags.empty()) res.flags.emplace_back("degenerate_bin");
  }

  // Permutations are drawn up front from the single stream so the result does not
  // depend on how replicates are scheduled across threads.
  std::vector<std::vector<std::size_t>> perms;
  perms.reserve(J);
  for (std::size_t j = 0; j < J; ++j) perms.push_back(random_permutation(n, rng));

  std::vector<double> T(J);
  const unsigned workers = threads == 0 ? 0 : std::max(1u, threads);
  std::vector<BinSpearman::Scratch> scratches;
  const std::size_t chunks = std::min<std::size_t>(J, workers == 0 ? 64 : workers);
  for (std::size_t c = 0; c < chunks; ++c) scratches.push_back(spearman.scratch());
  parallel_for(chunks, workers, [&](std::size_t c) {
    std::vector<std::size_t> bin_of(n);
    auto& s = scratches[c];
    for (std::size_t j = c; j < J; j += chunks) {
      // Observation i joins the bin that position lambda_j(i) belongs to.
      for (std::size_t i = 0; i < n; ++i) bin_of[i] = bins.labels[perms[j][i]];
      T[j] = range_of(spearman.compute(bin_of, s));
    }
  });

  std::size_t exceed = 0;
  for (double t : T)
    if (t >= res.statistic) ++exceed;
  res.p_value = static_cast<double>(1 + exceed) / static_cast<double>(J + 1);

  std::vector<double> sorted = T;
  std::sort(sorted.begin(), sorted.end());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(J) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, J);
  res.critical_value = sorted[rank - 1];
  res.reject = res.statistic > res.critical_value;
  return res;
}

ChisqStatistic chisq_statistic(std::span<const double> rho, std::size_t n_tilde) {
  const auto K = rho.size();
  if (K < 2) throw ParameterError("chisq_statistic: need at least 2 bins");
  std::vector<double> v(K);
  bool floored = false;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(std::abs(rho[k]) <= 1.0)) throw DomainError("chisq_statistic: correlations must lie in [-1, 1]");
    const double s = 1.0 - rho[k] * rho[k];
    v[k] = s * s;
    if (std::abs(rho[k]) > 1.0 - 1e-6) {
      floored = true;
      v[k] = std::max(v[k], kVarianceFloor);
    }
  }
  // A Sigma A^T is tridiagonal: diagonal v_k + v_{k+1}, off-diagonal -v_{k+1}. Thomas algorithm.
  const std::size_t m = K - 1;
  std::vector<double> diag(m), upper(m), rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    diag[i] = v[i] + v[i + 1];
    upper[i] = -v[i + 1];
    rhs[i] = rho[i] - rho[i + 1];
  }
  std::vector<double> c(m), dd(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double lower = i > 0 ? upper[i - 1] : 0.0;
    const double pivot = diag[i] - (i > 0 ? lower * c[i - 1] : 0.0);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) throw ProcedureError("chisq_statistic: singular contrast covariance");
    c[i] = upper[i] / pivot;
    dd[i] = (rhs[i] - (i > 0 ? lower * dd[i - 1] : 0.0)) / pivot;
  }
  std::vector<double> x(m);
  for (std::size_t i = m; i-- > 0;) x[i] = dd[i] - (i + 1 < m ? c[i] * x[i + 1] : 0.0);
  double quad = 0.0;
  for (std::size_t i = 0; i < m; ++i) quad += rhs[i] * x[i];
  return {static_cast<double>(n_tilde) * quad, floored};
}

TestResult chisq_test(std::span<const UnitPair> U, std::span<const double> eta_hat, std::size_t K, double alpha) {
  check_aligned(U, eta_hat.size(), "chisq_test");
  return chisq_test(U, assign_bins(eta_hat, K, kMinChisqBin), alpha);
}

TestResult chisq_test(std::span<const UnitPair> U, const BinAssignment& bins, double alpha) {
  check_aligned(U, bins.labels.size(), "chisq_test");
  check_alpha(alpha);
  const auto K = bins.K;
  for (auto s : bins.sizes)
    if (s < kMinChisqBin) throw ProcedureError("chisq_test: every bin needs at least 20 observations");

  std::vector<std::vector<UnitPair>> members(K);
  for (std::size_t i = 0; i < U.size(); ++i) members[bins.labels[i]].push_back(U[i]);
  TestResult res{TestMethod::ChiSquare, 0.0, 1.0, K, alpha, false, {}, bins.sizes, 0, 0.0, {}};
  for (const auto& m : members) {
    const auto c = pearson_rho(m);
    res.per_bin_rho.push_back(c.rho);
    if (c.degenerate && res.flags.empty()) res.flags.emplace_back("degenerate_bin");
  }
  const std::size_t n_tilde = U.size() / K;
  const auto stat = chisq_statistic(res.per_bin_rho, n_tilde);
  if (stat.variance_floored) res.flags.emplace_back("variance_floored");
  res.statistic = stat.value;
  const int dof = static_cast<int>(K) - 1;
  res.p_value = chisq_sf(res.statistic, dof);
  res.critical_value =
      boost::math::quantile(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), alpha));
  res.reject = res.p_value < alpha;
  return res;
}

}  // namespace sacheck
