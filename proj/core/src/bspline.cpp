#include "sacheck/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "sacheck/error.hpp"

namespace sacheck {

CubicBSpline::CubicBSpline(double lo, double hi, int interior_knots)
    : lo_(lo), hi_(hi), interior_(interior_knots) {
  if (interior_knots < 0) throw ParameterError("CubicBSpline: negative knot count");
  if (!(hi > lo)) {
    // Degenerate range: widen symmetrically so the basis stays well defined.
    const double pad = std::max(1e-8, 1e-8 * std::abs(lo));
    lo_ = lo - pad;
    hi_ = lo + pad;
  }
  step_ = (hi_ - lo_) / (interior_ + 1);
}

// Extended knot vector t_0..t_{n+3}: four copies of lo, interior knots, four copies of hi.
double CubicBSpline::knot(int i) const noexcept {
  if (i < kOrder) return lo_;
  if (i >= interior_ + kOrder) return hi_;
  return lo_ + step_ * (i - kOrder + 1);
}

CubicBSpline::Local CubicBSpline::evaluate(double z) const noexcept {
  const bool outside = z < lo_ || z > hi_;
  const double x = std::clamp(z, lo_, hi_);
  // Knot span index mu with t_mu <= x < t_{mu+1}; the last span is closed on the right.
  int span = static_cast<int>(std::floor((x - lo_) / step_));
  span = std::clamp(span, 0, interior_);
  const int mu = span + kOrder - 1;

  // de Boor / Cox recursion for the order-3 (quadratic) values, then cubic values and derivatives.
  std::array<double, kOrder> N{};
  N[0] = 1.0;
  std::array<double, kOrder - 1> quad{};
  for (int k = 1; k < kOrder; ++k) {
    std::array<double, kOrder> next{};
    for (int r = 0; r < k; ++r) {
      // N[r] is B_{i,k-1}; it feeds B_{i,k} (slot r+1) and B_{i-1,k} (slot r).
      const int i = mu - k + 1 + r;
      const double denom = knot(i + k) - knot(i);
      if (denom > 0) {
        next[r + 1] += (x - knot(i)) / denom * N[r];
        next[r] += (knot(i + k) - x) / denom * N[r];
      }
    }
    if (k == kOrder - 1)
      for (int r = 0; r < kOrder - 1; ++r) quad[r] = N[r];
    N = next;
  }

  Local out{};
  out.first = mu - (kOrder - 1);
  out.value = N;
  if (!outside) {
    // B'_{i,3}(x) = 3 [ B_{i,2}/(t_{i+3}-t_i) - B_{i+1,2}/(t_{i+4}-t_{i+1}) ]
    for (int r = 0; r < kOrder; ++r) {
      const int i = out.first + r;
      double d = 0.0;
      const double a = knot(i + 3) - knot(i);
      const double b = knot(i + 4) - knot(i + 1);
      const double lower = r >= 1 ? quad[r - 1] : 0.0;  // B_{i,2}
      const double upper = r < kOrder - 1 ? quad[r] : 0.0;  // B_{i+1,2}
      if (a > 0) d += lower / a;
      if (b > 0) d -= upper / b;
      out.derivative[r] = 3.0 * d;
    }
  }
  return out;
}

Eigen::VectorXd CubicBSpline::row(double z) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(size());
  const auto local = evaluate(z);
  for (int k = 0; k < kOrder; ++k) r[local.first + k] = local.value[static_cast<std::size_t>(k)];
  return r;
}

double CubicBSpline::value(const Eigen::VectorXd& coef, double z) const noexcept {
  const auto local = evaluate(z);
  double s = 0.0;
  for (int k = 0; k < kOrder; ++k) s += coef[local.first + k] * local.value[static_cast<std::size_t>(k)];
  return s;
}

double CubicBSpline::derivative(const Eigen::VectorXd& coef, double z) const noexcept {
  const auto local = evaluate(z);
  double s = 0.0;
  for (int k = 0; k < kOrder; ++k) s += coef[local.first + k] * local.derivative[static_cast<std::size_t>(k)];
  return s;
}

Eigen::MatrixXd CubicBSpline::difference_penalty(int order) const {
  const int n = size();
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(n, n);
  for (int o = 0; o < order; ++o) {
    Eigen::MatrixXd next(D.rows() - 1, n);
    for (Eigen::Index r = 0; r + 1 < D.rows(); ++r) next.row(r) = D.row(r + 1) - D.row(r);
    D = next;
  }
  return D.transpose() * D;
}

}  // namespace sacheck
