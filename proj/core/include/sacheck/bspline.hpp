#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>

namespace sacheck {

/// Cubic B-spline basis on [lo, hi] with equally spaced interior knots and
/// clamped (4-fold) boundary knots. Arguments outside [lo, hi] are clamped,
/// so the spline extends as a constant beyond the observed range.
class CubicBSpline {
 public:
  static constexpr int kOrder = 4;

  CubicBSpline(double lo, double hi, int interior_knots);

  int size() const noexcept { return interior_ + kOrder; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// The kOrder basis functions that can be non-zero at z.
  struct Local {
    int first;  ///< index of the first non-zero basis function
    std::array<double, kOrder> value;
    std::array<double, kOrder> derivative;  ///< d/dz; zero outside [lo, hi]
  };

  Local evaluate(double z) const noexcept;

  /// Dense row of basis values (mainly for tests).
  Eigen::VectorXd row(double z) const;

  /// sum_k coef[k] B_k(z)
  double value(const Eigen::VectorXd& coef, double z) const noexcept;
  double derivative(const Eigen::VectorXd& coef, double z) const noexcept;

  /// D^T D for the order-`order` difference operator on the coefficients.
  Eigen::MatrixXd difference_penalty(int order) const;

 private:
  double knot(int i) const noexcept;

  double lo_;
  double hi_;
  int interior_;
  double step_;
};

}  // namespace sacheck
