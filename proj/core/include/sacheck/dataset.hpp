#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace sacheck {

/// n observations of (x in R^q, y1, y2).
struct Dataset {
  Eigen::MatrixXd X;  ///< n x q, row i is x_i
  std::vector<double> y1;
  std::vector<double> y2;

  std::size_t size() const noexcept { return y1.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(X.cols()); }

  /// Throws ProcedureError on inconsistent shapes or non-finite values.
  void validate() const;

  /// Rows selected by index (duplicates allowed, as for bootstrap resamples).
  Dataset subset(std::span<const std::size_t> rows) const;
};

}  // namespace sacheck
