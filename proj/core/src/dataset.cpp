#include "sacheck/dataset.hpp"

#include <cmath>

#include "sacheck/error.hpp"

namespace sacheck {

void Dataset::validate() const {
  const auto n = size();
  if (n == 0) throw ProcedureError("dataset is empty");
  if (y2.size() != n || static_cast<std::size_t>(X.rows()) != n)
    throw ProcedureError("dataset columns have inconsistent lengths");
  if (X.cols() == 0) throw ProcedureError("dataset has no covariates");
  if (!X.allFinite()) throw ProcedureError("covariates must be finite");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(y1[i]) || !std::isfinite(y2[i])) throw ProcedureError("responses must be finite");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.y1.reserve(rows.size());
  out.y2.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(i));
    out.y1.push_back(y1[i]);
    out.y2.push_back(y2[i]);
  }
  return out;
}

}  // namespace sacheck
