#pragma once

#include <cmath>
#include <vector>

#include "sacheck/copula.hpp"
#include "sacheck/scenario.hpp"
#include "sacheck/special.hpp"

namespace fixture {

// PIT pairs computed from the scenario's true means and standard deviations.
inline std::vector<sacheck::UnitPair> true_pits(const sacheck::Scenario& s, const sacheck::Dataset& d) {
  std::vector<sacheck::UnitPair> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto x = d.X.row(static_cast<Eigen::Index>(i));
    out[i] = {sacheck::gaussian_cdf((d.y1[i] - s.mean1(x)) / s.sigma1()),
              sacheck::gaussian_cdf((d.y2[i] - s.mean2(x)) / s.sigma2())};
  }
  return out;
}

inline double true_eta(const sacheck::Scenario& s, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return std::log(sacheck::tau_to_theta(s.tau(x)).theta());
}

}  // namespace fixture
