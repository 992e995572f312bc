#pragma once

#include <nlohmann/json.hpp>

#include "sacheck/calibration.hpp"
#include "sacheck/dataset.hpp"
#include "sacheck/marginal.hpp"
#include "sacheck/sa_tests.hpp"

namespace sacheck::cli {

nlohmann::json to_json(const TestResult& r);
nlohmann::json to_json(const SaCheckDiagnostics& d);
nlohmann::json margin_json(const MarginalFit& m, const char* response);
nlohmann::json calibration_json(const CalibrationFit& fit);

/// Calibration predictions on a covariate grid spanning the observed ranges:
/// a 5-point product grid for q <= 2, otherwise 9 points along each axis with
/// the other coordinates at their column means.
nlohmann::json eta_grid_json(const CalibrationFit& fit, const Eigen::MatrixXd& X);

}  // namespace sacheck::cli
