#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sacheck/sa_tests.hpp"
#include "sacheck/scenario.hpp"

namespace sacheck {

enum class BenchMethod { Permutation, ChiSquare, Cvml, Ccvml, Waic };

std::string_view to_string(BenchMethod m) noexcept;
/// "permutation", "chisq", "cvml", "ccvml", "waic".
BenchMethod parse_bench_method(std::string_view name);
/// Methods that run the binned tests and take a K value.
bool uses_bins(BenchMethod m) noexcept;

struct BenchConfig {
  std::vector<ScenarioId> scenarios{ScenarioId::Sc1};
  std::vector<std::size_t> sizes{500};
  std::vector<BenchMethod> methods{BenchMethod::Permutation, BenchMethod::ChiSquare};
  std::vector<std::size_t> Ks{2, 3};
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double beta = Scenario::kDefaultBeta;
  int padding = 0;
  /// K, seed and threads in here are ignored; the bench sets them per replicate.
  SaCheckConfig sa{};
  std::size_t draws = 50;  ///< bootstrap draws per model for the generic criteria
  std::optional<std::filesystem::path> checkpoint;
  double max_failure_fraction = 0.05;
};

/// One table cell. rejections / replicates is the rejection rate; failed replicates are excluded.
struct BenchResult {
  ScenarioId scenario;
  std::size_t n;
  BenchMethod method;
  std::optional<std::size_t> K;
  std::size_t replicates;
  std::size_t rejections;
  std::size_t failures;
  double reject_rate;
  double se;  ///< binomial standard error sqrt(p (1 - p) / replicates)
};

/// Rejection-rate table over the scenario x size x method x K grid. Each replicate
/// draws from a substream keyed by (scenario, n, replicate), so the table does not
/// depend on the thread count. With a checkpoint path, completed replicates are
/// appended as JSON lines and reused on the next call with the same configuration.
///
/// Throws ProcedureError when any cell has more than max_failure_fraction failed replicates.
std::vector<BenchResult> run_bench(const BenchConfig& config);

/// Header "scenario,n,method,K,replicates,reject_rate,se" plus one row per cell.
std::string bench_csv(const std::vector<BenchResult>& results);
std::string bench_json(const std::vector<BenchResult>& results, const BenchConfig& config);

/// Hex digest of every field that affects replicate outcomes.
std::string config_fingerprint(const BenchConfig& config);

}  // namespace sacheck
