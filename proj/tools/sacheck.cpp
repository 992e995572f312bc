// sacheck: simulate datasets, fit conditional copula models, test the
// simplifying assumption, and run rejection-rate benchmarks.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "reports.hpp"
#include "sacheck/bench.hpp"
#include "sacheck/csv.hpp"
#include "sacheck/error.hpp"
#include "sacheck/scenario.hpp"

namespace {

using json = nlohmann::json;
using namespace sacheck;

constexpr int kExitProcedure = 1;
constexpr int kExitIo = 2;
constexpr std::size_t kSmallSampleWarning = 100;

// Rejects names the library parser does not know, so they surface as parse errors.
template <typename Parse>
CLI::Validator known(Parse parse, const std::string& what) {
  return CLI::Validator(
      [parse](std::string& value) {
        try {
          parse(value);
          return std::string();
        } catch (const Error& e) {
          return std::string(e.what());
        }
      },
      what);
}

struct Options {
  std::uint64_t seed = 0;
  std::string input;
  std::string out;
  // simulate
  std::string scenario = "sc1";
  std::size_t n = 500;
  double beta = Scenario::kDefaultBeta;
  int pad = 0;
  bool clip = false;
  // fit / test-sa
  std::size_t K = 3;
  std::size_t J = 500;
  double alpha = 0.05;
  double split = 0.65;
  std::string backend = "single_index";
  unsigned threads = 1;
  // bench
  std::vector<std::string> scenarios{"sc1"};
  std::vector<std::size_t> sizes{500};
  std::vector<std::string> methods{"permutation", "chisq"};
  std::vector<std::size_t> Ks{2, 3};
  std::size_t replicates = 100;
  std::size_t draws = 50;
  std::string csv;
  std::string json_out;
  std::string checkpoint;
};

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path + " failed");
}

Dataset load(const std::string& path) {
  Dataset d = read_dataset_csv(path);
  if (d.size() < kSmallSampleWarning)
    std::cerr << "warning: " << d.size() << " rows; at least " << kSmallSampleWarning
              << " are recommended for the split-sample tests\n";
  return d;
}

int cmd_simulate(const Options& o) {
  const Scenario sc(parse_scenario(o.scenario), o.beta, o.pad, o.clip);
  if (sc.clipped()) std::cerr << "warning: Kendall's tau clipped to (0.01, 0.99) for beta " << o.beta << "\n";
  Rng rng = Rng::substream(o.seed, {stream_key("simulate")});
  const Dataset d = sc.generate(o.n, rng);
  if (o.out.empty() || o.out == "-") {
    write_dataset_csv(std::cout, d);
  } else {
    write_dataset_csv(o.out, d);
  }
  return 0;
}

int cmd_fit(const Options& o, const std::vector<std::string>& args) {
  const Dataset d = load(o.input);
  const auto m1 = MarginalFit::fit(d.X, d.y1);
  const auto m2 = MarginalFit::fit(d.X, d.y2);
  const auto u1 = m1.training_pit();
  const auto u2 = m2.training_pit();
  std::vector<UnitPair> pairs(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) pairs[i] = {u1[i], u2[i]};

  const auto backend = parse_backend(o.backend);
  std::optional<CalibrationFit> fit;
  switch (backend) {
    case CalibrationBackend::Constant: fit.emplace(fit_constant(pairs)); break;
    case CalibrationBackend::LocalLikelihood: fit.emplace(fit_local_likelihood(d.X, pairs)); break;
    case CalibrationBackend::SingleIndex: {
      SingleIndexConfig cfg;
      cfg.seed = Rng::substream(o.seed, {stream_key("calibration")}).seed();
      fit.emplace(fit_single_index(d.X, pairs, cfg));
      break;
    }
  }
  json report{{"command", "fit"},
              {"args", args},
              {"input", o.input},
              {"seed", o.seed},
              {"config", {{"backend", to_string(backend)}}},
              {"n", d.size()},
              {"q", d.dim()},
              {"margins", {cli::margin_json(m1, "y1"), cli::margin_json(m2, "y2")}},
              {"calibration", cli::calibration_json(*fit)},
              {"eta_grid", cli::eta_grid_json(*fit, d.X)}};
  write_text(o.out, report.dump(2) + "\n");
  return 0;
}

int cmd_test_sa(const Options& o, const std::vector<std::string>& args) {
  const Dataset d = load(o.input);
  SaCheckConfig cfg;
  cfg.train_fraction = o.split;
  cfg.K = o.K;
  cfg.J = o.J;
  cfg.alpha = o.alpha;
  cfg.backend = parse_backend(o.backend);
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  const auto report = run_sa_check(d, cfg);
  json out{{"command", "test-sa"},
           {"args", args},
           {"input", o.input},
           {"seed", o.seed},
           {"config",
            {{"k", o.K},
             {"j", o.J},
             {"alpha", o.alpha},
             {"split", o.split},
             {"backend", to_string(cfg.backend)},
             {"threads", o.threads}}},
           {"n", d.size()},
           {"method1", cli::to_json(report.method1)},
           {"method2", cli::to_json(report.method2)},
           {"diagnostics", cli::to_json(report.diagnostics)}};
  write_text(o.out, out.dump(2) + "\n");
  return 0;
}

int cmd_bench(const Options& o) {
  BenchConfig cfg;
  cfg.scenarios.clear();
  for (const auto& s : o.scenarios) cfg.scenarios.push_back(parse_scenario(s));
  cfg.sizes = o.sizes;
  cfg.methods.clear();
  for (const auto& m : o.methods) cfg.methods.push_back(parse_bench_method(m));
  cfg.Ks = o.Ks;
  cfg.replicates = o.replicates;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  cfg.beta = o.beta;
  cfg.padding = o.pad;
  cfg.sa.train_fraction = o.split;
  cfg.sa.J = o.J;
  cfg.sa.alpha = o.alpha;
  cfg.sa.backend = parse_backend(o.backend);
  cfg.draws = o.draws;
  if (!o.checkpoint.empty()) cfg.checkpoint = o.checkpoint;

  const auto results = run_bench(cfg);
  const auto csv = bench_csv(results);
  if (!o.csv.empty()) write_text(o.csv, csv);
  if (!o.json_out.empty()) write_text(o.json_out, bench_json(results, cfg));
  if (o.csv.empty() && o.json_out.empty()) write_text("-", csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional copula simplifying-assumption checks"};
  app.require_subcommand(1);
  Options o;
  std::vector<std::string> args(argv + 1, argv + argc);

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", o.seed, "Root seed for every random stream"); };
  auto add_test_flags = [&](CLI::App* c) {
    c->add_option("--k", o.K, "Number of equal-frequency bins")->check(CLI::Range(2, 1000));
    c->add_option("--j", o.J, "Permutations for the permutation test");
    c->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    c->add_option("--split", o.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
    c->add_option("--backend", o.backend, "constant | local | single_index")->check(known(parse_backend, "BACKEND"));
    c->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  };

  auto* sim = app.add_subcommand("simulate", "Generate a scenario dataset as CSV");
  sim->add_option("--scenario", o.scenario, "sc1 | sc2 | sc3")->check(known(parse_scenario, "SCENARIO"));
  sim->add_option("--n", o.n, "Number of rows")->check(CLI::PositiveNumber);
  sim->add_option("--beta", o.beta, "Deviation scale for sc2 and sc3");
  sim->add_option("--pad", o.pad, "Extra irrelevant uniform covariates")->check(CLI::NonNegativeNumber);
  sim->add_flag("--clip", o.clip, "Clip Kendall's tau into (0.01, 0.99) instead of failing");
  sim->add_option("--out", o.out, "Output CSV path (default: standard output)");
  add_seed(sim);

  auto* fit = app.add_subcommand("fit", "Fit margins and a calibration function; report a JSON summary");
  fit->add_option("input", o.input, "Dataset CSV")->required();
  fit->add_option("--backend", o.backend, "constant | local | single_index")->check(known(parse_backend, "BACKEND"));
  fit->add_option("--out", o.out, "Output JSON path (default: standard output)");
  add_seed(fit);

  auto* test = app.add_subcommand("test-sa", "Run both simplifying-assumption tests; report JSON");
  test->add_option("input", o.input, "Dataset CSV")->required();
  add_test_flags(test);
  test->add_option("--out", o.out, "Output JSON path (default: standard output)");
  add_seed(test);

  auto* bench = app.add_subcommand("bench", "Rejection-rate tables over replicated scenario datasets");
  bench->add_option("--scenario", o.scenarios, "Scenarios")->delimiter(',')->check(known(parse_scenario, "SCENARIO"));
  bench->add_option("--n", o.sizes, "Sample sizes")->delimiter(',');
  bench->add_option("--method", o.methods, "permutation, chisq, cvml, ccvml, waic")
      ->delimiter(',')
      ->check(known(parse_bench_method, "METHOD"));
  bench->add_option("--k", o.Ks, "Bin counts for the binned tests")->delimiter(',');
  bench->add_option("--replicates", o.replicates, "Replicates per cell (at least 10)");
  bench->add_option("--draws", o.draws, "Bootstrap draws per model for the criteria");
  bench->add_option("--j", o.J, "Permutations for the permutation test");
  bench->add_option("--alpha", o.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--split", o.split, "Training fraction")->check(CLI::Range(0.0, 1.0));
  bench->add_option("--backend", o.backend, "constant | local | single_index")->check(known(parse_backend, "BACKEND"));
  bench->add_option("--beta", o.beta, "Deviation scale for sc2 and sc3");
  bench->add_option("--pad", o.pad, "Extra irrelevant uniform covariates")->check(CLI::NonNegativeNumber);
  bench->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  bench->add_option("--csv", o.csv, "CSV table path");
  bench->add_option("--json", o.json_out, "JSON table path");
  bench->add_option("--checkpoint", o.checkpoint, "JSON-lines replicate checkpoint (resumable)");
  add_seed(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitIo;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*fit) return cmd_fit(o, args);
    if (*test) return cmd_test_sa(o, args);
    if (*bench) return cmd_bench(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProcedure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitProcedure;
  }
  return kExitProcedure;
}
