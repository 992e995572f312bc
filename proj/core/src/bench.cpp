#include "sacheck/bench.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sacheck/error.hpp"
#include "sacheck/model_select.hpp"
#include "sacheck/parallel.hpp"

namespace sacheck {

namespace {

using json = nlohmann::json;

// Outcome per method key: 1 reject, 0 accept, -1 failed.
using Outcomes = std::map<std::string, int>;

std::string method_key(BenchMethod m, std::optional<std::size_t> K) {
  std::string key(to_string(m));
  if (K) key += ":" + std::to_string(*K);
  return key;
}

std::string replicate_key(ScenarioId s, std::size_t n, std::size_t r) {
  return std::string(to_string(s)) + "/" + std::to_string(n) + "/" + std::to_string(r);
}

struct Task {
  ScenarioId scenario;
  std::size_t n;
  std::size_t replicate;
};

bool wants(const BenchConfig& cfg, BenchMethod m) {
  for (auto x : cfg.methods)
    if (x == m) return true;
  return false;
}

Outcomes run_replicate(const BenchConfig& cfg, const Scenario& scenario, const Task& task) {
  const Rng root = Rng::substream(cfg.seed, {stream_key("replicate"), stream_key(to_string(task.scenario)),
                                             static_cast<std::uint64_t>(task.n),
                                             static_cast<std::uint64_t>(task.replicate)});
  Rng data_rng = root.derive({stream_key("data")});
  const Dataset data = scenario.generate(task.n, data_rng);
  Outcomes out;

  const bool perm = wants(cfg, BenchMethod::Permutation);
  const bool chisq = wants(cfg, BenchMethod::ChiSquare);
  if (perm || chisq) {
    SaCheckConfig sa = cfg.sa;
    sa.seed = root.derive({stream_key("sa")}).seed();
    sa.threads = 1;
    std::optional<PreparedTestSet> prepared;
    try {
      prepared = prepare_sa_check(data, sa);
    } catch (const Error&) {
    }
    for (auto K : cfg.Ks) {
      int r1 = -1, r2 = -1;
      if (prepared) {
        sa.K = K;
        try {
          const auto report = run_sa_tests(*prepared, sa);
          r1 = report.method1.reject ? 1 : 0;
          r2 = report.method2.reject ? 1 : 0;
        } catch (const Error&) {
        }
      }
      if (perm) out[method_key(BenchMethod::Permutation, K)] = r1;
      if (chisq) out[method_key(BenchMethod::ChiSquare, K)] = r2;
    }
  }

  const bool cv = wants(cfg, BenchMethod::Cvml);
  const bool ccv = wants(cfg, BenchMethod::Ccvml);
  const bool wa = wants(cfg, BenchMethod::Waic);
  if (cv || ccv || wa) {
    JointModelOptions opts;
    opts.full_backend = cfg.sa.backend;
    opts.single_index = cfg.sa.single_index;
    int rc = -1, rcc = -1, rw = -1;
    try {
      const auto cmp = compare_full_reduced(data, cfg.draws, root.derive({stream_key("criteria")}).seed(), opts);
      rc = cmp.cvml_prefers_full();
      rcc = cmp.ccvml_prefers_full();
      rw = cmp.waic_prefers_full();
    } catch (const Error&) {
    }
    if (cv) out[method_key(BenchMethod::Cvml, std::nullopt)] = rc;
    if (ccv) out[method_key(BenchMethod::Ccvml, std::nullopt)] = rcc;
    if (wa) out[method_key(BenchMethod::Waic, std::nullopt)] = rw;
  }
  return out;
}

class Checkpoint {
 public:
  Checkpoint(const std::filesystem::path& path, const std::string& fingerprint) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw IoError("cannot create checkpoint " + path.string());
      out << json{{"fingerprint", fingerprint}}.dump() << '\n';
      return;
    }
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    needs_newline_ = !content.empty() && content.back() != '\n';
    std::istringstream lines(content);
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      const auto j = json::parse(line, nullptr, false);
      if (header) {
        if (j.is_discarded() || !j.contains("fingerprint") || j["fingerprint"] != fingerprint)
          throw ParameterError("checkpoint " + path.string() + " was written by a different configuration");
        header = false;
        continue;
      }
      // A torn final line from an interrupted run is skipped.
      if (j.is_discarded() || !j.contains("key") || !j.contains("outcomes")) continue;
      done_[j["key"].get<std::string>()] = j["outcomes"].get<Outcomes>();
    }
    if (header) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      out << json{{"fingerprint", fingerprint}}.dump() << '\n';
      needs_newline_ = false;
    }
  }

  const Outcomes* find(const std::string& key) const {
    const auto it = done_.find(key);
    return it == done_.end() ? nullptr : &it->second;
  }

  void append(const std::string& key, const Outcomes& outcomes) {
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to checkpoint " + path_.string());
    if (needs_newline_) {
      out << '\n';
      needs_newline_ = false;
    }
    out << json{{"key", key}, {"outcomes", outcomes}}.dump() << '\n';
    out.flush();
  }

 private:
  std::filesystem::path path_;
  std::map<std::string, Outcomes> done_;
  std::mutex mutex_;
  bool needs_newline_ = false;
};

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string_view to_string(BenchMethod m) noexcept {
  switch (m) {
    case BenchMethod::Permutation: return "permutation";
    case BenchMethod::ChiSquare: return "chisq";
    case BenchMethod::Cvml: return "cvml";
    case BenchMethod::Ccvml: return "ccvml";
    case BenchMethod::Waic: return "waic";
  }
  return "?";
}

BenchMethod parse_bench_method(std::string_view name) {
  for (auto m : {BenchMethod::Permutation, BenchMethod::ChiSquare, BenchMethod::Cvml, BenchMethod::Ccvml,
                 BenchMethod::Waic})
    if (name == to_string(m)) return m;
  if (name == "method1") return BenchMethod::Permutation;
  if (name == "method2" || name == "chi-square") return BenchMethod::ChiSquare;
  throw ParameterError("unknown bench method '" + std::string(name) + "'");
}

bool uses_bins(BenchMethod m) noexcept { return m == BenchMethod::Permutation || m == BenchMethod::ChiSquare; }

std::string config_fingerprint(const BenchConfig& c) {
  json j;
  std::vector<std::string> sc, me;
  for (auto s : c.scenarios) sc.emplace_back(to_string(s));
  for (auto m : c.methods) me.emplace_back(to_string(m));
  j["version"] = 1;
  j["scenarios"] = sc;
  j["sizes"] = c.sizes;
  j["methods"] = me;
  j["K"] = c.Ks;
  j["seed"] = c.seed;
  j["beta"] = c.beta;
  j["padding"] = c.padding;
  j["split"] = c.sa.train_fraction;
  j["J"] = c.sa.J;
  j["alpha"] = c.sa.alpha;
  j["backend"] = std::string(to_string(c.sa.backend));
  j["draws"] = c.draws;
  const auto digest = stream_key(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

std::vector<BenchResult> run_bench(const BenchConfig& cfg) {
  if (cfg.replicates < 10) throw ParameterError("run_bench: need at least 10 replicates");
  if (cfg.scenarios.empty() || cfg.sizes.empty() || cfg.methods.empty())
    throw ParameterError("run_bench: empty scenario, size or method list");
  bool any_binned = false;
  for (auto m : cfg.methods) any_binned |= uses_bins(m);
  if (any_binned && cfg.Ks.empty()) throw ParameterError("run_bench: binned methods need at least one K");

  std::map<ScenarioId, Scenario> scenarios;
  for (auto s : cfg.scenarios) scenarios.try_emplace(s, s, cfg.beta, cfg.padding);

  std::vector<Task> tasks;
  for (auto s : cfg.scenarios)
    for (auto n : cfg.sizes)
      for (std::size_t r = 0; r < cfg.replicates; ++r) tasks.push_back({s, n, r});

  std::optional<Checkpoint> checkpoint;
  if (cfg.checkpoint) checkpoint.emplace(*cfg.checkpoint, config_fingerprint(cfg));

  std::vector<Outcomes> outcomes(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    const auto& t = tasks[i];
    const auto key = replicate_key(t.scenario, t.n, t.replicate);
    if (checkpoint) {
      if (const auto* prior = checkpoint->find(key)) {
        outcomes[i] = *prior;
        return;
      }
    }
    outcomes[i] = run_replicate(cfg, scenarios.at(t.scenario), t);
    if (checkpoint) checkpoint->append(key, outcomes[i]);
  });

  std::vector<BenchResult> results;
  std::string worst;
  for (auto s : cfg.scenarios) {
    for (auto n : cfg.sizes) {
      for (auto m : cfg.methods) {
        std::vector<std::optional<std::size_t>> ks;
        if (uses_bins(m))
          ks.assign(cfg.Ks.begin(), cfg.Ks.end());
        else
          ks.emplace_back(std::nullopt);
        for (auto K : ks) {
          const auto key = method_key(m, K);
          BenchResult cell{s, n, m, K, 0, 0, 0, 0.0, 0.0};
          for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].scenario != s || tasks[i].n != n) continue;
            const auto it = outcomes[i].find(key);
            const int v = it == outcomes[i].end() ? -1 : it->second;
            if (v < 0) {
              ++cell.failures;
            } else {
              ++cell.replicates;
              cell.rejections += static_cast<std::size_t>(v);
            }
          }
          if (cell.replicates > 0) {
            const double p = double(cell.rejections) / double(cell.replicates);
            cell.reject_rate = p;
            cell.se = std::sqrt(p * (1.0 - p) / double(cell.replicates));
          }
          if (double(cell.failures) > cfg.max_failure_fraction * double(cfg.replicates) && worst.empty())
            worst = std::string(to_string(s)) + " n=" + std::to_string(n) + " " + key + ": " +
                    std::to_string(cell.failures) + " of " + std::to_string(cfg.replicates) + " replicates failed";
          results.push_back(cell);
        }
      }
    }
  }
  if (!worst.empty()) throw ProcedureError(worst, "bench");
  return results;
}

std::string bench_csv(const std::vector<BenchResult>& results) {
  std::string out = "scenario,n,method,K,replicates,reject_rate,se\n";
  for (const auto& r : results) {
    out += std::string(to_string(r.scenario)) + "," + std::to_string(r.n) + "," + std::string(to_string(r.method)) +
           "," + (r.K ? std::to_string(*r.K) : std::string()) + "," + std::to_string(r.replicates) + "," +
           format_rate(r.reject_rate) + "," + format_rate(r.se) + "\n";
  }
  return out;
}

std::string bench_json(const std::vector<BenchResult>& results, const BenchConfig& c) {
  json rows = json::array();
  for (const auto& r : results) {
    json row{{"scenario", to_string(r.scenario)},
             {"n", r.n},
             {"method", to_string(r.method)},
             {"K", r.K ? json(*r.K) : json(nullptr)},
             {"replicates", r.replicates},
             {"rejections", r.rejections},
             {"failures", r.failures},
             {"reject_rate", r.reject_rate},
             {"se", r.se}};
    rows.push_back(std::move(row));
  }
  std::vector<std::string> sc, me;
  for (auto s : c.scenarios) sc.emplace_back(to_string(s));
  for (auto m : c.methods) me.emplace_back(to_string(m));
  json config{{"scenarios", sc},
              {"n", c.sizes},
              {"methods", me},
              {"k", c.Ks},
              {"replicates", c.replicates},
              {"seed", c.seed},
              {"beta", c.beta},
              {"pad", c.padding},
              {"split", c.sa.train_fraction},
              {"j", c.sa.J},
              {"alpha", c.sa.alpha},
              {"backend", to_string(c.sa.backend)},
              {"draws", c.draws},
              {"fingerprint", config_fingerprint(c)}};
  json out{{"command", "bench"},
           {"config", config},
           {"conventions", {{"cvml", "larger is better"}, {"ccvml", "larger is better"}, {"waic", "smaller is better"},
                            {"reject", "criterion prefers the full model, or the test rejects"}}},
           {"results", rows}};
  return out.dump(2) + "\n";
}

}  // namespace sacheck
