#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmassoc/config_io.hpp"
#include "mmassoc/engine.hpp"
#include "mmassoc/metrics_io.hpp"
#include "mmassoc/snapshot_io.hpp"

namespace mmassoc {

struct RunOutput {
  MetricsSeries series;
  std::optional<nlohmann::json> snapshot;  // learner policies only
};

inline RunOutput execute_run(const SimConfig& cfg) {
  Simulation sim(cfg);
  RunOutput out;
  auto& s = out.series;
  s.policy = std::string(to_string(cfg.policy));
  s.seed = cfg.seed;
  s.config_hash = config_hash(cfg);
  s.oracle_csi = oracle_csi_label(cfg.policy);
  s.dt = cfg.dt;
#ifdef MMASSOC_VERSION
  s.build_version = MMASSOC_VERSION;
#endif
  s.records.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int t = 0; t < cfg.horizon; ++t) s.records.push_back(sim.run_period());
  if (sim.tables()) out.snapshot = export_snapshot(*sim.tables(), collect_agents(sim));
  return out;
}

inline std::string run_stem(const std::string& policy, std::uint64_t seed) {
  return policy + "_seed" + std::to_string(seed);
}

/// Writes <stem>.csv, <stem>.meta.json and, for learners, <stem>.snapshot.json.
inline void write_run(const RunOutput& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto stem = run_stem(run.series.policy, run.series.seed);
  write_metrics(run.series, dir / (stem + ".csv"));
  write_json_file(metrics_meta(run.series), dir / (stem + ".meta.json"));
  if (run.snapshot) write_json_file(*run.snapshot, dir / (stem + ".snapshot.json"));
}

/// Worker count for sweeps: SIM_THREADS if set, else the hardware count.
inline unsigned sweep_threads(std::size_t tasks) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SIM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::clamp<std::size_t>(tasks, 1, n));
}

/// Runs every config on a small worker pool; results keep the input order.
/// `sink` (if any) is called from the worker that finished the run.
template <class Sink>
std::vector<RunOutput> run_many(const std::vector<SimConfig>& cfgs, unsigned threads, Sink&& sink) {
  std::vector<RunOutput> out(cfgs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  const auto work = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= cfgs.size()) return;
      try {
        out[k] = execute_run(cfgs[k]);
        sink(out[k]);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
        next = cfgs.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

inline std::vector<RunOutput> run_many(const std::vector<SimConfig>& cfgs, unsigned threads) {
  return run_many(cfgs, threads, [](const RunOutput&) {});
}

}  // namespace mmassoc
