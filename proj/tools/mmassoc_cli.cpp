// Command-line front end: run, sweep, compare, snapshot.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmassoc/config_io.hpp"
#include "mmassoc/metrics_io.hpp"
#include "mmassoc/runner.hpp"
#include "mmassoc/snapshot_io.hpp"

namespace fs = std::filesystem;
using namespace mmassoc;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw UsageError("--seeds: empty range " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("--seeds: expected A..B, got " + s);
  }
}

std::vector<PolicyKind> parse_policy_list(const std::string& s) {
  std::vector<PolicyKind> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto p = parse_policy(item);
    if (!p) throw UsageError("--policies: unknown policy '" + item + "'");
    out.push_back(*p);
  }
  if (out.empty()) throw UsageError("--policies: empty list");
  return out;
}

void write_effective(const SimConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  auto j = effective_config(cfg);
  j["config_hash"] = config_hash(cfg);
  write_json_file(j, dir / "effective_config.json");
}

fs::path find_snapshot(const fs::path& in) {
  if (fs::is_regular_file(in)) return in;
  if (!fs::is_directory(in)) throw IoError(in.string() + " does not exist");
  std::vector<fs::path> found;
  for (const auto& e : fs::directory_iterator(in)) {
    const auto name = e.path().filename().string();
    if (name.size() > 14 && name.ends_with(".snapshot.json")) found.push_back(e.path());
  }
  if (found.size() != 1) throw IoError(in.string() + ": expected exactly one *.snapshot.json");
  return found.front();
}

void write_summary(const fs::path& dir) {
  const auto summary = summary_json(summarize(read_metrics_dir(dir)));
  write_json_file(summary, dir / "summary.json");
  std::cout << summary.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave vehicular user-association simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_path, seeds = "1..5", policies;
  std::uint64_t seed = 1;
  std::optional<int> horizon;

  auto* run = app.add_subcommand("run", "one seeded run");
  run->add_option("--config", config_path, "config JSON")->required();
  run->add_option("--seed", seed, "master seed")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--horizon", horizon, "override the number of periods");

  auto* sweep = app.add_subcommand("sweep", "seeds x policies, in parallel");
  sweep->add_option("--config", config_path, "config JSON")->required();
  sweep->add_option("--seeds", seeds, "seed range A..B")->required();
  sweep->add_option("--policies", policies, "comma-separated policy names")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--horizon", horizon, "override the number of periods");

  auto* compare = app.add_subcommand("compare", "summary statistics over a sweep directory");
  compare->add_option("--in", in_path, "directory of metrics CSVs")->required();

  auto* snap = app.add_subcommand("snapshot", "validate and re-export a learner snapshot");
  snap->add_option("--in", in_path, "run directory or snapshot file")->required();
  snap->add_option("--out", out_dir, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (*run) {
      auto cfg = load_config(config_path);
      cfg.seed = seed;
      if (horizon) cfg.horizon = *horizon;
      cfg.validate();
      write_effective(cfg, out_dir);
      const auto out = execute_run(cfg);
      write_run(out, out_dir);
      const auto& last = out.series.records.back();
      std::cout << out.series.policy << " seed " << seed << ": " << out.series.records.size()
                << " periods, cumulative regret " << last.cum_regret << " bits\n";
    } else if (*sweep) {
      auto base = load_config(config_path);
      if (horizon) base.horizon = *horizon;
      base.validate();
      const auto [a, b] = parse_seed_range(seeds);
      std::vector<SimConfig> cfgs;
      for (PolicyKind p : parse_policy_list(policies)) {
        for (std::uint64_t s = a; s <= b; ++s) {
          auto c = base;
          c.policy = p;
          c.seed = s;
          cfgs.push_back(c);
        }
      }
      write_effective(base, out_dir);
      std::mutex io_mu;
      run_many(cfgs, sweep_threads(cfgs.size()), [&](const RunOutput& r) {
        write_run(r, out_dir);
        std::lock_guard lock(io_mu);
        std::cerr << "done " << run_stem(r.series.policy, r.series.seed) << '\n';
      });
      write_summary(out_dir);
    } else if (*compare) {
      write_summary(in_path);
    } else if (*snap) {
      const auto s = import_snapshot(read_json_file(find_snapshot(in_path)));
      write_json_file(export_snapshot(s.tables, s.agents), out_dir);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
