#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmassoc/engine.hpp"
#include "mmassoc/error.hpp"

namespace mmassoc {

inline constexpr std::string_view kMetricsHeader =
    "period,policy,seed,active_vehicles,total_rate_bps,reference_rate_bps,cum_regret_bits,handovers,"
    "handover_rate,noncompetitive_ratio,misid_prob";

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_metrics(const MetricsSeries& s, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : s.records) {
    out << r.period << ',' << s.policy << ',' << s.seed << ',' << r.active_vehicles << ','
        << format_double(r.total_rate) << ',' << format_double(r.reference_rate) << ','
        << format_double(r.cum_regret) << ',' << r.handovers << ',' << format_double(r.handover_rate) << ','
        << format_double(r.noncompetitive_ratio) << ',' << format_double(r.misid_prob) << '\n';
  }
}

inline void write_metrics(const MetricsSeries& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_metrics(s, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

namespace detail {

template <class T>
T parse_field(std::string_view f, const std::string& where) {
  T v{};
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) throw IoError("bad field in " + where);
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Reads a metrics CSV back into a series (metadata limited to policy and seed).
inline MetricsSeries read_metrics(std::istream& in, const std::string& name = "metrics") {
  MetricsSeries s;
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError(name + ": unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto f = detail::split_commas(line);
    if (f.size() != 11) throw IoError(where + ": expected 11 fields");
    PeriodRecord r;
    r.period = detail::parse_field<std::int64_t>(f[0], where);
    const std::string policy(f[1]);
    const auto seed = detail::parse_field<std::uint64_t>(f[2], where);
    if (s.records.empty()) {
      s.policy = policy;
      s.seed = seed;
    } else if (policy != s.policy || seed != s.seed) {
      throw IoError(where + ": policy/seed changes mid-file");
    }
    r.active_vehicles = detail::parse_field<std::size_t>(f[3], where);
    r.total_rate = detail::parse_field<double>(f[4], where);
    r.reference_rate = detail::parse_field<double>(f[5], where);
    r.cum_regret = detail::parse_field<double>(f[6], where);
    r.handovers = detail::parse_field<std::size_t>(f[7], where);
    r.handover_rate = detail::parse_field<double>(f[8], where);
    r.noncompetitive_ratio = detail::parse_field<double>(f[9], where);
    r.misid_prob = detail::parse_field<double>(f[10], where);
    if (!s.records.empty() && r.period <= s.records.back().period)
      throw IoError(where + ": periods must be strictly increasing");
    s.records.push_back(r);
  }
  return s;
}

inline MetricsSeries read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_metrics(in, path.string());
}

inline nlohmann::json metrics_meta(const MetricsSeries& s) {
  return {{"policy", s.policy},         {"seed", s.seed},           {"config_hash", s.config_hash},
          {"build_version", s.build_version}, {"oracle_csi", s.oracle_csi}, {"dt", s.dt},
          {"periods", s.records.size()}};
}

/// Across-seed statistics of one policy.
struct PolicySummary {
  std::size_t runs = 0;
  double final_regret_mean = 0.0, final_regret_std = 0.0;      // bits
  double per_vehicle_rate_mean = 0.0, per_vehicle_rate_std = 0.0;  // bits/s
  double handover_rate_mean = 0.0, handover_rate_std = 0.0;
};

/// Per-run scalars used by the summary.
struct RunScalars {
  double final_regret = 0.0;
  double per_vehicle_rate = 0.0;  // mean over periods with vehicles of total / active
  double handover_rate = 0.0;     // mean over periods with vehicles
};

inline RunScalars run_scalars(const MetricsSeries& s, std::size_t from = 0) {
  RunScalars out;
  if (!s.records.empty()) out.final_regret = s.records.back().cum_regret;
  double rate = 0.0, ho = 0.0;
  std::size_t n = 0;
  for (std::size_t k = from; k < s.records.size(); ++k) {
    const auto& r = s.records[k];
    if (r.active_vehicles == 0) continue;
    rate += r.total_rate / static_cast<double>(r.active_vehicles);
    ho += r.handover_rate;
    ++n;
  }
  if (n > 0) {
    out.per_vehicle_rate = rate / static_cast<double>(n);
    out.handover_rate = ho / static_cast<double>(n);
  }
  return out;
}

/// Sample mean and standard deviation (n - 1 denominator, 0 for a single value).
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline std::map<std::string, PolicySummary> summarize(const std::vector<MetricsSeries>& runs) {
  std::map<std::string, std::vector<RunScalars>> by_policy;
  for (const auto& s : runs) by_policy[s.policy].push_back(run_scalars(s));
  std::map<std::string, PolicySummary> out;
  for (const auto& [policy, rs] : by_policy) {
    std::vector<double> reg, rate, ho;
    for (const auto& r : rs) {
      reg.push_back(r.final_regret);
      rate.push_back(r.per_vehicle_rate);
      ho.push_back(r.handover_rate);
    }
    PolicySummary p;
    p.runs = rs.size();
    std::tie(p.final_regret_mean, p.final_regret_std) = mean_std(reg);
    std::tie(p.per_vehicle_rate_mean, p.per_vehicle_rate_std) = mean_std(rate);
    std::tie(p.handover_rate_mean, p.handover_rate_std) = mean_std(ho);
    out[policy] = p;
  }
  return out;
}

inline nlohmann::json summary_json(const std::map<std::string, PolicySummary>& sum) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [policy, p] : sum) {
    j[policy] = {{"runs", p.runs},
                 {"final_regret_bits", {{"mean", p.final_regret_mean}, {"std", p.final_regret_std}}},
                 {"per_vehicle_rate_bps", {{"mean", p.per_vehicle_rate_mean}, {"std", p.per_vehicle_rate_std}}},
                 {"handover_rate", {{"mean", p.handover_rate_mean}, {"std", p.handover_rate_std}}}};
  }
  return j;
}

/// Reads every metrics CSV in `dir` (sorted by file name).
inline std::vector<MetricsSeries> read_metrics_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<MetricsSeries> out;
  for (const auto& f : files) out.push_back(read_metrics(f));
  return out;
}

}  // namespace mmassoc
