#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "mmassoc/context_space.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/geometry.hpp"

namespace mmassoc {

inline constexpr double kUnexplored = std::numeric_limits<double>::infinity();

/// UCB1 index mu + alpha*sqrt(2 ln n_D / n_Dj); unsampled arms get +inf.
inline double ucb_index(double mu, std::uint64_t n_context, std::uint64_t n_arm, double alpha) {
  if (n_arm == 0) return kUnexplored;
  return mu + alpha * std::sqrt(2.0 * std::log(static_cast<double>(n_context)) / static_cast<double>(n_arm));
}

/// Contextual pseudo-reward: (1-p) r + p R_max inside the beam region, R_max
/// outside. Rewards above R_max are clamped to it.
inline double pseudo_reward(double r, bool in_omega, double p, double r_max) {
  return in_omega ? (1.0 - p) * std::clamp(r, 0.0, r_max) + p * r_max : r_max;
}

struct LearnerParams {
  double alpha = 1.0;         // UCB exploration weight
  double infraction_p = 0.1;  // p
  double r_max = 1.0;         // bits/s
  double reward_unit = 1.0;   // bits/s per unit of reward seen by the UCB index
  bool correlated = true;     // false: plain contextual UCB, no pseudo-rewards
};

/// Running mean/count pair for one empirical pseudo-reward.
struct PhiEntry {
  double mean = 0.0;
  std::uint64_t count = 0;
};

/// One pilot observation handed to the updating phase.
struct PilotSample {
  std::uint64_t vehicle = 0;
  ContextId context;
  int arm = 0;
  double reward = 0.0;  // bits/s
  Location l_start;
  Location l_end;
  double velocity = 0.0;
};

/// Output of the estimating phase for one vehicle.
struct EstimateDecision {
  int estimated_bs = 0;
  int best_empirical = 0;  // j^e
  std::vector<double> mu_row;
  std::vector<int> competitive_set;  // ascending
  std::uint64_t table_version = 0;   // tables' version when the decision was taken
};

/// Central learner state: empirical rewards, counters, sparse empirical
/// pseudo-rewards and the per-(context, arm) pseudo-reward floor.
class LearnerTables {
 public:
  LearnerTables(ContextGrid grid, std::vector<BaseStationSite> sites, LearnerParams params, double theta_beam,
                double d_max)
      : grid_(std::move(grid)),
        sites_(std::move(sites)),
        params_(params),
        theta_beam_(theta_beam),
        d_max_(d_max),
        arms_(static_cast<int>(sites_.size())),
        mu_(grid_.size() * sites_.size(), 0.0),
        n_(grid_.size() * sites_.size(), 0),
        phi_inf_(grid_.size() * sites_.size(), kUnexplored) {
    if (arms_ < 1) throw ContractViolation("learner needs at least one arm");
  }

  int arms() const { return arms_; }
  const ContextGrid& grid() const { return grid_; }
  const LearnerParams& params() const { return params_; }
  std::span<const BaseStationSite> sites() const { return sites_; }
  double theta_beam() const { return theta_beam_; }
  double d_max() const { return d_max_; }

  double mu(ContextId d, int j) const { return mu_[cell(d, j)]; }
  std::uint64_t count(ContextId d, int j) const { return n_[cell(d, j)]; }
  std::uint64_t context_count(ContextId d) const {
    std::uint64_t s = 0;
    for (int j = 0; j < arms_; ++j) s += count(d, j);
    return s;
  }
  double phi_inf(ContextId d, int j) const { return phi_inf_[cell(d, j)]; }
  bool has_floor(ContextId d, int j) const { return phi_inf(d, j) != kUnexplored; }

  const PhiEntry* phi(int j, ContextId src, ContextId dst) const {
    const auto it = phi_.find(phi_key(j, src, dst));
    return it == phi_.end() ? nullptr : &it->second;
  }
  const std::unordered_map<std::uint64_t, PhiEntry>& phi_entries() const { return phi_; }
  /// Decodes a sparse key into (arm, source flat index, destination flat index).
  std::tuple<int, std::size_t, std::size_t> decode_phi_key(std::uint64_t key) const {
    const std::uint64_t n = grid_.size();
    return {static_cast<int>(key / (n * n)), static_cast<std::size_t>((key / n) % n),
            static_cast<std::size_t>(key % n)};
  }

  /// Times a pseudo-reward update raised an entry that held the floor, leaving
  /// the floor below the current minimum.
  std::uint64_t stale_floor_events() const { return stale_floor_events_; }
  /// Incremented on every mutation; lets callers prove a decision predates an update.
  std::uint64_t version() const { return version_; }

  /// Raw record of one empirical reward; used by snapshot import.
  void set_reward(ContextId d, int j, double mean, std::uint64_t count) {
    mu_[cell(d, j)] = mean;
    n_[cell(d, j)] = count;
    ++version_;
  }
  void set_phi(int j, ContextId src, ContextId dst, PhiEntry e) {
    phi_[phi_key(j, src, dst)] = e;
    ++version_;
  }
  void set_phi_inf(ContextId d, int j, double v) {
    phi_inf_[cell(d, j)] = v;
    ++version_;
  }
  void set_stale_floor_events(std::uint64_t n) { stale_floor_events_ = n; }

  /// Rewards outside [0, R_max] are clamped; `clamped_rewards()` counts them.
  double clamp_reward(double r) {
    if (r > params_.r_max || r < 0.0) ++clamped_;
    return std::clamp(r, 0.0, params_.r_max);
  }
  std::uint64_t clamped_rewards() const { return clamped_; }

  /// Empirical reward update for one pilot sample (running mean).
  void record_reward(ContextId d, int j, double reward) {
    const auto c = cell(d, j);
    n_[c] += 1;
    mu_[c] += (clamp_reward(reward) - mu_[c]) / static_cast<double>(n_[c]);
    ++version_;
  }

  /// Propagates one pseudo-reward into the (src -> dst) entry for arm j and
  /// lowers the destination's floor if the running mean fell below it.
  void record_pseudo_reward(int j, ContextId src, ContextId dst, double s) {
    auto& e = phi_[phi_key(j, src, dst)];
    const double before = e.mean;
    const bool held_floor = e.count > 0 && phi_inf_[cell(dst, j)] == before;
    e.count += 1;
    e.mean += (s - e.mean) / static_cast<double>(e.count);
    auto& floor = phi_inf_[cell(dst, j)];
    if (e.mean < floor) floor = e.mean;
    if (held_floor && e.mean > before) ++stale_floor_events_;
    ++version_;
  }

  std::size_t cell(ContextId d, int j) const { return grid_.flat(d) * static_cast<std::size_t>(arms_) + j; }

 private:
  std::uint64_t phi_key(int j, ContextId src, ContextId dst) const {
    const std::uint64_t n = grid_.size();
    return (static_cast<std::uint64_t>(j) * n + grid_.flat(src)) * n + grid_.flat(dst);
  }

  ContextGrid grid_;
  std::vector<BaseStationSite> sites_;
  LearnerParams params_;
  double theta_beam_;
  double d_max_;
  int arms_;
  std::vector<double> mu_;
  std::vector<std::uint64_t> n_;
  std::vector<double> phi_inf_;
  std::unordered_map<std::uint64_t, PhiEntry> phi_;
  std::uint64_t stale_floor_events_ = 0;
  std::uint64_t clamped_ = 0;
  std::uint64_t version_ = 0;
};

/// Contexts (other than the sample's own) that lie in the beam region the
/// sample's traverse carves out of its arm's BS, at the sample's velocity.
inline std::vector<ContextId> correlated_contexts(const LearnerTables& tables, const PilotSample& s) {
  const auto& bs = tables.sites()[s.arm].location;
  const double reach = std::max(distance(s.l_start, bs), distance(s.l_end, bs));
  // A vehicle sitting on the BS or beyond d_max defines no region.
  if (s.l_start == bs || s.l_end == bs || !(tables.d_max() > reach)) return {};
  const auto region = beam_region(s.l_start, bs, s.l_end, tables.theta_beam(), tables.d_max());
  auto out = contexts_in_region(region, s.velocity, tables.grid());
  std::erase(out, s.context);
  return out;
}

/// CLUB rule: update the empirical pseudo-rewards of every correlated context.
inline void club_update(LearnerTables& tables, const PilotSample& s) {
  const auto& prm = tables.params();
  const double s_val = pseudo_reward(s.reward, true, prm.infraction_p, prm.r_max);
  for (const auto& d : correlated_contexts(tables, s)) tables.record_pseudo_reward(s.arm, s.context, d, s_val);
}

/// j^e plus every arm whose floor reaches mu_je or that has no floor yet.
inline std::vector<int> competitive_set(const LearnerTables& tables, ContextId d, int j_e, double mu_je) {
  std::vector<int> out;
  for (int j = 0; j < tables.arms(); ++j) {
    if (j == j_e || !tables.has_floor(d, j) || tables.phi_inf(d, j) >= mu_je) out.push_back(j);
  }
  return out;
}

/// Arm with the greatest empirical reward among those sampled at least
/// floor(n_D / N_BS) times; ties go to the lowest id.
inline int best_empirical_arm(const LearnerTables& tables, ContextId d) {
  const std::uint64_t threshold = tables.context_count(d) / static_cast<std::uint64_t>(tables.arms());
  int best = -1;
  for (int j = 0; j < tables.arms(); ++j) {
    if (tables.count(d, j) < threshold) continue;
    if (best < 0 || tables.mu(d, j) > tables.mu(d, best)) best = j;
  }
  return best;
}

/// Arm of `candidates` with the greatest UCB index (ties -> lowest id).
inline int ucb_argmax(const LearnerTables& tables, ContextId d, std::span<const int> candidates) {
  const std::uint64_t n_d = tables.context_count(d);
  const double unit = tables.params().reward_unit;
  int best = candidates.front();
  double best_idx = -std::numeric_limits<double>::infinity();
  for (int j : candidates) {
    const double idx = ucb_index(tables.mu(d, j) / unit, n_d, tables.count(d, j), tables.params().alpha);
    if (idx > best_idx) {
      best_idx = idx;
      best = j;
    }
  }
  return best;
}

/// Estimating phase for a vehicle in context d.
inline EstimateDecision estimate_phase(const LearnerTables& tables, ContextId d) {
  EstimateDecision out;
  out.table_version = tables.version();
  out.mu_row.resize(tables.arms());
  for (int j = 0; j < tables.arms(); ++j) out.mu_row[j] = tables.mu(d, j);
  out.best_empirical = best_empirical_arm(tables, d);
  out.competitive_set = competitive_set(tables, d, out.best_empirical, tables.mu(d, out.best_empirical));
  out.estimated_bs = ucb_argmax(tables, d, out.competitive_set);
  return out;
}

/// Contextual UCB without correlation: argmax over every arm.
inline int cucb_decide(const LearnerTables& tables, ContextId d) {
  std::vector<int> all(tables.arms());
  for (int j = 0; j < tables.arms(); ++j) all[j] = j;
  return ucb_argmax(tables, d, all);
}

/// Updating phase. Samples are applied in ascending vehicle id.
inline void update_phase(LearnerTables& tables, std::vector<PilotSample> batch) {
  std::stable_sort(batch.begin(), batch.end(),
                   [](const PilotSample& a, const PilotSample& b) { return a.vehicle < b.vehicle; });
  for (const auto& s : batch) {
    tables.record_reward(s.context, s.arm, s.reward);
    if (tables.params().correlated) club_update(tables, s);
  }
}

}  // namespace mmassoc
