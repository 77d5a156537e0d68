#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmassoc/baselines.hpp"
#include "mmassoc/cc_ucb.hpp"
#include "mmassoc/channel.hpp"
#include "mmassoc/context_space.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/mobility.hpp"
#include "mmassoc/rng.hpp"
#include "mmassoc/scenario.hpp"
#include "mmassoc/ts_agent.hpp"

namespace mmassoc {

enum class OracleMode {
  exhaustive,     // exhaustive search when small enough, WCS otherwise
  wcs_reference,  // always WCS
};

inline std::string_view to_string(OracleMode m) {
  return m == OracleMode::exhaustive ? "exhaustive" : "wcs_reference";
}

struct SimConfig {
  int horizon = 20000;
  std::uint64_t seed = 1;
  double lambda = 0.3;
  double dt = 0.1;  // seconds per period
  RadioParams radio;
  VelocityRange velocity;
  int grid_v = 4, grid_x = 20, grid_y = 20;
  double alpha = 1.0;
  double p = 0.1;
  double alpha_ts = 1.0;
  bool ts_sigma_is_variance = false;
  double reward_unit = 0.0;     // bits/s; 0 = r_max
  double ts_reward_unit = 0.0;  // bits/s scale of the TS exploration width; 0 = reward_unit
  PolicyKind policy = PolicyKind::sd_cc_ucb;
  ScenarioSpec scenario = desk_scenario();
  OracleMode oracle_mode = OracleMode::exhaustive;
  std::uint64_t exhaustive_limit = 1'000'000;
  int wcs_iters_per_vehicle = 10;
  int misid_samples = 500;  // Monte-Carlo draws per (cell, BS) for the ground truth
  int metric_window = 500;  // periods
  bool trace = false;       // keep per-vehicle vectors in every record

  void validate() const {
    const auto need = [](bool ok, const char* key, const char* what) {
      if (!ok) throw ConfigError(key, what);
    };
    need(horizon >= 1, "horizon", "must be >= 1");
    need(lambda >= 0.0 && std::isfinite(lambda), "lambda", "must be a finite value >= 0");
    need(dt > 0.0 && std::isfinite(dt), "dt", "must be > 0");
    need(radio.carrier_freq_hz > 0.0, "radio.carrier_freq_hz", "must be > 0");
    need(radio.bandwidth_hz > 0.0, "radio.bandwidth_hz", "must be > 0");
    need(radio.tx_power_w > 0.0, "radio.tx_power_dbm", "must give a positive power");
    need(radio.noise_density_w_per_hz > 0.0, "radio.noise_density_dbm_hz", "must give a positive density");
    need(radio.handover_cost >= 0.0 && radio.handover_cost < 1.0, "zeta", "must be in [0, 1)");
    need(radio.main_lobe_gain > 0.0, "radio.main_lobe_gain_db", "must give a positive gain");
    need(radio.side_lobe_gain > 0.0 && radio.side_lobe_gain <= radio.main_lobe_gain, "radio.side_lobe_gain_db",
         "must be positive and not above the main lobe");
    need(radio.rician_k >= 0.0, "radio.rician_k_db", "must be >= 0 in linear scale");
    need(radio.theta_beam > 0.0 && radio.theta_beam < std::numbers::pi / 2, "radio.theta_beam_deg",
         "must be in (0, 90)");
    need(radio.bs_height > radio.vehicle_height && radio.vehicle_height >= 0.0, "radio.bs_height_m",
         "must exceed the vehicle height");
    need(radio.d_max >= 0.0, "radio.d_max_m", "must be >= 0");
    need(radio.r_max >= 0.0, "radio.r_max_bps", "must be >= 0");
    need(velocity.v_min > 0.0 && velocity.v_max > velocity.v_min, "velocity_kmh", "needs 0 < min < max");
    need(grid_v >= 1 && grid_x >= 1 && grid_y >= 1, "grid", "counts must be >= 1");
    need(alpha >= 0.0, "alpha", "must be >= 0");
    need(p >= 0.0 && p <= 1.0, "p", "must be in [0, 1]");
    need(alpha_ts >= 0.0, "alpha_ts", "must be >= 0");
    need(reward_unit >= 0.0, "reward_unit_bps", "must be >= 0");
    need(ts_reward_unit >= 0.0, "ts_reward_unit_bps", "must be >= 0");
    need(exhaustive_limit >= 1, "exhaustive_limit", "must be >= 1");
    need(wcs_iters_per_vehicle >= 1, "wcs_iters_per_vehicle", "must be >= 1");
    need(misid_samples >= 1, "misid_samples", "must be >= 1");
    need(metric_window >= 1, "metric_window", "must be >= 1");
  }
};

struct PeriodRecord {
  std::int64_t period = 0;
  std::size_t active_vehicles = 0;
  double total_rate = 0.0;      // bits/s
  double reference_rate = 0.0;  // bits/s
  double cum_regret = 0.0;      // bits
  std::size_t handovers = 0;
  double handover_rate = 0.0;  // handovers per active vehicle
  double noncompetitive_ratio = 0.0;
  double misid_prob = 0.0;  // over the sliding window
  std::size_t misid_count = 0;
  std::size_t estimate_calls = 0;
  bool reference_exhaustive = false;

  // Filled when SimConfig::trace is set.
  std::vector<std::uint64_t> vehicle_ids;
  std::vector<int> eta_assoc;  // association used for pilot interference (previous period)
  std::vector<int> assoc;
  std::vector<int> reference_assoc;
  std::vector<double> rates;
  std::vector<double> reference_rates;
};

struct MetricsSeries {
  std::string policy;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string build_version;
  std::string oracle_csi;  // "oracle" for policies that read the full channel, "bandit" otherwise
  double dt = 0.0;
  std::vector<PeriodRecord> records;
};

/// Interference-free ground truth for the misidentification metric: mean
/// pilot rate per (spatial cell, BS) over points drawn on the roads inside
/// the cell and stationary fading.
class GroundTruth {
 public:
  GroundTruth() = default;
  GroundTruth(const Scenario& sc, const ContextGrid& grid, const RadioParams& radio, int samples,
              std::uint64_t seed)
      : nx_(grid.n_x()), ny_(grid.n_y()), nb_(static_cast<int>(sc.sites.size())),
        mean_(static_cast<std::size_t>(nx_) * ny_ * nb_, 0.0), best_(static_cast<std::size_t>(nx_) * ny_, -1) {
    Rng rng = make_stream(seed, "ground_truth");
    for (int ix = 0; ix < nx_; ++ix) {
      for (int iy = 0; iy < ny_; ++iy) {
        const auto pieces = road_pieces(sc.roads, grid.cell_rect(ix, iy));
        double total = 0.0;
        for (const auto& pc : pieces) total += distance(pc.first, pc.second);
        if (!(total > 0.0)) continue;
        std::uniform_real_distribution<double> along(0.0, total);
        const std::size_t base = (static_cast<std::size_t>(ix) * ny_ + iy) * nb_;
        for (int s = 0; s < samples; ++s) {
          double u = along(rng);
          Location q = pieces.back().second;
          for (const auto& pc : pieces) {
            const double len = distance(pc.first, pc.second);
            if (u <= len) {
              q = pc.first + (u / len) * (pc.second - pc.first);
              break;
            }
            u -= len;
          }
          for (int j = 0; j < nb_; ++j) {
            const auto& bs = sc.sites[j];
            const bool los = !los_blocked(q, bs.location, sc.buildings);
            const auto fading = init_fading(rng, los, radio.rician_k);
            const double g = link_gain(q, bs, fading, radio);
            mean_[base + j] += shannon_rate(radio.bandwidth_hz, radio.tx_power_w * g / radio.noise_power());
          }
        }
        for (int j = 0; j < nb_; ++j) mean_[base + j] /= samples;
        int best = 0;
        for (int j = 1; j < nb_; ++j)
          if (mean_[base + j] > mean_[base + best]) best = j;
        best_[static_cast<std::size_t>(ix) * ny_ + iy] = best;
      }
    }
  }

  /// Best BS of the context's spatial cell, -1 when no road crosses it.
  int best(ContextId d) const { return best_[static_cast<std::size_t>(d.ix) * ny_ + d.iy]; }
  double mean(ContextId d, int j) const {
    return mean_[(static_cast<std::size_t>(d.ix) * ny_ + d.iy) * nb_ + j];
  }

  /// Parts of the road network inside the closed rectangle.
  static std::vector<std::pair<Location, Location>> road_pieces(const RoadGraph& roads, const Rect& r) {
    std::vector<std::pair<Location, Location>> out;
    for (const auto& e : roads.edges()) {
      const Location a = roads.nodes()[e.a];
      const Location b = roads.nodes()[e.b];
      double t0 = 0.0, t1 = 1.0;
      const double p[2] = {a.x, a.y};
      const double d[2] = {b.x - a.x, b.y - a.y};
      const double lo[2] = {r.lo.x, r.lo.y};
      const double hi[2] = {r.hi.x, r.hi.y};
      bool keep = true;
      for (int k = 0; k < 2 && keep; ++k) {
        if (d[k] == 0.0) {
          keep = p[k] >= lo[k] && p[k] <= hi[k];
          continue;
        }
        double u0 = (lo[k] - p[k]) / d[k];
        double u1 = (hi[k] - p[k]) / d[k];
        if (u0 > u1) std::swap(u0, u1);
        t0 = std::max(t0, u0);
        t1 = std::min(t1, u1);
      }
      if (keep && t1 > t0) out.push_back({a + t0 * (b - a), a + t1 * (b - a)});
    }
    return out;
  }

 private:
  int nx_ = 0, ny_ = 0, nb_ = 0;
  std::vector<double> mean_;
  std::vector<int> best_;
};

/// Fraction of BSs farther than d_max from every point of the context's cell.
inline double geometric_floor(const ContextGrid& grid, std::span<const BaseStationSite> sites, ContextId d,
                              double d_max) {
  const Rect cell = grid.cell_rect(d.ix, d.iy);
  std::size_t far = 0;
  for (const auto& s : sites)
    if (distance_to_rect(s.location, cell) > d_max) ++far;
  return static_cast<double>(far) / static_cast<double>(sites.size());
}

struct CompetitiveBoundReport {
  std::size_t contexts_checked = 0;  // contexts with at least 50 N_BS samples
  std::size_t contexts_flagged = 0;  // of those, with a competitive BS beyond d_max
  double fraction_flagged = 0.0;
  double mean_competitive = 0.0;  // mean |C| over checked contexts
};

inline CompetitiveBoundReport competitive_bound_diagnostic(const LearnerTables& tables) {
  CompetitiveBoundReport rep;
  const auto& grid = tables.grid();
  const std::uint64_t threshold = 50 * static_cast<std::uint64_t>(tables.arms());
  double sum_c = 0.0;
  for (std::size_t f = 0; f < grid.size(); ++f) {
    const ContextId d = grid.unflat(f);
    if (tables.context_count(d) < threshold) continue;
    ++rep.contexts_checked;
    const int je = best_empirical_arm(tables, d);
    const auto comp = competitive_set(tables, d, je, tables.mu(d, je));
    sum_c += static_cast<double>(comp.size());
    const Rect cell = grid.cell_rect(d.ix, d.iy);
    for (int j : comp) {
      if (distance_to_rect(tables.sites()[j].location, cell) > tables.d_max()) {
        ++rep.contexts_flagged;
        break;
      }
    }
  }
  if (rep.contexts_checked > 0) {
    rep.fraction_flagged = static_cast<double>(rep.contexts_flagged) / static_cast<double>(rep.contexts_checked);
    rep.mean_competitive = sum_c / static_cast<double>(rep.contexts_checked);
  }
  return rep;
}

/// Fraction of windowed estimate calls whose competitive set missed the true best arm.
inline double misid_metric(std::size_t misid_count, std::size_t estimate_calls) {
  return estimate_calls == 0 ? 0.0 : static_cast<double>(misid_count) / static_cast<double>(estimate_calls);
}

/// Per-vehicle state owned by the engine.
struct VehicleSlot {
  VehicleState state;
  std::vector<FadingState> fading;
  Rng fading_rng;
  Rng ts_rng;
  TsAgentState ts;
  PlainTsState plain_ts;
  bool fresh = true;  // fading not drawn yet
};

/// One seeded run of one policy. All mutable state lives here; runs share nothing.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg)
      : cfg_((cfg.validate(), std::move(cfg))),
        scenario_(cfg_.scenario),
        radio_(resolve(with_heights(cfg_.radio, scenario_.spec.bs_height))),
        grid_(cfg_.grid_v, cfg_.grid_x, cfg_.grid_y, cfg_.velocity.v_min, cfg_.velocity.v_max, scenario_.world),
        unit_(cfg_.reward_unit > 0.0 ? cfg_.reward_unit : radio_.r_max),
        ts_unit_(cfg_.ts_reward_unit > 0.0 ? cfg_.ts_reward_unit : unit_),
        arrivals_rng_(make_stream(cfg_.seed, "arrivals")),
        random_rng_(make_stream(cfg_.seed, "random_policy")),
        last_visit_(grid_.size(), std::numeric_limits<std::int64_t>::min()) {
    if (uses_learner(cfg_.policy)) {
      LearnerParams lp;
      lp.alpha = cfg_.alpha;
      lp.infraction_p = cfg_.p;
      lp.r_max = radio_.r_max;
      lp.reward_unit = unit_;
      lp.correlated = correlated();
      tables_.emplace(grid_, scenario_.sites, lp, radio_.theta_beam, radio_.d_max);
    }
    if (correlated()) truth_ = GroundTruth(scenario_, grid_, radio_, cfg_.misid_samples, cfg_.seed);
  }

  const SimConfig& config() const { return cfg_; }
  const Scenario& scenario() const { return scenario_; }
  const RadioParams& radio() const { return radio_; }
  const ContextGrid& grid() const { return grid_; }
  double reward_unit() const { return unit_; }
  double ts_reward_unit() const { return ts_unit_; }
  std::int64_t period() const { return t_; }
  const std::optional<LearnerTables>& tables() const { return tables_; }
  std::optional<LearnerTables>& tables() { return tables_; }
  const std::optional<GroundTruth>& ground_truth() const { return truth_; }
  const std::vector<VehicleSlot>& vehicles() const { return slots_; }
  /// TS agents of vehicles that have left, keyed by id; live ones are in vehicles().
  const std::map<std::uint64_t, TsAgentState>& retired_agents() const { return retired_; }
  /// Decisions taken on a table version other than the one before the updating phase.
  std::uint64_t phase_isolation_violations() const { return phase_violations_; }
  double cum_regret() const { return cum_regret_; }

  /// Whether the policy uses the correlated pseudo-reward pruning.
  bool correlated() const {
    return cfg_.policy == PolicyKind::sd_cc_ucb || cfg_.policy == PolicyKind::sd_cc_ucb_no_handover ||
           cfg_.policy == PolicyKind::cc_ucb_only;
  }

  PeriodRecord run_period() {
    PeriodRecord rec;
    rec.period = t_;
    const double t_now = static_cast<double>(t_) * cfg_.dt;

    // (1) mobility, departures, arrivals
    std::vector<VehicleSlot> kept;
    kept.reserve(slots_.size());
    for (auto& s : slots_) {
      if (step_vehicle(s.state, cfg_.dt, t_now, cfg_.velocity)) {
        kept.push_back(std::move(s));
      } else if (cfg_.policy == PolicyKind::sd_cc_ucb || cfg_.policy == PolicyKind::sd_cc_ucb_no_handover) {
        retired_.insert_or_assign(s.state.id, s.ts);
      }
    }
    slots_ = std::move(kept);
    for (auto& v : spawn_arrivals(arrivals_rng_, cfg_.lambda, scenario_.roads, cfg_.velocity, next_id_, cfg_.seed))
      slots_.push_back(make_slot(std::move(v)));

    const std::size_t n = slots_.size();
    const std::size_t nb = scenario_.sites.size();
    rec.active_vehicles = n;

    // (2) fading and the frozen channel of this period
    ChannelSnapshot ch(n, nb, radio_);
    std::uniform_real_distribution<double> phase_draw(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = slots_[i];
      for (std::size_t j = 0; j < nb; ++j) {
        const auto& bs = scenario_.sites[j];
        const bool los = !los_blocked(s.state.location, bs.location, scenario_.buildings);
        s.fading[j] = s.fresh ? init_fading(s.fading_rng, los, radio_.rician_k)
                                : evolve_fading(s.fading[j], s.state.velocity, cfg_.dt, radio_.carrier_freq_hz, los,
                                                radio_.rician_k, s.fading_rng);
        const double d3d = distance_3d(s.state.location, bs.location, bs.antenna_height - radio_.vehicle_height);
        ch.path(i, j) = path_gain(d3d, los, radio_.carrier_freq_hz) * s.fading[j].power();
        ch.phase(i, j) = std::polar(1.0, phase_draw(s.fading_rng));
        const Location to_bs = bs.location - s.state.location;
        const double len = norm(to_bs);
        ch.direction(i, j) = len > 0.0 ? (1.0 / len) * to_bs : Location{1.0, 0.0};
      }
    }
    for (auto& s : slots_) s.fresh = false;

    // previous serving BS per slot; doubles as the pilot interference indicator
    AssociationVector prev(n);
    for (std::size_t i = 0; i < n; ++i) prev[i] = slots_[i].state.prev_bs;

    // (3) estimating phase
    std::vector<EstimateDecision> decisions(n);
    std::vector<ContextId> contexts(n);
    if (tables_) {
      auto& tb = *tables_;
      const std::uint64_t version_before = tb.version();
      std::vector<PilotSample> batch;
      batch.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto& v = slots_[i].state;
        const ContextId d = context_of(v.velocity, v.location, grid_);
        contexts[i] = d;
        last_visit_[grid_.flat(d)] = t_;
        auto& dec = decisions[i];
        if (correlated()) {
          dec = estimate_phase(tb, d);
          ++rec.estimate_calls;
          const int truth = truth_->best(d);
          if (truth >= 0 && !std::binary_search(dec.competitive_set.begin(), dec.competitive_set.end(), truth))
            ++rec.misid_count;
        } else {
          dec.table_version = tb.version();
          dec.mu_row.resize(nb);
          for (std::size_t j = 0; j < nb; ++j) dec.mu_row[j] = tb.mu(d, static_cast<int>(j));
          dec.estimated_bs = cucb_decide(tb, d);
        }
        if (dec.table_version != version_before) ++phase_violations_;
        const auto j = static_cast<std::size_t>(dec.estimated_bs);
        const double eta = estimation_interference(ch, i, j, prev);
        batch.push_back({v.id, d, dec.estimated_bs, estimation_rate(ch, i, j, eta), v.location,
                         projected_location(v, cfg_.dt), v.velocity});
      }
      // (4) updating phase
      update_phase(tb, std::move(batch));
    }

    // (5) data-phase association
    AssociationVector assoc(n, kNoBs);
    bool assoc_is_reference = false;
    switch (cfg_.policy) {
      case PolicyKind::sd_cc_ucb:
      case PolicyKind::sd_cc_ucb_no_handover:
        for (std::size_t i = 0; i < n; ++i) {
          auto& s = slots_[i];
          assoc[i] = s.ts.select_bs(decisions[i].competitive_set, decisions[i].mu_row, s.ts_rng);
        }
        break;
      case PolicyKind::cc_ucb_only:
      case PolicyKind::cucb:
        for (std::size_t i = 0; i < n; ++i) assoc[i] = decisions[i].estimated_bs;
        break;
      case PolicyKind::plain_ts:
        for (std::size_t i = 0; i < n; ++i) assoc[i] = plain_ts_decide(slots_[i].plain_ts, slots_[i].ts_rng);
        break;
      case PolicyKind::max_sinr:
        assoc = max_sinr_associate(ch, prev);
        break;
      case PolicyKind::wcs:
        assoc = wcs_associate(ch, prev, prev, wcs_iters(n)).assoc;
        assoc_is_reference = cfg_.oracle_mode == OracleMode::wcs_reference || !exhaustive_fits(n, nb);
        break;
      case PolicyKind::exhaustive_oracle:
        if (exhaustive_fits(n, nb)) {
          assoc = exhaustive_oracle(ch, prev, cfg_.exhaustive_limit).assoc;
          assoc_is_reference = cfg_.oracle_mode == OracleMode::exhaustive;
        } else {
          assoc = wcs_associate(ch, prev, prev, wcs_iters(n)).assoc;
          assoc_is_reference = true;
        }
        break;
      case PolicyKind::random:
        assoc = random_associate(n, nb, random_rng_);
        break;
    }

    // (6) data rates under the full interference of this association
    const auto rates = data_rates(ch, assoc, prev);
    double total = 0.0;
    for (double r : rates) total += r;
    rec.total_rate = total;

    // (7) agent updates
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = slots_[i];
      const int j = assoc[i];
      const bool handover = s.state.prev_bs != kNoBs && s.state.prev_bs != j;
      if (handover) ++rec.handovers;
      if (cfg_.policy == PolicyKind::sd_cc_ucb || cfg_.policy == PolicyKind::sd_cc_ucb_no_handover) {
        s.ts.update(j, decisions[i].mu_row[j], rates[i], s.ts.is_handover(j));
      } else if (cfg_.policy == PolicyKind::plain_ts) {
        s.plain_ts.update(j, rates[i]);
      }
      s.state.prev_bs = j;
    }
    rec.handover_rate = n == 0 ? 0.0 : static_cast<double>(rec.handovers) / static_cast<double>(n);

    // (8) reference on the same frozen channel
    AssociationVector ref_assoc;
    if (assoc_is_reference) {
      ref_assoc = assoc;
      rec.reference_exhaustive = cfg_.policy == PolicyKind::exhaustive_oracle;
    } else if (cfg_.oracle_mode == OracleMode::exhaustive && exhaustive_fits(n, nb)) {
      ref_assoc = exhaustive_oracle(ch, prev, cfg_.exhaustive_limit).assoc;
      rec.reference_exhaustive = true;
    } else {
      ref_assoc = wcs_associate(ch, prev, prev, wcs_iters(n)).assoc;
    }
    const auto ref_rates = assoc_is_reference ? rates : data_rates(ch, ref_assoc, prev);
    double ref_total = 0.0;
    for (double r : ref_rates) ref_total += r;
    rec.reference_rate = ref_total;

    // (9) metrics
    cum_regret_ += (ref_total - total) * cfg_.dt;
    rec.cum_regret = cum_regret_;
    window_.push_back({rec.misid_count, rec.estimate_calls});
    win_misid_ += rec.misid_count;
    win_calls_ += rec.estimate_calls;
    if (window_.size() > static_cast<std::size_t>(cfg_.metric_window)) {
      win_misid_ -= window_.front().first;
      win_calls_ -= window_.front().second;
      window_.pop_front();
    }
    rec.misid_prob = misid_metric(win_misid_, win_calls_);
    if (correlated()) rec.noncompetitive_ratio = noncompetitive_ratio();

    if (cfg_.trace) {
      for (const auto& s : slots_) rec.vehicle_ids.push_back(s.state.id);
      rec.eta_assoc = prev;
      rec.assoc = assoc;
      rec.reference_assoc = ref_assoc;
      rec.rates = rates;
      rec.reference_rates = ref_rates;
    }
    ++t_;
    return rec;
  }

  /// Mean fraction of non-competitive BSs over the contexts visited in the
  /// last metric window.
  double noncompetitive_ratio() const {
    if (!tables_) return 0.0;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < grid_.size(); ++f) {
      if (!visited_recently(f)) continue;
      const ContextId d = grid_.unflat(f);
      const int je = best_empirical_arm(*tables_, d);
      const auto comp = competitive_set(*tables_, d, je, tables_->mu(d, je));
      sum += 1.0 - static_cast<double>(comp.size()) / static_cast<double>(tables_->arms());
      ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }

  /// Geometric lower bound for the ratio: mean over the same contexts of the
  /// fraction of BSs beyond d_max.
  double geometric_floor_ratio() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t f = 0; f < grid_.size(); ++f) {
      if (!visited_recently(f)) continue;
      sum += geometric_floor(grid_, scenario_.sites, grid_.unflat(f), radio_.d_max);
      ++count;
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }

 private:
  static RadioParams with_heights(RadioParams r, double bs_height) {
    r.bs_height = bs_height;
    return r;
  }

  bool visited_recently(std::size_t f) const {
    return last_visit_[f] != std::numeric_limits<std::int64_t>::min() &&
           t_ - 1 - last_visit_[f] < static_cast<std::int64_t>(cfg_.metric_window);
  }

  bool exhaustive_fits(std::size_t n, std::size_t nb) const {
    return association_count(n, nb, cfg_.exhaustive_limit) <= cfg_.exhaustive_limit;
  }

  int wcs_iters(std::size_t n) const {
    return std::max(1, cfg_.wcs_iters_per_vehicle * static_cast<int>(n));
  }

  VehicleSlot make_slot(VehicleState v) {
    const int nb = static_cast<int>(scenario_.sites.size());
    TsParams tp;
    tp.alpha_ts = cfg_.alpha_ts;
    tp.zeta = cfg_.policy == PolicyKind::sd_cc_ucb_no_handover ? 0.0 : radio_.handover_cost;
    tp.reward_unit = ts_unit_;
    tp.sigma_is_variance = cfg_.ts_sigma_is_variance;
    const std::uint64_t id = v.id;
    VehicleSlot s{std::move(v),
                  std::vector<FadingState>(nb),
                  make_stream(cfg_.seed, "fading", id),
                  make_stream(cfg_.seed, "ts", id),
                  TsAgentState(nb, tp),
                  PlainTsState(nb, cfg_.alpha_ts, ts_unit_)};
    return s;
  }

  SimConfig cfg_;
  Scenario scenario_;
  RadioParams radio_;
  ContextGrid grid_;
  double unit_;
  double ts_unit_;
  Rng arrivals_rng_;
  Rng random_rng_;
  std::optional<LearnerTables> tables_;
  std::optional<GroundTruth> truth_;
  std::vector<VehicleSlot> slots_;
  std::map<std::uint64_t, TsAgentState> retired_;
  std::uint64_t next_id_ = 0;
  std::int64_t t_ = 0;
  double cum_regret_ = 0.0;
  std::uint64_t phase_violations_ = 0;
  std::vector<std::int64_t> last_visit_;
  std::deque<std::pair<std::size_t, std::size_t>> window_;
  std::size_t win_misid_ = 0, win_calls_ = 0;
};

inline std::string oracle_csi_label(PolicyKind p) { return uses_oracle_csi(p) ? "oracle" : "bandit"; }

/// Runs `cfg.horizon` periods and returns the series (metadata hash left to the caller).
inline MetricsSeries run_simulation(const SimConfig& cfg) {
  Simulation sim(cfg);
  MetricsSeries out;
  out.policy = std::string(to_string(cfg.policy));
  out.seed = cfg.seed;
  out.oracle_csi = oracle_csi_label(cfg.policy);
  out.dt = cfg.dt;
#ifdef MMASSOC_VERSION
  out.build_version = MMASSOC_VERSION;
#endif
  out.records.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int t = 0; t < cfg.horizon; ++t) out.records.push_back(sim.run_period());
  return out;
}

}  // namespace mmassoc
