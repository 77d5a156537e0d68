#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "mmassoc/error.hpp"
#include "mmassoc/geometry.hpp"
#include "mmassoc/rng.hpp"

namespace mmassoc {

inline constexpr double kSpeedOfLight = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }

/// Radio parameters. Rates are in bits/s, powers in watts, gains are power ratios.
struct RadioParams {
  double carrier_freq_hz = 28e9;
  double bandwidth_hz = 50e6;
  double tx_power_w = 1.0;                               // 30 dBm
  double noise_density_w_per_hz = dbm_to_watts(-167.0);  // -174 dBm/Hz thermal + 7 dB noise figure
  double handover_cost = 0.1;                            // zeta
  double main_lobe_gain = 100.0;                         // 20 dB, tx and rx combined
  double side_lobe_gain = 0.1;                           // -10 dB
  double rician_k = 10.0;                                // 10 dB
  double theta_beam = 15.0 * std::numbers::pi / 180.0;
  double bs_height = 10.0;
  double vehicle_height = 2.0;
  double d_max = 0.0;  // meters; 0 = derive
  double r_max = 0.0;  // bits/s; 0 = derive
  double r_max_headroom = 10.0;  // fading power headroom (the LOS K factor) used when deriving r_max
  bool rx_beam_alignment = true;  // receiving BS's beam also discriminates interferers

  double noise_power() const { return noise_density_w_per_hz * bandwidth_hz; }
};

/// 3GPP UMi street-canyon path loss in dB; distance is clamped to 1 m.
inline double path_loss_db(double d3d, bool los, double freq_hz) {
  const double d = std::max(d3d, 1.0);
  const double f_ghz = freq_hz / 1e9;
  const double pl_los = 32.4 + 21.0 * std::log10(d) + 20.0 * std::log10(f_ghz);
  if (los) return pl_los;
  return std::max(pl_los, 35.3 * std::log10(d) + 22.4 + 21.3 * std::log10(f_ghz));
}

inline double path_gain(double d3d, bool los, double freq_hz) {
  return db_to_linear(-path_loss_db(d3d, los, freq_hz));
}

inline double distance_3d(Location a, Location b, double dh) {
  const double d2 = distance(a, b);
  return std::sqrt(d2 * d2 + dh * dh);
}

/// Shannon rate W*log2(1 + sinr).
inline double shannon_rate(double bandwidth_hz, double sinr) { return bandwidth_hz * std::log2(1.0 + sinr); }

/// Rate that a link could reach at 0 interference, used as the reward ceiling.
inline double derive_r_max(const RadioParams& r) {
  const double snr = r.tx_power_w * r.main_lobe_gain * path_gain(10.0, true, r.carrier_freq_hz) *
                     r.r_max_headroom / r.noise_power();
  return shannon_rate(r.bandwidth_hz, snr);
}

/// Distance at which the LOS SNR with unit fading drops to 0 dB.
inline double derive_d_max(const RadioParams& r) {
  const double budget_db = linear_to_db(r.tx_power_w * r.main_lobe_gain / r.noise_power());
  return std::pow(10.0, (budget_db - 32.4 - 20.0 * std::log10(r.carrier_freq_hz / 1e9)) / 21.0);
}

/// Fills in derived defaults (d_max, r_max) when they are unset.
inline RadioParams resolve(RadioParams r) {
  if (r.d_max <= 0.0) r.d_max = derive_d_max(r);
  if (r.r_max <= 0.0) r.r_max = derive_r_max(r);
  return r;
}

/// Small-scale fading of one vehicle-BS pair. `scatter` is the unit-power
/// diffuse part, evolved as AR(1); `coefficient` adds the Rician mean under LOS.
struct FadingState {
  std::complex<double> scatter{1.0, 0.0};
  std::complex<double> coefficient{1.0, 0.0};
  bool los = false;

  double power() const { return std::norm(coefficient); }
};

inline std::complex<double> complex_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline std::complex<double> fading_coefficient(std::complex<double> scatter, bool los, double rician_k) {
  if (!los) return scatter;
  return std::sqrt(rician_k / (rician_k + 1.0)) + std::sqrt(1.0 / (rician_k + 1.0)) * scatter;
}

/// Jakes autocorrelation J0(2 pi f_D dt) with f_D = v f_c / c.
inline double doppler_correlation(double velocity, double dt, double carrier_freq_hz) {
  const double f_d = velocity * carrier_freq_hz / kSpeedOfLight;
  return std::cyl_bessel_j(0.0, 2.0 * std::numbers::pi * f_d * dt);
}

/// Draw from the stationary distribution.
inline FadingState init_fading(Rng& rng, bool los, double rician_k) {
  FadingState s;
  s.scatter = complex_normal(rng);
  s.los = los;
  s.coefficient = fading_coefficient(s.scatter, los, rician_k);
  return s;
}

inline FadingState evolve_fading(const FadingState& state, double velocity, double dt, double carrier_freq_hz,
                                 bool los_now, double rician_k, Rng& rng) {
  if (!(dt > 0.0)) throw ContractViolation("period length must be positive");
  const double rho = doppler_correlation(velocity, dt, carrier_freq_hz);
  const auto w = complex_normal(rng);
  FadingState next;
  next.scatter = rho * state.scatter + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * w;
  next.los = los_now;
  next.coefficient = fading_coefficient(next.scatter, los_now, rician_k);
  return next;
}

/// Desired-link gain: beamforming gain x path gain x |fading|^2.
inline double link_gain(Location vehicle, const BaseStationSite& bs, const FadingState& fading,
                        const RadioParams& radio) {
  const double d3d = distance_3d(vehicle, bs.location, bs.antenna_height - radio.vehicle_height);
  return radio.main_lobe_gain * path_gain(d3d, fading.los, radio.carrier_freq_hz) * fading.power();
}

/// Association of the active vehicles: entry i is the serving BS of vehicle
/// slot i, or kNoBs when the vehicle is not transmitting.
using AssociationVector = std::vector<int>;
inline constexpr int kNoBs = -1;

/// Frozen per-period channel realization of all active vehicles towards all BSs.
class ChannelSnapshot {
 public:
  ChannelSnapshot() = default;
  ChannelSnapshot(std::size_t vehicles, std::size_t bss, const RadioParams& radio)
      : nv_(vehicles),
        nb_(bss),
        radio_(radio),
        path_(vehicles * bss, 0.0),
        phase_(vehicles * bss, {1.0, 0.0}),
        dir_(vehicles * bss),
        cos_half_(std::cos(0.5 * radio.theta_beam)) {}

  std::size_t vehicles() const { return nv_; }
  std::size_t bss() const { return nb_; }
  const RadioParams& radio() const { return radio_; }

  /// path gain x |fading|^2 without beamforming gain
  double& path(std::size_t i, std::size_t j) { return path_[i * nb_ + j]; }
  double path(std::size_t i, std::size_t j) const { return path_[i * nb_ + j]; }
  std::complex<double>& phase(std::size_t i, std::size_t j) { return phase_[i * nb_ + j]; }
  std::complex<double> phase(std::size_t i, std::size_t j) const { return phase_[i * nb_ + j]; }
  /// Unit vector from vehicle i towards BS j.
  Location& direction(std::size_t i, std::size_t j) { return dir_[i * nb_ + j]; }
  Location direction(std::size_t i, std::size_t j) const { return dir_[i * nb_ + j]; }

  double gain(std::size_t i, std::size_t j) const { return radio_.main_lobe_gain * path(i, j); }

  /// Gain of vehicle k's transmission, beamed at BS l, as seen by BS j while
  /// BS j listens to vehicle i. Each end of the link contributes the square
  /// root of the main or side lobe gain, depending on beam alignment; with
  /// rx_beam_alignment off the receiving end is taken as aligned with the
  /// transmitter's verdict.
  double cross_gain(std::size_t k, int l, std::size_t j, std::size_t i) const {
    const double c = cos_half_beam();
    const bool tx = static_cast<std::size_t>(l) == j ||
                    dot(direction(k, static_cast<std::size_t>(l)), direction(k, j)) > c;
    if (!radio_.rx_beam_alignment) return (tx ? radio_.main_lobe_gain : radio_.side_lobe_gain) * path(k, j);
    const bool rx = dot(direction(i, j), direction(k, j)) > c;
    const double tx_end = tx ? radio_.main_lobe_gain : radio_.side_lobe_gain;
    const double rx_end = rx ? radio_.main_lobe_gain : radio_.side_lobe_gain;
    return std::sqrt(tx_end * rx_end) * path(k, j);
  }

  /// Complex amplitude sqrt(P_v g) e^{i phi} that vehicle k (serving BS l) lands on BS j.
  std::complex<double> interference_term(std::size_t k, int l, std::size_t j, std::size_t i) const {
    return std::sqrt(radio_.tx_power_w * cross_gain(k, l, j, i)) * phase(k, j);
  }

  double cos_half_beam() const { return cos_half_; }

 private:
  std::size_t nv_ = 0, nb_ = 0;
  RadioParams radio_;
  std::vector<double> path_;
  std::vector<std::complex<double>> phase_;
  std::vector<Location> dir_;
  double cos_half_ = 1.0;
};

/// Coherent interference at BS j from every vehicle other than `i` that is
/// associated in `assoc`, excluding noise.
inline double interference_power(const ChannelSnapshot& ch, std::size_t i, std::size_t j,
                                 std::span<const int> assoc) {
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t k = 0; k < assoc.size(); ++k) {
    if (k == i || assoc[k] == kNoBs) continue;
    sum += ch.interference_term(k, assoc[k], j, i);
  }
  return std::norm(sum);
}

/// Interference plus noise at BS j while serving vehicle i under `assoc`.
inline double interference_at(const ChannelSnapshot& ch, std::size_t i, std::size_t j,
                              std::span<const int> assoc) {
  return ch.radio().noise_power() + interference_power(ch, i, j, assoc);
}

/// Pilot-phase interference: same coherent sum evaluated on the previous
/// period's association (kNoBs entries for vehicles absent then). Noise excluded.
inline double estimation_interference(const ChannelSnapshot& ch, std::size_t i, std::size_t j,
                                      std::span<const int> prev_assoc) {
  return interference_power(ch, i, j, prev_assoc);
}

/// Rate measured on the pilot to BS j.
inline double estimation_rate(const ChannelSnapshot& ch, std::size_t i, std::size_t j, double eta) {
  const auto& r = ch.radio();
  return shannon_rate(r.bandwidth_hz, r.tx_power_w * ch.gain(i, j) / (r.noise_power() + eta));
}

inline double handover_factor(int prev_bs, int j, double zeta) {
  return (prev_bs != kNoBs && prev_bs != j) ? 1.0 - zeta : 1.0;
}

/// Data-phase rate of vehicle i on BS j with handover cost.
inline double data_rate(const ChannelSnapshot& ch, std::size_t i, std::size_t j, int prev_bs,
                        std::span<const int> assoc) {
  const auto& r = ch.radio();
  const double sinr = r.tx_power_w * ch.gain(i, j) / interference_at(ch, i, j, assoc);
  return handover_factor(prev_bs, static_cast<int>(j), r.handover_cost) * shannon_rate(r.bandwidth_hz, sinr);
}

/// Per-vehicle data rates of a full association (0 for unassociated slots).
inline std::vector<double> data_rates(const ChannelSnapshot& ch, std::span<const int> assoc,
                                      std::span<const int> prev_bs) {
  std::vector<double> out(assoc.size(), 0.0);
  for (std::size_t i = 0; i < assoc.size(); ++i) {
    if (assoc[i] == kNoBs) continue;
    out[i] = data_rate(ch, i, static_cast<std::size_t>(assoc[i]), prev_bs[i], assoc);
  }
  return out;
}

/// Total network rate r(beta).
inline double total_rate(const ChannelSnapshot& ch, std::span<const int> assoc, std::span<const int> prev_bs) {
  double sum = 0.0;
  for (double r : data_rates(ch, assoc, prev_bs)) sum += r;
  return sum;
}

/// Incrementally maintained network rate for local-search and enumeration.
/// Moving one vehicle costs O(|U|) instead of O(|U|^2).
class NetworkRateEvaluator {
 public:
  NetworkRateEvaluator(const ChannelSnapshot& ch, std::span<const int> prev_bs, AssociationVector assoc)
      : ch_(ch), prev_(prev_bs.begin(), prev_bs.end()), assoc_(std::move(assoc)), amp_(assoc_.size()),
        rate_(assoc_.size(), 0.0) {
    for (std::size_t i = 0; i < assoc_.size(); ++i) refresh_amplitude(i);
    for (std::size_t i = 0; i < assoc_.size(); ++i) refresh_rate(i);
  }

  const AssociationVector& association() const { return assoc_; }
  double rate(std::size_t i) const { return rate_[i]; }
  double total() const {
    double s = 0.0;
    for (double r : rate_) s += r;
    return s;
  }

  void move(std::size_t k, int bs) {
    const int old = assoc_[k];
    if (old == bs) return;
    for (std::size_t i = 0; i < assoc_.size(); ++i) {
      if (i == k || assoc_[i] == kNoBs) continue;
      const auto j = static_cast<std::size_t>(assoc_[i]);
      if (old != kNoBs) amp_[i] -= ch_.interference_term(k, old, j, i);
      if (bs != kNoBs) amp_[i] += ch_.interference_term(k, bs, j, i);
    }
    assoc_[k] = bs;
    refresh_amplitude(k);
    for (std::size_t i = 0; i < assoc_.size(); ++i) refresh_rate(i);
  }

 private:
  void refresh_amplitude(std::size_t i) {
    amp_[i] = {0.0, 0.0};
    if (assoc_[i] == kNoBs) return;
    const auto j = static_cast<std::size_t>(assoc_[i]);
    for (std::size_t k = 0; k < assoc_.size(); ++k) {
      if (k == i || assoc_[k] == kNoBs) continue;
      amp_[i] += ch_.interference_term(k, assoc_[k], j, i);
    }
  }

  void refresh_rate(std::size_t i) {
    if (assoc_[i] == kNoBs) {
      rate_[i] = 0.0;
      return;
    }
    const auto& r = ch_.radio();
    const auto j = static_cast<std::size_t>(assoc_[i]);
    const double sinr = r.tx_power_w * ch_.gain(i, j) / (r.noise_power() + std::norm(amp_[i]));
    rate_[i] = handover_factor(prev_[i], assoc_[i], r.handover_cost) * shannon_rate(r.bandwidth_hz, sinr);
  }

  const ChannelSnapshot& ch_;
  std::vector<int> prev_;
  AssociationVector assoc_;
  std::vector<std::complex<double>> amp_;
  std::vector<double> rate_;
};

}  // namespace mmassoc
