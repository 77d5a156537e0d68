#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "mmassoc/channel.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/rng.hpp"

namespace mmassoc {

struct TsParams {
  double alpha_ts = 1.0;
  double zeta = 0.1;               // handover cost the agent accounts for
  double reward_unit = 1.0;        // bits/s per unit of the exploration width
  bool sigma_is_variance = false;  // treat alpha_ts/(n+1) as a variance instead of a std deviation
};

/// Per-vehicle Thompson sampling over the competitive set. The agent learns the
/// discrepancy between the central estimate and the rate it actually gets.
class TsAgentState {
 public:
  TsAgentState(int arms, TsParams params) : params_(params), mu_(arms, 0.0), n_(arms, 0) {}

  const TsParams& params() const { return params_; }
  int arms() const { return static_cast<int>(mu_.size()); }
  double discrepancy(int j) const { return mu_[j]; }
  std::uint64_t pulls(int j) const { return n_[j]; }
  int prev_bs() const { return prev_bs_; }
  void set_prev_bs(int j) { prev_bs_ = j; }
  /// Overwrites arm j's statistics; used by snapshot import.
  void restore(int j, double discrepancy, std::uint64_t pulls) {
    mu_[j] = discrepancy;
    n_[j] = pulls;
  }

  bool is_handover(int j) const { return prev_bs_ != kNoBs && prev_bs_ != j; }

  /// Standard deviation of arm j's Gaussian, in bits/s.
  double sigma(int j) const {
    const double s = params_.alpha_ts / (static_cast<double>(n_[j]) + 1.0);
    return params_.reward_unit * (params_.sigma_is_variance ? std::sqrt(s) : s);
  }

  /// Predicted rate S_j = (mu_ccucb - mu_ts[j]) (1 - zeta [handover]).
  double predict_rate(int j, double mu_ccucb, bool handover) const {
    return (mu_ccucb - mu_[j]) * (handover ? 1.0 - params_.zeta : 1.0);
  }

  /// Samples Z_j ~ N(S_j, sigma_j) for every competitive arm and returns the
  /// argmax (ties -> lowest id). `mu_row` holds the central estimate per arm.
  int select_bs(std::span<const int> competitive, std::span<const double> mu_row, Rng& rng) const {
    if (competitive.empty()) throw ContractViolation("competitive set is empty");
    std::normal_distribution<double> unit(0.0, 1.0);
    int best = competitive.front();
    double best_z = -std::numeric_limits<double>::infinity();
    for (int j : competitive) {
      const double z = predict_rate(j, mu_row[j], is_handover(j)) + sigma(j) * unit(rng);
      if (z > best_z) {
        best_z = z;
        best = j;
      }
    }
    return best;
  }

  /// Records the discrepancy between the estimate used at decision time and the
  /// observed rate de-rated for the handover cost; the chosen arm becomes prev_bs.
  void update(int chosen, double mu_ccucb_at_choice, double observed_rate, bool handover) {
    const double factor = handover ? 1.0 - params_.zeta : 1.0;
    const double sample = mu_ccucb_at_choice - observed_rate / factor;
    n_[chosen] += 1;
    mu_[chosen] += (sample - mu_[chosen]) / static_cast<double>(n_[chosen]);
    prev_bs_ = chosen;
  }

 private:
  TsParams params_;
  std::vector<double> mu_;
  std::vector<std::uint64_t> n_;
  int prev_bs_ = kNoBs;
};

}  // namespace mmassoc
