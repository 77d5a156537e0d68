#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "mmassoc/channel.hpp"
#include "mmassoc/error.hpp"
#include "mmassoc/rng.hpp"

namespace mmassoc {

enum class PolicyKind {
  sd_cc_ucb,
  sd_cc_ucb_no_handover,
  cc_ucb_only,
  cucb,
  plain_ts,
  max_sinr,
  wcs,
  exhaustive_oracle,
  random,
};

inline constexpr std::array<std::pair<PolicyKind, std::string_view>, 9> kPolicyNames{{
    {PolicyKind::sd_cc_ucb, "sd_cc_ucb"},
    {PolicyKind::sd_cc_ucb_no_handover, "sd_cc_ucb_no_handover"},
    {PolicyKind::cc_ucb_only, "cc_ucb_only"},
    {PolicyKind::cucb, "cucb"},
    {PolicyKind::plain_ts, "plain_ts"},
    {PolicyKind::max_sinr, "max_sinr"},
    {PolicyKind::wcs, "wcs"},
    {PolicyKind::exhaustive_oracle, "exhaustive_oracle"},
    {PolicyKind::random, "random"},
}};

inline std::string_view to_string(PolicyKind p) {
  for (auto [k, name] : kPolicyNames)
    if (k == p) return name;
  return "unknown";
}

inline std::optional<PolicyKind> parse_policy(std::string_view s) {
  for (auto [k, name] : kPolicyNames)
    if (name == s) return k;
  return std::nullopt;
}

/// Policies that need the central CC-UCB / CUCB learner.
inline bool uses_learner(PolicyKind p) {
  return p == PolicyKind::sd_cc_ucb || p == PolicyKind::sd_cc_ucb_no_handover || p == PolicyKind::cc_ucb_only ||
         p == PolicyKind::cucb;
}

/// Policies that see the full instantaneous channel.
inline bool uses_oracle_csi(PolicyKind p) {
  return p == PolicyKind::max_sinr || p == PolicyKind::wcs || p == PolicyKind::exhaustive_oracle;
}

/// Each vehicle picks the BS with the best SINR, interference taken from the
/// previous association.
inline AssociationVector max_sinr_associate(const ChannelSnapshot& ch, std::span<const int> prev_assoc) {
  const auto& r = ch.radio();
  AssociationVector out(ch.vehicles(), kNoBs);
  for (std::size_t i = 0; i < ch.vehicles(); ++i) {
    double best = -1.0;
    for (std::size_t j = 0; j < ch.bss(); ++j) {
      const double sinr =
          r.tx_power_w * ch.gain(i, j) / (r.noise_power() + estimation_interference(ch, i, j, prev_assoc));
      if (sinr > best) {
        best = sinr;
        out[i] = static_cast<int>(j);
      }
    }
  }
  return out;
}

struct WcsResult {
  AssociationVector assoc;
  double total_rate = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// Worst-connection swapping. Starting from max-SINR, repeatedly take the
/// worst-served vehicle that has an improving move and move it to the BS that
/// maximizes the network rate; stop at a single-move local optimum or after
/// `max_iters` moves.
inline WcsResult wcs_associate(const ChannelSnapshot& ch, std::span<const int> prev_bs,
                               std::span<const int> prev_assoc, int max_iters) {
  WcsResult res;
  NetworkRateEvaluator eval(ch, prev_bs, max_sinr_associate(ch, prev_assoc));
  const std::size_t n = ch.vehicles();
  std::vector<std::size_t> order(n);
  res.converged = false;
  while (true) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eval.rate(a) < eval.rate(b); });
    bool moved = false;
    for (std::size_t i : order) {
      const double base = eval.total();
      const int home = eval.association()[i];
      int best_bs = home;
      double best_total = base;
      for (std::size_t j = 0; j < ch.bss(); ++j) {
        if (static_cast<int>(j) == home) continue;
        eval.move(i, static_cast<int>(j));
        const double t = eval.total();
        if (t > best_total * (1.0 + 1e-12)) {
          best_total = t;
          best_bs = static_cast<int>(j);
        }
      }
      eval.move(i, best_bs);
      if (best_bs != home) {
        moved = true;
        break;
      }
    }
    if (!moved) {
      res.converged = true;
      break;
    }
    if (++res.iterations >= max_iters) break;
  }
  res.assoc = eval.association();
  res.total_rate = eval.total();
  return res;
}

/// Number of association vectors, saturating at `cap + 1`.
inline std::uint64_t association_count(std::size_t vehicles, std::size_t bss, std::uint64_t cap) {
  std::uint64_t c = 1;
  for (std::size_t i = 0; i < vehicles; ++i) {
    c *= bss;
    if (c > cap) return cap + 1;
  }
  return c;
}

struct OracleResult {
  AssociationVector assoc;
  double total_rate = 0.0;
};

/// Exact maximizer of the network rate by full enumeration (odometer order,
/// one vehicle moved per step). Ties keep the lexicographically first vector.
inline OracleResult exhaustive_oracle(const ChannelSnapshot& ch, std::span<const int> prev_bs,
                                      std::uint64_t limit = 1'000'000) {
  const std::size_t n = ch.vehicles();
  const std::size_t nb = ch.bss();
  if (association_count(n, nb, limit) > limit) throw InfeasibleScaleError("association space exceeds limit");
  OracleResult best;
  if (n == 0) return best;
  NetworkRateEvaluator eval(ch, prev_bs, AssociationVector(n, 0));
  best.assoc = eval.association();
  best.total_rate = eval.total();
  AssociationVector digits(n, 0);
  while (true) {
    std::size_t pos = n;
    while (true) {
      if (pos == 0) return best;
      --pos;
      if (static_cast<std::size_t>(digits[pos]) + 1 < nb) {
        eval.move(pos, ++digits[pos]);
        break;
      }
      digits[pos] = 0;
      eval.move(pos, 0);
    }
    const double t = eval.total();
    if (t > best.total_rate) {
      best.total_rate = t;
      best.assoc = eval.association();
    }
  }
}

/// Uniformly random association; used as a floor reference.
inline AssociationVector random_associate(std::size_t vehicles, std::size_t bss, Rng& rng) {
  AssociationVector out(vehicles);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(bss) - 1);
  for (auto& a : out) a = pick(rng);
  return out;
}

/// Context-free Thompson sampling on the observed data rate.
class PlainTsState {
 public:
  PlainTsState(int arms, double alpha_ts, double reward_unit)
      : alpha_ts_(alpha_ts), unit_(reward_unit), mu_(arms, 0.0), n_(arms, 0) {}

  double mean(int j) const { return mu_[j]; }
  std::uint64_t pulls(int j) const { return n_[j]; }
  double sigma(int j) const { return unit_ * alpha_ts_ / (static_cast<double>(n_[j]) + 1.0); }

  void update(int j, double rate) {
    n_[j] += 1;
    mu_[j] += (rate - mu_[j]) / static_cast<double>(n_[j]);
  }

  int arms() const { return static_cast<int>(mu_.size()); }

 private:
  double alpha_ts_;
  double unit_;
  std::vector<double> mu_;
  std::vector<std::uint64_t> n_;
};

/// Gaussian sample per arm around the empirical rate; argmax, ties -> lowest id.
inline int plain_ts_decide(const PlainTsState& state, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  int best = 0;
  double best_z = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < state.arms(); ++j) {
    const double z = state.mean(j) + state.sigma(j) * unit(rng);
    if (z > best_z) {
      best_z = z;
      best = j;
    }
  }
  return best;
}

}  // namespace mmassoc
