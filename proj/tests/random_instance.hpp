#pragma once

#include <numbers>
#include <random>
#include <vector>

#include "mmassoc/channel.hpp"

namespace mmassoc::testing {

struct Instance {
  ChannelSnapshot ch;
  std::vector<int> prev_bs;
};

// Vehicles and BSs scattered over a 300 m square with UMi path loss and
// Rician/Rayleigh fading; roughly the regime of the desk scenario.
inline Instance random_instance(std::mt19937_64& rng, std::size_t nv, std::size_t nb, double power_scale = 1.0,
                         bool with_prev = true) {
  std::uniform_real_distribution<double> pos(0, 300), ph(0, 2 * std::numbers::pi), u(0, 1);
  RadioParams r = resolve(RadioParams{});
  r.tx_power_w *= power_scale;
  std::vector<Location> veh(nv), bss(nb);
  for (auto& v : veh) v = {pos(rng), pos(rng)};
  for (auto& b : bss) b = {pos(rng), pos(rng)};
  Instance in{ChannelSnapshot(nv, nb, r), {}};
  Rng frng(rng());
  for (std::size_t i = 0; i < nv; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      const bool los = u(rng) < 0.6;
      const double d3 = distance_3d(veh[i], bss[j], 8.0);
      in.ch.path(i, j) = path_gain(d3, los, r.carrier_freq_hz) * init_fading(frng, los, r.rician_k).power();
      in.ch.phase(i, j) = std::polar(1.0, ph(rng));
      const Location d = bss[j] - veh[i];
      in.ch.direction(i, j) = (1.0 / norm(d)) * d;
    }
    in.prev_bs.push_back(with_prev ? static_cast<int>(rng() % (nb + 1)) - 1 : kNoBs);
  }
  return in;
}

}  // namespace mmassoc::testing
