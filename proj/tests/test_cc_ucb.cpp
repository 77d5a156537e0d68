#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "mmassoc/cc_ucb.hpp"

using namespace mmassoc;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

LearnerTables make_tables(int arms, LearnerParams prm = {}, int n = 4) {
  std::vector<BaseStationSite> sites;
  for (int j = 0; j < arms; ++j) sites.push_back({j, {10.0 + 30.0 * j, 10.0}, 10.0});
  return LearnerTables(ContextGrid(2, n, n, 1.0, 20.0, WorldBounds{100, 100}), sites, prm, 0.3, 1000.0);
}

// The estimate phase written out directly, without the library's helpers.
int reference_estimate(const LearnerTables& tb, ContextId d, std::vector<int>& e_out) {
  const int arms = tb.arms();
  std::uint64_t n_d = 0;
  for (int j = 0; j < arms; ++j) n_d += tb.count(d, j);
  int je = -1;
  for (int j = 0; j < arms; ++j)
    if (tb.count(d, j) >= n_d / arms && (je < 0 || tb.mu(d, j) > tb.mu(d, je))) je = j;
  e_out.clear();
  for (int j = 0; j < arms; ++j) {
    const double f = tb.phi_inf(d, j);
    if (j == je || std::isinf(f) || f >= tb.mu(d, je)) e_out.push_back(j);
  }
  int best = e_out.front();
  double best_idx = -1e300;
  for (int j : e_out) {
    double idx;
    if (tb.count(d, j) == 0) {
      idx = 1e300;
    } else {
      idx = tb.mu(d, j) / tb.params().reward_unit +
            tb.params().alpha * std::sqrt(2 * std::log(double(n_d)) / double(tb.count(d, j)));
    }
    if (idx > best_idx) {
      best_idx = idx;
      best = j;
    }
  }
  return best;
}

}  // namespace

TEST(UcbIndex, Examples) {
  EXPECT_LT(rel(ucb_index(5, 8, 2, 1), 5 + std::sqrt(std::log(8.0))), 1e-9);
  EXPECT_NEAR(ucb_index(5, 8, 2, 1), 6.4420, 5e-5);
  EXPECT_EQ(ucb_index(5, 8, 2, 0), 5.0);
  EXPECT_EQ(ucb_index(5, 1, 1, 1), 5.0);
  EXPECT_EQ(ucb_index(5, 0, 0, 1), kUnexplored);
}

TEST(PseudoReward, Examples) {
  EXPECT_LT(rel(pseudo_reward(200e6, true, 0.1, 1000e6), 280e6), 1e-9);
  EXPECT_EQ(pseudo_reward(200e6, false, 0.1, 1000e6), 1000e6);
  EXPECT_EQ(pseudo_reward(200e6, true, 0.0, 1000e6), 200e6);
  EXPECT_EQ(pseudo_reward(2000e6, true, 0.0, 1000e6), 1000e6);  // clamped
}

TEST(LearnerTables, ClubRunningMeanAndFloor) {
  auto tb = make_tables(2);
  const ContextId src{0, 0, 0}, dst{0, 1, 1};
  EXPECT_FALSE(tb.has_floor(dst, 1));
  tb.record_pseudo_reward(1, src, dst, 280);
  EXPECT_EQ(tb.phi(1, src, dst)->mean, 280);
  EXPECT_EQ(tb.phi_inf(dst, 1), 280);
  tb.record_pseudo_reward(1, src, dst, 320);
  EXPECT_EQ(tb.phi(1, src, dst)->mean, 300);
  EXPECT_EQ(tb.phi(1, src, dst)->count, 2u);
  EXPECT_EQ(tb.phi_inf(dst, 1), 280);  // lazy floor
  EXPECT_EQ(tb.stale_floor_events(), 1u);
  EXPECT_FALSE(tb.has_floor(dst, 0));
}

TEST(LearnerTables, RewardRunningMean) {
  auto tb = make_tables(2, {.r_max = 1e9});
  const ContextId d{1, 2, 3};
  tb.record_reward(d, 0, 100);
  EXPECT_EQ(tb.mu(d, 0), 100);
  tb.record_reward(d, 0, 200);
  EXPECT_EQ(tb.mu(d, 0), 150);
  EXPECT_EQ(tb.count(d, 0), 2u);
  tb.record_reward(d, 1, 2e9);
  EXPECT_EQ(tb.mu(d, 1), 1e9);
  EXPECT_EQ(tb.clamped_rewards(), 1u);
}

TEST(CompetitiveSet, Examples) {
  auto tb = make_tables(4);
  const ContextId d{0, 0, 0};
  tb.set_phi_inf(d, 1, 150);
  tb.set_phi_inf(d, 2, 250);
  const auto e = competitive_set(tb, d, 0, 200);
  EXPECT_EQ(e, (std::vector<int>{0, 2, 3}));
  tb.set_phi_inf(d, 0, 1);  // j_e always stays
  EXPECT_EQ(competitive_set(tb, d, 0, 200), (std::vector<int>{0, 2, 3}));
}

TEST(EstimatePhase, HandTrace) {
  auto tb = make_tables(3, {.alpha = 1.0, .r_max = 100.0, .reward_unit = 1.0});
  const ContextId d{0, 2, 2};
  tb.set_reward(d, 0, 10, 3);
  tb.set_reward(d, 1, 12, 2);
  tb.set_reward(d, 2, 20, 1);
  tb.set_phi_inf(d, 0, 11);
  const auto dec = estimate_phase(tb, d);
  EXPECT_EQ(best_empirical_arm(tb, d), 1);
  EXPECT_EQ(dec.best_empirical, 1);
  EXPECT_EQ(dec.competitive_set, (std::vector<int>{1, 2}));
  EXPECT_EQ(dec.estimated_bs, 2);
  EXPECT_NEAR(ucb_index(12, 6, 2, 1), 13.339, 5e-4);
  EXPECT_NEAR(ucb_index(20, 6, 1, 1), 21.893, 5e-4);
  EXPECT_EQ(dec.mu_row, (std::vector<double>{10, 12, 20}));
}

TEST(EstimatePhase, ColdStartAndSingleArm) {
  auto tb = make_tables(3);
  const auto dec = estimate_phase(tb, {0, 0, 0});
  EXPECT_EQ(dec.estimated_bs, 0);
  EXPECT_EQ(dec.competitive_set, (std::vector<int>{0, 1, 2}));
  auto one = make_tables(1);
  one.record_reward({0, 0, 0}, 0, 0.5);
  const auto d1 = estimate_phase(one, {0, 0, 0});
  EXPECT_EQ(d1.estimated_bs, 0);
  EXPECT_EQ(d1.competitive_set, std::vector<int>{0});
}

TEST(EstimatePhase, MatchesStraightLineReimplementation) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> cnt(0, 6), pick(0, 1);
  std::uniform_real_distribution<double> val(0, 1);
  for (int trial = 0; trial < 10000; ++trial) {
    auto tb = make_tables(4, {.alpha = 0.5 * pick(rng) + 0.25, .r_max = 1.0, .reward_unit = 0.5});
    const ContextId d{1, 1, 1};
    for (int j = 0; j < 4; ++j) {
      const int c = cnt(rng);
      if (c > 0) tb.set_reward(d, j, std::round(val(rng) * 8) / 8, c);
      if (pick(rng)) tb.set_phi_inf(d, j, std::round(val(rng) * 8) / 8);
    }
    std::vector<int> e;
    const int expect = reference_estimate(tb, d, e);
    const auto dec = estimate_phase(tb, d);
    ASSERT_EQ(dec.competitive_set, e) << "trial " << trial;
    ASSERT_EQ(dec.estimated_bs, expect) << "trial " << trial;
    ASSERT_TRUE(std::find(e.begin(), e.end(), dec.estimated_bs) != e.end());
  }
}

TEST(CorrelatedContexts, ExcludesOwnAndRespectsVelocity) {
  auto tb = make_tables(1, {.infraction_p = 0.1, .r_max = 1e9}, 10);
  PilotSample s{.vehicle = 1, .arm = 0, .reward = 1e8, .l_start = {20, 10}, .l_end = {21, 10}, .velocity = 5.0};
  s.context = context_of(s.velocity, s.l_start, tb.grid());
  const auto ctx = correlated_contexts(tb, s);
  ASSERT_FALSE(ctx.empty());
  for (const auto& d : ctx) {
    EXPECT_FALSE(d == s.context);
    EXPECT_EQ(d.iv, s.context.iv);
  }
  // sitting on the BS: no region, tables untouched
  s.l_start = s.l_end = tb.sites()[0].location;
  EXPECT_TRUE(correlated_contexts(tb, s).empty());
  const auto v = tb.version();
  club_update(tb, s);
  EXPECT_EQ(tb.version(), v);
}

TEST(UpdatePhase, BatchEqualsSequentialInIdOrder) {
  const LearnerParams prm{.alpha = 1, .infraction_p = 0.1, .r_max = 1e9, .reward_unit = 1e8};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(1, 99), rate(0, 1e9), vel(1, 20);
  std::vector<PilotSample> batch;
  auto tb_probe = make_tables(3, prm);
  for (std::uint64_t id = 20; id > 0; --id) {
    PilotSample s{.vehicle = id, .arm = static_cast<int>(id % 3), .reward = rate(rng)};
    s.l_start = {pos(rng), pos(rng)};
    s.l_end = s.l_start + Location{0.5, 0.5};
    s.velocity = vel(rng);
    s.context = context_of(s.velocity, s.l_start, tb_probe.grid());
    batch.push_back(s);
  }
  auto a = make_tables(3, prm), b = make_tables(3, prm);
  update_phase(a, batch);
  auto sorted = batch;
  std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.vehicle < y.vehicle; });
  for (const auto& s : sorted) update_phase(b, {s});
  for (std::size_t f = 0; f < a.grid().size(); ++f) {
    for (int j = 0; j < 3; ++j) {
      const auto d = a.grid().unflat(f);
      EXPECT_EQ(a.mu(d, j), b.mu(d, j));
      EXPECT_EQ(a.count(d, j), b.count(d, j));
      EXPECT_EQ(a.phi_inf(d, j), b.phi_inf(d, j));
    }
  }
  EXPECT_EQ(a.phi_entries().size(), b.phi_entries().size());
  for (const auto& [k, e] : a.phi_entries()) {
    ASSERT_TRUE(b.phi_entries().count(k));
    EXPECT_EQ(e.mean, b.phi_entries().at(k).mean);
  }
}

TEST(UpdatePhase, UncorrelatedSkipsClub) {
  auto tb = make_tables(2, {.r_max = 1e9, .correlated = false});
  PilotSample s{.vehicle = 1, .arm = 0, .reward = 1e8, .l_start = {50, 50}, .l_end = {51, 50}, .velocity = 5.0};
  s.context = context_of(s.velocity, s.l_start, tb.grid());
  update_phase(tb, {s});
  EXPECT_TRUE(tb.phi_entries().empty());
  EXPECT_EQ(tb.count(s.context, 0), 1u);
}

// Random update sequences checked against a brute-force replay: the running
// means equal the arithmetic means of their inputs, and the floor equals the
// lowest value any entry into that destination has ever held.
TEST(Floor, BruteForceOverRandomSequences) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ctx(0, 3), arm(0, 1), len(1, 30);
  std::uniform_real_distribution<double> val(0, 1000);
  std::uint64_t stale_total = 0;
  for (int seq = 0; seq < 10000; ++seq) {
    auto tb = make_tables(2, {}, 2);  // 2 velocity bands x 2 x 2 = 8 contexts
    std::map<std::tuple<int, std::size_t, std::size_t>, std::vector<double>> inputs;
    std::map<std::pair<std::size_t, int>, double> lowest_ever;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      const int j = arm(rng);
      const auto src = static_cast<std::size_t>(ctx(rng)), dst = static_cast<std::size_t>(ctx(rng) + 4);
      const double s = std::round(val(rng));
      tb.record_pseudo_reward(j, tb.grid().unflat(src), tb.grid().unflat(dst), s);
      auto& in = inputs[{j, src, dst}];
      in.push_back(s);
      double sum = 0;
      for (double x : in) sum += x;
      const double mean = sum / static_cast<double>(in.size());
      auto [it, fresh] = lowest_ever.try_emplace({dst, j}, mean);
      if (!fresh) it->second = std::min(it->second, mean);
    }
    for (const auto& [key, in] : inputs) {
      const auto [j, src, dst] = key;
      const auto* e = tb.phi(j, tb.grid().unflat(src), tb.grid().unflat(dst));
      ASSERT_NE(e, nullptr);
      double sum = 0;
      for (double x : in) sum += x;
      ASSERT_LE(rel(e->mean, sum / static_cast<double>(in.size())), 1e-9);
      ASSERT_EQ(e->count, in.size());
    }
    for (std::size_t f = 0; f < tb.grid().size(); ++f) {
      for (int j = 0; j < 2; ++j) {
        const auto d = tb.grid().unflat(f);
        const auto it = lowest_ever.find({f, j});
        if (it == lowest_ever.end()) {
          ASSERT_FALSE(tb.has_floor(d, j));
          continue;
        }
        ASSERT_LE(rel(tb.phi_inf(d, j), it->second), 1e-9);
        // never above the current minimum; equal to it when nothing went stale
        double cur = kUnexplored;
        for (const auto& [key, in] : inputs)
          if (std::get<0>(key) == j && std::get<2>(key) == f)
            cur = std::min(cur, tb.phi(j, tb.grid().unflat(std::get<1>(key)), d)->mean);
        ASSERT_LE(tb.phi_inf(d, j), cur * (1 + 1e-12));
        if (tb.stale_floor_events() == 0) ASSERT_LE(rel(tb.phi_inf(d, j), cur), 1e-9);
      }
    }
    stale_total += tb.stale_floor_events();
  }
  EXPECT_GT(stale_total, 0u);
}
