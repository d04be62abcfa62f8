#include <gtest/gtest.h>

#include <algorithm>

#include "otsknn/bench.hpp"
#include "otsknn/knn.hpp"
#include "support/ots_oracle.hpp"

using namespace otsknn;
using testing_support::load_fixture;

namespace {

TrainingRecord record(std::vector<double> demand, Statuses x = {}) {
  TrainingRecord r;
  r.angles.assign(demand.size(), 0.0);
  r.demand = std::move(demand);
  r.statuses = std::move(x);
  return r;
}

// Three buses, two switchable lines: a parallel 1-2 circuit and a 1-3 chord.
Network two_switch() {
  return parse_native(
      "base 1\nbus 1 0 1\nbus 2 20 0\nbus 3 30 0\n"
      "gen 1 10 0 200\ngen 3 40 0 200\n"
      "line 1 1 2 1 100 0\nline 2 2 3 1 100 0\nline 3 1 2 1 100 1\nline 4 1 3 1 100 1\n");
}

// Bus 2 needs 50 MW; the fixed line carries 30, the switchable twin 100.
Network twin_line() {
  return parse_native("base 1\nbus 1 0 1\nbus 2 50 0\ngen 1 10 0 200\nline 1 1 2 1 30 0\nline 2 1 2 1 100 1\n");
}

MethodConfig exact() {
  MethodConfig c;
  c.mip.gap_tolerance = 1e-9;
  return c;
}

struct Family {
  Network net;
  TrainingStore store;
};

const Family& mesh_b_family() {
  static const Family f = [] {
    Family out{load_fixture("mesh_b.net"), {}};
    TrainConfig cfg;
    cfg.method = exact();
    cfg.workers = 4;
    out.store = build_training_store(out.net, generate_instances(out.net, 30, 3), cfg);
    return out;
  }();
  return f;
}

std::vector<TrainingRecord> without(const std::vector<TrainingRecord>& all, std::size_t t) {
  std::vector<TrainingRecord> out;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (i != t) out.push_back(all[i]);
  return out;
}

std::set<std::pair<std::size_t, int>> fixed_set(const Unanimity& u) { return {u.fixed.begin(), u.fixed.end()}; }

}  // namespace

TEST(Methods, NamesRoundTrip) {
  for (auto m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_FALSE(parse_method("knn"));
  EXPECT_FALSE(uses_k(Method::Ben));
  EXPECT_FALSE(uses_k(Method::AllhatM));
  EXPECT_TRUE(uses_k(Method::KnnBhatM));
}

TEST(Neighbors, Pythagorean) {
  std::vector<TrainingRecord> t = {record({0, 0}), record({3, 4}), record({6, 8})};
  auto nb = nearest_neighbors(t, std::vector<double>{0, 0}, 2);
  EXPECT_EQ(nb.indices, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(nb.distances[0], 0.0);
  EXPECT_DOUBLE_EQ(nb.distances[1], 5.0);
}

TEST(Neighbors, AllAndTies) {
  std::vector<TrainingRecord> t = {record({5, 0}), record({1, 0}), record({-1, 0}), record({0, 3})};
  auto all = nearest_neighbors(t, std::vector<double>{0, 0}, 4);
  EXPECT_EQ(all.indices, (std::vector<std::size_t>{1, 2, 3, 0}));
  EXPECT_TRUE(std::is_sorted(all.distances.begin(), all.distances.end()));
  EXPECT_EQ(nearest_neighbors(t, std::vector<double>{0, 0}, 1).indices, (std::vector<std::size_t>{1}));
}

TEST(Neighbors, KOutOfRange) {
  std::vector<TrainingRecord> t = {record({0}), record({1})};
  EXPECT_THROW(nearest_neighbors(t, std::vector<double>{0}, 0), std::invalid_argument);
  EXPECT_THROW(nearest_neighbors(t, std::vector<double>{0}, 3), std::invalid_argument);
  EXPECT_THROW(nearest_neighbors(t, std::vector<double>{0, 1}, 1), std::invalid_argument);
}

TEST(Unanimity, Examples) {
  auto u = unanimity_bounds({{1, 0}, {1, 1}});
  EXPECT_EQ(u.fixed, (std::map<std::size_t, int>{{0, 1}}));
  EXPECT_EQ(u.free, (std::vector<std::size_t>{1}));

  u = unanimity_bounds({{0, 1, 1}});
  EXPECT_EQ(u.fixed.size(), 3u);
  EXPECT_TRUE(u.free.empty());

  u = unanimity_bounds({{1, 0}, {0, 1}});
  EXPECT_TRUE(u.fixed.empty());
  EXPECT_THROW(unanimity_bounds({}), std::invalid_argument);
}

TEST(KnnD, RoundedMean) {
  const auto net = two_switch();
  std::vector<TrainingRecord> t = {record({0, 20, 30}, {1, 0}), record({0, 21, 30}, {1, 1}), record({0, 22, 30}, {1, 0})};
  const std::vector<double> d{0, 20, 30};
  auto out = knn_d(t, net, d, 3);
  EXPECT_EQ(*out.statuses, (Statuses{1, 0}));
  EXPECT_EQ(out.cost, evaluate_cost(net, d, {1, 0}));
  EXPECT_EQ(out.fixed_binaries, 2u);
  EXPECT_FALSE(out.mip_status.has_value());
}

TEST(KnnD, HalfRoundsToOne) {
  const auto net = two_switch();
  std::vector<TrainingRecord> t = {record({0, 20, 30}, {1, 0}), record({0, 21, 30}, {0, 1})};
  EXPECT_EQ(*knn_d(t, net, std::vector<double>{0, 20, 30}, 2).statuses, (Statuses{1, 1}));
}

TEST(KnnD, SingleNeighborCopied) {
  const auto net = two_switch();
  std::vector<TrainingRecord> t = {record({0, 25, 30}, {1, 1}), record({0, 20, 31}, {0, 1}), record({0, 10, 10}, {1, 0})};
  EXPECT_EQ(*knn_d(t, net, std::vector<double>{0, 20, 30}, 1).statuses, (Statuses{0, 1}));
}

TEST(KnnD, InfeasibleTopologyIsInfiniteCost) {
  const auto net = twin_line();
  std::vector<TrainingRecord> t = {record({0, 50}, {0})};
  auto out = knn_d(t, net, std::vector<double>{0, 50}, 1);
  EXPECT_FALSE(out.cost.is_finite());
  EXPECT_TRUE(out.angles.empty());
}

TEST(KnnLP, PicksFiniteNeighbor) {
  const auto net = twin_line();
  std::vector<TrainingRecord> t = {record({0, 50}, {0}), record({0, 51}, {1})};
  auto out = knn_lp(t, net, std::vector<double>{0, 50}, 2);
  EXPECT_EQ(*out.statuses, Statuses{1});
  EXPECT_NEAR(out.cost.value(), 500.0, 1e-6);
  EXPECT_EQ(out.lp_solves, 2u);
}

TEST(KnnLP, EqualCostsKeepCloserNeighbor) {
  const auto net = two_switch();
  // Zero demand: every topology costs 0.
  std::vector<TrainingRecord> t = {record({0, 1, 0}, {0, 1}), record({0, 0, 0}, {1, 0})};
  auto out = knn_lp(t, net, std::vector<double>{0, 0, 0}, 2);
  EXPECT_EQ(*out.statuses, (Statuses{1, 0}));
}

TEST(KnnLP, CacheReusesTopologies) {
  const auto net = twin_line();
  std::vector<TrainingRecord> t = {record({0, 50}, {1}), record({0, 49}, {1}), record({0, 48}, {0})};
  CostCache cache;
  const std::vector<double> d{0, 50};
  auto a = knn_lp(t, net, d, 3, {}, &cache);
  EXPECT_EQ(cache.size(), 2u);
  auto b = knn_lp(t, net, d, 3, {}, &cache);
  EXPECT_EQ(a.cost, b.cost);
  EXPECT_DOUBLE_EQ(a.wall_time, b.wall_time);
}

TEST(Family, FullyFixedIsOneLp) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  auto training = without(r, 0);
  for (auto v : {FamilyVariant::B, FamilyVariant::BM}) {
    auto out = knn_family(training, f.net, r[0].demand, 1, v, exact());
    auto nb = nearest_neighbors(training, r[0].demand, 1);
    EXPECT_EQ(out.nodes, 1);
    EXPECT_EQ(out.fixed_binaries, f.net.switchable_count());
    EXPECT_EQ(*out.statuses, training[nb.indices[0]].statuses);
    auto c = evaluate_cost(f.net, r[0].demand, training[nb.indices[0]].statuses);
    EXPECT_NEAR(out.cost.value(), c.value(), 1e-6 * std::abs(c.value()));
  }
}

TEST(Family, BmBoundsNoLooserThanB) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  for (std::size_t t = 0; t < 10; ++t) {
    auto training = without(r, t);
    for (std::size_t k : {2, 5, 10}) {
      auto b = knn_family(training, f.net, r[t].demand, k, FamilyVariant::B, exact());
      auto bm = knn_family(training, f.net, r[t].demand, k, FamilyVariant::BM, exact());
      EXPECT_EQ(b.fixed_binaries, bm.fixed_binaries);
      auto u = unanimity_bounds(neighbor_statuses(training, nearest_neighbors(training, r[t].demand, k)));
      for (auto s : u.free) {
        ASSERT_TRUE(bm.bounds_used->has(s));
        EXPECT_GE(bm.bounds_used->at(s).lower, b.bounds_used->at(s).lower - 1e-9);
        EXPECT_LE(bm.bounds_used->at(s).upper, b.bounds_used->at(s).upper + 1e-9);
      }
      EXPECT_FALSE(b.bound_validity_unproven);
    }
  }
}

// The M variant keeps every binary free, so the unanimously-on lines still
// need a bound of their own.
TEST(Family, MBoundsEveryLine) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  auto training = without(r, 4);
  auto m = knn_family(training, f.net, r[4].demand, 5, FamilyVariant::M, exact());
  EXPECT_EQ(m.fixed_binaries, 0u);
  for (std::size_t s = 0; s < f.net.switchable_count(); ++s) EXPECT_TRUE(m.bounds_used->has(s));
  EXPECT_TRUE(m.cost.is_finite());
}

TEST(Family, HomogeneousStoreFixesEverything) {
  const auto net = load_fixture("mesh_a.net");
  auto store = build_training_store(net, generate_instances(net, 4, 1, 0.0), {exact()});
  ASSERT_EQ(store.records.size(), 4u);
  const auto& r = store.records;
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_EQ(r[i].statuses, r[0].statuses);
  auto training = without(r, 0);
  auto u = unanimity_bounds(neighbor_statuses(training, nearest_neighbors(training, r[0].demand, 3)));
  EXPECT_TRUE(u.free.empty());
  for (auto v : {FamilyVariant::B, FamilyVariant::BM})
    EXPECT_EQ(knn_family(training, net, r[0].demand, 3, v).fixed_binaries, net.switchable_count());
  EXPECT_EQ(knn_bhatm(training, net, r[0].demand, 3).fixed_binaries, net.switchable_count());
}

TEST(Family, FixingConsistentWithOptimumRecoversIt) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  int checked = 0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    auto training = without(r, t);
    for (std::size_t k : {3, 10, 25}) {
      auto u = unanimity_bounds(neighbor_statuses(training, nearest_neighbors(training, r[t].demand, k)));
      bool agree = true;
      for (auto [s, v] : u.fixed) agree = agree && r[t].statuses[s] == v;
      if (!agree) continue;
      ++checked;
      auto bm = knn_family(training, f.net, r[t].demand, k, FamilyVariant::BM, exact());
      EXPECT_NEAR(bm.cost.value(), r[t].cost, 1e-6 * std::abs(r[t].cost)) << "instance " << t << " k " << k;
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Nestedness, SweepOverK) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  const std::vector<std::size_t> ks = {1, 2, 3, 5, 8, 13, 21, 29};
  for (std::size_t t = 0; t < r.size(); ++t) {
    auto training = without(r, t);
    CostCache cache;
    std::optional<Cost> prev_cost;
    std::optional<std::set<std::pair<std::size_t, int>>> prev_fixed;
    for (auto k : ks) {
      auto lp = knn_lp(training, f.net, r[t].demand, k, {}, &cache);
      if (prev_cost) EXPECT_FALSE(*prev_cost < lp.cost) << "instance " << t << " k " << k;
      prev_cost = lp.cost;
      auto fixed = fixed_set(unanimity_bounds(neighbor_statuses(training, nearest_neighbors(training, r[t].demand, k))));
      if (prev_fixed) EXPECT_TRUE(std::includes(prev_fixed->begin(), prev_fixed->end(), fixed.begin(), fixed.end()));
      prev_fixed = fixed;
    }
  }
}

TEST(Equivalence, KnnDAndKnnLpAtOne) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  for (std::size_t t = 0; t < r.size(); ++t) {
    auto training = without(r, t);
    auto d = knn_d(training, f.net, r[t].demand, 1);
    auto lp = knn_lp(training, f.net, r[t].demand, 1);
    EXPECT_EQ(*d.statuses, *lp.statuses);
    EXPECT_EQ(d.cost, lp.cost);
  }
}

TEST(Ben, ZeroDemandCostsNothing) {
  const auto net = load_fixture("mesh_a.net");
  auto out = ben(net, std::vector<double>(net.bus_count(), 0.0));
  EXPECT_NEAR(out.cost.value(), 0.0, 1e-9);
}

TEST(Ben, BraessBelowAllOn) {
  const auto net = load_fixture("braess3.net");
  const auto d = net.baseline_demand();
  auto out = ben(net, d, exact());
  EXPECT_LT(out.cost.value(), evaluate_cost(net, d, {1}).value());
  EXPECT_EQ(*out.statuses, Statuses{0});
  EXPECT_EQ(out.mip_status, MipStatus::OptimalWithinGap);
}

TEST(Ben, MatchesOracleAndDominates) {
  const auto net = load_fixture("mesh_a.net");
  auto fam = generate_instances(net, 12, 5);
  auto store = build_training_store(net, fam, {exact()});
  const auto& r = store.records;
  for (std::size_t t = 0; t < r.size(); ++t) {
    auto oracle = testing_support::brute_force(net, r[t].demand);
    EXPECT_LE(testing_support::rel_diff(r[t].cost, oracle.cost), 1e-6);
    auto training = without(r, t);
    for (auto m : kAllMethods) {
      auto out = run_method(m, training, net, r[t].demand, 5, exact());
      if (out.cost.is_finite()) EXPECT_GE(out.cost.value(), r[t].cost - 1e-6 * std::abs(r[t].cost)) << to_string(m);
    }
  }
}

TEST(Historic, NeverOpenFallsBack) {
  const auto& f = mesh_b_family();
  const auto spanning = shortest_path_bigm(f.net);
  auto training = without(f.store.records, 0);
  // Pretend the first two lines were never opened.
  for (auto& r : training) r.statuses[0] = r.statuses[1] = 1;
  auto out = all_hatm(training, f.net, f.store.records[0].demand);
  EXPECT_TRUE(out.bound_validity_unproven);
  int fallbacks = 0;
  for (std::size_t s = 0; s < f.net.switchable_count(); ++s) {
    const bool ever_open = std::any_of(training.begin(), training.end(), [&](const auto& r) { return r.statuses[s] == 0; });
    if (!ever_open) {
      ++fallbacks;
      EXPECT_EQ(out.bounds_used->at(s).lower, spanning.at(s).lower);
      EXPECT_EQ(out.bounds_used->at(s).upper, spanning.at(s).upper);
    }
  }
  EXPECT_GE(fallbacks, 2);
}

// Training demands stay low; the test demand pushes the open-line angle
// difference past anything observed, so the historic bound cuts off the optimum.
TEST(Historic, ExtrapolatedDemandIsSuboptimal) {
  const auto net = load_fixture("braess3.net");
  std::vector<TrainingRecord> training;
  for (double load : {70.0, 80.0, 90.0}) {
    auto out = ben(net, std::vector<double>{0, 0, load}, exact());
    ASSERT_EQ(*out.statuses, Statuses{0});
    training.push_back({{0, 0, load}, *out.statuses, out.angles, out.cost.value(), false});
  }
  const std::vector<double> d{0, 0, 100};
  auto exact_cost = testing_support::brute_force(net, d).cost;
  auto hat = all_hatm(training, net, d, exact());
  ASSERT_TRUE(hat.cost.is_finite());
  EXPECT_GT(hat.cost.value(), exact_cost * (1 + 1e-6));
  // Fixing the line open keeps its historic bound, so the cheap unit is capped.
  auto fixed = knn_bhatm(training, net, d, 3, exact());
  EXPECT_EQ(*fixed.statuses, Statuses{0});
  EXPECT_GT(fixed.cost.value(), exact_cost * (1 + 1e-6));
}

TEST(Historic, CoveringBoundsReachBen) {
  const auto& f = mesh_b_family();
  const auto& r = f.store.records;
  Incidence inc(f.net);
  int checked = 0;
  for (std::size_t t = 0; t < r.size(); ++t) {
    auto training = without(r, t);
    const std::size_t k = training.size();
    auto hat = historic_angle_bigm(training, f.net, shortest_path_bigm(f.net));
    auto u = unanimity_bounds(neighbor_statuses(training, nearest_neighbors(training, r[t].demand, k)));
    bool covers = true;
    for (auto [s, v] : u.fixed) covers = covers && r[t].statuses[s] == v;
    for (std::size_t s = 0; s < inc.switchable.size() && covers; ++s) {
      if (r[t].statuses[s]) continue;
      const auto l = inc.switchable[s];
      const double flow = f.net.flow_susceptance(l) * (r[t].angles[inc.from[l]] - r[t].angles[inc.to[l]]);
      covers = hat.at(s).lower - 1e-7 <= flow && flow <= hat.at(s).upper + 1e-7;
    }
    if (!covers) continue;
    ++checked;
    auto out = knn_bhatm(training, f.net, r[t].demand, k, exact());
    EXPECT_NEAR(out.cost.value(), r[t].cost, 1e-6 * std::abs(r[t].cost)) << "instance " << t;
  }
  EXPECT_GT(checked, 0);
}
