#include <gtest/gtest.h>

#include <sstream>

#include "otsknn/mip.hpp"

using namespace otsknn;

namespace {

MixedIntegerProgram toy() {
  MixedIntegerProgram mip;
  int x1 = mip.lp.add_variable(0, 1, -3);
  int x2 = mip.lp.add_variable(0, 1, -2);
  mip.lp.add_constraint({{x1, 1}, {x2, 1}}, Relation::LessEqual, 1);
  mip.binary_indices = {x1, x2};
  return mip;
}

// min s  s.t. 2 sum(x) + s = n, s >= 0, n odd.  The relaxation is 0 and every
// integer point has s >= 1, so no node below full depth can be pruned.
MixedIntegerProgram parity(int n) {
  MixedIntegerProgram mip;
  std::vector<Term> row;
  for (int i = 0; i < n; ++i) {
    int x = mip.lp.add_variable(0, 1, 0);
    mip.binary_indices.push_back(x);
    row.push_back({x, 2.0});
  }
  int s = mip.lp.add_variable(0, kInfinity, 1);
  row.push_back({s, 1.0});
  mip.lp.add_constraint(row, Relation::Equal, n);
  return mip;
}

}  // namespace

TEST(Mip, TwoBinaryToy) {
  auto sol = solve_mip(toy());
  ASSERT_EQ(sol.status, MipStatus::OptimalWithinGap);
  EXPECT_NEAR(sol.objective, -3.0, 1e-9);
  EXPECT_NEAR((*sol.incumbent)[0], 1.0, 1e-9);
  EXPECT_NEAR((*sol.incumbent)[1], 0.0, 1e-9);
  EXPECT_LE(sol.gap, 1e-4);
}

TEST(Mip, FixingChangesOptimum) {
  auto fixed = fix_binaries(toy(), {{0, 0}});
  EXPECT_NEAR(solve_mip(fixed).objective, -2.0, 1e-9);
}

TEST(Mip, FixBinariesLeavesOriginalUntouched) {
  auto base = toy();
  auto fixed = fix_binaries(base, {{1, 1}});
  EXPECT_EQ(base.lp.lower(1), 0.0);
  EXPECT_EQ(fixed.lp.lower(1), 1.0);
  EXPECT_EQ(fixed.lp.upper(1), 1.0);
  auto same = fix_binaries(base, {});
  EXPECT_EQ(same.lp.lower(0), base.lp.lower(0));
  EXPECT_EQ(same.lp.upper(0), base.lp.upper(0));
  EXPECT_THROW(fix_binaries(base, {{5, 1}}), std::invalid_argument);
  EXPECT_THROW(fix_binaries(base, {{0, 2}}), std::invalid_argument);
}

TEST(Mip, FullyFixedTreeSolvesOneNode) {
  auto fixed = fix_binaries(toy(), {{0, 1}, {1, 0}});
  auto sol = solve_mip(fixed);
  EXPECT_EQ(sol.nodes, 1);
  EXPECT_NEAR(sol.objective, solve_lp(fixed.lp).objective, 1e-12);

  auto all_on = fix_binaries(toy(), {{0, 1}, {1, 1}});
  EXPECT_EQ(solve_mip(all_on).status, MipStatus::Infeasible);
}

TEST(Mip, RejectsMalformedInput) {
  auto bad = toy();
  bad.binary_indices.push_back(9);
  EXPECT_THROW(solve_mip(bad), std::invalid_argument);
  MipConfig cfg;
  cfg.gap_tolerance = 0.0;
  EXPECT_THROW(solve_mip(toy(), cfg), std::invalid_argument);
  auto wide = toy();
  wide.lp.set_bounds(0, 0, 2);
  EXPECT_THROW(solve_mip(wide), std::invalid_argument);
}

TEST(Mip, InfeasibleProgram) {
  MixedIntegerProgram mip;
  int x = mip.lp.add_variable(0, 1, 1);
  mip.lp.add_constraint({{x, 2}}, Relation::Equal, 1);
  mip.binary_indices = {x};
  auto sol = solve_mip(mip);
  EXPECT_EQ(sol.status, MipStatus::Infeasible);
  EXPECT_FALSE(sol.has_incumbent());
}

TEST(Mip, ParityProgramNeedsTheWholeTree) {
  auto sol = solve_mip(parity(5));
  ASSERT_EQ(sol.status, MipStatus::OptimalWithinGap);
  EXPECT_NEAR(sol.objective, 1.0, 1e-9);
  EXPECT_NEAR(sol.root_bound, 0.0, 1e-9);
}

TEST(Mip, NodeLimitReportsIncumbentAndBound) {
  MipConfig cfg;
  cfg.node_limit = 30;
  auto sol = solve_mip(parity(15), cfg);
  EXPECT_EQ(sol.status, MipStatus::FeasibleTimeLimit);
  ASSERT_TRUE(sol.has_incumbent());
  EXPECT_LE(sol.bound, sol.objective);
  EXPECT_EQ(sol.nodes, 30);
}

TEST(Mip, RoundingFindsIncumbentAtRoot) {
  MipConfig cfg;
  cfg.node_limit = 1;
  auto with = solve_mip(parity(9), cfg);
  EXPECT_EQ(with.status, MipStatus::FeasibleTimeLimit);
  ASSERT_TRUE(with.has_incumbent());
  for (int j : parity(9).binary_indices) EXPECT_TRUE((*with.incumbent)[j] == 0.0 || (*with.incumbent)[j] == 1.0);

  cfg.rounding_heuristic = false;
  EXPECT_EQ(solve_mip(parity(9), cfg).status, MipStatus::NoIncumbentTimeLimit);

  cfg.node_limit = std::numeric_limits<long>::max();
  for (bool on : {false, true}) {
    cfg.rounding_heuristic = on;
    EXPECT_NEAR(solve_mip(parity(7), cfg).objective, 1.0, 1e-9);
    EXPECT_NEAR(solve_mip(toy(), cfg).objective, -3.0, 1e-9);
  }
}

TEST(Mip, TimeLimitIsRespected) {
  MipConfig cfg;
  cfg.time_limit = 0.5;
  auto sol = solve_mip(parity(41), cfg);
  EXPECT_TRUE(sol.status == MipStatus::FeasibleTimeLimit || sol.status == MipStatus::NoIncumbentTimeLimit);
  EXPECT_LT(sol.wall_time, 1.5);
}

TEST(Mip, DeterministicForFixedSeed) {
  for (auto rule : {BranchingRule::MostFractional, BranchingRule::FirstFractional, BranchingRule::Random}) {
    MipConfig cfg;
    cfg.branching = rule;
    cfg.seed = 11;
    auto a = solve_mip(parity(7), cfg);
    auto b = solve_mip(parity(7), cfg);
    EXPECT_EQ(a.nodes, b.nodes);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(*a.incumbent, *b.incumbent);
  }
}

TEST(Mip, SearchLogBoundsAreMonotone) {
  std::ostringstream log;
  MipConfig cfg;
  cfg.log = &log;
  auto sol = solve_mip(parity(7), cfg);
  ASSERT_TRUE(sol.has_incumbent());
  std::istringstream in(log.str());
  std::string line;
  double last_bound = -kInfinity, last_inc = kInfinity;
  int lines = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string tok, bound_s, inc_s;
    long id;
    int depth;
    f >> tok >> id >> tok >> depth >> tok >> bound_s >> tok >> inc_s;
    const double bound = std::stod(bound_s), inc = std::stod(inc_s);
    EXPECT_GE(bound, last_bound);
    EXPECT_LE(inc, last_inc);
    last_bound = bound;
    last_inc = inc;
    ++lines;
  }
  EXPECT_EQ(lines, sol.nodes);
  EXPECT_LE(sol.root_bound, sol.objective);
}

TEST(Mip, RelativeGapDenominatorGuardsZero) {
  EXPECT_NEAR(relative_gap(101, 100), 1.0 / 101, 1e-15);
  EXPECT_EQ(relative_gap(0, 0), 0.0);
  EXPECT_NEAR(relative_gap(0, -1e-12), 1e-2, 1e-12);
}
