#include "rsmdp/examples.hpp"
#include "rsmdp/gamma_sweep.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace rsmdp;

namespace {

/// Entropic utility of the state reward under row law p, plain formula.
double row_utility(const std::vector<double>& p, const std::vector<double>& z, double gamma) {
  double m = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m += p[i] * std::expm1(gamma * z[i]);
    mean += p[i] * z[i];
  }
  return gamma == 0.0 ? mean : std::log1p(m) / gamma;
}

/// Gammas in [lo, hi] where the maximizing row changes, for a rank-one model with
/// state rewards: an optimal rule is constant and lambda* = max_a Ent_{p_a}(c).
std::vector<double> rank_one_switches(const std::vector<std::vector<double>>& rows, const std::vector<double>& z,
                                      double lo, double hi) {
  auto leader = [&](double g) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < rows.size(); ++a)
      if (row_utility(rows[a], z, g) > row_utility(rows[best], z, g)) best = a;
    return best;
  };
  std::vector<double> out;
  const int n = 6000;
  for (int i = 0; i < n; ++i) {
    double a = lo + (hi - lo) * i / n, b = lo + (hi - lo) * (i + 1) / n;
    if (leader(a) == leader(b)) continue;
    const auto left = leader(a);
    while (b - a > 1e-13) {
      const double mid = 0.5 * (a + b);
      (leader(mid) == left ? a : b) = mid;
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

std::vector<double> boundary_gammas(const GammaAtlas& atlas) {
  std::vector<double> out;
  for (const auto& b : atlas.boundaries) out.push_back(b.gamma);
  return out;
}

const GammaInterval* interval_containing(const GammaAtlas& atlas, std::size_t cls, double gamma) {
  for (const auto& iv : atlas.intervals[cls])
    if (iv.lo <= gamma && gamma <= iv.hi) return &iv;
  return nullptr;
}

}  // namespace

TEST(MakeGrid, EvenSpacingWithExactZero) {
  const auto g = make_grid(-3.0, 3.0, 0.1);
  ASSERT_EQ(g.size(), 61u);
  EXPECT_EQ(g.front(), -3.0);
  EXPECT_EQ(g.back(), 3.0);
  EXPECT_EQ(g[30], 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.1, 1e-12);
  EXPECT_EQ(make_grid(-1.0, 2.0, 0.25).size(), 13u);
  EXPECT_THROW(make_grid(1.0, 0.0, 0.1), std::invalid_argument);
  EXPECT_THROW(make_grid(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST(Sweep, MatchesSolveMpeAndMarksFailures) {
  const Mdp mdp = example_model("ex2");
  const auto rules = enumerate_rules(mdp);
  const auto grid = make_grid(-1.0, 1.0, 0.5);
  const auto curves = sweep(mdp, rules, grid);
  ASSERT_EQ(curves.size(), rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      EXPECT_FALSE(curves[r].failed[i]);
      EXPECT_EQ(curves[r].values[i], solve_mpe(mdp, rules[r], grid[i]).lambda);
    }

  const Mdp stuck({"a", "b"}, {"stay"}, {Matrix::Identity(2, 2)}, Matrix::Zero(2, 1));
  const auto bad = sweep(stuck, enumerate_rules(stuck), grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_TRUE(bad[0].failed[i]);
    EXPECT_TRUE(std::isnan(bad[0].values[i]));
  }
}

TEST(Regions, ExampleOneSwitchesAtZero) {
  const Mdp mdp = example_model("ex1");
  const auto atlas = regions(mdp);
  const auto averse = atlas.class_of(DecisionRule::constant(3, 0));
  const auto seeking = atlas.class_of(DecisionRule::constant(3, 2));
  ASSERT_EQ(atlas.intervals[averse].size(), 1u);
  ASSERT_EQ(atlas.intervals[seeking].size(), 1u);
  const auto& lo = atlas.intervals[averse][0];
  const auto& hi = atlas.intervals[seeking][0];
  EXPECT_EQ(lo.lo, -3.0);
  EXPECT_EQ(lo.hi, 0.0);
  EXPECT_TRUE(lo.unbounded_below);
  EXPECT_EQ(hi.lo, 0.0);
  EXPECT_EQ(hi.hi, 3.0);
  EXPECT_TRUE(hi.unbounded_above);
  ASSERT_EQ(atlas.boundaries.size(), 1u);
  EXPECT_EQ(atlas.boundaries[0].gamma, 0.0);
  // Every rule has mean reward 0, so all are optimal at 0.
  EXPECT_EQ(atlas.boundaries[0].classes.size(), atlas.classes.size());
  for (std::size_t c = 0; c < atlas.classes.size(); ++c) {
    if (c == averse || c == seeking) continue;
    ASSERT_EQ(atlas.intervals[c].size(), 1u);
    EXPECT_TRUE(atlas.intervals[c][0].isolated);
    EXPECT_EQ(atlas.intervals[c][0].lo, 0.0);
  }
}

TEST(Regions, RankOneBoundariesMatchIndependentRoots) {
  struct Case {
    const char* id;
    std::vector<std::vector<double>> rows;
    std::vector<double> z;
  };
  const std::vector<Case> cases{
      {"ex1", {{0.1, 0.8, 0.1}, {0.2, 0.6, 0.2}, {0.3, 0.4, 0.3}}, {-1, 0, 1}},
      {"ex2", {{0.2, 0.1, 0.5, 0.2}, {0.1, 0.5, 0.1, 0.3}}, {0, 1, 2, 3}},
  };
  for (const auto& c : cases) {
    const auto atlas = regions(example_model(c.id));
    const auto roots = rank_one_switches(c.rows, c.z, -3.0, 3.0);
    const auto found = boundary_gammas(atlas);
    ASSERT_EQ(found.size(), roots.size()) << c.id;
    for (std::size_t i = 0; i < roots.size(); ++i) EXPECT_NEAR(found[i], roots[i], 1e-8) << c.id;
  }
}

TEST(Regions, ExampleTwoClosedFormBoundary) {
  const auto atlas = regions(example_model("ex2"));
  const auto found = boundary_gammas(atlas);
  ASSERT_FALSE(found.empty());
  bool near = false;
  for (double g : found) near = near || std::abs(std::abs(g) - 0.9624236501192069) <= 1e-8;
  EXPECT_TRUE(near);
}

TEST(Regions, ExampleThreeSecondActionCoversWindow) {
  const Mdp mdp = example_model("ex3");
  const auto atlas = regions(mdp);
  const auto cls = atlas.class_of(DecisionRule::constant(4, 1));
  ASSERT_EQ(atlas.intervals[cls].size(), 1u);
  EXPECT_EQ(atlas.intervals[cls][0].lo, -3.0);
  EXPECT_EQ(atlas.intervals[cls][0].hi, 3.0);
}

TEST(Regions, RefinementNeverLosesBoundaries) {
  for (const auto& id : example_ids()) {
    std::vector<std::vector<double>> per_step;
    for (double h : {0.1, 0.05, 0.025}) {
      RegionOptions options;
      options.step = h;
      per_step.push_back(boundary_gammas(regions(example_model(id), options)));
    }
    for (std::size_t s = 1; s < per_step.size(); ++s) {
      for (double g : per_step[0]) {
        const bool kept = std::any_of(per_step[s].begin(), per_step[s].end(),
                                      [&](double f) { return std::abs(f - g) <= 1e-8; });
        EXPECT_TRUE(kept) << id << " lost boundary " << g;
      }
    }
  }
}

TEST(Regions, IntervalsAreOptimalAndCoverTheWindow) {
  std::mt19937_64 rng(79);
  std::vector<Mdp> models;
  for (const auto& id : example_ids()) models.push_back(example_model(id));
  for (int i = 0; i < 8; ++i) models.push_back(test::random_mdp(rng, 2 + i % 2, 2));
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const auto& mdp : models) {
    const auto atlas = regions(mdp);
    for (const auto& opt : atlas.optimal) EXPECT_FALSE(opt.empty());
    for (int t = 0; t < 10; ++t) {
      const double g = u(rng);
      const auto best = lambda_argmax(mdp, g);
      bool covered = false;
      for (std::size_t c = 0; c < atlas.classes.size(); ++c) {
        if (!atlas.covers(c, g)) continue;
        covered = true;
        const auto rep = atlas.classes[c].representative;
        EXPECT_NEAR(solve_mpe(mdp, atlas.rules[rep], g).lambda, best.lambda, 1e-7) << dump_mdp(mdp) << " at " << g;
      }
      EXPECT_TRUE(covered) << dump_mdp(mdp) << " at " << g;
      // The optimal rule at g lies in a class that covers g.
      const auto cls = atlas.class_of(best.rules[best.optimal.front()]);
      EXPECT_TRUE(atlas.covers(cls, g) || interval_containing(atlas, cls, g) != nullptr) << dump_mdp(mdp) << " at " << g;
    }
  }
}

TEST(Regions, ClassesGroupIdenticalCurves) {
  // Two identical actions: every rule has the same curve, so there is one class.
  const Mdp base = example_model("ex2");
  const Mdp twin(base.state_labels(), {"a", "b"}, {base.transition(0), base.transition(0)},
                 Matrix(base.rewards().col(0).replicate(1, 2)));
  const auto atlas = regions(twin);
  ASSERT_EQ(atlas.classes.size(), 1u);
  EXPECT_EQ(atlas.classes[0].members.size(), 16u);
  EXPECT_TRUE(atlas.boundaries.empty());
}

TEST(NeutralNeighborhood, ExampleOneSidesAreDisjoint) {
  const Mdp mdp = example_model("ex1");
  const auto n = neutral_neighborhood(mdp);
  EXPECT_EQ(n.neutral_rules.size(), 27u);
  EXPECT_FALSE(n.singleton);
  EXPECT_TRUE(n.sides_disjoint);
  const auto rules = enumerate_rules(mdp);
  ASSERT_EQ(n.below.size(), 1u);
  ASSERT_EQ(n.above.size(), 1u);
  EXPECT_EQ(mdp.rule_id(rules[n.below[0]]), "1/1/1");
  EXPECT_EQ(mdp.rule_id(rules[n.above[0]]), "3/3/3");
}

TEST(NeutralNeighborhood, ExampleThreeSameRuleOnBothSides) {
  const Mdp mdp = example_model("ex3");
  const auto n = neutral_neighborhood(mdp);
  EXPECT_EQ(n.neutral_rules.size(), 16u);
  EXPECT_FALSE(n.singleton);
  EXPECT_FALSE(n.sides_disjoint);
  const auto rules = enumerate_rules(mdp);
  ASSERT_EQ(n.below.size(), 1u);
  EXPECT_EQ(n.below, n.above);
  EXPECT_EQ(mdp.rule_id(rules[n.below[0]]), "2/2/2/2");
}

TEST(NeutralNeighborhood, SingletonRadius) {
  const auto one = neutral_neighborhood(test::single_state(1.0));
  EXPECT_TRUE(one.singleton);
  EXPECT_EQ(one.epsilon, 10.0);
  const auto ex2 = neutral_neighborhood(example_model("ex2"));
  EXPECT_TRUE(ex2.singleton);
  const auto roots = rank_one_switches({{0.2, 0.1, 0.5, 0.2}, {0.1, 0.5, 0.1, 0.3}}, {0, 1, 2, 3}, -3.0, 3.0);
  double nearest = 10.0;
  for (double r : roots) nearest = std::min(nearest, std::abs(r));
  EXPECT_NEAR(ex2.epsilon, nearest, 2e-6);
}
