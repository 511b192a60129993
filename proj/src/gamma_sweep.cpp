#include "rsmdp/gamma_sweep.hpp"

#include "rsmdp/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace rsmdp {

namespace {

double lambda_or_nan(const Mdp& mdp, const DecisionRule& rule, double gamma, double tol) {
  try {
    return solve_mpe(mdp, rule, gamma, tol).lambda;
  } catch (const MultichainError&) {
    return kNaN;
  } catch (const ConvergenceError&) {
    return kNaN;
  }
}

bool same_value(double a, double b, double tau) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= tau;
}

/// Evaluates class representatives at one gamma.
class ClassEvaluator {
 public:
  ClassEvaluator(const Mdp& mdp, const GammaAtlas& atlas) : mdp_(mdp), atlas_(atlas) {}

  std::vector<double> at(double gamma) const {
    std::vector<double> out(atlas_.classes.size());
    for (std::size_t c = 0; c < out.size(); ++c)
      out[c] = lambda_or_nan(mdp_, atlas_.rules[atlas_.classes[c].representative], gamma, atlas_.options.mpe_tol);
    return out;
  }

  /// lambda_c - max over other classes (positive inside the class's region, negative outside).
  double margin(std::size_t cls, double gamma) const {
    const auto values = at(gamma);
    double other = kNegInf;
    for (std::size_t c = 0; c < values.size(); ++c)
      if (c != cls && !std::isnan(values[c])) other = std::max(other, values[c]);
    if (std::isnan(values[cls])) return kNegInf;
    return other == kNegInf ? kInf : values[cls] - other;
  }

  bool optimal(std::size_t cls, double gamma) const {
    const auto values = at(gamma);
    double best = kNegInf;
    for (double v : values)
      if (!std::isnan(v)) best = std::max(best, v);
    return !std::isnan(values[cls]) && values[cls] >= best - atlas_.options.tau;
  }

 private:
  const Mdp& mdp_;
  const GammaAtlas& atlas_;
};

/// Moves from `inside` towards `outside` until the class's region edge is
/// bracketed within tol_root; returns the last point known to be inside.
double refine_edge(const ClassEvaluator& eval, std::size_t cls, double inside, double outside,
                   const RegionOptions& opt) {
  const double slack = 10.0 * opt.mpe_tol;
  for (std::size_t it = 0; it < opt.bisection_budget && std::abs(outside - inside) > opt.tol_root; ++it) {
    const double mid = 0.5 * (inside + outside);
    if (eval.margin(cls, mid) >= -slack)
      inside = mid;
    else
      outside = mid;
  }
  return inside;
}

}  // namespace

const char* to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::exact:
      return "exact";
    case EndpointKind::refined:
      return "refined";
    case EndpointKind::window_boundary:
      return "window_boundary";
  }
  return "unknown";
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
    throw std::invalid_argument("grid requires finite lo <= hi and step > 0");
  const auto n = static_cast<std::size_t>(std::max(1.0, std::round((hi - lo) / step)));
  std::vector<double> grid;
  if (hi == lo) return {lo};
  grid.reserve(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const auto fi = static_cast<double>(i), fn = static_cast<double>(n);
    double g = i == n ? hi : (lo * (fn - fi) + hi * fi) / fn;
    if (std::abs(g) <= 1e-9 * step) g = 0.0;
    grid.push_back(g);
  }
  return grid;
}

std::vector<LambdaCurve> sweep(const Mdp& mdp, const std::vector<DecisionRule>& rules,
                               const std::vector<double>& grid, double tol) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("sweep grid must be sorted");
  std::vector<LambdaCurve> curves;
  curves.reserve(rules.size());
  for (const auto& rule : rules) {
    mdp.check_rule(rule);
    LambdaCurve curve{rule, grid, std::vector<double>(grid.size()), std::vector<bool>(grid.size(), false)};
    for (std::size_t i = 0; i < grid.size(); ++i) {
      curve.values[i] = lambda_or_nan(mdp, rule, grid[i], tol);
      curve.failed[i] = std::isnan(curve.values[i]);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::size_t GammaAtlas::class_of(const DecisionRule& rule) const {
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (auto m : classes[c].members)
      if (rules[m] == rule) return c;
  return classes.size();
}

bool GammaAtlas::covers(std::size_t cls, double gamma) const {
  const double eps = std::max(1e-12, 2.0 * options.tol_root);
  for (const auto& iv : intervals[cls])
    if (gamma >= iv.lo - eps && gamma <= iv.hi + eps) return true;
  return false;
}

GammaAtlas regions(const Mdp& mdp, const RegionOptions& options) {
  if (!(options.tol_root > 0.0) || !(options.tau >= 0.0))
    throw std::invalid_argument("regions requires tol_root > 0 and tau >= 0");
  GammaAtlas atlas;
  atlas.options = options;
  atlas.grid = make_grid(options.lo, options.hi, options.step);
  atlas.rules = enumerate_rules(mdp, options.cap);
  const auto& grid = atlas.grid;
  const std::size_t G = grid.size();

  for (const auto& curve : sweep(mdp, atlas.rules, grid, options.mpe_tol)) atlas.lambdas.push_back(curve.values);

  // Equivalence classes: identical curves (within tau) over the whole grid.
  for (std::size_t r = 0; r < atlas.rules.size(); ++r) {
    bool placed = false;
    for (auto& cls : atlas.classes) {
      const auto& rep = atlas.lambdas[cls.representative];
      bool same = true;
      for (std::size_t i = 0; i < G && same; ++i) same = same_value(rep[i], atlas.lambdas[r][i], options.tau);
      if (same) {
        cls.members.push_back(r);
        placed = true;
        break;
      }
    }
    if (!placed) atlas.classes.push_back(RuleClass{r, {r}});
  }
  for (const auto& cls : atlas.classes) {
    if (cls.members.size() < 2) continue;
    std::string note = "class of " + mdp.rule_id(atlas.rules[cls.representative]) + " merges";
    for (std::size_t i = 1; i < cls.members.size(); ++i) note += " " + mdp.rule_id(atlas.rules[cls.members[i]]);
    atlas.merges.push_back(note + " (lambda curves coincide on the grid)");
  }

  const std::size_t C = atlas.classes.size();
  std::vector<std::vector<bool>> member(C, std::vector<bool>(G, false));
  atlas.optimal.resize(G);
  for (std::size_t i = 0; i < G; ++i) {
    double best = kNegInf;
    for (const auto& cls : atlas.classes) {
      const double v = atlas.lambdas[cls.representative][i];
      if (!std::isnan(v)) best = std::max(best, v);
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double v = atlas.lambdas[atlas.classes[c].representative][i];
      if (!std::isnan(v) && v >= best - options.tau) {
        member[c][i] = true;
        atlas.optimal[i].push_back(c);
      }
    }
  }

  const ClassEvaluator eval(mdp, atlas);
  const double snap = 2.0 * options.tol_root;
  auto unbounded = [&](std::size_t cls, double edge, double direction) {
    for (std::size_t t = 0; t < options.doubling_probes; ++t) {
      const double g = edge + direction * options.step * std::ldexp(1.0, static_cast<int>(t));
      if (!eval.optimal(cls, g)) return false;
    }
    return true;
  };

  atlas.intervals.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t i = 0;
    while (i < G) {
      if (!member[c][i]) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j + 1 < G && member[c][j + 1]) ++j;
      GammaInterval iv;
      if (i == 0) {
        iv.lo = grid[0];
        iv.lo_kind = EndpointKind::window_boundary;
        iv.unbounded_below = unbounded(c, grid[0], -1.0);
      } else {
        iv.lo = refine_edge(eval, c, grid[i], grid[i - 1], options);
        iv.lo_kind = EndpointKind::refined;
        if (std::abs(iv.lo - grid[i]) <= snap) {
          iv.lo = grid[i];
          iv.lo_kind = EndpointKind::exact;
        }
      }
      if (j == G - 1) {
        iv.hi = grid[G - 1];
        iv.hi_kind = EndpointKind::window_boundary;
        iv.unbounded_above = unbounded(c, grid[G - 1], 1.0);
      } else {
        iv.hi = refine_edge(eval, c, grid[j], grid[j + 1], options);
        iv.hi_kind = EndpointKind::refined;
        if (std::abs(iv.hi - grid[j]) <= snap) {
          iv.hi = grid[j];
          iv.hi_kind = EndpointKind::exact;
        }
      }
      if (i == j && i > 0 && j < G - 1) {
        const double probe = options.step / 10.0;
        if (!eval.optimal(c, grid[i] - probe) && !eval.optimal(c, grid[i] + probe)) {
          iv.isolated = true;
          iv.lo = iv.hi = grid[i];
          iv.lo_kind = iv.hi_kind = EndpointKind::exact;
        }
      }
      atlas.intervals[c].push_back(iv);
      i = j + 1;
    }
  }

  // Boundary points: interior interval endpoints, clustered.
  std::vector<double> ends;
  for (const auto& list : atlas.intervals)
    for (const auto& iv : list) {
      if (iv.lo_kind != EndpointKind::window_boundary) ends.push_back(iv.lo);
      if (iv.hi_kind != EndpointKind::window_boundary) ends.push_back(iv.hi);
    }
  std::sort(ends.begin(), ends.end());
  const double cluster = std::max(1e-9, 10.0 * options.tol_root);
  for (std::size_t a = 0; a < ends.size();) {
    std::size_t b = a;
    while (b + 1 < ends.size() && ends[b + 1] - ends[a] <= cluster) ++b;
    BoundaryPoint bp;
    bp.gamma = ends[a];
    for (std::size_t t = a; t <= b; ++t)
      for (double g : grid)
        if (ends[t] == g) bp.gamma = g;  // prefer an exact grid point
    for (std::size_t c = 0; c < C; ++c)
      for (const auto& iv : atlas.intervals[c])
        if (bp.gamma >= iv.lo - cluster && bp.gamma <= iv.hi + cluster) {
          bp.classes.push_back(c);
          break;
        }
    atlas.boundaries.push_back(std::move(bp));
    a = b + 1;
  }
  return atlas;
}

NeutralNeighborhood neutral_neighborhood(const Mdp& mdp, double max_radius, double resolution, double tau,
                                         double mpe_tol) {
  NeutralNeighborhood out;
  const auto at0 = lambda_argmax(mdp, 0.0, mpe_tol, tau);
  out.neutral_rules = at0.optimal;
  const auto& rules = at0.rules;

  auto optimal_rules = [&](double gamma) { return lambda_argmax(mdp, gamma, mpe_tol, tau).optimal; };

  out.singleton = true;
  const DecisionRule& first = rules[out.neutral_rules.front()];
  for (double g : {-0.1, -0.01, -0.001, 0.001, 0.01, 0.1}) {
    const double ref = lambda_or_nan(mdp, first, g, mpe_tol);
    for (auto r : out.neutral_rules)
      if (!same_value(ref, lambda_or_nan(mdp, rules[r], g, mpe_tol), tau)) out.singleton = false;
  }

  auto class_optimal = [&](double gamma) {
    const auto opt = optimal_rules(gamma);
    return std::find(opt.begin(), opt.end(), out.neutral_rules.front()) != opt.end();
  };

  out.probe = 1e-3;
  if (out.singleton) {
    double good = 0.0, bad = kNaN;
    double e = out.probe;
    while (true) {
      if (e >= max_radius) {
        e = max_radius;
        if (class_optimal(-e) && class_optimal(e)) good = e;
        else bad = e;
        break;
      }
      if (class_optimal(-e) && class_optimal(e)) {
        good = e;
        e *= 2.0;
      } else {
        bad = e;
        break;
      }
    }
    if (!std::isnan(bad)) {
      while (bad - good > resolution) {
        const double mid = 0.5 * (good + bad);
        if (class_optimal(-mid) && class_optimal(mid)) good = mid;
        else bad = mid;
      }
    }
    out.epsilon = good;
    return out;
  }
  out.below = optimal_rules(-out.probe);
  out.above = optimal_rules(out.probe);
  out.sides_disjoint = true;
  for (auto r : out.below)
    if (std::find(out.above.begin(), out.above.end(), r) != out.above.end()) out.sides_disjoint = false;
  return out;
}

}  // namespace rsmdp
