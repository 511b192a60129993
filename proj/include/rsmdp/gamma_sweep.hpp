#pragma once

#include "rsmdp/mdp.hpp"
#include "rsmdp/poisson.hpp"

#include <string>
#include <vector>

namespace rsmdp {

struct LambdaCurve {
  DecisionRule rule;
  std::vector<double> grid;
  std::vector<double> values;  // NaN where the point failed
  std::vector<bool> failed;
};

/// lambda^u on every grid point for every rule; a failing point is marked, not fatal.
std::vector<LambdaCurve> sweep(const Mdp& mdp, const std::vector<DecisionRule>& rules,
                               const std::vector<double>& grid, double tol = kMpeTolerance);

/// Evenly spaced grid from lo to hi (inclusive) with spacing close to `step`;
/// a point within 1e-9 * step of zero is snapped to exactly 0.
std::vector<double> make_grid(double lo, double hi, double step);

enum class EndpointKind { exact, refined, window_boundary };

const char* to_string(EndpointKind kind);

struct GammaInterval {
  double lo = 0.0, hi = 0.0;
  EndpointKind lo_kind = EndpointKind::exact, hi_kind = EndpointKind::exact;
  /// Window-edge endpoint whose class stayed optimal on doubling probes beyond the window.
  bool unbounded_below = false, unbounded_above = false;
  /// Single grid point, not optimal at the +-h/10 probes.
  bool isolated = false;
};

/// Rules whose lambda curves coincide within tau on the whole grid.
struct RuleClass {
  std::size_t representative = 0;    // index into GammaAtlas::rules (lowest member)
  std::vector<std::size_t> members;  // ascending
};

struct BoundaryPoint {
  double gamma = 0.0;
  std::vector<std::size_t> classes;  // classes whose regions contain the point
};

struct RegionOptions {
  double lo = -3.0, hi = 3.0;
  double step = 0.1;
  double tol_root = 1e-10;
  double tau = kLambdaTieTolerance;
  double mpe_tol = kMpeTolerance;
  std::size_t bisection_budget = 200;
  std::size_t doubling_probes = 8;
  std::size_t cap = kDefaultEnumerationCap;
};

struct GammaAtlas {
  RegionOptions options;
  std::vector<double> grid;
  std::vector<DecisionRule> rules;
  std::vector<RuleClass> classes;
  std::vector<std::vector<double>> lambdas;  // [rule][grid point]
  std::vector<std::vector<std::size_t>> optimal;  // [grid point] -> optimal class indices
  std::vector<std::vector<GammaInterval>> intervals;  // [class]
  std::vector<BoundaryPoint> boundaries;
  std::vector<std::string> merges;  // human-readable record of merged rule classes

  /// Class containing the rule, or classes.size().
  std::size_t class_of(const DecisionRule& rule) const;
  bool covers(std::size_t cls, double gamma) const;
};

/// Decomposes the window into closed optimality regions Gamma(u) per rule class.
GammaAtlas regions(const Mdp& mdp, const RegionOptions& options = {});

struct NeutralNeighborhood {
  /// Rules optimal at gamma = 0 (indices into enumerate_rules order).
  std::vector<std::size_t> neutral_rules;
  /// All neutral rules share one lambda curve near 0.
  bool singleton = false;
  /// Largest epsilon found (grid resolution) with [-eps, eps] in Gamma of that class.
  double epsilon = 0.0;
  /// Optimal rules just below and just above 0 when the class is not a singleton.
  std::vector<std::size_t> below, above;
  bool sides_disjoint = false;
  double probe = 0.0;  // |gamma| used for the one-sided probes
};

NeutralNeighborhood neutral_neighborhood(const Mdp& mdp, double max_radius = 10.0, double resolution = 1e-6,
                                         double tau = kLambdaTieTolerance, double mpe_tol = kMpeTolerance);

}  // namespace rsmdp
