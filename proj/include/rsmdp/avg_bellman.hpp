#pragma once

#include "rsmdp/mdp.hpp"

#include <deque>
#include <vector>

namespace rsmdp {

inline constexpr double kArgmaxTieTolerance = 1e-9;

/// Half oscillation (sup g - inf g) / 2.
double span(const Vector& g);

struct BellmanStep {
  Vector value;                                 // (T_gamma g)(x)
  std::vector<std::vector<std::size_t>> argmax;  // maximizing actions per state, ascending
};

/// (T_gamma g)(x) = max_a [c(x,a) + (1/gamma) ln sum_y exp(gamma g(y)) P^a(x,y)],
/// with the expectation in place of the log-moment at gamma = 0.
BellmanStep apply_T(const Mdp& mdp, double gamma, const Vector& g, double tie_tol = kArgmaxTieTolerance);

struct AvgOptions {
  double tol = 1e-10;
  std::size_t max_iter = 1'000'000;
  std::size_t anchor = 0;
};

struct AvgSolution {
  double gamma = 0.0;
  Vector w;  // w(anchor) = 0
  double lambda = 0.0;
  double residual = 0.0;  // sup_x |w(x) + lambda - (T w)(x)|
  std::size_t iterations = 0;
  std::size_t anchor = 0;
  /// Observed span contraction ratios span(g_{m+1}-g_m)/span(g_m-g_{m-1}), most recent last.
  std::vector<double> ratios;
};

/// Relative value iteration did not reach the tolerance; carries the last iterate.
class AvgConvergenceError : public ConvergenceError {
 public:
  AvgConvergenceError(const std::string& what, AvgSolution last)
      : ConvergenceError(what, last.iterations, last.residual), last_(std::move(last)) {}
  const AvgSolution& last() const { return last_; }

 private:
  AvgSolution last_;
};

/// Solves w(x) + lambda = (T_gamma w)(x) by relative value iteration anchored at
/// options.anchor. Stops once the Bellman residual is <= tol.
AvgSolution solve_average(const Mdp& mdp, double gamma, const AvgOptions& options = {});

struct OptimalRuleSet {
  std::vector<std::vector<std::size_t>> actions;  // argmax set per state
  DecisionRule canonical;                         // lowest action index per state
};

OptimalRuleSet extract_rules(const Mdp& mdp, const AvgSolution& solution, double tie_tol = kArgmaxTieTolerance);

}  // namespace rsmdp
