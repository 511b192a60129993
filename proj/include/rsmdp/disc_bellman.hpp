#pragma once

#include "rsmdp/avg_bellman.hpp"
#include "rsmdp/mdp.hpp"
#include "rsmdp/poisson.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rsmdp {

struct DiscOptions {
  double tol = 1e-9;
  double tie_tol = kArgmaxTieTolerance;
  /// Force at least this many levels (useful when level n >= H is requested).
  std::size_t min_horizon = 0;
};

struct DiscSolution {
  double gamma = 0.0, beta = 0.0;
  std::size_t horizon = 0;  // H; level H is initialized to 0
  /// levels(x, n) = w^beta(x, gamma beta^n) for n = 0..H (log-domain, gamma-scaled).
  Matrix levels;
  /// Same levels in reward units: levels(x, n) / (gamma beta^n).
  Matrix values;
  /// Greedy rule at levels 0..H-1 (lowest action index among ties).
  std::vector<DecisionRule> rules;
  /// argmax[n][x]: bitmask of tying actions (requires l <= 64).
  std::vector<std::vector<std::uint64_t>> argmax;
  /// Certified sup-norm error of w at level 0 caused by the zero initialization.
  double tail_bound = 0.0;
  /// J*_gamma(x; beta) = w^beta(x, gamma) / gamma.
  Vector value;

  /// (u_0, ..., u_{H-1}, u_{H-1}, ...).
  MarkovPolicy policy() const;
};

/// Smallest H with |gamma| beta^H ||c|| / (1 - beta) <= tol.
std::size_t discounted_horizon(const Mdp& mdp, double gamma, double beta, double tol);

/// One backward step in w-coordinates: level n from level n + 1,
///   w_n(x) = opt_a [gamma beta^n c(x,a) + ln sum_y exp(w_{n+1}(y)) P^a(x,y)]
/// with opt = max for gamma > 0 and min for gamma < 0.
Vector discounted_step(const Mdp& mdp, double gamma, double beta, std::size_t n, const Vector& w_next);

/// Backward recursion of the discounted risk-sensitive Bellman equation on the
/// grid gamma beta^n (max for gamma > 0, min for gamma < 0 in w-coordinates).
DiscSolution solve_discounted(const Mdp& mdp, double gamma, double beta, const DiscOptions& options = {});

/// J_gamma(x, pi; beta) for every x by exact backward recursion, truncated at
/// the same H as solve_discounted for `tol` (gamma = 0 gives the expected sum).
Vector evaluate_discounted(const Mdp& mdp, const MarkovPolicy& policy, double gamma, double beta,
                           double tol = 1e-9);

struct VanishingTrace {
  double gamma = 0.0, beta = 0.0;
  std::size_t anchor = 0;
  std::vector<double> lambda_n;  // lambda_n^beta = w(z, gamma beta^n) - w(z, gamma beta^{n+1})
  std::vector<Vector> w_bar;     // w(., gamma beta^n) - w(z, gamma beta^n)
  double lambda_avg = 0.0;       // lambda(gamma) from the averaged equation
  Vector w_avg;                  // w(., gamma), anchored at z
  std::vector<double> dist_lambda;  // |lambda_n / gamma - lambda(gamma)|
  std::vector<double> dist_w;       // sup_x |w_bar_n(x) / gamma - w(x, gamma)|
};

VanishingTrace vanishing_trace(const Mdp& mdp, double gamma, double beta, std::size_t anchor, std::size_t depth,
                               const DiscOptions& options = {}, const AvgOptions& avg = {});
/// Same, reusing an existing discounted solution and averaged solution.
VanishingTrace vanishing_trace(const DiscSolution& disc, const AvgSolution& avg, std::size_t depth);

/// {1 - 2^-j : j = 1..14}.
std::vector<double> default_beta_grid();

struct BlackwellRow {
  double beta = 0.0;
  std::size_t level = 0;
  DecisionRule rule;
  double lambda_rule = 0.0;
  double lambda_opt = 0.0;
  bool member = false;
};

struct BlackwellResult {
  std::vector<BlackwellRow> rows;
  bool found = false;
  double threshold = kThresholdNotFound;  // smallest grid beta after which membership always holds
  static constexpr double kThresholdNotFound = -1.0;
};

/// Level-n discounted rule vs. averaged optimality, certified by comparing
/// lambda^{u_n}(gamma) against the maximum over all rules within tau.
BlackwellResult blackwell_threshold(const Mdp& mdp, double gamma, std::size_t level, const std::vector<double>& betas,
                                    const DiscOptions& options = {}, double tau = kLambdaTieTolerance);

struct NeutralBlackwellRow {
  double beta = 0.0;
  DecisionRule rule;
  double lambda_rule = 0.0;
  bool member = false;
  double scaled_value = 0.0;  // (1 - beta) w^beta(z, 0)
  double distance = 0.0;      // |scaled_value - lambda(0)|
};

struct NeutralBlackwellResult {
  std::vector<NeutralBlackwellRow> rows;
  double lambda0 = 0.0;
  DecisionRule rule;  // greedy rule at the largest grid beta
  bool member = false;
  bool found = false;
  double threshold = -1.0;  // smallest grid beta from which the greedy rule stays `rule`
};

/// Risk-neutral discounted fixed point w = max_a [c + beta P^a w] by policy iteration.
struct NeutralDiscounted {
  Vector w;
  DecisionRule rule;
  std::size_t iterations = 0;
};
NeutralDiscounted solve_neutral_discounted(const Mdp& mdp, double beta, double tie_tol = kArgmaxTieTolerance);

NeutralBlackwellResult neutral_blackwell(const Mdp& mdp, const std::vector<double>& betas, std::size_t anchor = 0,
                                         double tau = kLambdaTieTolerance);

struct SwitchIndex {
  double root = 0.0;          // s*, NaN when no sign change on (0, 2)
  std::size_t gamble = 0;     // smallest i with beta^{2i} < s*
  std::size_t level = 0;      // 2 i: the decision level of that gamble at state 1
  bool switches = false;
};

/// For the ex4 model at epsilon = 0: the weight s at which the choice at state 1
/// flips between the two actions, with s = beta^n the weight of level n. At
/// gamma = -1, beta = 1/2 the difference reduces to
/// f(s) = 0.5 + 0.5 e^{-4s} - 0.9 e^{-s} - 0.1 e^{-5s}.
SwitchIndex switch_index(const Mdp& mdp, double gamma, double beta);

}  // namespace rsmdp
