#pragma once

#include "rsmdp/mdp.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rsmdp {

struct FiniteDistribution {
  std::vector<double> outcomes;
  std::vector<double> probs;

  /// Throws ValidationError unless probs >= 0 sum to 1 (1e-12) and outcomes are finite.
  void validate() const;
  double mean() const;
  double variance() const;
  double min() const;
  double max() const;

  static FiniteDistribution point(double value) { return {{value}, {1.0}}; }
};

/// (1/gamma) ln E exp(gamma Z), or E Z at gamma = 0.
double entropic_utility(const FiniteDistribution& d, double gamma);

/// Law of Z1 + Z2 for independent Z1 ~ a, Z2 ~ b (product support, not merged).
FiniteDistribution independent_sum(const FiniteDistribution& a, const FiniteDistribution& b);

/// KL divergence H(q | p); +inf if q is not absolutely continuous w.r.t. p.
double relative_entropy(const std::vector<double>& q, const std::vector<double>& p);

struct GibbsTilt {
  FiniteDistribution tilt;  // q_i proportional to p_i exp(gamma z_i)
  double dual_value = 0.0;  // E_q Z - H(q|p)/gamma
  double gap = 0.0;         // |dual_value - entropic utility|
  /// Extremum of the dual objective over the tilted family q_t, t = gamma*s,
  /// s in [0, 2]: a minimum for gamma < 0, a maximum for gamma > 0.
  double grid_extremum = 0.0;
  /// Largest amount by which a grid member beats the entropic utility
  /// (should be <= 0 up to rounding: the utility is the inf/sup of the dual).
  double grid_violation = 0.0;
};

GibbsTilt gibbs_tilt(const FiniteDistribution& d, double gamma, std::size_t grid_points = 201);

struct TaylorCheck {
  double residual = 0.0;  // |Ent - (mean + gamma var / 2)|
  double constant = 0.0;  // C = (4/3) e^{|gamma| range} E|Z - mean|^3
  double bound = 0.0;     // C gamma^2
  bool within_bound() const { return residual <= bound + 1e-15; }
};

/// Requires |gamma| <= 0.1.
TaylorCheck taylor_check(const FiniteDistribution& d, double gamma);

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;          // bootstrap standard error
  double bias_bound = 0.0;  // truncation bound (discounted) or 0
  std::uint64_t seed = 0;
  std::string rng;
  std::size_t paths = 0;
  std::size_t horizon = 0;
  double ess = 0.0;  // effective sample size of the weights exp(gamma S_i)
  bool low_ess = false;
  std::string warning;
};

inline constexpr std::size_t kBootstrapResamples = 200;
inline constexpr double kEssWarningFraction = 0.01;

/// Plug-in estimate of (1/n) Ent(sum_{i<n} c(X_i, a_i), gamma) from m paths.
McEstimate mc_average_criterion(const Mdp& mdp, const MarkovPolicy& policy, double gamma, std::size_t x0,
                                std::size_t horizon, std::size_t paths, std::uint64_t seed);

/// Smallest H with beta^H ||c|| / (1 - beta) <= tol.
std::size_t discount_truncation(double beta, double reward_norm, double tol);

/// Plug-in estimate of J_gamma(x0, pi; beta) from m paths truncated at H
/// (H = 0 picks the smallest H with beta^H ||c|| / (1-beta) <= 1e-6).
McEstimate mc_discounted_criterion(const Mdp& mdp, const MarkovPolicy& policy, double gamma, double beta,
                                   std::size_t x0, std::size_t horizon, std::size_t paths, std::uint64_t seed);

}  // namespace rsmdp
