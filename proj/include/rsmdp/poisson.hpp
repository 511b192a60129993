#pragma once

#include "rsmdp/mdp.hpp"

#include <string>
#include <vector>

namespace rsmdp {

/// The rule-induced chain has more than one recurrent class, so lambda^u depends
/// on the initial state and the Poisson equation has no state-independent solution.
class MultichainError : public std::runtime_error {
 public:
  MultichainError(const std::string& what, std::vector<std::vector<std::size_t>> classes)
      : std::runtime_error(what), classes_(std::move(classes)) {}
  const std::vector<std::vector<std::size_t>>& classes() const { return classes_; }

 private:
  std::vector<std::vector<std::size_t>> classes_;
};

/// ln A with A(i,j) = P^u(i,j) exp(gamma c(i, u(i))); -inf where P^u(i,j) = 0.
Matrix mpe_log_matrix(const Mdp& mdp, const DecisionRule& rule, double gamma);

/// Closed communicating classes of the support graph of a stochastic (or
/// nonnegative) matrix, each sorted, ordered by smallest state.
std::vector<std::vector<std::size_t>> recurrent_classes(const Matrix& kernel);
/// Support graph strongly connected.
bool is_irreducible(const Matrix& nonnegative);
/// gcd of cycle lengths of an irreducible support graph.
std::size_t support_period(const Matrix& nonnegative);

struct PerronResult {
  double log_root = 0.0;
  Vector log_vector;  // max entry 0
  std::size_t iterations = 0;
  bool shifted = false;  // support is periodic
  double residual = 0.0;  // max_i |(A v)_i / (r v_i) - 1|
};

/// Perron root and vector of an irreducible nonnegative matrix given entrywise
/// in log domain, by log-domain power iteration. Throws std::invalid_argument on
/// reducible input and ConvergenceError after max_iter.
PerronResult perron(const Matrix& log_matrix, double tol = 1e-13, std::size_t max_iter = 1'000'000);

struct MpeSolution {
  DecisionRule rule;
  double gamma = 0.0;
  double lambda = 0.0;
  Vector w;  // w(anchor) = 0
  std::size_t anchor = 0;
  /// gamma * lambda = ln r (gamma != 0); 0 at gamma = 0.
  double log_perron_root = 0.0;
  std::vector<std::size_t> recurrent_class;
  double residual = 0.0;  // sup-norm Poisson equation residual
  std::size_t iterations = 0;
  bool shifted = false;
};

inline constexpr double kMpeTolerance = 1e-12;

/// Multiplicative (gamma != 0) or additive (gamma = 0) Poisson equation
///   w(x) + lambda = c(x,u(x)) + (1/gamma) ln sum_y exp(gamma w(y)) P^u(x,y).
/// Solved on the recurrent class, then extended to transient states.
MpeSolution solve_mpe(const Mdp& mdp, const DecisionRule& rule, double gamma, double tol = kMpeTolerance,
                      std::size_t anchor = 0, std::size_t max_iter = 1'000'000);

/// Right-hand side residual sup_x |w(x) + lambda - c - (1/gamma) ln sum_y ...|.
double mpe_residual(const Mdp& mdp, const DecisionRule& rule, double gamma, const Vector& w, double lambda);

inline constexpr double kLambdaTieTolerance = 1e-8;

struct LambdaArgmax {
  double gamma = 0.0;
  double lambda = 0.0;
  std::vector<DecisionRule> rules;      // enumerate_rules order
  std::vector<double> lambdas;          // NaN for rules whose chain is multichain
  std::vector<std::size_t> optimal;     // indices into rules within tau of the max
};

/// Max over all rules of lambda^u(gamma) and the rules attaining it within tau.
LambdaArgmax lambda_argmax(const Mdp& mdp, double gamma, double tol = kMpeTolerance,
                           double tau = kLambdaTieTolerance, std::size_t cap = kDefaultEnumerationCap);

/// lambda^u(+inf) (sign > 0) or lambda^u(-inf) (sign < 0): maximum / minimum
/// mean reward cycle of the support graph on the recurrent class (Karp).
double lambda_at_infinity(const Mdp& mdp, const DecisionRule& rule, int sign);

}  // namespace rsmdp
