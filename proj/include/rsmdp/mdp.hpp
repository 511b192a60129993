#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rsmdp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Malformed model document (bad JSON, wrong field types).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Well-formed document describing an invalid model (non-stochastic row,
/// missing reward cell, duplicate label, ...). The message names the entry.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when l^k (or another combinatorial count) exceeds the configured cap.
class EnumerationLimitError : public std::length_error {
 public:
  EnumerationLimitError(const std::string& what, double count)
      : std::length_error(what), count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

/// Iterative solver stopped at max_iter before meeting its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}
  std::size_t iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// Stationary decision rule u: E -> U, stored as one action index per state.
struct DecisionRule {
  std::vector<std::size_t> actions;

  std::size_t operator()(std::size_t state) const { return actions[state]; }
  std::size_t size() const { return actions.size(); }

  static DecisionRule constant(std::size_t num_states, std::size_t action) {
    return DecisionRule{std::vector<std::size_t>(num_states, action)};
  }

  friend bool operator==(const DecisionRule&, const DecisionRule&) = default;
  friend auto operator<=>(const DecisionRule&, const DecisionRule&) = default;
};

/// Markov policy (u_0, ..., u_{H-1}, tail, tail, ...). H = 0 is stationary.
struct MarkovPolicy {
  std::vector<DecisionRule> prefix;
  DecisionRule tail;

  static MarkovPolicy stationary(DecisionRule rule) { return MarkovPolicy{{}, std::move(rule)}; }

  const DecisionRule& at(std::size_t step) const {
    return step < prefix.size() ? prefix[step] : tail;
  }
  /// Policy started `steps` steps later: (u_steps, u_{steps+1}, ...).
  MarkovPolicy shifted(std::size_t steps) const;
};

struct SamplePath {
  std::vector<std::size_t> states;   // X_0..X_n
  std::vector<std::size_t> actions;  // a_0..a_{n-1}
  std::vector<double> rewards;       // c(X_i, a_i)
};

struct LoadOptions {
  /// Rescale rows whose sum deviates from 1 by more than the load tolerance
  /// instead of rejecting them. Off by default.
  bool renormalize = false;
};

inline constexpr double kRowSumTolerance = 1e-12;

/// Finite MDP (E, U, P_a, c). Immutable after construction.
class Mdp {
 public:
  /// `rewards` is k x l with rewards(x, a) = c(x, a). Throws ValidationError.
  Mdp(std::vector<std::string> states, std::vector<std::string> actions,
      std::vector<Matrix> transitions, Matrix rewards, LoadOptions options = {});

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  const std::vector<std::string>& state_labels() const { return states_; }
  const std::vector<std::string>& action_labels() const { return actions_; }

  const Matrix& transition(std::size_t action) const { return transitions_[action]; }
  double probability(std::size_t action, std::size_t from, std::size_t to) const {
    return transitions_[action](from, to);
  }
  double reward(std::size_t state, std::size_t action) const { return rewards_(state, action); }
  const Matrix& rewards() const { return rewards_; }

  /// sup |c(x,a)|
  double reward_norm() const;
  /// max c - min c
  double reward_range() const;

  std::size_t state_index(std::string_view label) const;
  std::size_t action_index(std::string_view label) const;

  /// Throws ValidationError unless the rule assigns a valid action to every state.
  void check_rule(const DecisionRule& rule) const;
  /// Human-readable id: action labels per state joined by '/'.
  std::string rule_id(const DecisionRule& rule) const;
  /// Inverse of rule_id.
  DecisionRule parse_rule_id(std::string_view id) const;

 private:
  std::vector<std::string> states_;
  std::vector<std::string> actions_;
  std::vector<Matrix> transitions_;
  Matrix rewards_;
};

/// Parses a model document (JSON with fields states, actions, transitions, rewards).
Mdp load_mdp(std::string_view document, LoadOptions options = {});
/// Serializes to the same document format load_mdp accepts.
std::string dump_mdp(const Mdp& mdp);

/// Row x of the result is row x of P_{u(x)}.
Matrix policy_kernel(const Mdp& mdp, const DecisionRule& rule);
/// P^{(pi,n)} = P^{u_0} P^{u_1} ... P^{u_{n-1}}.
Matrix n_step_kernel(const Mdp& mdp, const MarkovPolicy& policy, std::size_t steps);

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;

/// l^k as a double (may exceed size_t).
double rule_count(const Mdp& mdp);
/// All l^k rules in lexicographic order (state 0 most significant).
std::vector<DecisionRule> enumerate_rules(const Mdp& mdp,
                                          std::size_t cap = kDefaultEnumerationCap);
/// Position of `rule` in enumerate_rules order.
std::size_t rule_index(const Mdp& mdp, const DecisionRule& rule);

/// Identifier of the pseudo-random source used by every sampler in the library.
inline constexpr std::string_view kRngAlgorithm = "mt19937_64/splitmix64-stream";

/// Reproducible path of `horizon` transitions from x0 under `policy`.
SamplePath simulate_path(const Mdp& mdp, const MarkovPolicy& policy, std::size_t x0,
                         std::size_t horizon, std::uint64_t seed);

}  // namespace rsmdp
