#pragma once

#include "rsmdp/mdp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rsmdp {

/// Pair of (state, action) rows attaining the one-step mixing coefficient.
struct DeltaWitness {
  std::size_t state = 0, action = 0;
  std::size_t other_state = 0, other_action = 0;
};

struct DeltaResult {
  double delta = 0.0;
  DeltaWitness witness;
};

/// Delta = max over ordered row pairs of the total-variation distance
/// 1/2 sum_y |P^a(x,y) - P^a'(x',y)|, which equals sup_A |P^a(x,A) - P^a'(x',A)|.
DeltaResult one_step_delta(const Mdp& mdp);
/// Same quantity by brute force over all 2^k subsets A. Requires k <= 25.
double one_step_delta_by_subsets(const Mdp& mdp);

struct PrimitivityResult {
  bool primitive = false;
  /// Smallest N such that every N-step product of rule kernels is positive (primitive only).
  std::size_t n_steps = 0;
  /// 2^k - 2 (at least 1): the bound any primitive model satisfies.
  std::size_t bound = 0;
  /// Failure witness: support sets S_0, S_1, ... (bitmasks over states) ending in
  /// a repeat of an earlier set, and the rules producing each step.
  std::vector<std::uint64_t> witness_sets;
  std::vector<DecisionRule> witness_rules;
};

inline constexpr std::size_t kMaxSupportStates = 20;

/// Support-set automaton: from each singleton, the adversary picks one action
/// per occupied state; the model is strongly primitive iff no proper subset of
/// states can recur. Requires k <= kMaxSupportStates.
PrimitivityResult strong_primitivity(const Mdp& mdp);

struct EquivalenceResult {
  std::size_t n_steps = 1;
  double k_ratio = 1.0;  // +inf when some column mixes zero and positive entries
  /// True when l^{kN} exceeded the cap and k_ratio is an interval-propagation upper bound.
  bool bound_only = false;
  /// Witness for the supremum: rows x, x' and column y (and rules when exhaustive).
  std::size_t row = 0, other_row = 0, column = 0;
  std::vector<DecisionRule> rules;
};

inline constexpr std::size_t kDefaultSequenceCap = 1'000'000;

/// K = sup over rule sequences of length N, states x, x', y of
/// P^(pi,N)(x,y) / P^(pi,N)(x',y) with 0/0 := 1.
EquivalenceResult transition_equivalence(const Mdp& mdp, std::size_t n_steps,
                                         std::size_t cap = kDefaultSequenceCap);

struct ErgodicityReport {
  double delta = 0.0;
  DeltaWitness delta_witness;
  bool one_step_mixing = false;  // A.1: delta < 1
  PrimitivityResult primitivity;
  EquivalenceResult equivalence;
  bool transition_equivalent = false;  // A.2: K < inf for the reported N
  std::vector<std::string> violations;

  bool all_hold() const { return one_step_mixing && transition_equivalent; }
};

/// Runs A.1, A.2' and A.2. N for A.2 is the primitivity index when the model is
/// strongly primitive, otherwise the smallest N <= 8 giving a finite K (or 1).
ErgodicityReport check_assumptions(const Mdp& mdp, std::size_t cap = kDefaultSequenceCap);

/// Labels of the states in a support bitmask, e.g. "{-1,1}".
std::string format_state_set(const Mdp& mdp, std::uint64_t mask);

}  // namespace rsmdp
