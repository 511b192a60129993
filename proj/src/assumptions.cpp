#include "rsmdp/assumptions.hpp"

#include "rsmdp/numeric.hpp"

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace rsmdp {

namespace {

using Mask = std::uint64_t;

struct Edge {
  Mask to;
  std::vector<std::size_t> choice;  // action per state; only states in the source set matter
};

std::vector<std::vector<Mask>> support_masks(const Mdp& mdp) {
  const auto k = mdp.num_states();
  std::vector<std::vector<Mask>> supp(k, std::vector<Mask>(mdp.num_actions(), 0));
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      for (std::size_t y = 0; y < k; ++y)
        if (mdp.probability(a, x, y) > 0.0) supp[x][a] |= Mask{1} << y;
  return supp;
}

/// All sets reachable in one step from S, one per distinct union.
std::vector<Edge> successors(Mask set, const std::vector<std::vector<Mask>>& supp, std::size_t k) {
  std::unordered_map<Mask, std::vector<std::size_t>> current{{0, std::vector<std::size_t>(k, 0)}};
  for (std::size_t y = 0; y < k; ++y) {
    if (!(set >> y & 1)) continue;
    std::unordered_map<Mask, std::vector<std::size_t>> next;
    for (const auto& [mask, choice] : current) {
      for (std::size_t a = 0; a < supp[y].size(); ++a) {
        const Mask m = mask | supp[y][a];
        if (next.count(m)) continue;
        auto c = choice;
        c[y] = a;
        next.emplace(m, std::move(c));
      }
    }
    current = std::move(next);
  }
  std::vector<Edge> out;
  out.reserve(current.size());
  for (auto& [mask, choice] : current) out.push_back(Edge{mask, std::move(choice)});
  std::sort(out.begin(), out.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  return out;
}

double column_ratio(const Matrix& M, Eigen::Index y, Eigen::Index* hi_row, Eigen::Index* lo_row) {
  Eigen::Index hi = 0, lo = 0;
  const double top = M.col(y).maxCoeff(&hi);
  const double bottom = M.col(y).minCoeff(&lo);
  *hi_row = hi;
  *lo_row = lo;
  if (top <= 0.0) return 1.0;
  if (bottom <= 0.0) return kInf;
  return top / bottom;
}

}  // namespace

DeltaResult one_step_delta(const Mdp& mdp) {
  DeltaResult best;
  const auto k = mdp.num_states();
  const auto l = mdp.num_actions();
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < l; ++a)
      for (std::size_t x2 = 0; x2 < k; ++x2)
        for (std::size_t a2 = 0; a2 < l; ++a2) {
          const auto r1 = mdp.transition(a).row(static_cast<Eigen::Index>(x));
          const auto r2 = mdp.transition(a2).row(static_cast<Eigen::Index>(x2));
          const double tv = 0.5 * (r1 - r2).cwiseAbs().sum();
          if (tv > best.delta) best = DeltaResult{tv, DeltaWitness{x, a, x2, a2}};
        }
  best.delta = std::min(best.delta, 1.0);
  return best;
}

double one_step_delta_by_subsets(const Mdp& mdp) {
  const auto k = mdp.num_states();
  if (k > 25)
    throw EnumerationLimitError("subset enumeration needs k <= 25; use the total-variation formula",
                                std::ldexp(1.0, static_cast<int>(k)));
  const auto l = mdp.num_actions();
  double best = 0.0;
  const Mask subsets = Mask{1} << k;
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < l; ++a)
      for (std::size_t x2 = 0; x2 < k; ++x2)
        for (std::size_t a2 = 0; a2 < l; ++a2)
          for (Mask A = 0; A < subsets; ++A) {
            double diff = 0.0;
            for (std::size_t y = 0; y < k; ++y)
              if (A >> y & 1) diff += mdp.probability(a, x, y) - mdp.probability(a2, x2, y);
            best = std::max(best, std::abs(diff));
          }
  return std::min(best, 1.0);
}

PrimitivityResult strong_primitivity(const Mdp& mdp) {
  const auto k = mdp.num_states();
  if (k > kMaxSupportStates)
    throw EnumerationLimitError("support-set automaton needs k <= " + std::to_string(kMaxSupportStates),
                                std::ldexp(1.0, static_cast<int>(k)));
  PrimitivityResult result;
  result.bound = k >= 2 ? (std::size_t{1} << k) - 2 : 1;
  result.bound = std::max<std::size_t>(result.bound, 1);
  const Mask full = (Mask{1} << k) - 1;
  const auto supp = support_masks(mdp);

  // Reachable part of the automaton from the singletons.
  std::unordered_map<Mask, std::vector<Edge>> graph;
  std::vector<Mask> frontier;
  for (std::size_t x = 0; x < k; ++x) {
    const Mask s = Mask{1} << x;
    if (graph.emplace(s, std::vector<Edge>{}).second) frontier.push_back(s);
  }
  while (!frontier.empty()) {
    const Mask s = frontier.back();
    frontier.pop_back();
    auto edges = successors(s, supp, k);
    for (const auto& e : edges)
      if (graph.emplace(e.to, std::vector<Edge>{}).second) frontier.push_back(e.to);
    graph[s] = std::move(edges);
  }

  // Keep only sets from which a proper subset can still be reached.
  std::unordered_map<Mask, std::vector<Mask>> reverse;
  for (const auto& [s, edges] : graph)
    for (const auto& e : edges) reverse[e.to].push_back(s);
  std::unordered_set<Mask> live;
  std::vector<Mask> stack;
  for (const auto& [s, edges] : graph)
    if (s != full && live.insert(s).second) stack.push_back(s);
  while (!stack.empty()) {
    const Mask s = stack.back();
    stack.pop_back();
    for (Mask p : reverse[s])
      if (live.insert(p).second) stack.push_back(p);
  }

  // Iterative DFS over the live subgraph: a back edge means a proper subset recurs.
  enum class Color { white, gray, black };
  std::unordered_map<Mask, Color> color;
  std::unordered_map<Mask, std::size_t> depth;  // longest walk to a proper subset
  struct Frame {
    Mask node;
    std::size_t next_edge;
  };
  for (std::size_t x = 0; x < k; ++x) {
    const Mask root = Mask{1} << x;
    if (!live.count(root) || color[root] != Color::white) continue;
    std::vector<Frame> path{{root, 0}};
    color[root] = Color::gray;
    while (!path.empty()) {
      Frame& top = path.back();
      const auto& edges = graph[top.node];
      if (top.next_edge < edges.size()) {
        const Edge& e = edges[top.next_edge++];
        if (!live.count(e.to)) continue;
        const Color c = color[e.to];
        if (c == Color::gray) {
          for (const auto& f : path) {
            result.witness_sets.push_back(f.node);
            if (f.node != path.back().node) {
              const auto& fe = graph[f.node][f.next_edge - 1];
              result.witness_rules.push_back(DecisionRule{fe.choice});
            }
          }
          result.witness_rules.push_back(DecisionRule{e.choice});
          result.witness_sets.push_back(e.to);
          result.primitive = false;
          result.n_steps = 0;
          return result;
        }
        if (c == Color::white) {
          color[e.to] = Color::gray;
          path.push_back(Frame{e.to, 0});
        }
        continue;
      }
      std::size_t d = 0;
      for (const auto& e : edges)
        if (live.count(e.to)) d = std::max(d, depth[e.to] + 1);
      depth[top.node] = d;
      color[top.node] = Color::black;
      path.pop_back();
    }
  }
  std::size_t longest = 0;
  bool any_live_root = false;
  for (std::size_t x = 0; x < k; ++x) {
    const Mask root = Mask{1} << x;
    if (!live.count(root)) continue;
    any_live_root = true;
    longest = std::max(longest, depth[root]);
  }
  result.primitive = true;
  result.n_steps = any_live_root ? longest + 1 : 1;
  return result;
}

EquivalenceResult transition_equivalence(const Mdp& mdp, std::size_t n_steps, std::size_t cap) {
  if (n_steps == 0) throw std::invalid_argument("transition_equivalence requires N >= 1");
  EquivalenceResult result;
  result.n_steps = n_steps;
  result.k_ratio = 1.0;
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  const double sequences = std::pow(rule_count(mdp), static_cast<double>(n_steps));

  if (sequences <= static_cast<double>(cap)) {
    const auto rules = enumerate_rules(mdp, cap);
    std::vector<Matrix> kernels;
    kernels.reserve(rules.size());
    for (const auto& r : rules) kernels.push_back(policy_kernel(mdp, r));
    std::vector<std::size_t> chosen(n_steps, 0);
    std::function<void(std::size_t, const Matrix&)> visit = [&](std::size_t step, const Matrix& prefix) {
      if (std::isinf(result.k_ratio)) return;
      if (step == n_steps) {
        for (Eigen::Index y = 0; y < k; ++y) {
          Eigen::Index hi = 0, lo = 0;
          const double ratio = column_ratio(prefix, y, &hi, &lo);
          if (ratio > result.k_ratio) {
            result.k_ratio = ratio;
            result.row = static_cast<std::size_t>(hi);
            result.other_row = static_cast<std::size_t>(lo);
            result.column = static_cast<std::size_t>(y);
            result.rules.clear();
            for (auto idx : chosen) result.rules.push_back(rules[idx]);
          }
        }
        return;
      }
      for (std::size_t i = 0; i < kernels.size(); ++i) {
        chosen[step] = i;
        visit(step + 1, step == 0 ? kernels[i] : Matrix(prefix * kernels[i]));
      }
    };
    visit(0, Matrix());
    return result;
  }

  // Interval propagation: entrywise upper/lower envelopes over per-state choices.
  result.bound_only = true;
  const auto l = mdp.num_actions();
  Matrix upper(k, k), lower(k, k);
  for (Eigen::Index x = 0; x < k; ++x)
    for (Eigen::Index y = 0; y < k; ++y) {
      double hi = 0.0, lo = 1.0;
      for (std::size_t a = 0; a < l; ++a) {
        hi = std::max(hi, mdp.transition(a)(x, y));
        lo = std::min(lo, mdp.transition(a)(x, y));
      }
      upper(x, y) = hi;
      lower(x, y) = lo;
    }
  for (std::size_t step = 1; step < n_steps; ++step) {
    Matrix next_upper(k, k), next_lower(k, k);
    for (std::size_t a = 0; a < l; ++a) {
      const Matrix up = mdp.transition(a) * upper;
      const Matrix low = mdp.transition(a) * lower;
      if (a == 0) {
        next_upper = up;
        next_lower = low;
      } else {
        next_upper = next_upper.cwiseMax(up);
        next_lower = next_lower.cwiseMin(low);
      }
    }
    upper = std::move(next_upper);
    lower = std::move(next_lower);
  }
  for (Eigen::Index y = 0; y < k; ++y) {
    Eigen::Index hi = 0, lo = 0;
    const double top = upper.col(y).maxCoeff(&hi);
    const double bottom = lower.col(y).minCoeff(&lo);
    const double ratio = top <= 0.0 ? 1.0 : (bottom <= 0.0 ? kInf : top / bottom);
    if (ratio > result.k_ratio) {
      result.k_ratio = ratio;
      result.row = static_cast<std::size_t>(hi);
      result.other_row = static_cast<std::size_t>(lo);
      result.column = static_cast<std::size_t>(y);
    }
  }
  return result;
}

std::string format_state_set(const Mdp& mdp, std::uint64_t mask) {
  std::string out = "{";
  bool first = true;
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    if (!(mask >> x & 1)) continue;
    if (!first) out += ',';
    out += mdp.state_labels()[x];
    first = false;
  }
  return out + "}";
}

ErgodicityReport check_assumptions(const Mdp& mdp, std::size_t cap) {
  ErgodicityReport report;
  const auto& states = mdp.state_labels();
  const auto& actions = mdp.action_labels();

  const auto delta = one_step_delta(mdp);
  report.delta = delta.delta;
  report.delta_witness = delta.witness;
  report.one_step_mixing = delta.delta < 1.0;
  if (!report.one_step_mixing) {
    const auto& w = delta.witness;
    report.violations.push_back("one-step mixing fails: rows (state \"" + states[w.state] + "\", action \"" +
                                actions[w.action] + "\") and (state \"" + states[w.other_state] +
                                "\", action \"" + actions[w.other_action] + "\") have disjoint support");
  }

  report.primitivity = strong_primitivity(mdp);
  if (!report.primitivity.primitive) {
    std::string chain;
    for (std::size_t i = 0; i < report.primitivity.witness_sets.size(); ++i) {
      if (i) chain += " -> ";
      chain += format_state_set(mdp, report.primitivity.witness_sets[i]);
    }
    report.violations.push_back("strong primitivity fails: support sets recur " + chain);
  }

  if (report.primitivity.primitive) {
    report.equivalence = transition_equivalence(mdp, report.primitivity.n_steps, cap);
  } else {
    const std::size_t max_n = std::min<std::size_t>(8, report.primitivity.bound);
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto eq = transition_equivalence(mdp, n, cap);
      if (n == 1 || std::isfinite(eq.k_ratio)) report.equivalence = eq;
      if (std::isfinite(eq.k_ratio)) break;
    }
  }
  report.transition_equivalent = std::isfinite(report.equivalence.k_ratio);
  if (!report.transition_equivalent) {
    const auto& e = report.equivalence;
    std::ostringstream os;
    os << "transition equivalence fails at N = " << e.n_steps << ": column \"" << states[e.column]
       << "\" is positive from state \"" << states[e.row] << "\" but zero from state \"" << states[e.other_row]
       << "\"";
    if (e.bound_only) os << " (interval bound)";
    report.violations.push_back(os.str());
  }
  return report;
}

}  // namespace rsmdp
