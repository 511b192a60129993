#include "rsmdp/avg_bellman.hpp"

#include "rsmdp/numeric.hpp"

#include <cmath>

namespace rsmdp {

namespace {

constexpr std::size_t kRatioHistory = 64;
constexpr double kDampingTrigger = 0.9;

}  // namespace

double span(const Vector& g) { return span_seminorm(g); }

BellmanStep apply_T(const Mdp& mdp, double gamma, const Vector& g, double tie_tol) {
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  if (g.size() != k) throw std::invalid_argument("apply_T: vector size does not match the state count");
  BellmanStep out;
  out.value.resize(k);
  out.argmax.resize(static_cast<std::size_t>(k));
  std::vector<double> q(mdp.num_actions());
  for (Eigen::Index x = 0; x < k; ++x) {
    const auto xs = static_cast<std::size_t>(x);
    double best = kNegInf;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      q[a] = mdp.reward(xs, a) + certainty_equivalent(g, mdp.transition(a).row(x), gamma);
      best = std::max(best, q[a]);
    }
    out.value(x) = best;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      if (q[a] >= best - tie_tol) out.argmax[xs].push_back(a);
  }
  return out;
}

AvgSolution solve_average(const Mdp& mdp, double gamma, const AvgOptions& options) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (options.anchor >= mdp.num_states()) throw ValidationError("anchor state out of range");
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  const auto z = static_cast<Eigen::Index>(options.anchor);
  AvgSolution sol;
  sol.gamma = gamma;
  sol.anchor = options.anchor;
  Vector g = Vector::Zero(k);
  double previous_step = kNaN, previous_residual = kInf;
  std::deque<double> ratios;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    const Vector Tg = apply_T(mdp, gamma, g, 0.0).value;
    const Vector diff = Tg - g;
    const double residual = 0.5 * (diff.maxCoeff() - diff.minCoeff());
    sol.iterations = it;
    if (residual <= options.tol || it == options.max_iter) {
      sol.w = g;
      sol.lambda = 0.5 * (diff.maxCoeff() + diff.minCoeff());
      sol.residual = residual;
      sol.ratios.assign(ratios.begin(), ratios.end());
      if (residual <= options.tol) return sol;
      break;
    }
    // A stalled residual signals a (nearly) periodic optimal chain: take the damped step
    // g + mid + (1/gamma) ln((1 + exp(gamma (Tg - g - mid))) / 2), which has the same fixed points.
    const bool damp = residual > kDampingTrigger * previous_residual;
    previous_residual = residual;
    Vector stepped = Tg;
    if (damp) {
      const double mid = 0.5 * (diff.maxCoeff() + diff.minCoeff());
      for (Eigen::Index x = 0; x < k; ++x) stepped(x) = g(x) + mid + half_mix(diff(x) - mid, gamma);
    }
    const Vector next = stepped.array() - stepped(z);
    const double step = span(next - g);
    if (!damp && std::isfinite(previous_step) && previous_step > 0.0) {
      ratios.push_back(step / previous_step);
      if (ratios.size() > kRatioHistory) ratios.pop_front();
    }
    previous_step = damp ? kNaN : step;
    g = next;
  }
  throw AvgConvergenceError("relative value iteration did not reach tolerance within " +
                                std::to_string(options.max_iter) + " iterations",
                            std::move(sol));
}

OptimalRuleSet extract_rules(const Mdp& mdp, const AvgSolution& solution, double tie_tol) {
  OptimalRuleSet out;
  out.actions = apply_T(mdp, solution.gamma, solution.w, tie_tol).argmax;
  out.canonical.actions.reserve(out.actions.size());
  for (const auto& set : out.actions) out.canonical.actions.push_back(set.front());
  return out;
}

}  // namespace rsmdp
