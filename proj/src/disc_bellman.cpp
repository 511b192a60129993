#include "rsmdp/disc_bellman.hpp"

#include "rsmdp/examples.hpp"
#include "rsmdp/numeric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace rsmdp {

namespace {

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("discount factor beta must lie in (0, 1)");
}

std::size_t horizon_for(double scale, double beta, double tol) {
  if (scale <= 0.0) return 1;
  std::size_t h = 0;
  double tail = scale / (1.0 - beta);
  while (tail > tol) {
    tail *= beta;
    ++h;
  }
  return std::max<std::size_t>(h, 1);
}

}  // namespace

MarkovPolicy DiscSolution::policy() const {
  MarkovPolicy pi;
  pi.prefix = rules;
  pi.tail = rules.back();
  return pi;
}

std::size_t discounted_horizon(const Mdp& mdp, double gamma, double beta, double tol) {
  check_beta(beta);
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  return horizon_for(std::abs(gamma) * mdp.reward_norm(), beta, tol);
}

Vector discounted_step(const Mdp& mdp, double gamma, double beta, std::size_t n, const Vector& w_next) {
  if (gamma == 0.0) throw std::invalid_argument("discounted_step requires gamma != 0");
  check_beta(beta);
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  if (w_next.size() != k) throw std::invalid_argument("level vector has the wrong length");
  const double g_n = gamma * std::pow(beta, static_cast<double>(n));
  Vector out(k);
  std::vector<double> terms(static_cast<std::size_t>(k));
  for (Eigen::Index x = 0; x < k; ++x) {
    double best = gamma > 0.0 ? kNegInf : kInf;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      for (Eigen::Index y = 0; y < k; ++y) {
        const double p = mdp.probability(a, static_cast<std::size_t>(x), static_cast<std::size_t>(y));
        terms[static_cast<std::size_t>(y)] = p > 0.0 ? w_next(y) + std::log(p) : kNegInf;
      }
      const double q = g_n * mdp.reward(static_cast<std::size_t>(x), a) + log_sum_exp(terms);
      best = gamma > 0.0 ? std::max(best, q) : std::min(best, q);
    }
    out(x) = best;
  }
  return out;
}

DiscSolution solve_discounted(const Mdp& mdp, double gamma, double beta, const DiscOptions& options) {
  if (gamma == 0.0) throw std::invalid_argument("solve_discounted requires gamma != 0");
  check_beta(beta);
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (mdp.num_actions() > 64) throw std::invalid_argument("argmax bitmasks support at most 64 actions");
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  const auto l = mdp.num_actions();

  DiscSolution sol;
  sol.gamma = gamma;
  sol.beta = beta;
  sol.horizon = std::max({discounted_horizon(mdp, gamma, beta, options.tol), options.min_horizon, std::size_t{1}});
  const auto H = static_cast<Eigen::Index>(sol.horizon);
  sol.values = Matrix::Zero(k, H + 1);
  sol.rules.assign(sol.horizon, DecisionRule{std::vector<std::size_t>(mdp.num_states(), 0)});
  sol.argmax.assign(sol.horizon, std::vector<std::uint64_t>(mdp.num_states(), 0));

  // In reward units V_n = w_n / (gamma beta^n) the recursion reads
  //   V_n(x) = max_a [c(x,a) + beta * CE_{gamma beta^{n+1}}(V_{n+1}; P^a(x,.))]
  // for both signs of gamma, since dividing by a negative gamma turns the min into a max.
  std::vector<double> q(l);
  Vector next(k);
  for (Eigen::Index n = H - 1; n >= 0; --n) {
    const double g_next = gamma * std::pow(beta, static_cast<double>(n + 1));
    next = sol.values.col(n + 1);
    for (Eigen::Index x = 0; x < k; ++x) {
      const auto xs = static_cast<std::size_t>(x);
      double best = kNegInf;
      for (std::size_t a = 0; a < l; ++a) {
        q[a] = mdp.reward(xs, a) + beta * certainty_equivalent(next, mdp.transition(a).row(x), g_next);
        best = std::max(best, q[a]);
      }
      sol.values(x, n) = best;
      std::uint64_t mask = 0;
      for (std::size_t a = 0; a < l; ++a)
        if (q[a] >= best - options.tie_tol) mask |= std::uint64_t{1} << a;
      sol.argmax[static_cast<std::size_t>(n)][xs] = mask;
      sol.rules[static_cast<std::size_t>(n)].actions[xs] = static_cast<std::size_t>(std::countr_zero(mask));
    }
  }
  sol.levels.resize(k, H + 1);
  for (Eigen::Index n = 0; n <= H; ++n)
    sol.levels.col(n) = sol.values.col(n) * (gamma * std::pow(beta, static_cast<double>(n)));
  sol.value = sol.values.col(0);
  sol.tail_bound = std::abs(gamma) * std::pow(beta, static_cast<double>(sol.horizon)) * mdp.reward_norm() / (1.0 - beta);
  return sol;
}

Vector evaluate_discounted(const Mdp& mdp, const MarkovPolicy& policy, double gamma, double beta, double tol) {
  check_beta(beta);
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  mdp.check_rule(policy.tail);
  for (const auto& r : policy.prefix) mdp.check_rule(r);
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  const std::size_t H = std::max(horizon_for(mdp.reward_norm(), beta, tol), policy.prefix.size() + 1);
  Vector V = Vector::Zero(k), prev(k);
  for (std::size_t n = H; n-- > 0;) {
    prev = V;
    const double g_next = gamma * std::pow(beta, static_cast<double>(n + 1));
    const DecisionRule& u = policy.at(n);
    for (Eigen::Index x = 0; x < k; ++x) {
      const auto a = u(static_cast<std::size_t>(x));
      V(x) = mdp.reward(static_cast<std::size_t>(x), a) +
             beta * certainty_equivalent(prev, mdp.transition(a).row(x), g_next);
    }
  }
  return V;
}

VanishingTrace vanishing_trace(const DiscSolution& disc, const AvgSolution& avg, std::size_t depth) {
  if (disc.gamma != avg.gamma) throw std::invalid_argument("discounted and averaged solutions use different gamma");
  if (depth >= disc.horizon)
    throw std::invalid_argument("vanishing trace depth must be below the truncation horizon " +
                                std::to_string(disc.horizon));
  VanishingTrace tr;
  tr.gamma = disc.gamma;
  tr.beta = disc.beta;
  tr.anchor = avg.anchor;
  tr.lambda_avg = avg.lambda;
  tr.w_avg = avg.w;
  const auto z = static_cast<Eigen::Index>(avg.anchor);
  for (std::size_t n = 0; n <= depth; ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    const double lambda_n = disc.levels(z, col) - disc.levels(z, col + 1);
    Vector w_bar = disc.levels.col(col).array() - disc.levels(z, col);
    tr.lambda_n.push_back(lambda_n);
    tr.dist_lambda.push_back(std::abs(lambda_n / disc.gamma - avg.lambda));
    tr.dist_w.push_back((w_bar / disc.gamma - avg.w).cwiseAbs().maxCoeff());
    tr.w_bar.push_back(std::move(w_bar));
  }
  return tr;
}

VanishingTrace vanishing_trace(const Mdp& mdp, double gamma, double beta, std::size_t anchor, std::size_t depth,
                               const DiscOptions& options, const AvgOptions& avg) {
  DiscOptions opt = options;
  opt.min_horizon = std::max(opt.min_horizon, depth + 1);
  const auto disc = solve_discounted(mdp, gamma, beta, opt);
  AvgOptions a = avg;
  a.anchor = anchor;
  return vanishing_trace(disc, solve_average(mdp, gamma, a), depth);
}

std::vector<double> default_beta_grid() {
  std::vector<double> grid;
  for (int j = 1; j <= 14; ++j) grid.push_back(1.0 - std::ldexp(1.0, -j));
  return grid;
}

BlackwellResult blackwell_threshold(const Mdp& mdp, double gamma, std::size_t level, const std::vector<double>& betas,
                                    const DiscOptions& options, double tau) {
  if (gamma == 0.0) throw std::invalid_argument("blackwell_threshold requires gamma != 0; use neutral_blackwell");
  if (!std::is_sorted(betas.begin(), betas.end())) throw std::invalid_argument("beta grid must be ascending");
  BlackwellResult out;
  const double lambda_opt = lambda_argmax(mdp, gamma).lambda;
  DiscOptions opt = options;
  opt.min_horizon = std::max(opt.min_horizon, level + 1);
  for (double beta : betas) {
    const auto sol = solve_discounted(mdp, gamma, beta, opt);
    BlackwellRow row;
    row.beta = beta;
    row.level = level;
    row.rule = sol.rules[level];
    row.lambda_opt = lambda_opt;
    try {
      row.lambda_rule = solve_mpe(mdp, row.rule, gamma).lambda;
      row.member = row.lambda_rule >= lambda_opt - tau;
    } catch (const MultichainError&) {
      row.lambda_rule = kNaN;
      row.member = false;
    }
    out.rows.push_back(std::move(row));
  }
  for (std::size_t i = out.rows.size(); i-- > 0;) {
    if (!out.rows[i].member) break;
    out.found = true;
    out.threshold = out.rows[i].beta;
  }
  return out;
}

NeutralDiscounted solve_neutral_discounted(const Mdp& mdp, double beta, double tie_tol) {
  check_beta(beta);
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  const auto l = mdp.num_actions();
  auto q_values = [&](const Vector& w, Eigen::Index x, std::size_t a) {
    return mdp.reward(static_cast<std::size_t>(x), a) + beta * mdp.transition(a).row(x).dot(w);
  };
  NeutralDiscounted out;
  out.rule = DecisionRule{std::vector<std::size_t>(mdp.num_states(), 0)};
  for (Eigen::Index x = 0; x < k; ++x) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < l; ++a)
      if (mdp.reward(static_cast<std::size_t>(x), a) > mdp.reward(static_cast<std::size_t>(x), best)) best = a;
    out.rule.actions[static_cast<std::size_t>(x)] = best;
  }
  const std::size_t max_iter = 10'000;
  for (out.iterations = 1; out.iterations <= max_iter; ++out.iterations) {
    const Matrix P = policy_kernel(mdp, out.rule);
    Vector c(k);
    for (Eigen::Index x = 0; x < k; ++x) c(x) = mdp.reward(static_cast<std::size_t>(x), out.rule(static_cast<std::size_t>(x)));
    out.w = (Matrix::Identity(k, k) - beta * P).partialPivLu().solve(c);
    bool changed = false;
    for (Eigen::Index x = 0; x < k; ++x) {
      const auto xs = static_cast<std::size_t>(x);
      double best = kNegInf;
      for (std::size_t a = 0; a < l; ++a) best = std::max(best, q_values(out.w, x, a));
      const double slack = tie_tol * std::max(1.0, std::abs(best));
      if (q_values(out.w, x, out.rule(xs)) >= best - slack) continue;
      for (std::size_t a = 0; a < l; ++a)
        if (q_values(out.w, x, a) >= best - slack) {
          out.rule.actions[xs] = a;
          break;
        }
      changed = true;
    }
    if (!changed) break;
  }
  if (out.iterations > max_iter) throw ConvergenceError("discounted policy iteration did not stabilize", max_iter, kNaN);
  // Canonical greedy rule: lowest action index among the maximizers.
  for (Eigen::Index x = 0; x < k; ++x) {
    double best = kNegInf;
    for (std::size_t a = 0; a < l; ++a) best = std::max(best, q_values(out.w, x, a));
    const double slack = tie_tol * std::max(1.0, std::abs(best));
    for (std::size_t a = 0; a < l; ++a)
      if (q_values(out.w, x, a) >= best - slack) {
        out.rule.actions[static_cast<std::size_t>(x)] = a;
        break;
      }
  }
  return out;
}

NeutralBlackwellResult neutral_blackwell(const Mdp& mdp, const std::vector<double>& betas, std::size_t anchor,
                                         double tau) {
  if (betas.empty()) throw std::invalid_argument("beta grid is empty");
  if (!std::is_sorted(betas.begin(), betas.end())) throw std::invalid_argument("beta grid must be ascending");
  if (anchor >= mdp.num_states()) throw ValidationError("anchor state out of range");
  NeutralBlackwellResult out;
  out.lambda0 = lambda_argmax(mdp, 0.0).lambda;
  for (double beta : betas) {
    const auto nd = solve_neutral_discounted(mdp, beta);
    NeutralBlackwellRow row;
    row.beta = beta;
    row.rule = nd.rule;
    try {
      row.lambda_rule = solve_mpe(mdp, nd.rule, 0.0).lambda;
      row.member = row.lambda_rule >= out.lambda0 - tau;
    } catch (const MultichainError&) {
      row.lambda_rule = kNaN;
    }
    row.scaled_value = (1.0 - beta) * nd.w(static_cast<Eigen::Index>(anchor));
    row.distance = std::abs(row.scaled_value - out.lambda0);
    out.rows.push_back(std::move(row));
  }
  out.rule = out.rows.back().rule;
  out.member = out.rows.back().member;
  for (std::size_t i = out.rows.size(); i-- > 0;) {
    if (out.rows[i].rule != out.rule) break;
    out.found = true;
    out.threshold = out.rows[i].beta;
  }
  return out;
}

SwitchIndex switch_index(const Mdp& mdp, double gamma, double beta) {
  check_beta(beta);
  if (gamma == 0.0) throw std::invalid_argument("switch_index requires gamma != 0");
  const Mdp reference = example_model("ex4", 0.0);
  bool same = mdp.num_states() == 3 && mdp.num_actions() == 2 && mdp.rewards() == reference.rewards();
  for (std::size_t a = 0; same && a < 2; ++a) same = mdp.transition(a) == reference.transition(a);
  if (!same) throw std::invalid_argument("switch_index is defined only for the ex4 model at epsilon = 0");

  // Advantage (in reward units at the decision level) of action 2 over action 1 at
  // state 1 when the decision carries weight s: the unit reward against the two
  // Bernoulli gambles on the reward 8 collected one step later.
  auto advantage = [&](double s) {
    const double x = 8.0 * gamma * beta * s;
    const double em1 = std::expm1(x);
    return 1.0 + (std::log1p(0.1 * em1) - std::log1p(0.5 * em1)) / (gamma * s);
  };
  SwitchIndex out;
  double lo = 1e-12, hi = 2.0;
  const double f_lo = advantage(lo), f_hi = advantage(hi);
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    out.root = kNaN;
    out.switches = false;
    return out;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((advantage(mid) > 0.0) == (f_lo > 0.0))
      lo = mid;
    else
      hi = mid;
  }
  out.root = 0.5 * (lo + hi);
  out.switches = true;
  std::size_t i = 0;
  while (std::pow(beta, 2.0 * static_cast<double>(i)) >= out.root) ++i;
  out.gamble = i;
  out.level = 2 * i;
  return out;
}

}  // namespace rsmdp
