#include "rsmdp/poisson.hpp"

#include "rsmdp/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace rsmdp {

namespace {

using Reach = std::vector<std::vector<bool>>;

Reach reachability(const Matrix& M, bool log_domain) {
  const auto k = static_cast<std::size_t>(M.rows());
  auto positive = [&](std::size_t i, std::size_t j) {
    const double v = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return log_domain ? v > kNegInf : v > 0.0;
  };
  Reach reach(k, std::vector<bool>(k, false));
  for (std::size_t s = 0; s < k; ++s) {
    std::vector<std::size_t> stack{s};
    reach[s][s] = true;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < k; ++j)
        if (positive(i, j) && !reach[s][j]) {
          reach[s][j] = true;
          stack.push_back(j);
        }
    }
  }
  return reach;
}

bool strongly_connected(const Matrix& M, bool log_domain) {
  const auto reach = reachability(M, log_domain);
  for (const auto& row : reach)
    for (bool r : row)
      if (!r) return false;
  return true;
}

std::size_t period_of(const Matrix& M, bool log_domain) {
  const auto k = static_cast<std::size_t>(M.rows());
  auto positive = [&](std::size_t i, std::size_t j) {
    const double v = M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return log_domain ? v > kNegInf : v > 0.0;
  };
  std::vector<long> level(k, -1);
  std::deque<std::size_t> queue{0};
  level[0] = 0;
  while (!queue.empty()) {
    const auto i = queue.front();
    queue.pop_front();
    for (std::size_t j = 0; j < k; ++j)
      if (positive(i, j) && level[j] < 0) {
        level[j] = level[i] + 1;
        queue.push_back(j);
      }
  }
  long g = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (positive(i, j) && level[i] >= 0 && level[j] >= 0) g = std::gcd(g, std::abs(level[i] + 1 - level[j]));
  return g == 0 ? 1 : static_cast<std::size_t>(g);
}

Matrix restrict(const Matrix& M, const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      out(i, j) = M(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  return out;
}

/// (1/gamma) ln sum_y exp(gamma g(y)) P(x, y) for row x (expectation at gamma = 0).
double row_ce(const Matrix& P, Eigen::Index x, const Vector& g, double gamma) {
  return certainty_equivalent(g, P.row(x), gamma);
}

std::string describe_classes(const std::vector<std::vector<std::size_t>>& classes) {
  std::ostringstream os;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    os << (c ? ", " : "") << "{";
    for (std::size_t i = 0; i < classes[c].size(); ++i) os << (i ? "," : "") << classes[c][i];
    os << "}";
  }
  return os.str();
}

/// Log spectral radius of a nonnegative matrix given in log domain (-inf if nilpotent).
double transient_log_root(const Matrix& L) {
  const auto k = static_cast<std::size_t>(L.rows());
  const auto reach = reachability(L, true);
  double best = kNegInf;
  std::vector<bool> done(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    if (done[i]) continue;
    std::vector<std::size_t> scc;
    for (std::size_t j = 0; j < k; ++j)
      if (reach[i][j] && reach[j][i]) scc.push_back(j);
    for (auto j : scc) done[j] = true;
    const Matrix block = restrict(L, scc);
    if (scc.size() == 1 && block(0, 0) == kNegInf) continue;
    best = std::max(best, perron(block).log_root);
  }
  return best;
}

}  // namespace

Matrix mpe_log_matrix(const Mdp& mdp, const DecisionRule& rule, double gamma) {
  const Matrix P = policy_kernel(mdp, rule);
  const auto k = P.rows();
  Matrix L(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double gc = gamma * mdp.reward(static_cast<std::size_t>(i), rule(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < k; ++j) L(i, j) = P(i, j) > 0.0 ? std::log(P(i, j)) + gc : kNegInf;
  }
  return L;
}

std::vector<std::vector<std::size_t>> recurrent_classes(const Matrix& kernel) {
  const auto k = static_cast<std::size_t>(kernel.rows());
  const auto reach = reachability(kernel, false);
  std::vector<std::vector<std::size_t>> classes;
  std::vector<bool> assigned(k, false);
  for (std::size_t i = 0; i < k; ++i) {
    if (assigned[i]) continue;
    std::vector<std::size_t> scc;
    for (std::size_t j = 0; j < k; ++j)
      if (reach[i][j] && reach[j][i]) scc.push_back(j);
    for (auto j : scc) assigned[j] = true;
    bool closed = true;
    for (auto j : scc)
      for (std::size_t y = 0; y < k && closed; ++y)
        if (reach[j][y] && !reach[y][j]) closed = false;
    if (closed) classes.push_back(std::move(scc));
  }
  return classes;
}

bool is_irreducible(const Matrix& nonnegative) { return strongly_connected(nonnegative, false); }

std::size_t support_period(const Matrix& nonnegative) { return period_of(nonnegative, false); }

PerronResult perron(const Matrix& log_matrix, double tol, std::size_t max_iter) {
  const auto k = log_matrix.rows();
  if (k == 0 || log_matrix.cols() != k) throw std::invalid_argument("perron requires a nonempty square matrix");
  if (!strongly_connected(log_matrix, true))
    throw std::invalid_argument("perron requires an irreducible matrix; restrict to the recurrent class first");
  PerronResult out;
  out.shifted = period_of(log_matrix, true) > 1;
  Vector v = Vector::Zero(k), y(k), d(k);
  std::vector<double> terms(static_cast<std::size_t>(k));
  double spread = kInf;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) terms[static_cast<std::size_t>(j)] = log_matrix(i, j) + v(j);
      y(i) = log_sum_exp(terms);
    }
    d = y - v;
    spread = d.maxCoeff() - d.minCoeff();
    if (spread <= tol) {
      out.log_root = 0.5 * (d.maxCoeff() + d.minCoeff());
      out.log_vector = v;
      out.iterations = it;
      double res = 0.0;
      for (Eigen::Index i = 0; i < k; ++i) res = std::max(res, std::abs(std::expm1(d(i) - out.log_root)));
      out.residual = res;
      return out;
    }
    // Iterate with A + r I, r the current root estimate, so that eigenvalues near -r do not stall.
    const double log_r = 0.5 * (d.maxCoeff() + d.minCoeff());
    for (Eigen::Index i = 0; i < k; ++i) y(i) = log_add_exp(y(i), log_r + v(i));
    v = y.array() - y.maxCoeff();
  }
  throw ConvergenceError("perron power iteration did not converge", max_iter, spread);
}

double mpe_residual(const Mdp& mdp, const DecisionRule& rule, double gamma, const Vector& w, double lambda) {
  const Matrix P = policy_kernel(mdp, rule);
  double res = 0.0;
  for (Eigen::Index x = 0; x < P.rows(); ++x) {
    const double rhs = mdp.reward(static_cast<std::size_t>(x), rule(static_cast<std::size_t>(x))) +
                       row_ce(P, x, w, gamma);
    res = std::max(res, std::abs(w(x) + lambda - rhs));
  }
  return res;
}

MpeSolution solve_mpe(const Mdp& mdp, const DecisionRule& rule, double gamma, double tol, std::size_t anchor,
                      std::size_t max_iter) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (anchor >= mdp.num_states()) throw ValidationError("anchor state out of range");
  const Matrix P = policy_kernel(mdp, rule);
  const auto k = P.rows();
  const auto classes = recurrent_classes(P);
  if (classes.size() != 1)
    throw MultichainError("rule " + mdp.rule_id(rule) + " induces " + std::to_string(classes.size()) +
                              " recurrent classes (state indices " + describe_classes(classes) + ")",
                          classes);

  MpeSolution sol;
  sol.rule = rule;
  sol.gamma = gamma;
  sol.anchor = anchor;
  sol.recurrent_class = classes.front();
  Vector c(k);
  for (Eigen::Index x = 0; x < k; ++x) c(x) = mdp.reward(static_cast<std::size_t>(x), rule(static_cast<std::size_t>(x)));

  if (gamma == 0.0) {
    // w(x) - sum_y P(x,y) w(y) + lambda = c(x), with the anchor column replaced by lambda.
    Matrix M = Matrix::Identity(k, k) - P;
    M.col(static_cast<Eigen::Index>(anchor)).setOnes();
    Eigen::FullPivLU<Matrix> lu(M);
    const Vector sol_vec = lu.solve(c);
    sol.lambda = sol_vec(static_cast<Eigen::Index>(anchor));
    sol.w = sol_vec;
    sol.w(static_cast<Eigen::Index>(anchor)) = 0.0;
    sol.residual = mpe_residual(mdp, rule, gamma, sol.w, sol.lambda);
    return sol;
  }

  // Relative value iteration for the fixed rule in w-coordinates on the recurrent class:
  // the log-domain power iteration for A scaled by 1/gamma, with certainty
  // equivalents evaluated through expm1/log1p for accuracy at small |gamma|.
  const auto& R = sol.recurrent_class;
  const auto n = static_cast<Eigen::Index>(R.size());
  const Matrix PR = restrict(P, R);
  Vector cR(n);
  for (Eigen::Index i = 0; i < n; ++i) cR(i) = c(static_cast<Eigen::Index>(R[static_cast<std::size_t>(i)]));
  sol.shifted = period_of(PR, false) > 1;

  Vector g = Vector::Zero(n), h(n), d(n);
  double spread = kInf, previous_spread = kInf;
  bool converged = false;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    for (Eigen::Index i = 0; i < n; ++i) h(i) = cR(i) + row_ce(PR, i, g, gamma);
    d = h - g;
    spread = 0.5 * (d.maxCoeff() - d.minCoeff());
    if (spread <= tol) {
      sol.lambda = 0.5 * (d.maxCoeff() + d.minCoeff());
      sol.iterations = it;
      converged = true;
      break;
    }
    // When the span stops halving, average with g + lambda estimate in the exponential
    // scale, which linearizes to (I + Q) / 2 for the tilted kernel Q and removes
    // eigenvalues near -1.
    const bool damp = !(spread <= 0.5 * previous_spread);
    previous_spread = spread;
    if (damp) {
      const double mid = 0.5 * (d.maxCoeff() + d.minCoeff());
      for (Eigen::Index i = 0; i < n; ++i) h(i) = g(i) + mid + half_mix(d(i) - mid, gamma);
    }
    g = h.array() - h(0);
  }
  if (!converged)
    throw ConvergenceError("Poisson equation iteration for rule " + mdp.rule_id(rule) + " did not converge",
                           max_iter, spread);

  Vector w = Vector::Zero(k);
  std::vector<bool> known(static_cast<std::size_t>(k), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(static_cast<Eigen::Index>(R[static_cast<std::size_t>(i)])) = g(i);
    known[R[static_cast<std::size_t>(i)]] = true;
  }
  // Transient states: order by distance to the recurrent class, then sweep the
  // one-step equation until it settles (one sweep when transient states form no cycle).
  std::vector<std::size_t> order;
  {
    std::vector<bool> placed = known;
    bool progress = true;
    while (progress) {
      progress = false;
      for (Eigen::Index x = 0; x < k; ++x) {
        if (placed[static_cast<std::size_t>(x)]) continue;
        for (Eigen::Index y = 0; y < k; ++y)
          if (P(x, y) > 0.0 && placed[static_cast<std::size_t>(y)]) {
            order.push_back(static_cast<std::size_t>(x));
            placed[static_cast<std::size_t>(x)] = true;
            progress = true;
            break;
          }
      }
    }
  }
  if (!order.empty()) {
    std::vector<std::size_t> transient = order;
    std::sort(transient.begin(), transient.end());
    const Matrix LT = restrict(mpe_log_matrix(mdp, rule, gamma), transient);
    const double log_root_t = transient_log_root(LT);
    if (log_root_t >= gamma * sol.lambda - 1e-12)
      throw MultichainError("rule " + mdp.rule_id(rule) +
                                ": transient states grow faster than the recurrent class, so the average depends on "
                                "the initial state",
                            {sol.recurrent_class});
    double change = kInf;
    std::size_t sweeps = 0;
    while (change > 0.01 * tol) {
      if (++sweeps > max_iter)
        throw ConvergenceError("transient extension for rule " + mdp.rule_id(rule) + " did not converge",
                               max_iter, change);
      change = 0.0;
      for (auto x : order) {
        const auto xi = static_cast<Eigen::Index>(x);
        const double next = c(xi) - sol.lambda + row_ce(P, xi, w, gamma);
        change = std::max(change, std::abs(next - w(xi)));
        w(xi) = next;
      }
      if (!std::isfinite(change))
        throw ConvergenceError("transient extension for rule " + mdp.rule_id(rule) + " diverged", sweeps, change);
    }
  }
  w = w.array() - w(static_cast<Eigen::Index>(anchor));
  sol.w = w;
  sol.log_perron_root = gamma * sol.lambda;
  sol.residual = mpe_residual(mdp, rule, gamma, sol.w, sol.lambda);
  return sol;
}

LambdaArgmax lambda_argmax(const Mdp& mdp, double gamma, double tol, double tau, std::size_t cap) {
  LambdaArgmax out;
  out.gamma = gamma;
  out.rules = enumerate_rules(mdp, cap);
  out.lambdas.resize(out.rules.size(), std::numeric_limits<double>::quiet_NaN());
  double best = kNegInf;
  for (std::size_t i = 0; i < out.rules.size(); ++i) {
    try {
      out.lambdas[i] = solve_mpe(mdp, out.rules[i], gamma, tol).lambda;
    } catch (const MultichainError&) {
      continue;
    }
    best = std::max(best, out.lambdas[i]);
  }
  if (best == kNegInf) throw MultichainError("every decision rule induces a multichain process", {});
  out.lambda = best;
  for (std::size_t i = 0; i < out.rules.size(); ++i)
    if (!std::isnan(out.lambdas[i]) && out.lambdas[i] >= best - tau) out.optimal.push_back(i);
  return out;
}

double lambda_at_infinity(const Mdp& mdp, const DecisionRule& rule, int sign) {
  if (sign == 0) throw std::invalid_argument("sign must be +1 or -1");
  const Matrix P = policy_kernel(mdp, rule);
  const auto classes = recurrent_classes(P);
  if (classes.size() != 1)
    throw MultichainError("rule " + mdp.rule_id(rule) + " induces " + std::to_string(classes.size()) +
                              " recurrent classes (state indices " + describe_classes(classes) + ")",
                          classes);
  const auto& R = classes.front();
  const std::size_t n = R.size();
  // Karp's minimum mean cycle on weights s * c (s = -1 turns a maximum into a minimum).
  const double s = sign > 0 ? -1.0 : 1.0;
  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = s * mdp.reward(R[i], rule(R[i]));
  std::vector<std::vector<double>> D(n + 1, std::vector<double>(n, kInf));
  D[0][0] = 0.0;
  for (std::size_t step = 1; step <= n; ++step)
    for (std::size_t u = 0; u < n; ++u) {
      if (D[step - 1][u] == kInf) continue;
      for (std::size_t v = 0; v < n; ++v)
        if (P(static_cast<Eigen::Index>(R[u]), static_cast<Eigen::Index>(R[v])) > 0.0)
          D[step][v] = std::min(D[step][v], D[step - 1][u] + weight[u]);
    }
  double best = kInf;
  for (std::size_t v = 0; v < n; ++v) {
    if (D[n][v] == kInf) continue;
    double worst = kNegInf;
    for (std::size_t step = 0; step < n; ++step)
      if (D[step][v] < kInf)
        worst = std::max(worst, (D[n][v] - D[step][v]) / static_cast<double>(n - step));
    best = std::min(best, worst);
  }
  return s * best;
}

}  // namespace rsmdp
