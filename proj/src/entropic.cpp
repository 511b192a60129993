#include "rsmdp/entropic.hpp"

#include "rsmdp/numeric.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace rsmdp {

namespace {

constexpr std::uint64_t kBootstrapStream = 0xB0075'7A9ULL;

std::uint64_t path_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

/// Cumulative transition rows in the order simulate_path scans them.
struct Sampler {
  struct Row {
    std::vector<double> cumulative;
    std::vector<std::size_t> targets;
  };
  std::vector<std::vector<Row>> rows;  // [action][state]

  explicit Sampler(const Mdp& mdp) : rows(mdp.num_actions(), std::vector<Row>(mdp.num_states())) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a)
      for (std::size_t x = 0; x < mdp.num_states(); ++x) {
        double acc = 0.0;
        for (std::size_t y = 0; y < mdp.num_states(); ++y) {
          const double p = mdp.probability(a, x, y);
          if (p <= 0.0) continue;
          acc += p;
          rows[a][x].cumulative.push_back(acc);
          rows[a][x].targets.push_back(y);
        }
      }
  }

  std::size_t step(std::size_t a, std::size_t x, double u) const {
    const Row& r = rows[a][x];
    for (std::size_t i = 0; i < r.targets.size(); ++i)
      if (u < r.cumulative[i]) return r.targets[i];
    return r.targets.back();
  }
};

/// Discounted (or plain, beta = 1) reward sum along one path; same draws as simulate_path.
double path_sum(const Mdp& mdp, const Sampler& sampler, const MarkovPolicy& policy, std::size_t x0,
                std::size_t horizon, std::uint64_t seed, double beta) {
  StreamRng rng(seed, 0);
  std::size_t x = x0;
  double sum = 0.0, weight = 1.0;
  for (std::size_t i = 0; i < horizon; ++i) {
    const std::size_t a = policy.at(i)(x);
    sum += weight * mdp.reward(x, a);
    weight *= beta;
    x = sampler.step(a, x, rng.uniform());
  }
  return sum;
}

double plug_in(const std::vector<double>& sums, const std::vector<std::size_t>* index, double gamma, double scale) {
  const std::size_t m = index ? index->size() : sums.size();
  auto value = [&](std::size_t i) { return index ? sums[(*index)[i]] : sums[i]; };
  if (gamma == 0.0) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += value(i);
    return scale * total / static_cast<double>(m);
  }
  std::vector<double> exps(m);
  for (std::size_t i = 0; i < m; ++i) exps[i] = gamma * value(i);
  return scale * (log_sum_exp(exps) - std::log(static_cast<double>(m))) / gamma;
}

McEstimate estimate_from_sums(const std::vector<double>& sums, double gamma, double scale, std::uint64_t seed) {
  McEstimate est;
  est.seed = seed;
  est.rng = std::string(kRngAlgorithm);
  est.paths = sums.size();
  est.estimate = plug_in(sums, nullptr, gamma, scale);

  const std::size_t m = sums.size();
  if (m > 1) {
    StreamRng rng(seed, kBootstrapStream);
    std::vector<std::size_t> index(m);
    double mean = 0.0, sq = 0.0;
    for (std::size_t r = 0; r < kBootstrapResamples; ++r) {
      for (auto& i : index) i = rng.below(m);
      const double v = plug_in(sums, &index, gamma, scale);
      mean += v;
      sq += v * v;
    }
    const double b = static_cast<double>(kBootstrapResamples);
    mean /= b;
    est.se = std::sqrt(std::max(0.0, (sq / b - mean * mean) * b / (b - 1.0)));
  }

  if (gamma == 0.0) {
    est.ess = static_cast<double>(m);
  } else {
    double top = kNegInf;
    for (double s : sums) top = std::max(top, gamma * s);
    double w1 = 0.0, w2 = 0.0;
    for (double s : sums) {
      const double w = std::exp(gamma * s - top);
      w1 += w;
      w2 += w * w;
    }
    est.ess = w1 * w1 / w2;
  }
  if (est.ess < kEssWarningFraction * static_cast<double>(m)) {
    est.low_ess = true;
    std::ostringstream os;
    os << "effective sample size of the exponential weights is " << est.ess << " out of " << m
       << " paths; the estimate is dominated by a few paths and likely biased";
    est.warning = os.str();
  }
  return est;
}

}  // namespace

void FiniteDistribution::validate() const {
  if (outcomes.size() != probs.size()) throw ValidationError("outcomes and probabilities differ in length");
  if (outcomes.empty()) throw ValidationError("distribution has no outcomes");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(outcomes[i])) throw ValidationError("outcome " + std::to_string(i + 1) + " is not finite");
    if (!(probs[i] >= 0.0)) throw ValidationError("probability " + std::to_string(i + 1) + " is negative");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kRowSumTolerance) throw ValidationError("probabilities do not sum to 1");
}

double FiniteDistribution::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) m += probs[i] * outcomes[i];
  return m;
}

double FiniteDistribution::variance() const {
  const double mu = mean();
  double v = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) v += probs[i] * (outcomes[i] - mu) * (outcomes[i] - mu);
  return v;
}

double FiniteDistribution::min() const {
  double lo = kInf;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) lo = std::min(lo, outcomes[i]);
  return lo;
}

double FiniteDistribution::max() const {
  double hi = kNegInf;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (probs[i] > 0.0) hi = std::max(hi, outcomes[i]);
  return hi;
}

double entropic_utility(const FiniteDistribution& d, double gamma) {
  d.validate();
  return certainty_equivalent(d.outcomes, d.probs, gamma);
}

FiniteDistribution independent_sum(const FiniteDistribution& a, const FiniteDistribution& b) {
  FiniteDistribution out;
  out.outcomes.reserve(a.outcomes.size() * b.outcomes.size());
  out.probs.reserve(a.outcomes.size() * b.outcomes.size());
  for (std::size_t i = 0; i < a.outcomes.size(); ++i)
    for (std::size_t j = 0; j < b.outcomes.size(); ++j) {
      out.outcomes.push_back(a.outcomes[i] + b.outcomes[j]);
      out.probs.push_back(a.probs[i] * b.probs[j]);
    }
  return out;
}

double relative_entropy(const std::vector<double>& q, const std::vector<double>& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    if (p[i] <= 0.0) return kInf;
    h += q[i] * std::log(q[i] / p[i]);
  }
  return h;
}

namespace {

/// Tilted law q_t and the dual objective E_q Z - H(q|p)/gamma at that law.
std::pair<std::vector<double>, double> tilt_and_dual(const FiniteDistribution& d, double t, double gamma) {
  const std::size_t n = d.outcomes.size();
  std::vector<double> logs(n, kNegInf);
  for (std::size_t i = 0; i < n; ++i)
    if (d.probs[i] > 0.0) logs[i] = std::log(d.probs[i]) + t * d.outcomes[i];
  const double norm = log_sum_exp(logs);
  std::vector<double> q(n, 0.0);
  double eq = 0.0, h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (logs[i] == kNegInf) continue;
    const double lq = logs[i] - norm;
    q[i] = std::exp(lq);
    eq += q[i] * d.outcomes[i];
    if (q[i] > 0.0) h += q[i] * (lq - std::log(d.probs[i]));
  }
  return {std::move(q), eq - h / gamma};
}

}  // namespace

GibbsTilt gibbs_tilt(const FiniteDistribution& d, double gamma, std::size_t grid_points) {
  if (gamma == 0.0) throw std::invalid_argument("gibbs_tilt requires gamma != 0");
  d.validate();
  const double ent = certainty_equivalent(d.outcomes, d.probs, gamma);
  GibbsTilt out;
  auto [q, dual] = tilt_and_dual(d, gamma, gamma);
  out.tilt = FiniteDistribution{d.outcomes, std::move(q)};
  out.dual_value = dual;
  out.gap = std::abs(dual - ent);

  out.grid_extremum = dual;
  out.grid_violation = kNegInf;
  const std::size_t points = std::max<std::size_t>(grid_points, 2);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = 2.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    const double value = tilt_and_dual(d, gamma * s, gamma).second;
    // For gamma < 0 the utility is the infimum of the dual objective, for gamma > 0 the supremum.
    const double beat = gamma < 0.0 ? ent - value : value - ent;
    out.grid_violation = std::max(out.grid_violation, beat);
    out.grid_extremum = gamma < 0.0 ? std::min(out.grid_extremum, value) : std::max(out.grid_extremum, value);
  }
  return out;
}

TaylorCheck taylor_check(const FiniteDistribution& d, double gamma) {
  if (std::abs(gamma) > 0.1) throw std::invalid_argument("taylor_check requires |gamma| <= 0.1");
  d.validate();
  TaylorCheck out;
  const double mu = d.mean();
  out.residual = std::abs(certainty_equivalent(d.outcomes, d.probs, gamma) - (mu + 0.5 * gamma * d.variance()));
  double third = 0.0;
  for (std::size_t i = 0; i < d.probs.size(); ++i) third += d.probs[i] * std::pow(std::abs(d.outcomes[i] - mu), 3);
  out.constant = 4.0 / 3.0 * std::exp(std::abs(gamma) * (d.max() - d.min())) * third;
  out.bound = out.constant * gamma * gamma;
  return out;
}

McEstimate mc_average_criterion(const Mdp& mdp, const MarkovPolicy& policy, double gamma, std::size_t x0,
                                std::size_t horizon, std::size_t paths, std::uint64_t seed) {
  if (horizon == 0 || paths == 0) throw std::invalid_argument("horizon and path count must be positive");
  if (x0 >= mdp.num_states()) throw ValidationError("initial state index out of range");
  mdp.check_rule(policy.tail);
  for (const auto& r : policy.prefix) mdp.check_rule(r);
  const Sampler sampler(mdp);
  std::vector<double> sums(paths);
  for (std::size_t i = 0; i < paths; ++i)
    sums[i] = path_sum(mdp, sampler, policy, x0, horizon, path_seed(seed, i), 1.0);
  auto est = estimate_from_sums(sums, gamma, 1.0 / static_cast<double>(horizon), seed);
  est.horizon = horizon;
  return est;
}

std::size_t discount_truncation(double beta, double reward_norm, double tol) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("discount factor must lie in (0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (reward_norm <= 0.0) return 1;
  std::size_t h = 0;
  double tail = reward_norm / (1.0 - beta);
  while (tail > tol) {
    tail *= beta;
    ++h;
  }
  return std::max<std::size_t>(h, 1);
}

McEstimate mc_discounted_criterion(const Mdp& mdp, const MarkovPolicy& policy, double gamma, double beta,
                                   std::size_t x0, std::size_t horizon, std::size_t paths, std::uint64_t seed) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("discount factor must lie in (0, 1)");
  if (paths == 0) throw std::invalid_argument("path count must be positive");
  if (x0 >= mdp.num_states()) throw ValidationError("initial state index out of range");
  mdp.check_rule(policy.tail);
  for (const auto& r : policy.prefix) mdp.check_rule(r);
  const double norm = mdp.reward_norm();
  if (horizon == 0) horizon = discount_truncation(beta, norm, 1e-6);
  const Sampler sampler(mdp);
  std::vector<double> sums(paths);
  for (std::size_t i = 0; i < paths; ++i)
    sums[i] = path_sum(mdp, sampler, policy, x0, horizon, path_seed(seed, i), beta);
  auto est = estimate_from_sums(sums, gamma, 1.0, seed);
  est.horizon = horizon;
  est.bias_bound = std::pow(beta, static_cast<double>(horizon)) * norm / (1.0 - beta);
  return est;
}

}  // namespace rsmdp
