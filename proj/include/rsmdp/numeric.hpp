#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace rsmdp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// ln sum_i exp(x_i), max-shifted. Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  double top = kNegInf;
  for (double x : xs) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double top = std::max(a, b);
  return top + std::log1p(std::exp(-std::abs(a - b)));
}

/// (1/gamma) ln((1 + exp(gamma t)) / 2), or t / 2 at gamma = 0.
inline double half_mix(double t, double gamma) {
  if (gamma == 0.0) return 0.5 * t;
  const double x = gamma * t;
  const double v = std::abs(x) < 1.0 ? std::log1p(0.5 * std::expm1(x)) : log_add_exp(0.0, x) - std::log(2.0);
  return v / gamma;
}

/// (1/gamma) ln sum_i p_i exp(gamma v_i) for gamma != 0, sum_i p_i v_i for gamma == 0.
///
/// Shifted by the value that maximizes gamma * v so every exponent is <= 0.
/// When the shifted sum is close to 1 the log is taken through expm1/log1p, which
/// keeps the result accurate as gamma -> 0. Entries with p_i == 0 are skipped.
template <class Values, class Probs>
double certainty_equivalent(const Values& values, const Probs& probs, double gamma) {
  const auto n = static_cast<std::size_t>(values.size());
  if (gamma == 0.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (probs[i] > 0.0) mean += probs[i] * values[i];
    return mean;
  }
  double pivot = 0.0;
  bool found = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    if (!found || gamma * values[i] > gamma * pivot) {
      pivot = values[i];
      found = true;
    }
  }
  if (!found) return std::numeric_limits<double>::quiet_NaN();
  double delta = 0.0;  // sum p_i (exp(gamma (v_i - pivot)) - 1), in (-1, 0]
  double direct = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    const double e = gamma * (values[i] - pivot);
    delta += probs[i] * std::expm1(e);
    direct += probs[i] * std::exp(e);
  }
  const double log_mass = delta > -0.5 ? std::log1p(delta) : std::log(direct);
  return pivot + log_mass / gamma;
}

/// Half oscillation: (sup g - inf g) / 2.
inline double span_seminorm(const Eigen::VectorXd& g) {
  if (g.size() == 0) return 0.0;
  return 0.5 * (g.maxCoeff() - g.minCoeff());
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// mt19937_64 seeded from (seed, stream) through splitmix64, so independent
/// streams (one per path, one for bootstrap, ...) are reproducible regardless
/// of evaluation order.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t next() { return engine_(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rsmdp
