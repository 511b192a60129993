#pragma once

#include "rsmdp/mdp.hpp"

#include <random>
#include <string>
#include <vector>

namespace rsmdp::test {

inline std::vector<std::string> labels(std::size_t n, const std::string& prefix) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

/// k states, l actions, Dirichlet(1, ..., 1) rows, rewards uniform on [-1, 1].
inline Mdp random_mdp(std::mt19937_64& rng, std::size_t k, std::size_t l, double alpha = 1.0) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  std::vector<Matrix> P(l, Matrix(k, k));
  Matrix c(k, l);
  for (std::size_t a = 0; a < l; ++a) {
    for (std::size_t x = 0; x < k; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < k; ++y) sum += P[a](x, y) = gamma(rng) + 1e-300;
      P[a].row(x) /= sum;
      P[a](x, k - 1) = 0.0;
      P[a](x, k - 1) = 1.0 - P[a].row(x).sum();
    }
  }
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < l; ++a) c(x, a) = reward(rng);
  return Mdp(labels(k, "s"), labels(l, "a"), std::move(P), std::move(c));
}

/// Sizes k, l in [1, 4] drawn from the generator (k >= 2 so the model is not trivial).
inline Mdp random_small_mdp(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> ks(2, 4), ls(1, 4);
  const auto k = ks(rng);
  const auto l = ls(rng);
  return random_mdp(rng, k, l);
}

inline Mdp single_state(double reward) {
  return Mdp({"x"}, {"a"}, {Matrix::Ones(1, 1)}, Matrix::Constant(1, 1, reward));
}

inline Mdp two_cycle() {
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  Matrix c(2, 1);
  c << 1, -1;
  return Mdp({"x1", "x2"}, {"a"}, {P}, c);
}

/// Random model where some rows have zero entries (sparse support).
inline Mdp random_sparse_mdp(std::mt19937_64& rng, std::size_t k, std::size_t l) {
  std::uniform_real_distribution<double> u(0.0, 1.0), reward(-1.0, 1.0);
  std::vector<Matrix> P(l, Matrix::Zero(k, k));
  Matrix c(k, l);
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t x = 0; x < k; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < k; ++y)
        if (u(rng) < 0.6) sum += P[a](x, y) = u(rng) + 0.05;
      if (sum == 0.0) sum = P[a](x, (x + 1) % k) = 1.0;
      P[a].row(x) /= sum;
      P[a](x, k - 1) = 0.0;
      P[a](x, k - 1) = std::max(0.0, 1.0 - P[a].row(x).sum());
      if (P[a](x, k - 1) < 1e-15) P[a](x, k - 1) = 0.0;
    }
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < l; ++a) c(x, a) = reward(rng);
  return Mdp(labels(k, "s"), labels(l, "a"), std::move(P), std::move(c), LoadOptions{true});
}

}  // namespace rsmdp::test
