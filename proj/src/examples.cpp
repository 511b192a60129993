#include "rsmdp/examples.hpp"

#include <array>

namespace rsmdp {

namespace {

Matrix rank_one(std::initializer_list<double> row) {
  const auto k = static_cast<Eigen::Index>(row.size());
  Matrix P(k, k);
  Eigen::Index j = 0;
  for (double p : row) P.col(j++).setConstant(p);
  return P;
}

/// c(x, a) = x for every action.
Matrix state_valued_rewards(const std::vector<double>& xs, std::size_t actions) {
  Matrix c(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(actions));
  for (std::size_t i = 0; i < xs.size(); ++i) c.row(static_cast<Eigen::Index>(i)).setConstant(xs[i]);
  return c;
}

Mdp ex1() {
  return Mdp({"-1", "0", "1"}, {"1", "2", "3"},
             {rank_one({0.1, 0.8, 0.1}), rank_one({0.2, 0.6, 0.2}), rank_one({0.3, 0.4, 0.3})},
             state_valued_rewards({-1, 0, 1}, 3));
}

Mdp ex2() {
  return Mdp({"0", "1", "2", "3"}, {"1", "2"},
             {rank_one({0.2, 0.1, 0.5, 0.2}), rank_one({0.1, 0.5, 0.1, 0.3})},
             state_valued_rewards({0, 1, 2, 3}, 2));
}

Mdp ex3() {
  return Mdp({"-2", "-1", "1", "2"}, {"1", "2"},
             {rank_one({0.2, 0.3, 0.3, 0.2}), rank_one({0.1, 0.5, 0.1, 0.3})},
             state_valued_rewards({-2, -1, 1, 2}, 2));
}

Mdp ex4(double eps) {
  if (!(eps >= 0.0 && eps < 0.1)) throw ValidationError("ex4 requires epsilon in [0, 0.1)");
  Matrix P1(3, 3), P2(3, 3);
  P1 << 2 * eps, 0.5 - eps, 0.5 - eps, 1, 0, 0, 1, 0, 0;
  P2 << 2 * eps, 0.9 - eps, 0.1 - eps, 1, 0, 0, 1, 0, 0;
  Matrix c(3, 2);
  c << 0, 1, 0, 0, 8, 8;
  return Mdp({"1", "2", "3"}, {"1", "2"}, {P1, P2}, c);
}

}  // namespace

Mdp example_model(std::string_view id, double epsilon) {
  if (id == "ex1") return ex1();
  if (id == "ex2") return ex2();
  if (id == "ex3") return ex3();
  if (id == "ex4") return ex4(epsilon);
  throw ValidationError("unknown example id \"" + std::string(id) + "\" (expected ex1..ex4)");
}

std::vector<std::string> example_ids() { return {"ex1", "ex2", "ex3", "ex4"}; }

bool is_example_id(std::string_view id) { return id == "ex1" || id == "ex2" || id == "ex3" || id == "ex4"; }

DecisionRule ex4_u() { return DecisionRule::constant(3, 0); }
DecisionRule ex4_tilde_u() { return DecisionRule::constant(3, 1); }

}  // namespace rsmdp
