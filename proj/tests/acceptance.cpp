#include "rsmdp/assumptions.hpp"
#include "rsmdp/avg_bellman.hpp"
#include "rsmdp/disc_bellman.hpp"
#include "rsmdp/entropic.hpp"
#include "rsmdp/examples.hpp"
#include "rsmdp/gamma_sweep.hpp"
#include "rsmdp/numeric.hpp"
#include "rsmdp/poisson.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace rsmdp;

namespace {

/// Collects failed checks with a short description of each.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++count_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    failed_ = failed_ || !ok;
  }
  void near(double value, double target, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << " = " << value << " (target " << target << " +- " << tol << ")";
    expect(std::abs(value - target) <= tol, s.str());
  }
  void note(const std::string& line) { notes_.push_back(line); }
  bool failed() const { return failed_; }
  std::size_t count() const { return count_; }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  bool failed_ = false;
  std::size_t count_ = 0;
  std::vector<std::string> failures_, notes_;
};

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

std::vector<Mdp> random_models() {
  std::mt19937_64 rng(20240601);
  std::vector<Mdp> models;
  for (int i = 0; i < 50; ++i) models.push_back(test::random_small_mdp(rng));
  return models;
}

FiniteDistribution random_distribution(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(1, 8);
  std::uniform_real_distribution<double> value(-5.0, 5.0);
  std::gamma_distribution<double> weight(0.7, 1.0);
  FiniteDistribution d;
  const int n = size(rng);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    d.outcomes.push_back(value(rng));
    d.probs.push_back(weight(rng) + 1e-3);
    total += d.probs.back();
  }
  for (auto& p : d.probs) p /= total;
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < d.probs.size(); ++i) rest -= d.probs[i];
  d.probs.back() = rest;
  return d;
}

bool contains(const GammaInterval& i, double lo, double hi) { return i.lo <= lo && i.hi >= hi; }

void criterion1(Checks& c) {
  const Mdp mdp = example_model("ex1");
  const auto atlas = regions(mdp);
  const auto averse = atlas.class_of(DecisionRule::constant(3, 0));
  const auto seeking = atlas.class_of(DecisionRule::constant(3, 2));
  bool low = false, high = false;
  for (const auto& i : atlas.intervals[averse]) low = low || contains(i, -3.0, -1e-6);
  for (const auto& i : atlas.intervals[seeking]) high = high || contains(i, 1e-6, 3.0);
  c.expect(low, "Gamma(u=1) contains [-3, -1e-6]");
  c.expect(high, "Gamma(u=3) contains [1e-6, 3]");
  const auto at_zero = lambda_argmax(mdp, 0.0);
  double worst = 0.0;
  for (double l : at_zero.lambdas) worst = std::max(worst, std::abs(l));
  c.expect(worst <= 1e-9, "max |lambda^u(0)| = " + fmt(worst) + " <= 1e-9");
  c.expect(at_zero.optimal.size() == at_zero.rules.size(), "every rule optimal at 0");
  std::set<std::size_t> tied;
  for (const auto& b : atlas.boundaries)
    if (b.gamma == 0.0) tied.insert(b.classes.begin(), b.classes.end());
  c.expect(tied.size() == atlas.classes.size(), "all " + std::to_string(atlas.classes.size()) + " classes tie at 0");
}

void criterion2(Checks& c) {
  const auto atlas = regions(example_model("ex2"));
  for (double target : {std::log((3.0 - std::sqrt(5.0)) / 2.0), std::log((3.0 + std::sqrt(5.0)) / 2.0)}) {
    double best = kInf;
    for (const auto& b : atlas.boundaries)
      if (std::abs(b.gamma - target) < std::abs(best - target)) best = b.gamma;
    c.near(best, target, 1e-8, "boundary");
  }
}

void criterion3(Checks& c) {
  const Mdp mdp = example_model("ex3");
  const auto atlas = regions(mdp);
  const auto first = atlas.class_of(DecisionRule::constant(4, 0));
  const auto second = atlas.class_of(DecisionRule::constant(4, 1));
  c.expect(first != second, "u=1 and u=2 in different classes");
  const auto& iso = atlas.intervals[first];
  c.expect(iso.size() == 1 && iso[0].isolated && iso[0].lo == 0.0 && iso[0].hi == 0.0, "Gamma(u=1 class) = {0}");
  const auto& all = atlas.intervals[second];
  c.expect(all.size() == 1 && contains(all[0], -3.0, 3.0), "Gamma(u=2 class) covers [-3, 3]");
  const double gap = std::abs(solve_mpe(mdp, DecisionRule::constant(4, 0), 0.0).lambda -
                              solve_mpe(mdp, DecisionRule::constant(4, 1), 0.0).lambda);
  c.expect(gap <= kLambdaTieTolerance, "tie at 0: |lambda difference| = " + fmt(gap));
}

void criterion4(Checks& c) {
  const Mdp mdp = example_model("ex4", 0.0);
  MarkovPolicy switched;
  switched.prefix = {ex4_tilde_u()};
  switched.tail = ex4_u();
  c.near(evaluate_discounted(mdp, MarkovPolicy::stationary(ex4_u()), -1.0, 0.5)(0), 1.21, 0.005, "J(u)");
  c.near(evaluate_discounted(mdp, MarkovPolicy::stationary(ex4_tilde_u()), -1.0, 0.5)(0), 1.53, 0.005, "J(tilde-u)");
  c.near(evaluate_discounted(mdp, switched, -1.0, 0.5)(0), 1.64, 0.005, "J(tilde-u, u, u, ...)");
  c.near(solve_mpe(mdp, ex4_u(), -1.0).lambda, 0.35, 0.005, "lambda(u)");
  c.near(solve_mpe(mdp, ex4_tilde_u(), -1.0).lambda, 0.67, 0.005, "lambda(tilde-u)");
  c.near(switch_index(mdp, -1.0, 0.5).root, 0.456, 1e-3, "switch root s*");
}

void criterion5(Checks& c) {
  const Mdp mdp = example_model("ex4", 0.0);
  const double tilde = solve_mpe(mdp, ex4_tilde_u(), -1.0).lambda;
  const auto level0 = blackwell_threshold(mdp, -1.0, 0, default_beta_grid());
  for (const auto& row : level0.rows) {
    c.expect(row.member, "level 0 member at beta " + fmt(row.beta));
    c.expect(std::abs(row.lambda_rule - tilde) <= kLambdaTieTolerance, "level 0 rule in tilde-u class at " + fmt(row.beta));
  }
  for (std::size_t level : {1u, 2u, 3u}) {
    const auto r = blackwell_threshold(mdp, -1.0, level, default_beta_grid());
    c.expect(r.found, "level " + std::to_string(level) + " threshold found");
    for (const auto& row : r.rows)
      if (r.found && row.beta >= r.threshold) c.expect(row.member, "level " + std::to_string(level) + " member above threshold");
    c.note("level " + std::to_string(level) + " threshold " + fmt(r.threshold));
  }
}

void criterion6(Checks& c, const std::vector<Mdp>& models) {
  std::vector<Mdp> all{example_model("ex1"), example_model("ex2"), example_model("ex3")};
  all.insert(all.end(), models.begin(), models.end());
  double worst = 0.0;
  for (const auto& mdp : all)
    for (double gamma : {-2.0, -1.0, -0.1, 0.1, 1.0, 2.0}) {
      const double diff = std::abs(solve_average(mdp, gamma).lambda - lambda_argmax(mdp, gamma).lambda);
      worst = std::max(worst, diff);
    }
  c.expect(worst <= 1e-8, "max |solve_average - max_u lambda^u| = " + fmt(worst));
}

void criterion7(Checks& c) {
  for (const char* id : {"ex1", "ex2"})
    for (double gamma : {-1.0, 1.0}) {
      const std::string tag = std::string(id) + " gamma " + fmt(gamma);
      double prev_lambda = kInf, prev_w = kInf;
      for (double beta : {0.9, 0.99, 0.999, 0.9999}) {
        const auto t = vanishing_trace(example_model(id), gamma, beta, 0, 0);
        c.expect(t.dist_lambda[0] < prev_lambda, tag + " lambda distance decreases at " + fmt(beta));
        c.expect(t.dist_w[0] <= prev_w + 1e-12, tag + " w distance nonincreasing at " + fmt(beta));
        prev_lambda = t.dist_lambda[0];
        prev_w = t.dist_w[0];
      }
      c.expect(prev_lambda <= 1e-3, tag + " lambda distance " + fmt(prev_lambda));
      c.expect(prev_w <= 1e-3, tag + " w distance " + fmt(prev_w));
    }
}

void criterion8(Checks& c, const std::vector<Mdp>& models) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> g(-3.0, 3.0), shift(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const auto d = random_distribution(rng);
    const auto e = random_distribution(rng);
    double g1 = g(rng), g2 = g(rng);
    if (g1 > g2) std::swap(g1, g2);
    const double u1 = entropic_utility(d, g1), u2 = entropic_utility(d, g2);
    c.expect(u1 <= u2 + 1e-10, "entropic monotone in gamma");
    c.expect(d.min() - 1e-10 <= u1 && u1 <= d.max() + 1e-10, "entropic within [min, max]");
    auto moved = d;
    const double s = shift(rng);
    for (auto& z : moved.outcomes) z += s;
    c.expect(std::abs(entropic_utility(moved, g1) - u1 - s) <= 1e-10, "entropic translation");
    c.expect(std::abs(entropic_utility(independent_sum(d, e), g1) - u1 - entropic_utility(e, g1)) <= 1e-10,
             "entropic additivity");
    const double gg = g1 == 0.0 ? 1.0 : g1;
    c.expect(gibbs_tilt(d, gg).gap <= 1e-10, "Gibbs dual gap");
    for (double t : {-0.01, 0.01}) c.expect(taylor_check(d, t).within_bound(), "Taylor residual <= C gamma^2");
  }

  std::uniform_real_distribution<double> entry(0.0, 1.0);
  for (int k = 1; k <= 6; ++k)
    for (int rep = 0; rep < 20; ++rep) {
      Matrix A(k, k);
      for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) A(i, j) = entry(rng) + 1e-3;
      const auto p = perron(A.array().log().matrix());
      Eigen::EigenSolver<Matrix> es(A);
      const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
      c.expect(std::abs(std::exp(p.log_root) / rho - 1.0) <= 1e-10, "Perron root vs dense k=" + std::to_string(k));
      c.expect(p.residual <= 1e-10, "Perron residual k=" + std::to_string(k));
    }

  std::vector<Mdp> all{example_model("ex1"), example_model("ex2"), example_model("ex3"), example_model("ex4", 0.0),
                       example_model("ex4", 0.05)};
  all.insert(all.end(), models.begin(), models.end());
  const auto grid = make_grid(-3.0, 3.0, 0.1);
  for (const auto& mdp : all) {
    const double norm = mdp.reward_norm();
    for (const auto& curve : sweep(mdp, enumerate_rules(mdp), grid)) {
      double prev = -kInf;
      for (std::size_t i = 0; i < curve.values.size(); ++i) {
        if (curve.failed[i]) continue;
        const double v = curve.values[i];
        c.expect(v >= prev - 1e-10, "lambda^u monotone in gamma");
        c.expect(std::abs(v) <= norm + 1e-10, "|lambda^u| <= ||c||");
        prev = v;
      }
    }
  }

  std::size_t bounded = 0;
  for (const auto& mdp : all) {
    const auto report = check_assumptions(mdp);
    if (!std::isfinite(report.equivalence.k_ratio)) continue;
    ++bounded;
    const double N = static_cast<double>(report.equivalence.n_steps);
    const double K = report.equivalence.k_ratio;
    const double norm = mdp.reward_norm();
    for (double gamma : {-2.0, -0.5, 0.5, 2.0})
      for (double beta : {0.5, 0.9}) {
        const auto s = solve_discounted(mdp, gamma, beta);
        const double span_bound = std::abs(gamma) * N * norm + 0.5 * std::log(K);
        for (Eigen::Index n = 0; n < s.levels.cols(); ++n)
          c.expect(span(s.levels.col(n)) <= span_bound + 1e-9, "span bound on w^beta levels");
        const auto trace = vanishing_trace(mdp, gamma, beta, 0, std::min<std::size_t>(5, s.horizon - 1));
        const double lambda_bound = std::abs(gamma) * norm * (1.0 + 2.0 * N) + std::log(K);
        for (double l : trace.lambda_n) c.expect(std::abs(l) <= lambda_bound + 1e-9, "lambda_n bound");
      }
  }
  c.note(std::to_string(bounded) + " of " + std::to_string(all.size()) + " models with finite K");
}

void criterion9(Checks& c, const std::vector<Mdp>& models) {
  const double beta = 1.0 - std::ldexp(1.0, -14);
  double worst = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto r = neutral_blackwell(models[i], {beta}, 0);
    c.expect(r.member, "model " + std::to_string(i) + " greedy rule in Pi*_0");
    worst = std::max(worst, r.rows.back().distance);
  }
  c.expect(worst <= 1e-3, "max |(1 - beta) w^beta(z, 0) - lambda(0)| = " + fmt(worst));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> allowed;
  app.add_option("--allow-fail", allowed, "Criteria whose FAIL does not affect the exit code")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const auto models = random_models();
  struct Criterion {
    int id;
    const char* title;
    double budget;  // seconds, 0 for none
    std::function<void(Checks&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "ex1 regions", 5.0, criterion1},
      {2, "ex2 boundaries", 5.0, criterion2},
      {3, "ex3 isolated point", 0.0, criterion3},
      {4, "ex4 discounted and averaged values", 0.0, criterion4},
      {5, "ex4 Blackwell levels", 0.0, criterion5},
      {6, "MPE-Bellman consistency", 60.0, [&](Checks& c) { criterion6(c, models); }},
      {7, "vanishing discount", 0.0, criterion7},
      {8, "property suites", 0.0, [&](Checks& c) { criterion8(c, models); }},
      {9, "risk-neutral Blackwell", 0.0, [&](Checks& c) { criterion9(c, models); }},
  };

  int code = 0;
  for (const auto& cr : criteria) {
    Checks checks;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.budget > 0.0) checks.expect(seconds < cr.budget, "runtime " + fmt(seconds) + " s < " + fmt(cr.budget) + " s");
    const bool pass = !checks.failed();
    std::cout << "criterion " << cr.id << " " << (pass ? "PASS" : "FAIL") << "  " << cr.title << "  ("
              << checks.count() << " checks, " << fmt(seconds) << " s)\n";
    for (const auto& n : checks.notes()) std::cout << "    " << n << "\n";
    for (const auto& f : checks.failures()) std::cout << "    failed: " << f << "\n";
    if (!pass && std::find(allowed.begin(), allowed.end(), cr.id) == allowed.end()) code = 1;
  }
  return code;
}
