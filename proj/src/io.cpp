#include "rsmdp/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace rsmdp {

namespace {

Json number(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

Json numbers(const std::vector<double>& xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

Json rule_list(const Mdp& mdp, const std::vector<DecisionRule>& rules, const std::vector<std::size_t>& indices) {
  Json out = Json::array();
  for (auto i : indices) out.push_back(mdp.rule_id(rules[i]));
  return out;
}

Json interval_json(const GammaInterval& iv) {
  Json j;
  j["lo"] = number(iv.lo);
  j["hi"] = number(iv.hi);
  j["lo_kind"] = to_string(iv.lo_kind);
  j["hi_kind"] = to_string(iv.hi_kind);
  j["unbounded_below"] = iv.unbounded_below;
  j["unbounded_above"] = iv.unbounded_above;
  j["isolated"] = iv.isolated;
  return j;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json to_json(const Mdp& mdp, const DecisionRule& rule) {
  Json j;
  j["id"] = mdp.rule_id(rule);
  Json by_state;
  for (std::size_t x = 0; x < rule.size(); ++x) by_state[mdp.state_labels()[x]] = mdp.action_labels()[rule(x)];
  j["actions"] = by_state;
  return j;
}

Json to_json(const Mdp& mdp, const ErgodicityReport& report) {
  Json j;
  j["delta"] = number(report.delta);
  const auto& w = report.delta_witness;
  j["delta_witness"] = {{"state", mdp.state_labels()[w.state]},
                        {"action", mdp.action_labels()[w.action]},
                        {"other_state", mdp.state_labels()[w.other_state]},
                        {"other_action", mdp.action_labels()[w.other_action]}};
  j["one_step_mixing"] = report.one_step_mixing;
  Json prim;
  prim["primitive"] = report.primitivity.primitive;
  prim["n_steps"] = report.primitivity.n_steps;
  prim["bound"] = report.primitivity.bound;
  Json sets = Json::array();
  for (auto s : report.primitivity.witness_sets) sets.push_back(format_state_set(mdp, s));
  prim["witness_sets"] = sets;
  Json wr = Json::array();
  for (const auto& r : report.primitivity.witness_rules) wr.push_back(mdp.rule_id(r));
  prim["witness_rules"] = wr;
  j["primitivity"] = prim;
  Json eq;
  eq["n_steps"] = report.equivalence.n_steps;
  eq["k_ratio"] = number(report.equivalence.k_ratio);
  eq["bound_only"] = report.equivalence.bound_only;
  eq["row"] = mdp.state_labels()[report.equivalence.row];
  eq["other_row"] = mdp.state_labels()[report.equivalence.other_row];
  eq["column"] = mdp.state_labels()[report.equivalence.column];
  Json er = Json::array();
  for (const auto& r : report.equivalence.rules) er.push_back(mdp.rule_id(r));
  eq["rules"] = er;
  j["equivalence"] = eq;
  j["transition_equivalent"] = report.transition_equivalent;
  j["all_hold"] = report.all_hold();
  j["violations"] = report.violations;
  return j;
}

Json to_json(const Mdp& mdp, const AvgSolution& solution) {
  Json j;
  j["gamma"] = number(solution.gamma);
  j["lambda"] = number(solution.lambda);
  j["anchor"] = mdp.state_labels()[solution.anchor];
  j["w"] = to_json(solution.w);
  j["residual"] = number(solution.residual);
  j["iterations"] = solution.iterations;
  j["ratios"] = numbers(solution.ratios);
  return j;
}

Json to_json(const Mdp& mdp, const OptimalRuleSet& rules) {
  Json j;
  Json per_state;
  for (std::size_t x = 0; x < rules.actions.size(); ++x) {
    Json acts = Json::array();
    for (auto a : rules.actions[x]) acts.push_back(mdp.action_labels()[a]);
    per_state[mdp.state_labels()[x]] = acts;
  }
  j["actions"] = per_state;
  j["canonical"] = mdp.rule_id(rules.canonical);
  return j;
}

Json to_json(const Mdp& mdp, const MpeSolution& solution) {
  Json j;
  j["rule"] = mdp.rule_id(solution.rule);
  j["gamma"] = number(solution.gamma);
  j["lambda"] = number(solution.lambda);
  j["anchor"] = mdp.state_labels()[solution.anchor];
  j["w"] = to_json(solution.w);
  j["log_perron_root"] = number(solution.log_perron_root);
  Json cls = Json::array();
  for (auto x : solution.recurrent_class) cls.push_back(mdp.state_labels()[x]);
  j["recurrent_class"] = cls;
  j["residual"] = number(solution.residual);
  j["iterations"] = solution.iterations;
  j["shifted"] = solution.shifted;
  return j;
}

Json to_json(const McEstimate& e) {
  Json j;
  j["estimate"] = number(e.estimate);
  j["se"] = number(e.se);
  j["bias_bound"] = number(e.bias_bound);
  j["seed"] = e.seed;
  j["rng"] = e.rng;
  j["paths"] = e.paths;
  j["horizon"] = e.horizon;
  j["ess"] = number(e.ess);
  j["low_ess"] = e.low_ess;
  j["warning"] = e.warning;
  return j;
}

Json to_json(const Mdp& mdp, const GammaAtlas& atlas) {
  Json j;
  const auto& o = atlas.options;
  j["window"] = {{"lo", o.lo}, {"hi", o.hi}, {"step", o.step}};
  j["tolerances"] = {{"tol_root", o.tol_root}, {"tau", o.tau}, {"mpe_tol", o.mpe_tol}};
  Json classes = Json::array();
  for (std::size_t c = 0; c < atlas.classes.size(); ++c) {
    Json cj;
    cj["representative"] = mdp.rule_id(atlas.rules[atlas.classes[c].representative]);
    cj["members"] = rule_list(mdp, atlas.rules, atlas.classes[c].members);
    Json ivs = Json::array();
    for (const auto& iv : atlas.intervals[c]) ivs.push_back(interval_json(iv));
    cj["regions"] = ivs;
    classes.push_back(cj);
  }
  j["classes"] = classes;
  Json bps = Json::array();
  for (const auto& b : atlas.boundaries) {
    Json cls = Json::array();
    for (auto c : b.classes) cls.push_back(mdp.rule_id(atlas.rules[atlas.classes[c].representative]));
    bps.push_back({{"gamma", number(b.gamma)}, {"classes", cls}});
  }
  j["boundaries"] = bps;
  j["merges"] = atlas.merges;
  return j;
}

Json to_json(const Mdp& mdp, const DiscSolution& s) {
  Json j;
  j["gamma"] = number(s.gamma);
  j["beta"] = number(s.beta);
  j["horizon"] = s.horizon;
  j["tail_bound"] = number(s.tail_bound);
  j["value"] = to_json(s.value);
  Json levels = Json::array();
  for (std::size_t n = 0; n < s.rules.size(); ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    Json lv;
    lv["n"] = n;
    lv["risk_level"] = number(s.gamma * std::pow(s.beta, static_cast<double>(n)));
    lv["rule"] = mdp.rule_id(s.rules[n]);
    lv["w"] = to_json(Vector(s.levels.col(col)));
    lv["value"] = to_json(Vector(s.values.col(col)));
    Json ties;
    for (std::size_t x = 0; x < mdp.num_states(); ++x) {
      Json acts = Json::array();
      for (std::size_t a = 0; a < mdp.num_actions(); ++a)
        if (s.argmax[n][x] >> a & 1U) acts.push_back(mdp.action_labels()[a]);
      ties[mdp.state_labels()[x]] = acts;
    }
    lv["argmax"] = ties;
    levels.push_back(lv);
  }
  j["levels"] = levels;
  return j;
}

Json to_json(const VanishingTrace& t) {
  Json j;
  j["gamma"] = number(t.gamma);
  j["beta"] = number(t.beta);
  j["anchor"] = t.anchor;
  j["lambda_avg"] = number(t.lambda_avg);
  j["w_avg"] = to_json(t.w_avg);
  Json rows = Json::array();
  for (std::size_t n = 0; n < t.lambda_n.size(); ++n)
    rows.push_back({{"n", n},
                    {"lambda_n", number(t.lambda_n[n])},
                    {"w_bar", to_json(t.w_bar[n])},
                    {"dist_lambda", number(t.dist_lambda[n])},
                    {"dist_w", number(t.dist_w[n])}});
  j["levels"] = rows;
  return j;
}

Json to_json(const Mdp& mdp, const BlackwellResult& r) {
  Json j;
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"beta", number(row.beta)},
                    {"level", row.level},
                    {"rule", mdp.rule_id(row.rule)},
                    {"lambda_rule", number(row.lambda_rule)},
                    {"lambda_opt", number(row.lambda_opt)},
                    {"member", row.member}});
  j["rows"] = rows;
  j["found"] = r.found;
  j["threshold"] = r.found ? Json(r.threshold) : Json(nullptr);
  return j;
}

Json to_json(const Mdp& mdp, const NeutralBlackwellResult& r) {
  Json j;
  j["lambda0"] = number(r.lambda0);
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"beta", number(row.beta)},
                    {"rule", mdp.rule_id(row.rule)},
                    {"lambda_rule", number(row.lambda_rule)},
                    {"member", row.member},
                    {"scaled_value", number(row.scaled_value)},
                    {"distance", number(row.distance)}});
  j["rows"] = rows;
  j["rule"] = mdp.rule_id(r.rule);
  j["member"] = r.member;
  j["found"] = r.found;
  j["threshold"] = r.found ? Json(r.threshold) : Json(nullptr);
  return j;
}

Json to_json(const SwitchIndex& s) {
  Json j;
  j["switches"] = s.switches;
  j["root"] = number(s.root);
  j["gamble"] = s.gamble;
  j["level"] = s.level;
  return j;
}

std::string sweep_csv(const Mdp& mdp, const GammaAtlas& atlas) {
  struct Point {
    double gamma;
    std::vector<double> lambdas;
    std::vector<bool> optimal;
  };
  std::vector<Point> points;
  const std::size_t R = atlas.rules.size();
  std::vector<std::size_t> cls_of(R);
  for (std::size_t c = 0; c < atlas.classes.size(); ++c)
    for (auto r : atlas.classes[c].members) cls_of[r] = c;
  for (std::size_t g = 0; g < atlas.grid.size(); ++g) {
    Point pt{atlas.grid[g], std::vector<double>(R), std::vector<bool>(R)};
    for (std::size_t r = 0; r < R; ++r) {
      pt.lambdas[r] = atlas.lambdas[r][g];
      for (auto c : atlas.optimal[g]) pt.optimal[r] = pt.optimal[r] || c == cls_of[r];
    }
    points.push_back(std::move(pt));
  }
  // Refined boundaries fall between grid points; add rows evaluated there.
  for (const auto& b : atlas.boundaries) {
    bool on_grid = false;
    for (double g : atlas.grid) on_grid = on_grid || g == b.gamma;
    if (on_grid) continue;
    Point pt{b.gamma, std::vector<double>(R), std::vector<bool>(R)};
    for (std::size_t r = 0; r < R; ++r) {
      try {
        pt.lambdas[r] = solve_mpe(mdp, atlas.rules[r], b.gamma, atlas.options.mpe_tol).lambda;
      } catch (const std::exception&) {
        pt.lambdas[r] = std::numeric_limits<double>::quiet_NaN();
      }
      for (auto c : b.classes) pt.optimal[r] = pt.optimal[r] || c == cls_of[r];
    }
    points.push_back(std::move(pt));
  }
  std::stable_sort(points.begin(), points.end(), [](const Point& a, const Point& b) { return a.gamma < b.gamma; });
  std::ostringstream os;
  os << "gamma,rule_id,lambda,optimal\n";
  for (const auto& pt : points)
    for (std::size_t r = 0; r < R; ++r)
      os << format_double(pt.gamma) << ',' << mdp.rule_id(atlas.rules[r]) << ',' << format_double(pt.lambdas[r])
         << ',' << (pt.optimal[r] ? 1 : 0) << '\n';
  return os.str();
}

std::string blackwell_csv(const Mdp& mdp, const BlackwellResult& result) {
  std::ostringstream os;
  os << "beta,level,rule_id,lambda_rule,lambda_opt,member\n";
  for (const auto& row : result.rows)
    os << format_double(row.beta) << ',' << row.level << ',' << mdp.rule_id(row.rule) << ','
       << format_double(row.lambda_rule) << ',' << format_double(row.lambda_opt) << ',' << (row.member ? 1 : 0)
       << '\n';
  return os.str();
}

std::string vanish_csv(const std::vector<VanishingTrace>& traces) {
  std::ostringstream os;
  os << "beta,n,lambda_n_over_gamma,dist_lambda,dist_w_sup\n";
  for (const auto& t : traces)
    for (std::size_t n = 0; n < t.lambda_n.size(); ++n)
      os << format_double(t.beta) << ',' << n << ',' << format_double(t.lambda_n[n] / t.gamma) << ','
         << format_double(t.dist_lambda[n]) << ',' << format_double(t.dist_w[n]) << '\n';
  return os.str();
}

std::string levels_csv(const Mdp& mdp, const DiscSolution& s) {
  std::ostringstream os;
  os << "n,state,rule_action,argmax_actions,value,w\n";
  for (std::size_t n = 0; n < s.rules.size(); ++n) {
    const auto col = static_cast<Eigen::Index>(n);
    for (std::size_t x = 0; x < mdp.num_states(); ++x) {
      std::string ties;
      for (std::size_t a = 0; a < mdp.num_actions(); ++a)
        if (s.argmax[n][x] >> a & 1U) ties += (ties.empty() ? "" : "|") + mdp.action_labels()[a];
      const auto row = static_cast<Eigen::Index>(x);
      os << n << ',' << mdp.state_labels()[x] << ',' << mdp.action_labels()[s.rules[n](x)] << ',' << ties << ','
         << format_double(s.values(row, col)) << ',' << format_double(s.levels(row, col)) << '\n';
    }
  }
  return os.str();
}

}  // namespace rsmdp
