#include "rsmdp/mdp.hpp"

#include "rsmdp/numeric.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace rsmdp {

namespace {

std::string quote_label(const std::string& s) { return "\"" + s + "\""; }

/// Shortest decimal form (up to 17 digits) that reads back as x.
std::string format_number(double x) {
  std::string text;
  for (int digits = 1; digits <= 17; ++digits) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    text = os.str();
    if (std::stod(text) == x) break;
  }
  return text;
}

void check_unique(const std::vector<std::string>& labels, const char* kind) {
  std::set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second)
      throw ValidationError(std::string("duplicate ") + kind + " label " + quote_label(label));
  }
}

}  // namespace

MarkovPolicy MarkovPolicy::shifted(std::size_t steps) const {
  MarkovPolicy out;
  out.tail = tail;
  if (steps < prefix.size()) out.prefix.assign(prefix.begin() + static_cast<std::ptrdiff_t>(steps), prefix.end());
  return out;
}

Mdp::Mdp(std::vector<std::string> states, std::vector<std::string> actions,
         std::vector<Matrix> transitions, Matrix rewards, LoadOptions options)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)) {
  const auto k = states_.size();
  const auto l = actions_.size();
  if (k == 0) throw ValidationError("model has no states");
  if (l == 0) throw ValidationError("model has no actions");
  check_unique(states_, "state");
  check_unique(actions_, "action");
  if (transitions_.size() != l)
    throw ValidationError("expected " + std::to_string(l) + " transition matrices, got " +
                          std::to_string(transitions_.size()));
  if (static_cast<std::size_t>(rewards_.rows()) != k || static_cast<std::size_t>(rewards_.cols()) != l)
    throw ValidationError("reward table must be " + std::to_string(k) + "x" + std::to_string(l));

  for (std::size_t a = 0; a < l; ++a) {
    Matrix& P = transitions_[a];
    if (static_cast<std::size_t>(P.rows()) != k || static_cast<std::size_t>(P.cols()) != k)
      throw ValidationError("action " + quote_label(actions_[a]) + " transition matrix must be " +
                            std::to_string(k) + "x" + std::to_string(k));
    for (std::size_t x = 0; x < k; ++x) {
      const std::string where =
          "action " + quote_label(actions_[a]) + " row " + std::to_string(x + 1) + " (state " + quote_label(states_[x]) + ")";
      for (std::size_t y = 0; y < k; ++y) {
        const double p = P(x, y);
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
          throw ValidationError(where + " entry " + std::to_string(y + 1) + " = " + format_number(p) +
                                " is not a probability");
      }
      const double sum = P.row(x).sum();
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        if (!options.renormalize || sum <= 0.0)
          throw ValidationError(where + " sums to " + format_number(sum));
        P.row(x) /= sum;
      }
    }
  }
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t a = 0; a < l; ++a)
      if (!std::isfinite(rewards_(x, a)))
        throw ValidationError("reward for action " + quote_label(actions_[a]) + " at state " + quote_label(states_[x]) +
                              " is not finite");
}

double Mdp::reward_norm() const { return rewards_.cwiseAbs().maxCoeff(); }
double Mdp::reward_range() const { return rewards_.maxCoeff() - rewards_.minCoeff(); }

std::size_t Mdp::state_index(std::string_view label) const {
  for (std::size_t i = 0; i < states_.size(); ++i)
    if (states_[i] == label) return i;
  throw ValidationError("unknown state " + quote_label(std::string(label)));
}

std::size_t Mdp::action_index(std::string_view label) const {
  for (std::size_t i = 0; i < actions_.size(); ++i)
    if (actions_[i] == label) return i;
  throw ValidationError("unknown action " + quote_label(std::string(label)));
}

void Mdp::check_rule(const DecisionRule& rule) const {
  if (rule.size() != num_states())
    throw ValidationError("decision rule assigns " + std::to_string(rule.size()) + " states, model has " +
                          std::to_string(num_states()));
  for (std::size_t x = 0; x < rule.size(); ++x)
    if (rule(x) >= num_actions())
      throw ValidationError("decision rule uses action index " + std::to_string(rule(x)) + " at state " +
                            quote_label(states_[x]));
}

std::string Mdp::rule_id(const DecisionRule& rule) const {
  check_rule(rule);
  std::string id;
  for (std::size_t x = 0; x < rule.size(); ++x) {
    if (x) id += '/';
    id += actions_[rule(x)];
  }
  return id;
}

DecisionRule Mdp::parse_rule_id(std::string_view id) const {
  DecisionRule rule;
  std::size_t start = 0;
  while (true) {
    const auto slash = id.find('/', start);
    rule.actions.push_back(action_index(id.substr(start, slash == std::string_view::npos ? id.npos : slash - start)));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  check_rule(rule);
  return rule;
}

Mdp load_mdp(std::string_view document, LoadOptions options) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw ParseError("model document must be a JSON object");
    for (const char* field : {"states", "actions", "transitions", "rewards"})
      if (!doc.contains(field)) throw ParseError(std::string("missing field \"") + field + "\"");
    auto states = doc.at("states").get<std::vector<std::string>>();
    auto actions = doc.at("actions").get<std::vector<std::string>>();
    const auto& trans = doc.at("transitions");
    const auto& rew = doc.at("rewards");
    if (!trans.is_object() || !rew.is_object())
      throw ParseError("\"transitions\" and \"rewards\" must be objects keyed by action label");
    const auto k = states.size();
    check_unique(states, "state");
    check_unique(actions, "action");

    std::vector<Matrix> transitions;
    Matrix rewards(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(actions.size()));
    for (std::size_t a = 0; a < actions.size(); ++a) {
      const auto& label = actions[a];
      if (!trans.contains(label)) throw ValidationError("missing transition matrix for action " + quote_label(label));
      const auto rows = trans.at(label).get<std::vector<std::vector<double>>>();
      if (rows.size() != k)
        throw ValidationError("action " + quote_label(label) + " has " + std::to_string(rows.size()) +
                              " transition rows, expected " + std::to_string(k));
      Matrix P(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
      for (std::size_t x = 0; x < k; ++x) {
        if (rows[x].size() != k)
          throw ValidationError("action " + quote_label(label) + " row " + std::to_string(x + 1) + " has " +
                                std::to_string(rows[x].size()) + " entries, expected " + std::to_string(k));
        for (std::size_t y = 0; y < k; ++y) P(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = rows[x][y];
      }
      transitions.push_back(std::move(P));

      if (!rew.contains(label)) throw ValidationError("missing rewards for action " + quote_label(label));
      const auto values = rew.at(label).get<std::vector<double>>();
      if (values.size() != k)
        throw ValidationError("rewards for action " + quote_label(label) + " have " + std::to_string(values.size()) +
                              " entries, expected " + std::to_string(k) + " (missing reward cell)");
      for (std::size_t x = 0; x < k; ++x) rewards(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(a)) = values[x];
    }
    for (const auto& item : trans.items()) {
      bool known = false;
      for (const auto& label : actions) known = known || label == item.key();
      if (!known) throw ValidationError("transition matrix for unknown action " + quote_label(item.key()));
    }
    return Mdp(std::move(states), std::move(actions), std::move(transitions), std::move(rewards), options);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model document: ") + e.what());
  }
}

std::string dump_mdp(const Mdp& mdp) {
  nlohmann::ordered_json doc;
  doc["states"] = mdp.state_labels();
  doc["actions"] = mdp.action_labels();
  auto& trans = doc["transitions"];
  auto& rew = doc["rewards"];
  const auto k = mdp.num_states();
  for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
    const auto& label = mdp.action_labels()[a];
    auto rows = nlohmann::ordered_json::array();
    auto values = nlohmann::ordered_json::array();
    for (std::size_t x = 0; x < k; ++x) {
      auto row = nlohmann::ordered_json::array();
      for (std::size_t y = 0; y < k; ++y) row.push_back(mdp.probability(a, x, y));
      rows.push_back(std::move(row));
      values.push_back(mdp.reward(x, a));
    }
    trans[label] = std::move(rows);
    rew[label] = std::move(values);
  }
  return doc.dump(2);
}

Matrix policy_kernel(const Mdp& mdp, const DecisionRule& rule) {
  mdp.check_rule(rule);
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  Matrix P(k, k);
  for (Eigen::Index x = 0; x < k; ++x) P.row(x) = mdp.transition(rule(static_cast<std::size_t>(x))).row(x);
  return P;
}

Matrix n_step_kernel(const Mdp& mdp, const MarkovPolicy& policy, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("n_step_kernel requires at least one step");
  Matrix result = policy_kernel(mdp, policy.at(0));
  for (std::size_t i = 1; i < steps; ++i) result = result * policy_kernel(mdp, policy.at(i));
  return result;
}

double rule_count(const Mdp& mdp) {
  return std::pow(static_cast<double>(mdp.num_actions()), static_cast<double>(mdp.num_states()));
}

std::vector<DecisionRule> enumerate_rules(const Mdp& mdp, std::size_t cap) {
  const double count = rule_count(mdp);
  if (count > static_cast<double>(cap))
    throw EnumerationLimitError("l^k = " + format_number(count) + " decision rules exceed the enumeration cap of " +
                                    std::to_string(cap),
                                count);
  const auto k = mdp.num_states();
  const auto l = mdp.num_actions();
  std::vector<DecisionRule> rules;
  rules.reserve(static_cast<std::size_t>(count));
  DecisionRule current{std::vector<std::size_t>(k, 0)};
  while (true) {
    rules.push_back(current);
    std::size_t pos = k;
    while (pos > 0) {
      --pos;
      if (++current.actions[pos] < l) break;
      current.actions[pos] = 0;
      if (pos == 0) return rules;
    }
  }
}

std::size_t rule_index(const Mdp& mdp, const DecisionRule& rule) {
  mdp.check_rule(rule);
  std::size_t index = 0;
  for (std::size_t x = 0; x < rule.size(); ++x) index = index * mdp.num_actions() + rule(x);
  return index;
}

SamplePath simulate_path(const Mdp& mdp, const MarkovPolicy& policy, std::size_t x0, std::size_t horizon,
                         std::uint64_t seed) {
  if (x0 >= mdp.num_states()) throw ValidationError("initial state index out of range");
  StreamRng rng(seed, 0);
  SamplePath path;
  path.states.reserve(horizon + 1);
  path.actions.reserve(horizon);
  path.rewards.reserve(horizon);
  const auto k = static_cast<Eigen::Index>(mdp.num_states());
  std::size_t x = x0;
  path.states.push_back(x);
  for (std::size_t i = 0; i < horizon; ++i) {
    const std::size_t a = policy.at(i)(x);
    path.actions.push_back(a);
    path.rewards.push_back(mdp.reward(x, a));
    const auto& P = mdp.transition(a);
    const double u = rng.uniform();
    double acc = 0.0;
    Eigen::Index next = -1;
    for (Eigen::Index y = 0; y < k; ++y) {
      const double p = P(static_cast<Eigen::Index>(x), y);
      if (p <= 0.0) continue;
      acc += p;
      next = y;
      if (u < acc) break;
    }
    x = static_cast<std::size_t>(next);
    path.states.push_back(x);
  }
  return path;
}

}  // namespace rsmdp
