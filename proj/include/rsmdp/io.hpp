#pragma once

#include "rsmdp/assumptions.hpp"
#include "rsmdp/avg_bellman.hpp"
#include "rsmdp/disc_bellman.hpp"
#include "rsmdp/entropic.hpp"
#include "rsmdp/gamma_sweep.hpp"
#include "rsmdp/mdp.hpp"
#include "rsmdp/poisson.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace rsmdp {

using Json = nlohmann::ordered_json;

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double x);

Json to_json(const Vector& v);
Json to_json(const Mdp& mdp, const DecisionRule& rule);
Json to_json(const Mdp& mdp, const ErgodicityReport& report);
Json to_json(const Mdp& mdp, const AvgSolution& solution);
Json to_json(const Mdp& mdp, const OptimalRuleSet& rules);
Json to_json(const Mdp& mdp, const MpeSolution& solution);
Json to_json(const McEstimate& estimate);
Json to_json(const Mdp& mdp, const GammaAtlas& atlas);
Json to_json(const Mdp& mdp, const DiscSolution& solution);
Json to_json(const VanishingTrace& trace);
Json to_json(const Mdp& mdp, const BlackwellResult& result);
Json to_json(const Mdp& mdp, const NeutralBlackwellResult& result);
Json to_json(const SwitchIndex& index);

/// gamma,rule_id,lambda,optimal: one row per rule at every grid point and refined boundary.
std::string sweep_csv(const Mdp& mdp, const GammaAtlas& atlas);
/// beta,level,rule_id,lambda_rule,lambda_opt,member
std::string blackwell_csv(const Mdp& mdp, const BlackwellResult& result);
/// beta,n,lambda_n_over_gamma,dist_lambda,dist_w_sup
std::string vanish_csv(const std::vector<VanishingTrace>& traces);
/// n,state,rule_action,argmax_actions,value,w: the discounted levels table.
std::string levels_csv(const Mdp& mdp, const DiscSolution& solution);

}  // namespace rsmdp
