#pragma once

#include "rsmdp/mdp.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace rsmdp {

inline constexpr double kDefaultEx4Epsilon = 0.05;

/// Built-in models "ex1".."ex4". `epsilon` is used only by ex4 and must lie in [0, 0.1).
Mdp example_model(std::string_view id, double epsilon = kDefaultEx4Epsilon);
std::vector<std::string> example_ids();
bool is_example_id(std::string_view id);

/// ex4 rules: "u" takes action 1 everywhere, "tilde u" takes action 2 everywhere.
DecisionRule ex4_u();
DecisionRule ex4_tilde_u();

}  // namespace rsmdp
