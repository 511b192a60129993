#pragma once

#include "rsmdp/mdp.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rsmdp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitAssumptions = 3;
inline constexpr int kExitNonConvergence = 4;

/// Runs one command line (argv[0] is the program name). The primary output goes
/// to `out`; with --out-dir every output plus manifest.json is written there.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Policy spec: "a<label>" (constant action), "u" / "tilde-u" (first / second
/// action everywhere), "r:<rule id>", or a '+'-separated sequence whose last
/// element repeats forever.
MarkovPolicy parse_policy(const Mdp& mdp, std::string_view spec);

}  // namespace rsmdp::cli
