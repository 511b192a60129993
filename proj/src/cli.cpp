#include "rsmdp/cli.hpp"

#include "rsmdp/assumptions.hpp"
#include "rsmdp/avg_bellman.hpp"
#include "rsmdp/disc_bellman.hpp"
#include "rsmdp/entropic.hpp"
#include "rsmdp/examples.hpp"
#include "rsmdp/gamma_sweep.hpp"
#include "rsmdp/io.hpp"
#include "rsmdp/poisson.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <utility>

namespace rsmdp::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Params {
  std::string model;
  std::optional<double> epsilon;
  bool renormalize = false;
  double gamma = 0.0;
  double beta = 0.5;
  std::vector<double> betas;
  std::size_t level = 0;
  std::size_t depth = 0;
  double from = -3.0, to = 3.0, step = 0.1;
  double tol = 0.0;  // 0 selects each command's default
  double tol_root = 1e-10;
  double tau = kLambdaTieTolerance;
  std::string anchor;
  std::string policy;
  std::string x0;
  bool avg = false;
  std::size_t n = 0;
  std::size_t m = 10000;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string print;
  std::string manifest;
};

using Outputs = std::vector<std::pair<std::string, std::string>>;

struct CommandResult {
  Outputs outputs;
  int code = kExitOk;
};

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Mdp resolve_model(const Params& p) {
  if (is_example_id(p.model)) {
    if (p.epsilon && p.model != "ex4") throw UsageError("--epsilon applies only to ex4");
    return example_model(p.model, p.epsilon.value_or(kDefaultEx4Epsilon));
  }
  if (p.epsilon) throw UsageError("--epsilon applies only to the built-in ex4 model");
  std::ifstream in(p.model);
  if (!in) throw UsageError("cannot open model file '" + p.model + "' (and it is not one of ex1..ex4)");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_mdp(buf.str(), LoadOptions{p.renormalize});
}

std::size_t resolve_state(const Mdp& mdp, const std::string& label, std::size_t fallback) {
  return label.empty() ? fallback : mdp.state_index(label);
}

Json model_header(const Params& p, const Mdp& mdp) {
  Json j;
  j["id"] = p.model;
  if (p.model == "ex4") j["epsilon"] = p.epsilon.value_or(kDefaultEx4Epsilon);
  j["states"] = mdp.state_labels();
  j["actions"] = mdp.action_labels();
  return j;
}

Json assumptions_or_error(const Mdp& mdp) {
  try {
    return to_json(mdp, check_assumptions(mdp));
  } catch (const EnumerationLimitError& e) {
    return Json{{"error", e.what()}};
  }
}

CommandResult cmd_check(const Params& p) {
  const Mdp mdp = resolve_model(p);
  const auto report = check_assumptions(mdp);
  Json j;
  j["model"] = model_header(p, mdp);
  j["report"] = to_json(mdp, report);
  return {{{"report.json", dump(j)}}, report.all_hold() ? kExitOk : kExitAssumptions};
}

CommandResult cmd_solve(const Params& p) {
  const Mdp mdp = resolve_model(p);
  AvgOptions opt;
  if (p.tol > 0.0) opt.tol = p.tol;
  opt.anchor = resolve_state(mdp, p.anchor, 0);
  Json j;
  j["model"] = model_header(p, mdp);
  j["gamma"] = p.gamma;
  int code = kExitOk;
  try {
    const auto sol = solve_average(mdp, p.gamma, opt);
    j["converged"] = true;
    j["solution"] = to_json(mdp, sol);
    j["optimal_rules"] = to_json(mdp, extract_rules(mdp, sol));
  } catch (const AvgConvergenceError& e) {
    j["converged"] = false;
    j["error"] = e.what();
    j["solution"] = to_json(mdp, e.last());
    code = kExitNonConvergence;
  }
  j["assumptions"] = assumptions_or_error(mdp);
  return {{{"solution.json", dump(j)}}, code};
}

CommandResult cmd_sweep(const Params& p) {
  const Mdp mdp = resolve_model(p);
  RegionOptions opt;
  opt.lo = p.from;
  opt.hi = p.to;
  opt.step = p.step;
  opt.tol_root = p.tol_root;
  opt.tau = p.tau;
  if (p.tol > 0.0) opt.mpe_tol = p.tol;
  const auto atlas = regions(mdp, opt);
  Json j;
  j["model"] = model_header(p, mdp);
  j["atlas"] = to_json(mdp, atlas);
  return {{{"curves.csv", sweep_csv(mdp, atlas)}, {"atlas.json", dump(j)}}, kExitOk};
}

CommandResult cmd_discount(const Params& p) {
  const Mdp mdp = resolve_model(p);
  DiscOptions opt;
  if (p.tol > 0.0) opt.tol = p.tol;
  const auto sol = solve_discounted(mdp, p.gamma, p.beta, opt);
  Json j;
  j["model"] = model_header(p, mdp);
  j["solution"] = to_json(mdp, sol);
  try {
    j["switch_index"] = to_json(switch_index(mdp, p.gamma, p.beta));
  } catch (const std::invalid_argument&) {
    // Only defined for ex4 at epsilon = 0.
  }
  j["assumptions"] = assumptions_or_error(mdp);
  return {{{"solution.json", dump(j)}, {"levels.csv", levels_csv(mdp, sol)}}, kExitOk};
}

CommandResult cmd_blackwell(const Params& p) {
  const Mdp mdp = resolve_model(p);
  const auto betas = p.betas.empty() ? default_beta_grid() : p.betas;
  Json j;
  j["model"] = model_header(p, mdp);
  j["gamma"] = p.gamma;
  if (p.gamma == 0.0) {
    const auto res = neutral_blackwell(mdp, betas, resolve_state(mdp, p.anchor, 0), p.tau);
    j["neutral"] = to_json(mdp, res);
    BlackwellResult table;
    for (const auto& row : res.rows)
      table.rows.push_back({row.beta, 0, row.rule, row.lambda_rule, res.lambda0, row.member});
    return {{{"blackwell.csv", blackwell_csv(mdp, table)}, {"blackwell.json", dump(j)}}, kExitOk};
  }
  DiscOptions opt;
  if (p.tol > 0.0) opt.tol = p.tol;
  const auto res = blackwell_threshold(mdp, p.gamma, p.level, betas, opt, p.tau);
  j["level"] = p.level;
  j["result"] = to_json(mdp, res);
  return {{{"blackwell.csv", blackwell_csv(mdp, res)}, {"blackwell.json", dump(j)}}, kExitOk};
}

CommandResult cmd_vanish(const Params& p) {
  const Mdp mdp = resolve_model(p);
  if (p.gamma == 0.0) throw UsageError("vanish requires --gamma != 0");
  const auto betas = p.betas.empty() ? std::vector<double>{0.9, 0.99, 0.999, 0.9999} : p.betas;
  DiscOptions dopt;
  if (p.tol > 0.0) dopt.tol = p.tol;
  AvgOptions aopt;
  aopt.anchor = resolve_state(mdp, p.anchor, 0);
  const auto avg = solve_average(mdp, p.gamma, aopt);
  std::vector<VanishingTrace> traces;
  Json j;
  j["model"] = model_header(p, mdp);
  j["gamma"] = p.gamma;
  j["traces"] = Json::array();
  for (double beta : betas) {
    DiscOptions o = dopt;
    o.min_horizon = std::max(o.min_horizon, p.depth + 1);
    traces.push_back(vanishing_trace(solve_discounted(mdp, p.gamma, beta, o), avg, p.depth));
    j["traces"].push_back(to_json(traces.back()));
  }
  return {{{"vanish.csv", vanish_csv(traces)}, {"vanish.json", dump(j)}}, kExitOk};
}

CommandResult cmd_simulate(const Params& p) {
  const Mdp mdp = resolve_model(p);
  if (p.policy.empty()) throw UsageError("simulate requires --policy");
  const auto policy = parse_policy(mdp, p.policy);
  const auto x0 = resolve_state(mdp, p.x0, 0);
  Json j;
  j["model"] = model_header(p, mdp);
  j["policy"] = p.policy;
  j["gamma"] = p.gamma;
  j["x0"] = mdp.state_labels()[x0];
  if (p.avg) {
    const std::size_t n = p.n ? p.n : 1000;
    j["criterion"] = "average";
    j["n"] = n;
    j["estimate"] = to_json(mc_average_criterion(mdp, policy, p.gamma, x0, n, p.m, p.seed));
    if (policy.prefix.empty()) {
      try {
        j["reference_lambda"] = solve_mpe(mdp, policy.tail, p.gamma).lambda;
      } catch (const MultichainError&) {
        j["reference_lambda"] = nullptr;
      }
    }
  } else {
    j["criterion"] = "discounted";
    j["beta"] = p.beta;
    j["estimate"] = to_json(mc_discounted_criterion(mdp, policy, p.gamma, p.beta, x0, p.n, p.m, p.seed));
    j["reference_value"] = evaluate_discounted(mdp, policy, p.gamma, p.beta)(static_cast<Eigen::Index>(x0));
  }
  return {{{"estimate.json", dump(j)}}, kExitOk};
}

CommandResult cmd_model(const Params& p) {
  const Mdp mdp = resolve_model(p);
  return {{{"model.json", dump_mdp(mdp)}}, kExitOk};
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json versions() {
  Json v;
  v["rsmdp"] = "0.1.0";
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  v["cli11"] = CLI11_VERSION;
  v["compiler"] = __VERSION__;
  return v;
}

Json parameters_json(const Params& p) {
  Json j;
  j["epsilon"] = p.epsilon ? Json(*p.epsilon) : Json(nullptr);
  j["gamma"] = p.gamma;
  j["beta"] = p.beta;
  j["betas"] = p.betas;
  j["level"] = p.level;
  j["depth"] = p.depth;
  j["window"] = {p.from, p.to, p.step};
  j["tol"] = p.tol;
  j["tol_root"] = p.tol_root;
  j["tau"] = p.tau;
  j["anchor"] = p.anchor;
  j["policy"] = p.policy;
  j["x0"] = p.x0;
  j["avg"] = p.avg;
  j["n"] = p.n;
  j["m"] = p.m;
  j["seed"] = p.seed;
  return j;
}

/// Arguments to store in the manifest: model file made absolute, output flags dropped.
std::vector<std::string> replay_args(const std::vector<std::string>& args, const Params& p) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--out-dir" || a == "--print") {
      ++i;
      continue;
    }
    if (a.rfind("--out-dir=", 0) == 0 || a.rfind("--print=", 0) == 0) continue;
    if (a == p.model && !is_example_id(a)) {
      out.push_back(fs::absolute(a).lexically_normal().string());
      continue;
    }
    out.push_back(a);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
}

void add_common(CLI::App* sub, Params& p, bool model = true) {
  if (model) {
    sub->add_option("model", p.model, "Example id (ex1..ex4) or path to a model JSON document")->required();
    sub->add_option("--epsilon", p.epsilon, "ex4 perturbation parameter in [0, 0.1)");
    sub->add_flag("--renormalize", p.renormalize, "Rescale rows whose sums deviate from 1");
  }
  sub->add_option("--out-dir", p.out_dir, "Write every output and manifest.json into this directory");
  sub->add_option("--print", p.print, "Output file name to echo on stdout (default: the first)");
}

}  // namespace

MarkovPolicy parse_policy(const Mdp& mdp, std::string_view spec) {
  auto one = [&](std::string_view s) -> DecisionRule {
    if (s == "u") return DecisionRule::constant(mdp.num_states(), 0);
    if (s == "tilde-u") {
      if (mdp.num_actions() < 2) throw ValidationError("policy 'tilde-u' needs at least two actions");
      return DecisionRule::constant(mdp.num_states(), 1);
    }
    if (s.rfind("r:", 0) == 0) return mdp.parse_rule_id(s.substr(2));
    if (s.size() > 1 && s[0] == 'a') return DecisionRule::constant(mdp.num_states(), mdp.action_index(s.substr(1)));
    throw ValidationError("unrecognized policy element '" + std::string(s) + "'");
  };
  std::vector<DecisionRule> rules;
  std::size_t start = 0;
  while (true) {
    const auto plus = spec.find('+', start);
    rules.push_back(one(spec.substr(start, plus == std::string_view::npos ? spec.npos : plus - start)));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  MarkovPolicy pi;
  pi.tail = rules.back();
  rules.pop_back();
  pi.prefix = std::move(rules);
  return pi;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Risk-sensitive finite MDP solver", "rsmdp"};
  app.require_subcommand(1);
  Params p;

  auto* check = app.add_subcommand("check", "Check ergodicity assumptions (exit 3 when one fails)");
  add_common(check, p);

  auto* solve = app.add_subcommand("solve", "Averaged risk-sensitive Bellman equation");
  add_common(solve, p);
  solve->add_option("--gamma", p.gamma, "Risk-sensitivity parameter")->required();
  solve->add_option("--tol", p.tol, "Bellman residual tolerance");
  solve->add_option("--anchor", p.anchor, "Anchor state label");

  auto* sweep = app.add_subcommand("sweep", "lambda curves and optimality regions over a gamma window");
  add_common(sweep, p);
  sweep->add_option("--from", p.from, "Window lower end");
  sweep->add_option("--to", p.to, "Window upper end");
  sweep->add_option("--step", p.step, "Grid spacing");
  sweep->add_option("--tol", p.tol, "Poisson equation tolerance");
  sweep->add_option("--tol-root", p.tol_root, "Boundary bisection tolerance");
  sweep->add_option("--tau", p.tau, "lambda tie tolerance");

  auto* discount = app.add_subcommand("discount", "Discounted risk-sensitive backward recursion");
  add_common(discount, p);
  discount->add_option("--gamma", p.gamma, "Risk-sensitivity parameter (nonzero)")->required();
  discount->add_option("--beta", p.beta, "Discount factor in (0, 1)")->required();
  discount->add_option("--tol", p.tol, "Truncation tolerance");

  auto* blackwell = app.add_subcommand("blackwell", "Blackwell thresholds over a beta grid");
  add_common(blackwell, p);
  blackwell->add_option("--gamma", p.gamma, "Risk-sensitivity parameter (0 for the risk-neutral test)")->required();
  blackwell->add_option("--level", p.level, "Decision level n");
  blackwell->add_option("--betas", p.betas, "Ascending beta grid (default 1 - 2^-j, j = 1..14)")->delimiter(',');
  blackwell->add_option("--tol", p.tol, "Truncation tolerance");
  blackwell->add_option("--tau", p.tau, "lambda membership tolerance");
  blackwell->add_option("--anchor", p.anchor, "Anchor state label (gamma = 0)");

  auto* vanish = app.add_subcommand("vanish", "Vanishing-discount distances");
  add_common(vanish, p);
  vanish->add_option("--gamma", p.gamma, "Risk-sensitivity parameter (nonzero)")->required();
  vanish->add_option("--betas", p.betas, "Discount factors (default 0.9,0.99,0.999,0.9999)")->delimiter(',');
  vanish->add_option("--depth", p.depth, "Largest level n reported");
  vanish->add_option("--tol", p.tol, "Truncation tolerance");
  vanish->add_option("--anchor", p.anchor, "Anchor state label");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a policy's criterion");
  add_common(simulate, p);
  simulate->add_option("--policy", p.policy, "a<label> | u | tilde-u | r:<rule id>, joined by '+'")->required();
  simulate->add_option("--gamma", p.gamma, "Risk-sensitivity parameter")->required();
  simulate->add_option("--beta", p.beta, "Discount factor (discounted criterion)");
  simulate->add_flag("--avg", p.avg, "Averaged criterion instead of discounted");
  simulate->add_option("--n", p.n, "Horizon (avg default 1000; discounted default automatic)");
  simulate->add_option("--m", p.m, "Number of paths");
  simulate->add_option("--seed", p.seed, "Random seed");
  simulate->add_option("--x0", p.x0, "Initial state label");

  auto* model = app.add_subcommand("model", "Print a model document");
  add_common(model, p);

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", p.manifest, "Path to manifest.json")->required();
  replay->add_option("--out-dir", p.out_dir, "Output directory (default: the manifest's directory)");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (replay->parsed()) {
    try {
      std::ifstream in(p.manifest);
      if (!in) throw UsageError("cannot open manifest '" + p.manifest + "'");
      const Json m = Json::parse(in);
      std::vector<std::string> again{"rsmdp"};
      for (const auto& a : m.at("argv")) again.push_back(a.get<std::string>());
      again.push_back("--out-dir");
      again.push_back(p.out_dir.empty() ? fs::path(p.manifest).parent_path().string() : p.out_dir);
      if (again.back().empty()) again.back() = ".";
      return run(again, out, err);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  const std::string started = utc_now();
  CommandResult result;
  std::string command;
  try {
    if (check->parsed()) command = "check", result = cmd_check(p);
    else if (solve->parsed()) command = "solve", result = cmd_solve(p);
    else if (sweep->parsed()) command = "sweep", result = cmd_sweep(p);
    else if (discount->parsed()) command = "discount", result = cmd_discount(p);
    else if (blackwell->parsed()) command = "blackwell", result = cmd_blackwell(p);
    else if (vanish->parsed()) command = "vanish", result = cmd_vanish(p);
    else if (simulate->parsed()) command = "simulate", result = cmd_simulate(p);
    else if (model->parsed()) command = "model", result = cmd_model(p);
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << " (iterations " << e.iterations() << ", residual " << format_double(e.residual())
        << ")\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string* shown = &result.outputs.front().second;
  if (!p.print.empty()) {
    shown = nullptr;
    for (const auto& [name, content] : result.outputs)
      if (name == p.print) shown = &content;
    if (!shown) {
      err << "error: command " << command << " has no output named '" << p.print << "'\n";
      return kExitUsage;
    }
  }
  out << *shown;

  if (!p.out_dir.empty()) {
    try {
      const fs::path dir(p.out_dir);
      fs::create_directories(dir);
      Json manifest;
      manifest["command"] = command;
      manifest["argv"] = replay_args(args, p);
      manifest["model"] = {{"source", is_example_id(p.model) ? "example" : "file"},
                           {"id", is_example_id(p.model) ? p.model : replay_args({"", p.model}, p).front()}};
      manifest["parameters"] = parameters_json(p);
      manifest["rng"] = std::string(kRngAlgorithm);
      manifest["versions"] = versions();
      Json files = Json::array();
      for (const auto& [name, content] : result.outputs) {
        write_file(dir / name, content);
        files.push_back(name);
      }
      manifest["outputs"] = files;
      manifest["exit_code"] = result.code;
      manifest["timestamps"] = {{"started", started}, {"finished", utc_now()}};
      write_file(dir / "manifest.json", dump(manifest));
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitUsage;
    }
  }
  return result.code;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace rsmdp::cli
