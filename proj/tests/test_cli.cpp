#include "rsmdp/cli.hpp"
#include "rsmdp/examples.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rsmdp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "rsmdp");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rsmdp_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(call({"check", "ex1"}).code, 0);
  EXPECT_EQ(call({"check", "ex4", "--epsilon", "0"}).code, 3);
  EXPECT_EQ(call({"check", "ex1", "--epsilon", "0.01"}).code, 2);
  EXPECT_EQ(call({"solve", "ex1"}).code, 2);
  EXPECT_EQ(call({"solve", "ex1", "--gamma", "1", "--bogus"}).code, 2);
  EXPECT_EQ(call({"solve", "no-such-model.json", "--gamma", "1"}).code, 2);
  EXPECT_EQ(call({"discount", "ex1", "--gamma", "1", "--beta", "1.5"}).code, 2);
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"--help"}).code, 0);
  const auto stuck = call({"solve", "ex4", "--epsilon", "0.05", "--gamma", "1", "--tol", "1e-300"});
  EXPECT_EQ(stuck.code, 4);
  EXPECT_FALSE(nlohmann::json::parse(stuck.out).at("converged").get<bool>());
}

TEST(Cli, SolveReportsLambda) {
  const auto r = call({"solve", "ex1", "--gamma", "-2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("solution").at("lambda").get<double>(), -0.5 * std::log(0.1 * std::exp(2.0) + 0.8 + 0.1 * std::exp(-2.0)),
              1e-10);
}

TEST(Cli, CsvHeaders) {
  EXPECT_EQ(first_line(call({"sweep", "ex1", "--print", "curves.csv"}).out), "gamma,rule_id,lambda,optimal");
  EXPECT_EQ(first_line(call({"discount", "ex4", "--gamma", "-1", "--beta", "0.5", "--print", "levels.csv"}).out),
            "n,state,rule_action,argmax_actions,value,w");
  EXPECT_EQ(first_line(call({"blackwell", "ex1", "--gamma", "1", "--print", "blackwell.csv"}).out),
            "beta,level,rule_id,lambda_rule,lambda_opt,member");
  EXPECT_EQ(first_line(call({"vanish", "ex1", "--gamma", "1", "--print", "vanish.csv"}).out),
            "beta,n,lambda_n_over_gamma,dist_lambda,dist_w_sup");
  EXPECT_EQ(call({"sweep", "ex1", "--print", "missing.csv"}).code, 2);
}

TEST(Cli, ModelFileMatchesExampleId) {
  const auto by_id = call({"model", "ex2"});
  ASSERT_EQ(by_id.code, 0);
  const fs::path dir = scratch("model");
  fs::create_directories(dir);
  std::ofstream(dir / "m.json") << by_id.out;
  const auto a = call({"solve", "ex2", "--gamma", "0.5"});
  const auto b = call({"solve", (dir / "m.json").string(), "--gamma", "0.5"});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(nlohmann::json::parse(a.out).at("solution").at("lambda"), nlohmann::json::parse(b.out).at("solution").at("lambda"));
}

TEST(Cli, ManifestReplayReproducesOutputs) {
  const fs::path first = scratch("first"), second = scratch("second");
  const std::vector<std::vector<std::string>> commands = {
      {"sweep", "ex1", "--from", "-1", "--to", "1"},
      {"discount", "ex4", "--gamma", "-1", "--beta", "0.5"},
      {"simulate", "ex4", "--policy", "tilde-u+u", "--gamma", "-1", "--beta", "0.5", "--m", "500", "--seed", "9"},
  };
  for (auto args : commands) {
    fs::remove_all(first);
    fs::remove_all(second);
    args.push_back("--out-dir");
    args.push_back(first.string());
    ASSERT_EQ(call(args).code, 0);
    const auto manifest = nlohmann::json::parse(slurp(first / "manifest.json"));
    EXPECT_EQ(manifest.at("command"), args.front());
    EXPECT_EQ(manifest.at("exit_code"), 0);
    ASSERT_EQ(call({"replay", (first / "manifest.json").string(), "--out-dir", second.string()}).code, 0);
    for (const auto& name : manifest.at("outputs")) {
      const auto file = name.get<std::string>();
      EXPECT_EQ(slurp(first / file), slurp(second / file)) << file;
    }
  }
  EXPECT_EQ(call({"replay", (first / "absent.json").string()}).code, 2);
}

TEST(Cli, SimulationIsSeeded) {
  const std::vector<std::string> args = {"simulate", "ex1", "--policy", "a1", "--gamma", "1", "--avg",
                                         "--n", "50", "--m", "200", "--seed", "3"};
  const auto a = call(args), b = call(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, ParsePolicy) {
  const Mdp ex4 = example_model("ex4", 0.0);
  const auto u = cli::parse_policy(ex4, "u");
  EXPECT_TRUE(u.prefix.empty());
  EXPECT_EQ(u.tail.actions, std::vector<std::size_t>(ex4.num_states(), 0));
  const auto mixed = cli::parse_policy(ex4, "tilde-u+tilde-u+u");
  ASSERT_EQ(mixed.prefix.size(), 2u);
  EXPECT_EQ(mixed.prefix[0].actions, std::vector<std::size_t>(ex4.num_states(), 1));
  EXPECT_EQ(mixed.tail.actions, u.tail.actions);

  const Mdp ex1 = example_model("ex1");
  const auto label = cli::parse_policy(ex1, "a" + ex1.action_labels()[2]);
  EXPECT_EQ(label.tail.actions, (std::vector<std::size_t>{2, 2, 2}));
  EXPECT_EQ(cli::parse_policy(ex1, "r:1/2/3").tail.actions, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_THROW(cli::parse_policy(ex1, "x"), ValidationError);
  EXPECT_THROW(cli::parse_policy(ex1, "u+"), ValidationError);
  EXPECT_ANY_THROW(cli::parse_policy(ex1, "r:1/2"));
}
