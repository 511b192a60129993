#include "rsmdp/assumptions.hpp"
#include "rsmdp/avg_bellman.hpp"
#include "rsmdp/disc_bellman.hpp"
#include "rsmdp/entropic.hpp"
#include "rsmdp/examples.hpp"
#include "rsmdp/gamma_sweep.hpp"
#include "rsmdp/io.hpp"
#include "rsmdp/poisson.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace rsmdp;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

DecisionRule to_rule(const Mdp& mdp, const py::object& rule) {
  if (py::isinstance<py::str>(rule)) return mdp.parse_rule_id(rule.cast<std::string>());
  DecisionRule r{rule.cast<std::vector<std::size_t>>()};
  mdp.check_rule(r);
  return r;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Risk-sensitive finite MDP solver";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<MultichainError>(m, "MultichainError", PyExc_RuntimeError);

  py::class_<Mdp>(m, "Mdp")
      .def(py::init<std::vector<std::string>, std::vector<std::string>, std::vector<Matrix>, Matrix>(),
           py::arg("states"), py::arg("actions"), py::arg("transitions"), py::arg("rewards"))
      .def_property_readonly("states", &Mdp::state_labels)
      .def_property_readonly("actions", &Mdp::action_labels)
      .def_property_readonly("rewards", &Mdp::rewards)
      .def("transition", &Mdp::transition, py::arg("action"))
      .def("rule_id", [](const Mdp& mdp, const std::vector<std::size_t>& r) { return mdp.rule_id(DecisionRule{r}); })
      .def("to_json", &dump_mdp);

  m.def("load_mdp", [](const std::string& doc) { return load_mdp(doc); }, py::arg("document"));
  m.def("example_model", &example_model, py::arg("id"), py::arg("epsilon") = kDefaultEx4Epsilon);

  m.def(
      "entropic_utility",
      [](std::vector<double> outcomes, std::vector<double> probs, double gamma) {
        FiniteDistribution d{std::move(outcomes), std::move(probs)};
        d.validate();
        return entropic_utility(d, gamma);
      },
      py::arg("outcomes"), py::arg("probs"), py::arg("gamma"));

  m.def(
      "check_assumptions", [](const Mdp& mdp) { return to_python(to_json(mdp, check_assumptions(mdp))); },
      py::arg("mdp"));

  m.def(
      "solve_average",
      [](const Mdp& mdp, double gamma, double tol, std::size_t anchor) {
        AvgOptions opt;
        opt.tol = tol;
        opt.anchor = anchor;
        const auto sol = solve_average(mdp, gamma, opt);
        Json j = to_json(mdp, sol);
        j["optimal_rules"] = to_json(mdp, extract_rules(mdp, sol));
        return to_python(j);
      },
      py::arg("mdp"), py::arg("gamma"), py::arg("tol") = 1e-10, py::arg("anchor") = 0);

  m.def(
      "solve_mpe",
      [](const Mdp& mdp, const py::object& rule, double gamma, double tol) {
        return to_python(to_json(mdp, solve_mpe(mdp, to_rule(mdp, rule), gamma, tol)));
      },
      py::arg("mdp"), py::arg("rule"), py::arg("gamma"), py::arg("tol") = kMpeTolerance);

  m.def(
      "lambda_argmax",
      [](const Mdp& mdp, double gamma) {
        const auto res = lambda_argmax(mdp, gamma);
        py::dict d;
        d["lambda"] = res.lambda;
        py::list opt;
        for (auto i : res.optimal) opt.append(mdp.rule_id(res.rules[i]));
        d["optimal"] = opt;
        return d;
      },
      py::arg("mdp"), py::arg("gamma"));

  m.def(
      "regions",
      [](const Mdp& mdp, double lo, double hi, double step) {
        RegionOptions opt;
        opt.lo = lo;
        opt.hi = hi;
        opt.step = step;
        return to_python(to_json(mdp, regions(mdp, opt)));
      },
      py::arg("mdp"), py::arg("lo") = -3.0, py::arg("hi") = 3.0, py::arg("step") = 0.1);

  m.def(
      "solve_discounted",
      [](const Mdp& mdp, double gamma, double beta, double tol) {
        DiscOptions opt;
        opt.tol = tol;
        return to_python(to_json(mdp, solve_discounted(mdp, gamma, beta, opt)));
      },
      py::arg("mdp"), py::arg("gamma"), py::arg("beta"), py::arg("tol") = 1e-9);

  m.def(
      "evaluate_discounted",
      [](const Mdp& mdp, const std::vector<py::object>& rules, double gamma, double beta) {
        if (rules.empty()) throw py::value_error("policy needs at least one rule");
        MarkovPolicy pi;
        for (const auto& r : rules) pi.prefix.push_back(to_rule(mdp, r));
        pi.tail = pi.prefix.back();
        pi.prefix.pop_back();
        return Vector(evaluate_discounted(mdp, pi, gamma, beta));
      },
      py::arg("mdp"), py::arg("rules"), py::arg("gamma"), py::arg("beta"),
      "Values of the policy (rules[0], rules[1], ..., rules[-1], rules[-1], ...).");

  m.def(
      "switch_index", [](const Mdp& mdp, double gamma, double beta) { return to_python(to_json(switch_index(mdp, gamma, beta))); },
      py::arg("mdp"), py::arg("gamma"), py::arg("beta"));
}
