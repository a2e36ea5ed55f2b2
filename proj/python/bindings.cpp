#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "robustq/corruption.hpp"
#include "robustq/errors.hpp"
#include "robustq/experiment.hpp"
#include "robustq/grid_world.hpp"
#include "robustq/mdp_io.hpp"
#include "robustq/qlearning.hpp"
#include "robustq/report.hpp"
#include "robustq/robust_estimation.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace robustq;

namespace {

RewardBuffer buffer_of(const std::vector<double>& samples) {
  RewardBuffer b;
  for (double x : samples) b.push(x);
  return b;
}

std::vector<std::vector<double>> table_rows(const QTable& q) {
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < q.num_states(); ++s) rows.emplace_back(q.row(s).begin(), q.row(s).end());
  return rows;
}

}  // namespace

// Structured values cross the boundary as JSON text; the Python package
// decodes them into dicts.
PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust asynchronous Q-learning under Huber reward corruption";

  py::register_exception<AssumptionViolated>(m, "AssumptionViolated", PyExc_RuntimeError);
  py::register_exception<NumericFailure>(m, "NumericFailure", PyExc_ArithmeticError);
  py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "grid_world_json",
      [](std::uint64_t seed, double noise_variance, double slip, double gamma) {
        GridWorldOptions o;
        o.seed = seed;
        o.noise_variance = noise_variance;
        o.slip = slip;
        o.gamma = gamma;
        const GridWorld g = generate_grid_world(o);
        json doc = mdp_to_json(g.mdp);
        doc["policy"] = policy_to_json(g.policy);
        return doc.dump();
      },
      py::arg("seed") = 0, py::arg("noise_variance") = 1.0, py::arg("slip") = 0.1,
      py::arg("gamma") = 0.5);

  m.def(
      "q_star",
      [](const std::string& mdp_json, double tol) {
        return table_rows(compute_q_star(mdp_from_json(json::parse(mdp_json)), tol));
      },
      py::arg("mdp_json"), py::arg("tol") = 1e-10);

  m.def(
      "analyze_json",
      [](const std::string& mdp_json) {
        const json doc = json::parse(mdp_json);
        const MdpSpec mdp = mdp_from_json(doc);
        const auto mu = policy_from_json(doc, mdp);
        const Policy policy = mu ? *mu : Policy::uniform(mdp.num_states(), mdp.num_actions());
        const ChainAnalysis a = analyze_chain(mdp, policy);
        return json{{"stationary", a.stationary},
                    {"visitation", a.visitation},
                    {"lambda_min", a.lambda_min},
                    {"mixing_time", a.mixing_time},
                    {"block_profile", a.block_profile}}
            .dump();
      },
      py::arg("mdp_json"));

  m.def(
      "trim",
      [](const std::vector<double>& samples, double epsilon, double delta) {
        return trim(buffer_of(samples), epsilon, delta);
      },
      py::arg("samples"), py::arg("epsilon"), py::arg("delta"),
      "TRIM with the inflated corruption fraction; samples alternate between the two halves.");
  m.def(
      "trim_sc",
      [](const std::vector<double>& samples, double eps_frac, double delta) {
        return trim_sc(buffer_of(samples), eps_frac, delta);
      },
      py::arg("samples"), py::arg("eps_frac"), py::arg("delta"));
  m.def(
      "median", [](const std::vector<double>& samples) { return median_estimate(buffer_of(samples)); },
      py::arg("samples"));

  m.def("burn_in", &burn_in, py::arg("lambda_min"), py::arg("delta1"), py::arg("num_states"),
        py::arg("num_actions"), py::arg("horizon"));
  m.def("block_parameter", &block_parameter, py::arg("tau_bar"), py::arg("horizon"),
        py::arg("delta"));
  m.def("known_delta1", &known_delta1, py::arg("delta"), py::arg("horizon"));
  m.def("agnostic_delta1", &agnostic_delta1, py::arg("delta"), py::arg("num_states"),
        py::arg("num_actions"), py::arg("horizon"), py::arg("p"));

  m.def(
      "lower_bound_json",
      [](double sigma_bar, const std::string& epsilon, double gamma) {
        const LowerBoundInstance inst = build_lower_bound_instance(sigma_bar, parse_rational(epsilon), gamma);
        json doc;
        doc["spike"] = inst.spike;
        doc["q_star"] = inst.q_star;
        doc["q_star_gap"] = inst.q_star_gap;
        doc["gap_lower_bound"] = inst.gap_lower_bound;
        doc["variance_bound"] = inst.variance_bound;
        doc["observed_identical"] = inst.observed_pmfs_identical();
        for (const auto& p : inst.observed_pmfs) {
          doc["observed_pmfs"].push_back({p.probs[0].str(), p.probs[1].str(), p.probs[2].str()});
        }
        return doc.dump();
      },
      py::arg("sigma_bar"), py::arg("epsilon"), py::arg("gamma"));

  m.def(
      "run_experiment_json",
      [](const std::string& config_json) {
        const ExperimentConfig c = experiment_config_from_json(json::parse(config_json));
        AggregateResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return json{{"name", r.name},
                    {"learner", std::string(to_string(r.learner))},
                    {"horizon", r.horizon},
                    {"burn_in", r.burn_in},
                    {"subsample_tau", r.subsample_tau},
                    {"steps", r.steps},
                    {"mean_error", r.mean_error},
                    {"min_error", r.min_error},
                    {"max_error", r.max_error},
                    {"trigger_rate", r.trigger_rate},
                    {"seeds", r.seeds},
                    {"final_errors", r.final_errors},
                    {"steady_state_errors", r.steady_state_errors},
                    {"steady_state_error", r.steady_state_error},
                    {"post_burn_in_trigger_rate", r.post_burn_in_trigger_rate},
                    {"iterate_bound", r.iterate_bound},
                    {"max_iterate_norm", r.max_iterate_norm},
                    {"iterate_bound_violations", r.iterate_bound_violations},
                    {"proxy_bound_violations", r.proxy_bound_violations}}
            .dump();
      },
      py::arg("config_json"));

  m.def(
      "aggregate_csv_from_config",
      [](const std::string& config_json) {
        const ExperimentConfig c = experiment_config_from_json(json::parse(config_json));
        AggregateResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return aggregate_csv(r);
      },
      py::arg("config_json"));
}
