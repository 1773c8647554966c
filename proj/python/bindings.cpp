#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lookaround/config.hpp"
#include "lookaround/convergence.hpp"
#include "lookaround/dataset.hpp"
#include "lookaround/optim.hpp"
#include "lookaround/quad.hpp"
#include "lookaround/runner.hpp"
#include "lookaround/train.hpp"

namespace py = pybind11;
using namespace lookaround;

namespace {

quad::MethodSpec method_spec(const std::string& method, double gamma, int k, double alpha, int d) {
  return {quad::parse_method(method), gamma, k, alpha, d};
}

py::dict split_to_dict(const std::vector<Example>& split) {
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const Example& ex : split) {
    x.push_back(ex.input);
    y.push_back(ex.label);
  }
  py::dict out;
  out["x"] = x;
  out["y"] = y;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lookaround optimizer analysis and desk-scale experiments";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "fixed_point",
      [](std::vector<double> a, std::vector<double> sigma2, const std::string& method, double gamma, int k,
         double alpha, int d) {
        return quad::fixed_point({std::move(a), std::move(sigma2)}, method_spec(method, gamma, k, alpha, d));
      },
      py::arg("a"), py::arg("sigma2"), py::arg("method"), py::arg("gamma"), py::arg("k") = 1, py::arg("alpha") = 0.5,
      py::arg("d") = 1, "Closed-form steady-state variance per coordinate.");

  m.def(
      "iterate_to_stationarity",
      [](std::vector<double> a, std::vector<double> sigma2, const std::string& method, double gamma, int k,
         double alpha, int d) {
        const quad::Stationary s =
            quad::iterate_to_stationarity({std::move(a), std::move(sigma2)}, method_spec(method, gamma, k, alpha, d));
        return py::make_tuple(s.var, s.rounds, s.converged);
      },
      py::arg("a"), py::arg("sigma2"), py::arg("method"), py::arg("gamma"), py::arg("k") = 1, py::arg("alpha") = 0.5,
      py::arg("d") = 1, "Iterates the moment recursion; returns (variance, rounds, converged).");

  m.def(
      "ordering_holds",
      [](std::vector<double> a, std::vector<double> sigma2, double gamma, int k, int d, double alpha) {
        return quad::check_ordering({std::move(a), std::move(sigma2)}, gamma, k, d, alpha).holds;
      },
      py::arg("a"), py::arg("sigma2"), py::arg("gamma"), py::arg("k"), py::arg("d"), py::arg("alpha"));

  m.def(
      "method_rate",
      [](const std::string& method, double a, double gamma, double beta, int k, double alpha) {
        return conv::method_rate(conv::parse_rate_method(method), {a, gamma, beta, k, 1.0}, alpha);
      },
      py::arg("method"), py::arg("a"), py::arg("gamma"), py::arg("beta"), py::arg("k") = 1, py::arg("alpha") = 0.5,
      "Per-step convergence rate on one eigen-direction.");

  m.def("optimal_rate", &conv::optimal_rate, py::arg("kappa"));

  m.def(
      "rate_sweep",
      [](std::vector<double> kappas, int k, double beta, double alpha, int gamma_points, int workers) {
        conv::SweepOptions opt;
        opt.kappas = std::move(kappas);
        opt.k = k;
        opt.beta = beta;
        opt.alpha = alpha;
        opt.gamma_points = gamma_points;
        opt.workers = workers;
        py::list rows;
        for (const conv::SweepRow& r : conv::rate_sweep(opt)) {
          py::dict row;
          row["kappa"] = r.kappa;
          row["method"] = std::string(conv::to_string(r.method));
          row["best_rate"] = r.best_rate;
          row["best_gamma"] = r.best_gamma;
          rows.append(row);
        }
        return rows;
      },
      py::arg("kappas"), py::arg("k") = 20, py::arg("beta") = 0.99, py::arg("alpha") = 0.5,
      py::arg("gamma_points") = 200, py::arg("workers") = 1);

  m.def(
      "uniform_mean", [](const std::vector<std::vector<double>>& xs) { return optim::uniform_mean(xs); },
      py::arg("xs"));

  m.def(
      "make_dataset",
      [](const std::string& kind, std::size_t n_train, std::size_t n_test, std::uint64_t seed, double noise) {
        const nn::Dataset ds = nn::make_dataset(nn::parse_dataset_kind(kind), n_train, n_test, seed, noise);
        py::dict out;
        out["input_dim"] = ds.input_dim;
        out["num_classes"] = ds.num_classes;
        out["train"] = split_to_dict(ds.train);
        out["test"] = split_to_dict(ds.test);
        return out;
      },
      py::arg("kind"), py::arg("n_train"), py::arg("n_test"), py::arg("seed"), py::arg("noise") = -1.0);

  m.def(
      "materialize_config", [](const std::string& json) { return cli::to_json(cli::parse_config(json)); },
      py::arg("json"), "Parses and validates a config, returning it with every key filled in.");

  m.def(
      "run_experiment",
      [](const std::string& json, const std::filesystem::path& out_dir) {
        const cli::ExperimentConfig cfg = cli::parse_config(json);
        cli::RunResult r;
        {
          py::gil_scoped_release release;
          r = cli::run_experiment(cfg, out_dir);
        }
        py::dict out;
        out["exit_code"] = r.exit_code;
        out["summary"] = r.summary;
        out["violations"] = r.violations;
        return out;
      },
      py::arg("config_json"), py::arg("out_dir"));
}
