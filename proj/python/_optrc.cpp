// Python bindings. Configs cross the boundary as JSON text so the Python side
// can pass plain dicts; arrays map to numpy through pybind11/eigen.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "optrc/config.hpp"
#include "optrc/encoding.hpp"
#include "optrc/error.hpp"
#include "optrc/experiment.hpp"
#include "optrc/mackey_glass.hpp"
#include "optrc/random_optics.hpp"
#include "optrc/readout.hpp"
#include "optrc/reservoir.hpp"

namespace py = pybind11;
using namespace optrc;

namespace {

ExperimentConfig config_from_text(const std::string& json_text, const std::string& preset) {
  return config_from_json(nlohmann::json::parse(json_text), preset).config;
}

py::dict curve_dict(const NMSECurve& curve) {
  std::vector<int> horizons;
  std::vector<double> lyap, nmse, std;
  for (const NMSEPoint& p : curve.points) {
    horizons.push_back(p.horizon);
    lyap.push_back(p.horizon_lyapunov);
    nmse.push_back(p.nmse);
    std.push_back(p.std);
  }
  py::dict d;
  d["horizon"] = horizons;
  d["horizon_lyapunov"] = lyap;
  d["nmse"] = nmse;
  d["std"] = std;
  d["per_run"] = curve.per_run;
  d["config_hash"] = curve.config_hash;
  return d;
}

}  // namespace

PYBIND11_MODULE(_optrc, m) {
  m.doc() = "Optical reservoir computing simulator";

  auto base = py::register_exception<Error>(m, "OptrcError");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "mackey_glass",
      [](std::size_t length, std::uint64_t seed, double beta, double gamma, double tau, double n_exp) {
        MGParams p;
        p.beta = beta;
        p.gamma = gamma;
        p.tau = tau;
        p.n_exp = n_exp;
        return generate(p, length, seed).values;
      },
      py::arg("length"), py::arg("seed"), py::arg("beta") = 0.2, py::arg("gamma") = 0.1, py::arg("tau") = 17.0,
      py::arg("n_exp") = 10.0, "Mackey-Glass samples, one per time unit.");

  m.def(
      "lyapunov_estimate",
      [](std::size_t length, std::uint64_t seed) {
        py::gil_scoped_release release;
        return optrc::lyapunov_estimate(MGParams{}, length, seed);
      },
      py::arg("length") = 5000, py::arg("seed") = 1);

  m.def(
      "encode",
      [](const std::string& kind, int n_bin, const std::vector<double>& x) {
        EncodingSpec spec{encoding_kind_from_string(kind), n_bin};
        spec.validate();
        return Eigen::VectorXcd(optrc::encode(spec, x));
      },
      py::arg("kind"), py::arg("n_bin"), py::arg("x"));

  m.def(
      "distance_matrix",
      [](const std::string& kind, int n_bin, int grid_points) {
        EncodingSpec spec{encoding_kind_from_string(kind), n_bin};
        spec.validate();
        return optrc::distance_matrix(spec, grid_points);
      },
      py::arg("kind"), py::arg("n_bin"), py::arg("grid_points") = 101);

  m.def(
      "distinct_code_count",
      [](const std::string& kind, int n_bin) {
        return optrc::distinct_code_count(EncodingSpec{encoding_kind_from_string(kind), n_bin});
      },
      py::arg("kind"), py::arg("n_bin"));

  m.def(
      "speckle",
      [](std::size_t n_out, std::size_t n_in, std::uint64_t seed, const Eigen::VectorXcd& frame) {
        return project(build_tm(n_out, n_in, seed), frame);
      },
      py::arg("n_out"), py::arg("n_in"), py::arg("seed"), py::arg("frame"),
      "Field modulus |H frame| for a freshly drawn transmission matrix.");

  m.def(
      "reservoir_states",
      [](const std::vector<double>& series, const std::string& preset, std::size_t n_res, std::uint64_t tm_seed,
         std::uint64_t init_seed) {
        ReservoirConfig rc = preset == "slm" ? ReservoirConfig::slm(n_res) : ReservoirConfig::dmd_basket(n_res, 10);
        rc.tm_seed = tm_seed;
        TimeSeries ts;
        ts.values = series;
        Reservoir reservoir(rc);
        py::gil_scoped_release release;
        return reservoir.run(ts, init_seed).states;
      },
      py::arg("series"), py::arg("preset") = "slm", py::arg("n_res") = 256, py::arg("tm_seed") = 1,
      py::arg("init_seed") = 2, "States (rows = time) driven by a series already scaled to [0, 1].");

  m.def(
      "fit_ridge",
      [](const FeatureMatrix& x, const Eigen::MatrixXd& y, double alpha, std::vector<int> horizons, bool center) {
        return optrc::fit_ridge(x, y, alpha, std::move(horizons), FitOptions{center}).w_out;
      },
      py::arg("features"), py::arg("targets"), py::arg("alpha"), py::arg("horizons"), py::arg("center") = false,
      "Ridge weights, one row per horizon.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::string& preset) {
        const ExperimentConfig cfg = config_from_text(config_json, preset);
        NMSECurve curve;
        {
          py::gil_scoped_release release;
          curve = optrc::run_experiment(cfg).curve;
        }
        return curve_dict(curve);
      },
      py::arg("config_json") = "{}", py::arg("preset") = "");

  m.def(
      "resolve_config",
      [](const std::string& config_json, const std::string& preset) {
        return config_from_json(nlohmann::json::parse(config_json), preset).resolved.dump();
      },
      py::arg("config_json") = "{}", py::arg("preset") = "", "Fully resolved config as JSON text.");
}
