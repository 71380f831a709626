#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sphpursuit/error.hpp"
#include "sphpursuit/experiment.hpp"
#include "sphpursuit/text.hpp"

namespace py = pybind11;
using namespace sphpursuit;

namespace {

using PointArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

PointArray to_array(const Grid& g) {
  PointArray a(static_cast<Eigen::Index>(g.size()), 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    a(static_cast<Eigen::Index>(i), 0) = g.points[i].phi();
    a(static_cast<Eigen::Index>(i), 1) = g.points[i].t();
  }
  return a;
}

Grid to_grid(const Eigen::Ref<const PointArray>& a) {
  Grid g;
  g.points.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) g.points.emplace_back(a(i, 0), a(i, 1));
  return g;
}

PotentialModel make_model(const std::vector<std::pair<std::string, double>>& terms,
                          const std::optional<Eigen::MatrixXd>& coefficients) {
  PotentialModel m;
  m.name = "python";
  for (const auto& [rec, w] : terms) m.terms.emplace_back(parse_element(rec), w);
  if (coefficients) {
    if (coefficients->cols() != 3) throw std::invalid_argument("coefficients must have rows (n, j, value)");
    std::stringstream ss;
    for (Eigen::Index r = 0; r < coefficients->rows(); ++r)
      ss << static_cast<int>((*coefficients)(r, 0)) << ',' << static_cast<int>((*coefficients)(r, 1)) << ','
         << format_double((*coefficients)(r, 2)) << '\n';
    m.coefficients = read_coeffs(ss);
  }
  return m;
}

py::dict report_to_dict(const RunReport& r) {
  py::dict d;
  d["variant"] = r.variant;
  d["stop_reason"] = to_string(r.stop);
  d["iterations"] = r.iterations;
  d["nu"] = r.nu;
  d["lambda"] = r.lambda;
  d["rel_data_error"] = r.rel_data_error;
  d["tikhonov"] = r.tikhonov;
  d["rel_rmse"] = r.rel_rmse ? py::object(py::float_(*r.rel_rmse)) : py::object(py::none());
  d["wall_seconds"] = r.wall_seconds;
  d["restarts"] = r.restarts;
  py::list log;
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    const auto& rec = r.log[i];
    py::dict row;
    row["iteration"] = rec.iteration;
    row["element"] = format_element(rec.element);
    row["provenance"] = i < r.provenance.size() ? r.provenance[i] : std::string();
    row["alpha"] = rec.alpha;
    row["objective"] = rec.objective;
    row["rel_data_error"] = rec.rel_data_error;
    row["tikhonov"] = rec.tikhonov;
    row["restarted"] = rec.restarted;
    log.append(row);
  }
  d["log"] = log;
  std::vector<std::string> dict;
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(r.learnt.entries.size()));
  for (std::size_t i = 0; i < r.learnt.entries.size(); ++i) {
    dict.push_back(format_element(r.learnt.entries[i].element));
    alpha[static_cast<Eigen::Index>(i)] = r.learnt.entries[i].alpha_final;
  }
  d["dictionary"] = dict;
  d["coefficients"] = alpha;
  d["residual"] = r.residual;
  d["eval_grid"] = to_array(r.eval_grid);
  d["approximation"] = r.approximation;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Learning matching pursuits for spherical downward continuation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("reuter_grid", [](int gamma) { return to_array(reuter_grid(gamma)); }, py::arg("gamma"),
        "Reuter grid as an (N, 2) array of (phi, t).");
  m.def("driscoll_healy_grid", [](int b) { return to_array(driscoll_healy_grid(b)); }, py::arg("bandwidth"));

  m.def("canonical_record", [](const std::string& rec) { return format_element(parse_element(rec)); },
        py::arg("record"), "Parse an element record and return its canonical form.");
  m.def("element_class", [](const std::string& rec) { return to_string(trial_class(parse_element(rec))); },
        py::arg("record"));
  m.def(
      "evaluate",
      [](const std::string& rec, const Eigen::Ref<const PointArray>& points, double sigma) {
        ForwardModel fm(to_grid(points), sigma);
        return Eigen::VectorXd(fm.column(parse_element(rec)));
      },
      py::arg("record"), py::arg("points"), py::arg("sigma") = 1.0,
      "Values of the sigma-continued element at sigma * eta for every (phi, t) row.");
  m.def(
      "upward_eval",
      [](const std::string& rec, double sigma, double phi, double t) {
        return upward_eval(parse_element(rec), sigma, SurfacePoint(phi, t));
      },
      py::arg("record"), py::arg("sigma"), py::arg("phi"), py::arg("t"));
  m.def("sobolev_inner", [](const std::string& a, const std::string& b) {
    return inner_sobolev(parse_element(a), parse_element(b));
  });

  m.def(
      "synthesize",
      [](const std::vector<std::pair<std::string, double>>& terms, const Eigen::Ref<const PointArray>& points,
         double sigma, const std::optional<Eigen::MatrixXd>& coefficients) {
        return synthesize(make_model(terms, coefficients), to_grid(points), sigma);
      },
      py::arg("terms"), py::arg("points"), py::arg("sigma") = 1.0, py::arg("coefficients") = py::none(),
      "Model values from (record, weight) terms and optional (n, j, value) coefficient rows.");
  m.def(
      "add_noise",
      [](const Eigen::VectorXd& y, double level, std::uint64_t seed) { return add_noise(y, NoiseSpec{level, seed}); },
      py::arg("y"), py::arg("level"), py::arg("seed"));
  m.def("rel_data_error", &rel_data_error, py::arg("residual"), py::arg("y"));
  m.def(
      "rel_rmse",
      [](const Eigen::VectorXd& a, const Eigen::VectorXd& t, const std::optional<std::vector<double>>& w) {
        return rel_rmse(a, t, w.value_or(std::vector<double>{}));
      },
      py::arg("approx"), py::arg("truth"), py::arg("weights") = py::none());

  m.def("contrived_config", [](std::uint64_t seed) { return config_to_json(contrived_config(seed)); },
        py::arg("seed"), "JSON configuration of the contrived experiment.");
  m.def(
      "canonical_config",
      [](const std::string& text, const std::string& base) { return config_to_json(parse_config(text, base)); },
      py::arg("config"), py::arg("base_dir") = ".");
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& base) {
        ExperimentConfig c = parse_config(text, base);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return report_to_dict(r);
      },
      py::arg("config"), py::arg("base_dir") = ".",
      "Run an experiment from its JSON configuration and return the report.");
}
