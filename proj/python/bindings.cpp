#include <sstream>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gvf/cli.hpp"
#include "gvf/complex.hpp"
#include "gvf/dec.hpp"
#include "gvf/errors.hpp"
#include "gvf/hhd.hpp"
#include "gvf/io.hpp"
#include "gvf/monitor.hpp"
#include "gvf/synth.hpp"

namespace py = pybind11;
using namespace gvf;

namespace {

SimplicialComplex complex_from(const std::vector<std::string>& kinds, const std::vector<Edge>& edges,
                               const std::vector<Triangle>& triangles) {
  std::vector<Vertex> vs;
  for (std::size_t i = 0; i < kinds.size(); ++i) vs.push_back({"v" + std::to_string(i), node_kind_from_string(kinds[i])});
  return SimplicialComplex::from_simplices(std::move(vs), edges, triangles);
}

}  // namespace

PYBIND11_MODULE(_gvf, m) {
  m.doc() = "Geometric risk flows on multimodal simplicial complexes";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<SimplicialComplex>(m, "Complex")
      .def(py::init(&complex_from), py::arg("kinds"), py::arg("edges"), py::arg("triangles") = std::vector<Triangle>{})
      .def_property_readonly("num_vertices", &SimplicialComplex::num_vertices)
      .def_property_readonly("num_edges", &SimplicialComplex::num_edges)
      .def_property_readonly("num_triangles", &SimplicialComplex::num_triangles)
      .def_property_readonly("edges", &SimplicialComplex::edges)
      .def_property_readonly("triangles", &SimplicialComplex::triangles)
      .def_property_readonly("ids", [](const SimplicialComplex& k) {
        std::vector<std::string> ids;
        for (const auto& v : k.vertices()) ids.push_back(v.id);
        return ids;
      })
      .def("b1", [](const SimplicialComplex& k) { return Eigen::MatrixXd(k.b1_real()); })
      .def("b2", [](const SimplicialComplex& k) { return Eigen::MatrixXd(k.b2_real()); })
      .def("laplacian", [](const SimplicialComplex& k, int degree) {
        return Eigen::MatrixXd(hodge_laplacian(k, degree).matrix);
      })
      .def("betti", [](const SimplicialComplex& k) {
        const auto t = betti_numbers(k);
        return py::make_tuple(t.beta0, t.beta1);
      })
      .def("to_json", [](const SimplicialComplex& k) { return io::dump(io::complex_to_json(k)); });

  m.def("complex_from_json", [](const std::string& text) { return io::complex_from_json(io::json::parse(text)); });

  m.def(
      "build_complex",
      [](const std::string& jsonl, double t0, double tau_prox, double tau_sync, double tau_dwell, double window) {
        std::istringstream in(jsonl);
        ThresholdConfig cfg{tau_prox, tau_sync, tau_dwell, window};
        return build_complex(io::read_stream(in), t0, cfg);
      },
      py::arg("stream"), py::arg("t0") = 0.0, py::arg("tau_prox") = 25.0, py::arg("tau_sync") = 2.0,
      py::arg("tau_dwell") = 10.0, py::arg("window") = 300.0);

  m.def(
      "simulate",
      [](const std::string& scenario, std::uint64_t seed, int n_agents) {
        CohortConfig cfg;
        cfg.scenario = scenario_from_string(scenario);
        cfg.seed = seed;
        cfg.n_agents = n_agents;
        const Cohort c = generate(cfg);
        std::ostringstream out;
        io::write_stream(out, c.stream);
        py::dict d;
        d["stream"] = out.str();
        d["complex"] = c.truth.complex;
        d["flow"] = c.truth.flow.values;
        d["beta1"] = c.truth.beta1;
        d["labels"] = c.truth.labels;
        d["features"] = c.truth.features;
        return d;
      },
      py::arg("scenario") = "mixed", py::arg("seed") = 1, py::arg("n_agents") = 24);

  m.def(
      "decompose",
      [](const SimplicialComplex& k, const Eigen::MatrixXd& flow, double tol) {
        SolverConfig cfg;
        cfg.tol = tol;
        const auto d = decompose(k, Cochain(1, flow), cfg);
        const auto e = energy_fractions(d);
        py::dict out;
        out["potential"] = d.potential.values;
        out["stream"] = d.stream.values;
        out["gradient"] = d.gradient.values;
        out["curl"] = d.curl.values;
        out["harmonic"] = d.harmonic.values;
        out["energy"] = py::make_tuple(e.gradient, e.curl, e.harmonic);
        out["iterations"] = d.max_iterations();
        return out;
      },
      py::arg("complex"), py::arg("flow"), py::arg("tol") = 1e-10);

  m.def("grad", [](const SimplicialComplex& k, const Eigen::MatrixXd& r) { return grad(k, Cochain(0, r)).values; });
  m.def("curl", [](const SimplicialComplex& k, const Eigen::MatrixXd& f) { return curl(k, Cochain(1, f)).values; });
  m.def("cri", [](const SimplicialComplex& k, const Eigen::MatrixXd& f) { return cri(k, Cochain(1, f)); });
  m.def(
      "dps",
      [](const SimplicialComplex& k, const Eigen::MatrixXd& f, int modalities) {
        if (modalities < 1 || f.cols() % modalities != 0) {
          throw ValidationError("flow channels must split evenly over the modalities");
        }
        BundleConfig b = BundleConfig::standard(1, static_cast<int>(f.cols()) / modalities);
        b.modalities.resize(static_cast<std::size_t>(modalities));
        return dps(k, Cochain(1, f), b, ScoreConfig::uniform(b));
      },
      py::arg("complex"), py::arg("flow"), py::arg("modalities") = 1);
  m.def("spectral_distance", &spectral_distance);

  m.def("cli", [](const std::vector<std::string>& args) {
    std::vector<std::string> all{"gvf"};
    all.insert(all.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : all) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
  });
}
