#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cvxwave/acquire.hpp"
#include "cvxwave/basis.hpp"
#include "cvxwave/eikonal.hpp"
#include "cvxwave/error.hpp"
#include "cvxwave/pipeline.hpp"
#include "cvxwave/recon.hpp"
#include "cvxwave/verify.hpp"

namespace py = pybind11;
using namespace cvxwave;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields are x-fastest, so numpy sees them as (nz, ny, nx).
Array to_numpy(const ScalarField& f) {
  const auto& g = f.grid();
  Array a({g.nz(), g.ny(), g.nx()});
  std::copy(f.data().begin(), f.data().end(), a.mutable_data());
  return a;
}

ScalarField from_numpy(const Array& a, const Grid3& g) {
  if (a.ndim() != 3 || a.shape(0) != g.nz() || a.shape(1) != g.ny() || a.shape(2) != g.nx())
    throw ConfigError("array shape does not match the grid (expected (nz, ny, nx))");
  return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

std::span<const double> view(const Array& a) {
  if (a.ndim() != 1) throw ConfigError("expected a 1-D array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

Grid3 omega_grid(double h, double A) { return Grid3::box({-A / 2, -A / 2, 0.0}, {A / 2, A / 2, A}, h); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cvxwave core: forward simulation, acquisition and convexified inversion";
  m.attr("__version__") = CVXWAVE_VERSION;

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  static py::exception<InputError> input_error(m, "InputError", PyExc_FileNotFoundError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    }
  });

  py::class_<PolyBasis>(m, "PolyBasis")
      .def(py::init<double, int>(), py::arg("T1"), py::arg("N"))
      .def_property_readonly("T1", &PolyBasis::T1)
      .def_property_readonly("N", &PolyBasis::N)
      .def_property_readonly("s", [](const PolyBasis& b) { return b.s(); })
      .def_property_readonly("D",
                             [](const PolyBasis& b) {
                               Array a({b.N(), b.N()});
                               std::copy(b.D_matrix().begin(), b.D_matrix().end(), a.mutable_data());
                               return a;
                             })
      .def("eval", &PolyBasis::eval, py::arg("n"), py::arg("t"))
      .def("eval_deriv", &PolyBasis::eval_deriv, py::arg("n"), py::arg("t"))
      .def("to_json", [](const PolyBasis& b) { return to_py(b.to_json()); });

  m.def("phantom_names", &phantom_names);
  m.def(
      "phantom",
      [](const std::string& name, double h, double A) { return to_numpy(make_phantom(name, h, A).sample(omega_grid(h, A))); },
      py::arg("name"), py::arg("h") = 1.0 / 16.0, py::arg("A") = 1.0,
      "Phantom sampled on the Omega grid with spacing h, shape (nz, ny, nx).");

  m.def(
      "pick_arrival",
      [](const Array& trace, double dt, double threshold, double fit_fraction) {
        return pick_arrival(view(trace), dt, PickOptions{threshold, fit_fraction});
      },
      py::arg("trace"), py::arg("dt"), py::arg("threshold") = 0.5, py::arg("fit_fraction") = 0.8);
  m.def(
      "double_time_integral",
      [](const Array& u, double dt) { return double_time_integral(view(u), dt); }, py::arg("u"), py::arg("dt"));
  m.def(
      "project_basis",
      [](const Array& w, double dt, const PolyBasis& b) { return project_basis(view(w), dt, b); }, py::arg("w"),
      py::arg("dt"), py::arg("basis"));

  m.def(
      "c_from_tau",
      [](const Array& tau, double h, double A) { return to_numpy(c_from_tau(from_numpy(tau, omega_grid(h, A)))); },
      py::arg("tau"), py::arg("h"), py::arg("A") = 1.0, "|grad tau|^2 on the Omega grid.");

  m.def(
      "travel_times",
      [](const Array& c, double h, std::array<double, 3> origin, std::array<double, 3> source) {
        const Grid3 g(origin, h, {static_cast<int>(c.shape(2)), static_cast<int>(c.shape(1)), static_cast<int>(c.shape(0))});
        return to_numpy(fast_sweep(from_numpy(c, g), source).tau);
      },
      py::arg("c"), py::arg("h"), py::arg("origin"), py::arg("source"),
      "Fast-sweeping eikonal travel times |grad tau|^2 = c on a box grid.");

  m.def(
      "carleman_sweep",
      [](double h, std::vector<double> lambdas, int samples, std::uint64_t seed, double b) {
        return to_py(carleman_sweep(omega_grid(h, 1.0), lambdas, samples, seed, b).to_json());
      },
      py::arg("h") = 1.0 / 16.0, py::arg("lambdas") = std::vector<double>{4.0, 8.0, 16.0}, py::arg("samples") = 20,
      py::arg("seed") = 1, py::arg("b") = 0.1);

  m.def(
      "default_config", []() { return to_py(RunConfig{}.to_json()); },
      "Resolved default run configuration as a dict.");

  m.def(
      "run_scenario",
      [](const py::object& config) {
        const RunConfig cfg = RunConfig::from_json(from_py(config));
        ScenarioOutput out;
        {
          py::gil_scoped_release nogil;
          out = run_scenario(cfg);
        }
        py::dict d;
        d["report"] = to_py(out.report.to_json());
        d["trace"] = to_py(out.inversion.result.trace.summary());
        d["converged"] = out.inversion.result.converged;
        d["c"] = to_numpy(out.inversion.c);
        d["J_start"] = out.inversion.J_start;
        return d;
      },
      py::arg("config"), "phantom -> simulate -> acquire -> invert -> metrics for a config dict.");
}
