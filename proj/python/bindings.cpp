#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "loctime/admissibility.hpp"
#include "loctime/chaos_kernels.hpp"
#include "loctime/errors.hpp"
#include "loctime/fbm_mc.hpp"
#include "loctime/fractional_ops.hpp"
#include "loctime/singular_quadrature.hpp"
#include "loctime/stransform.hpp"
#include "loctime/test_function.hpp"

namespace py = pybind11;
using namespace loctime;

namespace {

VectorTestFunction as_vector(const py::object& f, int d) {
  if (f.is_none()) return VectorTestFunction::zero(d);
  if (py::isinstance<VectorTestFunction>(f)) return f.cast<VectorTestFunction>();
  if (py::isinstance<TestFunction>(f))
    return VectorTestFunction(std::vector<TestFunction>(static_cast<std::size_t>(d), f.cast<TestFunction>()));
  return VectorTestFunction(f.cast<std::vector<TestFunction>>());
}

py::dict as_dict(const QuadratureResult& r) {
  py::dict out;
  out["value"] = r.value;
  out["error_estimate"] = r.error_estimate;
  out["evaluations"] = r.evaluations;
  return out;
}

py::dict as_dict(const McEstimate& e) {
  py::dict out;
  out["mean"] = e.mean;
  out["std_error"] = e.std_error;
  out["n_samples"] = e.n_samples;
  return out;
}

PathEnsemble sample(double H, int d, int m, std::size_t n_paths, std::uint64_t seed, const std::string& generator,
                    double dx) {
  const Hurst h(H);
  const auto times = uniform_time_grid(m);
  if (generator == "cholesky") return sample_paths_cholesky(h, d, times, n_paths, seed, 0);
  if (generator != "whitenoise") throw ValidationError("generator must be whitenoise or cholesky");
  const WhiteNoiseGrid grid(h, dx > 0.0 ? dx : 1.0 / m, 1.0, seed, 0);
  return sample_paths_whitenoise(h, d, times, grid, n_paths);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fractional white-noise operators and local-time S-transforms";

  auto base = py::register_exception<Error>(m, "LoctimeError", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<AccuracyError>(m, "AccuracyError", base.ptr());
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError", base.ptr());
  py::register_exception<NonIntegrableError>(m, "NonIntegrableError", validation.ptr());

  py::class_<TestFunction>(m, "TestFunction")
      .def_static("gaussian_bump", &TestFunction::gaussian_bump, py::arg("amplitude"), py::arg("center"),
                  py::arg("width"))
      .def_static("hermite", &TestFunction::hermite, py::arg("n"), py::arg("amplitude") = 1.0,
                  py::arg("center") = 0.0, py::arg("scale") = 1.0)
      .def_static("zero", &TestFunction::zero)
      .def("__call__", &TestFunction::operator())
      .def("derivative", &TestFunction::derivative)
      .def_property_readonly("l2_norm", &TestFunction::l2_norm)
      .def_property_readonly("sup_norm", &TestFunction::sup_norm)
      .def_property_readonly("label", &TestFunction::label)
      .def("scaled", &TestFunction::scaled)
      .def("__repr__", [](const TestFunction& f) { return "<TestFunction " + f.label() + ">"; });

  py::class_<VectorTestFunction>(m, "VectorTestFunction")
      .def(py::init<std::vector<TestFunction>>())
      .def_static("zero", &VectorTestFunction::zero)
      .def_property_readonly("dim", &VectorTestFunction::dim)
      .def_property_readonly("norm", &VectorTestFunction::norm)
      .def("__getitem__", [](const VectorTestFunction& f, int j) {
        if (j < 0 || j >= f.dim()) throw py::index_error();
        return f[j];
      });

  m.def("normalization_constant", [](double H) { return normalization_constant(Hurst(H)); }, py::arg("H"));
  m.def("mh_indicator", [](double H, double s, double t, double x) { return mh_indicator(Hurst(H), Interval(s, t), x); },
        py::arg("H"), py::arg("s"), py::arg("t"), py::arg("x"));
  m.def("mh_plus_apply",
        [](double H, const TestFunction& f, double x, double tol) { return mh_plus_apply(Hurst(H), f, x, tol); },
        py::arg("H"), py::arg("f"), py::arg("x"), py::arg("tol") = 1e-10);
  m.def("indicator_inner_product",
        [](double H, double s, double t, double tol) { return indicator_inner_product(Hurst(H), s, t, tol); },
        py::arg("H"), py::arg("s"), py::arg("t"), py::arg("tol") = 1e-11);
  m.def("pairing_closed_form",
        [](double H, const TestFunction& f, double s, double t, double tol) {
          return pairing_closed_form(Hurst(H), f, Interval(s, t), tol);
        },
        py::arg("H"), py::arg("f"), py::arg("s"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("pairing_dual",
        [](double H, const TestFunction& f, double s, double t, double tol) {
          return pairing_dual(Hurst(H), f, Interval(s, t), tol);
        },
        py::arg("H"), py::arg("f"), py::arg("s"), py::arg("t"), py::arg("tol") = 1e-10);
  m.def("lemma_bound_ratio",
        [](double H, const TestFunction& f, double s, double t) { return lemma_bound_ratio(Hurst(H), f, Interval(s, t)); },
        py::arg("H"), py::arg("f"), py::arg("s"), py::arg("t"));

  m.def("triangle_power_moment", &triangle_power_moment, py::arg("alpha"));
  m.def("integrate_triangle_singular",
        [](double alpha, std::function<double(double, double)> g, double abs_tol, double rel_tol) {
          SingularIntegrandSpec spec;
          spec.alpha = alpha;
          spec.g = std::move(g);
          spec.tol = {abs_tol, rel_tol};
          return as_dict(integrate_triangle_singular(spec));
        },
        py::arg("alpha"), py::arg("g"), py::arg("abs_tol") = 1e-10, py::arg("rel_tol") = 0.0);
  m.def("divergence_probe",
        [](double alpha, std::function<double(double, double)> g, std::vector<double> cutoffs) {
          SingularIntegrandSpec spec;
          spec.alpha = alpha;
          spec.g = std::move(g);
          std::vector<std::pair<double, double>> out;
          for (const ProbePoint& p : divergence_probe(spec, cutoffs)) out.emplace_back(p.cutoff, p.value);
          return out;
        },
        py::arg("alpha"), py::arg("g"), py::arg("cutoffs"));

  m.def("admissibility",
        [](double H, int d, int N) {
          const Admissibility a = admissibility(Hurst(H), d, N);
          return py::make_tuple(a.admissible, a.minimal_n);
        },
        py::arg("H"), py::arg("d"), py::arg("N"));

  m.def("s_local_time",
        [](double H, int d, int N, double eps, const py::object& f, double abs_tol, double rel_tol) {
          return as_dict(s_local_time(DeltaSpec(Hurst(H), d, N, eps), as_vector(f, d), {abs_tol, rel_tol}));
        },
        py::arg("H"), py::arg("d"), py::arg("N") = 0, py::arg("eps") = 0.0, py::arg("f") = py::none(),
        py::arg("abs_tol") = 1e-9, py::arg("rel_tol") = 0.0);

  m.def("chaos_kernel",
        [](double H, int d, const std::vector<int>& orders, double eps, const std::vector<double>& points,
           double abs_tol) { return chaos_kernel(Hurst(H), d, orders, eps, points, {abs_tol, 0.0}); },
        py::arg("H"), py::arg("d"), py::arg("orders"), py::arg("eps"), py::arg("points"), py::arg("abs_tol") = 1e-9);
  m.def("series_reconstruction",
        [](double H, int d, int N, double eps, const py::object& f, int max_order, double abs_tol) {
          const SeriesReport r =
              series_reconstruction(DeltaSpec(Hurst(H), d, N, eps), as_vector(f, d), max_order, {abs_tol, 0.0});
          py::dict out;
          out["partial_sum"] = r.partial_sum;
          out["error_estimate"] = r.error_estimate;
          out["converged"] = r.converged;
          out["diagnostic"] = r.diagnostic;
          py::list orders;
          for (const OrderContribution& c : r.contributions) orders.append(py::make_tuple(c.order, c.value));
          out["contributions"] = orders;
          return out;
        },
        py::arg("H"), py::arg("d"), py::arg("N"), py::arg("eps"), py::arg("f") = py::none(), py::arg("max_order") = 4,
        py::arg("abs_tol") = 1e-9);

  m.def("fbm_covariance", [](double H, double s, double t) { return fbm_covariance(Hurst(H), s, t); }, py::arg("H"),
        py::arg("s"), py::arg("t"));
  m.def("mc_local_time_regularized",
        [](double H, int d, double eps, int m_steps, std::size_t n_paths, std::uint64_t seed, const std::string& gen,
           double dx) {
          McEstimate e;
          {
            py::gil_scoped_release release;
            e = mc_local_time_regularized(sample(H, d, m_steps, n_paths, seed, gen, dx), eps);
          }
          return as_dict(e);
        },
        py::arg("H"), py::arg("d"), py::arg("eps"), py::arg("m") = 256, py::arg("n_paths") = 20000,
        py::arg("seed") = 1, py::arg("generator") = "whitenoise", py::arg("dx") = 0.0);
  m.def("mc_s_transform",
        [](double H, int d, int N, double eps, const py::object& f, int m_steps, std::size_t n_paths,
           std::uint64_t seed, double dx) {
          const VectorTestFunction fv = as_vector(f, d);
          McEstimate e;
          {
            py::gil_scoped_release release;
            const PathEnsemble ens = sample(H, d, m_steps, n_paths, seed, "whitenoise", dx);
            e = mc_s_transform(ens, fv, eps, N);
          }
          return as_dict(e);
        },
        py::arg("H"), py::arg("d"), py::arg("N"), py::arg("eps"), py::arg("f") = py::none(), py::arg("m") = 256,
        py::arg("n_paths") = 20000, py::arg("seed") = 1, py::arg("dx") = 0.0);
}
