#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fphist/error.hpp"
#include "fphist/experiment.hpp"

namespace py = pybind11;
using namespace fphist;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Accepts shape (n, d) or a single point of shape (d,).
std::pair<const double*, std::size_t> rows_of(const Array& x, std::size_t dim) {
  if (x.ndim() == 1 && static_cast<std::size_t>(x.shape(0)) == dim) return {x.data(), 1};
  if (x.ndim() == 2 && static_cast<std::size_t>(x.shape(1)) == dim)
    return {x.data(), static_cast<std::size_t>(x.shape(0))};
  throw ConfigError("expected points of shape (n, " + std::to_string(dim) + ")");
}

template <class F>
Array map_rows(const Array& x, std::size_t dim, F f) {
  auto [data, n] = rows_of(x, dim);
  Array out(static_cast<py::ssize_t>(n));
  auto o = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < n; ++i) o(i) = f(std::span<const double>(data + i * dim, dim));
  return out;
}

ProblemParams params_of(std::optional<std::size_t> dim, std::optional<double> alpha,
                        std::optional<double> epsilon, std::optional<double> horizon) {
  return ProblemParams{dim, alpha, epsilon, horizon};
}

py::object to_python(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

Json from_python(const py::object& o) {
  if (py::isinstance<py::str>(o)) return Json::parse(o.cast<std::string>());
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

DensityFn wrap(const py::function& f) {
  return [f](std::span<const double> x) {
    Array a(static_cast<py::ssize_t>(x.size()), x.data());
    return f(a).cast<double>();
  };
}

py::dict l1_dict(const L1Error& e) {
  py::dict d;
  d["bounded"] = e.bounded;
  d["ref_bounded_mass"] = e.ref_bounded_mass;
  d["ref_tail_mass"] = e.ref_tail_mass();
  d["total"] = e.total();
  return d;
}

HyperRect box_or_default(const DensityEstimate& est, const std::optional<std::vector<double>>& lo,
                         const std::optional<std::vector<double>>& hi) {
  if (lo && hi) return HyperRect(*lo, *hi);
  if (lo || hi) throw ConfigError("give both box_lower and box_upper");
  return default_evaluation_box(est, SampleSet());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Euler-Maruyama particle simulation with Gessaman / BTC histogram estimates.";

  // Module-lifetime reference; carries the C++ error name in `.kind`.
  static PyObject* error_type =
      PyErr_NewException("fphist._core.Error", PyExc_RuntimeError, nullptr);
  m.add_object("Error", py::reinterpret_borrow<py::object>(error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type)(e.what());
      err.attr("kind") = e.kind();
      PyErr_SetObject(error_type, err.ptr());
    }
  });

  m.def("catalog", [] {
    py::list out;
    for (const auto& p : catalog()) {
      py::dict d;
      d["id"] = p.id;
      d["description"] = p.description;
      d["dim"] = p.sde.dim;
      d["horizon"] = p.sde.horizon;
      d["default_tau"] = p.default_tau;
      d["analytic"] = p.solution ? py::object(py::str(p.solution->name())) : py::none();
      out.append(d);
    }
    return out;
  });

  m.def(
      "simulate",
      [](const std::string& problem, std::size_t samples, std::optional<std::size_t> steps,
         std::optional<double> tau, std::uint64_t seed, unsigned workers,
         std::optional<std::size_t> dim, std::optional<double> alpha,
         std::optional<double> epsilon, std::optional<double> horizon) {
        const auto p = make_problem(problem, params_of(dim, alpha, epsilon, horizon));
        const std::size_t J =
            steps ? *steps : steps_for_tau(p.sde.horizon, tau.value_or(p.default_tau));
        SampleSet s;
        {
          py::gil_scoped_release release;
          s = simulate_terminal(p.sde, EulerConfig{J, samples, seed}, workers);
        }
        Array out({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.dim())});
        std::copy(s.coords().begin(), s.coords().end(), out.mutable_data());
        return out;
      },
      py::arg("problem"), py::arg("samples"), py::kw_only(), py::arg("steps") = py::none(),
      py::arg("tau") = py::none(), py::arg("seed") = 0, py::arg("workers") = 1,
      py::arg("dim") = py::none(), py::arg("alpha") = py::none(), py::arg("epsilon") = py::none(),
      py::arg("horizon") = py::none(),
      "Terminal Euler samples of a catalog problem as an (M, d) array.");

  py::class_<PartitionTree>(m, "Partition")
      .def_property_readonly("rule", [](const PartitionTree& t) { return std::string(to_string(t.rule())); })
      .def_property_readonly("dim", &PartitionTree::dim)
      .def_property_readonly("sample_count", &PartitionTree::sample_count)
      .def_property_readonly("cell_count", &PartitionTree::cell_count)
      .def_property_readonly("height", &PartitionTree::height)
      .def_property_readonly("leaf_count", &PartitionTree::leaf_count)
      .def("leaves",
           [](const PartitionTree& t) {
             py::list out;
             for (const auto& l : t.leaves()) {
               auto lo = l.cell.lower(), hi = l.cell.upper();
               out.append(py::make_tuple(std::vector<double>(lo.begin(), lo.end()),
                                         std::vector<double>(hi.begin(), hi.end()), l.count));
             }
             return out;
           })
      .def("locate",
           [](const PartitionTree& t, const Array& x) {
             auto [data, n] = rows_of(x, t.dim());
             py::array_t<std::int64_t> out(static_cast<py::ssize_t>(n));
             auto o = out.mutable_unchecked<1>();
             for (std::size_t i = 0; i < n; ++i)
               o(i) = static_cast<std::int64_t>(
                   t.locate(std::span<const double>(data + i * t.dim(), t.dim())));
             return out;
           })
      .def("to_json", [](const PartitionTree& t) { return to_python(partition_to_json(t)); });

  m.def(
      "build_partition",
      [](const Array& points, std::size_t cells, const std::string& rule, bool uneven) {
        if (points.ndim() != 2) throw ConfigError("points must have shape (M, d)");
        const auto d = static_cast<std::size_t>(points.shape(1));
        SampleSet s(d, std::vector<double>(points.data(), points.data() + points.size()));
        return build_partition(s, cells, parse_split_rule(rule), GessamanOptions{uneven});
      },
      py::arg("points"), py::arg("cells"), py::arg("rule") = "gessaman",
      py::arg("uneven") = false);

  py::class_<DensityEstimate>(m, "DensityEstimate")
      .def(py::init<PartitionTree, std::uint64_t>(), py::arg("partition"), py::arg("seed") = 0)
      .def_property_readonly("partition", &DensityEstimate::tree)
      .def_property_readonly("values", [](const DensityEstimate& e) {
        auto v = e.values();
        return std::vector<double>(v.begin(), v.end());
      })
      .def_property_readonly("unbounded_leaf_count", &DensityEstimate::unbounded_leaf_count)
      .def("evaluate",
           [](const DensityEstimate& e, const Array& x) {
             return map_rows(x, e.dim(), [&](auto p) { return e.evaluate(p); });
           })
      .def("self_integral", &DensityEstimate::self_integral)
      .def("tail_mass", &DensityEstimate::tail_mass)
      .def("to_json", [](const DensityEstimate& e) { return to_python(estimate_to_json(e)); });

  m.def(
      "ou_solution",
      [](double alpha, double epsilon, double t, const Array& x, double beta) {
        const std::size_t d = x.ndim() == 2 ? x.shape(1) : x.shape(0);
        return map_rows(x, d, [&](auto p) { return ou_solution(alpha, epsilon, d, t, p, beta); });
      },
      py::arg("alpha"), py::arg("epsilon"), py::arg("t"), py::arg("x"), py::arg("beta") = 1.0);

  m.def(
      "heat_solution",
      [](double alpha, double t, const Array& x) {
        const std::size_t d = x.ndim() == 2 ? x.shape(1) : x.shape(0);
        return map_rows(x, d, [&](auto p) { return heat_solution(alpha, d, t, p); });
      },
      py::arg("alpha"), py::arg("t"), py::arg("x"));

  m.def(
      "mc_l1_error",
      [](const DensityEstimate& e, const py::function& ref, std::size_t n_eval,
         std::uint64_t seed) { return l1_dict(mc_l1_error(e, wrap(ref), n_eval, seed)); },
      py::arg("estimate"), py::arg("reference"), py::arg("n_eval") = 16, py::arg("seed") = 0);

  m.def(
      "mc_linf_error",
      [](const DensityEstimate& e, const py::function& ref, std::vector<double> lo,
         std::vector<double> hi, std::size_t n_eval, std::uint64_t seed) {
        return mc_linf_error(e, wrap(ref), n_eval, HyperRect(std::move(lo), std::move(hi)), seed);
      },
      py::arg("estimate"), py::arg("reference"), py::arg("box_lower"), py::arg("box_upper"),
      py::arg("n_eval") = 16, py::arg("seed") = 0);

  m.def(
      "problem_errors",
      [](const DensityEstimate& e, const std::string& problem,
         std::optional<std::vector<double>> lo, std::optional<std::vector<double>> hi,
         std::size_t n_eval, std::uint64_t seed, std::optional<std::size_t> dim,
         std::optional<double> alpha, std::optional<double> epsilon,
         std::optional<double> horizon) {
        const auto p = make_problem(problem, params_of(dim, alpha, epsilon, horizon));
        if (!p.solution) throw ConfigError("problem '" + problem + "' has no analytic solution");
        const auto& sol = *p.solution;
        const double T = p.sde.horizon;
        const auto report = evaluate_errors(
            e, [&](std::span<const double> x) { return sol.density(T, x); },
            box_or_default(e, lo, hi), n_eval, seed);
        return to_python(error_report_to_json(report));
      },
      py::arg("estimate"), py::arg("problem"), py::kw_only(), py::arg("box_lower") = py::none(),
      py::arg("box_upper") = py::none(), py::arg("n_eval") = 16, py::arg("seed") = 0,
      py::arg("dim") = py::none(), py::arg("alpha") = py::none(), py::arg("epsilon") = py::none(),
      py::arg("horizon") = py::none(),
      "L1 / Linf errors of an estimate against a catalog problem's exact density at T.");

  m.def(
      "validate_config",
      [](const py::object& config) {
        return to_python(resolved_config_json(resolve(config_from_json(from_python(config)))));
      },
      py::arg("config"));

  m.def(
      "run_experiment",
      [](const py::object& config) {
        const ExperimentConfig c = config_from_json(from_python(config));
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
        }
        return to_python(r.report);
      },
      py::arg("config"), "Runs one experiment config (dict or JSON text); returns the report.");
}
