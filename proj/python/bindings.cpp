#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "esgen/certificates.hpp"
#include "esgen/commands.hpp"
#include "esgen/costs.hpp"
#include "esgen/dithers.hpp"
#include "esgen/dynamics.hpp"
#include "esgen/error.hpp"
#include "esgen/generators.hpp"
#include "esgen/scenario.hpp"

namespace py = pybind11;
using namespace esgen;

namespace {

py::array_t<double> states_array(const std::vector<State>& rows) {
    const std::size_t n = rows.empty() ? 0 : rows[0].size();
    py::array_t<double> a({rows.size(), n});
    auto m = a.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    return a;
}

py::dict trajectory_dict(const Trajectory& tr) {
    py::dict d;
    d["t"] = py::array_t<double>(tr.times.size(), tr.times.data());
    d["x"] = states_array(tr.states);
    d["J"] = py::array_t<double>(tr.cost_values.size(), tr.cost_values.data());
    d["u"] = states_array(tr.controls);
    return d;
}

Trajectory trajectory_from(const py::dict& d) {
    Trajectory tr;
    tr.times = d["t"].cast<std::vector<double>>();
    tr.states = d["x"].cast<std::vector<State>>();
    tr.cost_values = d["J"].cast<std::vector<double>>();
    return tr;
}

py::tuple result(const CommandResult& r) { return py::make_tuple(r.status, r.report); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Extremum seeking with generating vector fields";

    static py::exception<Error> base(m, "Error");
    static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
    static py::exception<InputError> input(m, "InputError", base.ptr());
    static py::exception<PreconditionError> pre(m, "PreconditionError", base.ptr());
    static py::exception<DomainError> domain(m, "DomainError", base.ptr());
    static py::exception<NumericError> numeric(m, "NumericError", base.ptr());
    static py::exception<ModelError> model(m, "ModelError", base.ptr());
    static py::exception<DivergenceError> divergence(m, "DivergenceError", base.ptr());
    static py::exception<EscapeError> escape(m, "EscapeError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::config: py::set_error(config, e.what()); return;
                case ErrorKind::input: py::set_error(input, e.what()); return;
                case ErrorKind::precondition: py::set_error(pre, e.what()); return;
                case ErrorKind::domain: py::set_error(domain, e.what()); return;
                case ErrorKind::numeric: py::set_error(numeric, e.what()); return;
                case ErrorKind::model: py::set_error(model, e.what()); return;
                case ErrorKind::divergence: py::set_error(divergence, e.what()); return;
                case ErrorKind::escape: py::set_error(escape, e.what()); return;
            }
            py::set_error(base, e.what());
        }
    });

    // costs
    py::class_<CostConstants>(m, "CostConstants")
        .def(py::init<>())
        .def_readwrite("gamma1", &CostConstants::gamma1)
        .def_readwrite("gamma2", &CostConstants::gamma2)
        .def_readwrite("kappa1", &CostConstants::kappa1)
        .def_readwrite("kappa2", &CostConstants::kappa2)
        .def_readwrite("mu", &CostConstants::mu)
        .def_readwrite("m1", &CostConstants::m1);

    py::class_<CostProfile>(m, "CostProfile")
        .def_property_readonly("dim", &CostProfile::dim)
        .def_property_readonly("name", &CostProfile::name)
        .def_property_readonly("min_value", &CostProfile::min_value)
        .def_property_readonly("minimizer", &CostProfile::minimizer)
        .def("__call__", [](const CostProfile& c, const State& x) { return c.value(x); })
        .def("value", [](const CostProfile& c, const State& x) { return c.value(x); })
        .def("gradient", [](const CostProfile& c, const State& x) { return c.gradient(x); })
        .def("fd_gradient", [](const CostProfile& c, const State& x) { return c.fd_gradient(x); })
        .def("hessian_norm", [](const CostProfile& c, const State& x) { return c.hessian_norm(x); });

    m.def("builtin_cost", [](const std::string& name, const std::vector<double>& p) { return builtin_cost(name, p); },
          py::arg("name"), py::arg("params") = std::vector<double>{});
    m.def("expression_cost",
          [](const std::string& e, std::size_t dim, std::optional<State> xs, double jmin) {
              return expression_cost(e, dim, std::move(xs), jmin);
          },
          py::arg("expr"), py::arg("dim") = 1, py::arg("minimizer") = py::none(), py::arg("min_value") = 0.0);
    m.def("estimate_a2_constants", &estimate_a2_constants, py::arg("cost"), py::arg("radius"), py::arg("grid_points"));
    m.def("verify_a2",
          [](const CostProfile& c, const CostConstants& k, double r, std::size_t n) {
              const auto rep = verify_a2(c, k, r, n);
              py::list v;
              for (const auto& x : rep.violations) v.append(py::make_tuple(x.x, x.inequality, x.slack));
              return v;
          },
          py::arg("cost"), py::arg("constants"), py::arg("radius"), py::arg("grid_points"));

    // generators
    py::class_<Interval>(m, "Interval")
        .def(py::init([](double lo, double hi) { return Interval{lo, hi}; }))
        .def_readwrite("lo", &Interval::lo)
        .def_readwrite("hi", &Interval::hi);

    py::class_<A4Bounds>(m, "A4Bounds")
        .def_readonly("m2", &A4Bounds::m2)
        .def_readonly("m3", &A4Bounds::m3)
        .def_readonly("m4", &A4Bounds::m4)
        .def_readonly("alpha1", &A4Bounds::alpha1)
        .def_readonly("alpha2", &A4Bounds::alpha2)
        .def_readonly("M", &A4Bounds::M)
        .def_readonly("H", &A4Bounds::H);

    py::class_<GeneratorPair>(m, "GeneratorPair")
        .def("F0", &GeneratorPair::F0)
        .def("F1", &GeneratorPair::F1)
        .def("F2", &GeneratorPair::F2)
        .def("dF1", &GeneratorPair::dF1)
        .def("dF2", &GeneratorPair::dF2)
        .def_property_readonly("name", &GeneratorPair::name)
        .def_property_readonly("vanishing_at_min", &GeneratorPair::vanishing_at_min)
        .def_property_readonly("singular_points", &GeneratorPair::singular_points)
        .def_property_readonly("check_range", &GeneratorPair::check_range)
        .def_property_readonly("a4", &GeneratorPair::a4)
        .def("with_gauge_shift", &GeneratorPair::with_gauge_shift)
        .def("with_f2_offset", &GeneratorPair::with_f2_offset);

    m.def("builtin_generator",
          [](const std::string& name, const std::vector<double>& p) { return builtin_generator(name, p); },
          py::arg("name"), py::arg("params") = std::vector<double>{});
    m.def("from_f1_f0",
          [](ScalarFn f1, ScalarFn f0, double z_ref, Interval dom, double gauge) {
              ConstructionOptions opt;
              opt.gauge_shift = gauge;
              return from_f1_f0(std::move(f1), std::nullopt, std::move(f0), z_ref, dom, opt);
          },
          py::arg("f1"), py::arg("f0"), py::arg("z_ref"), py::arg("domain"), py::arg("gauge_shift") = 0.0);
    m.def("verify_pfaffian",
          [](const GeneratorPair& g, std::optional<std::vector<double>> grid, std::optional<double> tol) {
              const auto rep = grid ? verify_pfaffian(g, *grid, tol.value_or(1e-10)) : verify_pfaffian(g);
              py::dict d;
              d["max_residual"] = rep.max_residual;
              d["worst_z"] = rep.worst_z;
              d["tol"] = rep.tol;
              d["passed"] = rep.passed();
              return d;
          },
          py::arg("pair"), py::arg("z_grid") = py::none(), py::arg("tol") = py::none());

    // dithers
    py::class_<DitherPair>(m, "DitherPair")
        .def(py::init<int, double>(), py::arg("k") = 1, py::arg("eps") = 0.1)
        .def_readonly("k", &DitherPair::k)
        .def_readonly("eps", &DitherPair::eps)
        .def("__call__", &DitherPair::operator());
    m.def("eval_dither", &eval_dither);
    m.def("beta",
          [](const std::vector<DitherPair>& ds, std::size_t steps) {
              const auto b = beta(std::span<const DitherPair>(ds), steps);
              std::vector<std::vector<double>> out(b.channels(), std::vector<double>(b.channels()));
              for (std::size_t i = 0; i < b.channels(); ++i)
                  for (std::size_t j = 0; j < b.channels(); ++j) out[i][j] = b(i, j);
              return out;
          },
          py::arg("dithers"), py::arg("quad_steps") = kDefaultQuadSteps);
    m.def("nu", [](const std::vector<DitherPair>& ds) { return nu(ds); });

    // dynamics
    py::class_<EsSystem>(m, "EsSystem")
        .def(py::init([](CostProfile c, const std::vector<std::pair<GeneratorPair, DitherPair>>& axes) {
                 std::vector<Axis> ax;
                 for (const auto& [g, d] : axes) ax.push_back({g, d});
                 return EsSystem(std::move(c), std::move(ax));
             }),
             py::arg("cost"), py::arg("axes"))
        .def_property_readonly("eps", &EsSystem::eps)
        .def_property_readonly("dim", &EsSystem::dim)
        .def_property_readonly("default_step", &EsSystem::default_step)
        .def("es_field", [](const EsSystem& s, double t, const State& x) { return es_field(s, t, x); })
        .def("lie_field", [](const EsSystem& s, const State& x) { return lie_field(s, x); })
        .def("simulate",
             [](const EsSystem& s, const State& x0, double t_end, std::optional<double> h, std::size_t stride) {
                 return trajectory_dict(simulate_es(s, x0, t_end, h, stride));
             },
             py::arg("x0"), py::arg("t_end"), py::arg("h") = py::none(), py::arg("stride") = 1)
        .def("simulate_averaged",
             [](const EsSystem& s, const State& x0, double t_end, double h, std::size_t stride) {
                 return trajectory_dict(simulate_lie(s, x0, t_end, h, stride));
             },
             py::arg("x0"), py::arg("t_end"), py::arg("h"), py::arg("stride") = 1);

    m.def("integrate",
          [](const std::function<State(double, State)>& f, const State& x0, double t_end, double h,
             std::size_t stride) {
              TimeField tf = [&f](double t, std::span<const double> x) { return f(t, State(x.begin(), x.end())); };
              const auto tr = integrate(tf, x0, t_end, h, stride);
              py::dict d;
              d["t"] = py::array_t<double>(tr.times.size(), tr.times.data());
              d["x"] = states_array(tr.states);
              return d;
          },
          py::arg("field"), py::arg("x0"), py::arg("t_end"), py::arg("h"), py::arg("stride") = 1);

    // certificates
    m.def("phi", &phi, py::arg("m_tilde"), py::arg("J0"), py::arg("m1"), py::arg("s"));
    m.def("lemma3_bound", &lemma3_bound, py::arg("M_tilde"), py::arg("L"), py::arg("m"), py::arg("nu"), py::arg("t"),
          py::arg("x0_dist"));
    m.def("lemma4_remainder_bound", &lemma4_remainder_bound, py::arg("H_tilde"), py::arg("varpi"),
          py::arg("M_tilde"), py::arg("L"), py::arg("m"), py::arg("nu"), py::arg("t"), py::arg("x0_dist"));
    m.def("lemma5_descent",
          [](double J0, double eps, double a1, double a2, double k1, double k2, double mu, double m1, double r,
             double mt) { return lemma5_descent(J0, eps, {a1, a2, k1, k2, mu, m1, r}, mt); },
          py::arg("J0"), py::arg("eps"), py::arg("alpha1"), py::arg("alpha2"), py::arg("kappa1"), py::arg("kappa2"),
          py::arg("mu"), py::arg("m1"), py::arg("remainder_ratio"), py::arg("m_tilde"));
    m.def("check_descent",
          [](const py::dict& tr, double eps, double lambda, double m1, double mt, double js) {
              return check_descent(trajectory_from(tr), eps, lambda, m1, mt, js).violations.size();
          },
          py::arg("trajectory"), py::arg("eps"), py::arg("lambda_"), py::arg("m1"), py::arg("m_tilde"),
          py::arg("J_star") = 0.0);

    // scenarios and commands
    m.def("verify", [](const std::string& p) { return result(cmd_verify(load_scenario(p))); }, py::arg("scenario"));
    m.def("simulate",
          [](const std::string& p, std::optional<std::filesystem::path> out) {
              return result(cmd_simulate(load_scenario(p), out));
          },
          py::arg("scenario"), py::arg("out") = py::none());
    m.def("run_scenario", [](const std::string& p) { return trajectory_dict(run_scenario(load_scenario(p))); },
          py::arg("scenario"));
    m.def("certify",
          [](const std::string& p, bool simulate) {
              const auto res = certify(load_scenario(p), simulate);
              py::dict d;
              std::istringstream kv(res.certificate.to_key_values());
              std::string line;
              while (std::getline(kv, line)) {
                  const auto eq = line.find('=');
                  const auto key = line.substr(0, eq), val = line.substr(eq + 1);
                  try {
                      d[py::str(key)] = std::stod(val);
                  } catch (const std::exception&) {
                      d[py::str(key)] = val;
                  }
              }
              if (res.descent) d["descent_passed"] = res.descent->passed();
              if (res.envelope) d["envelope_passed"] = res.envelope->passed();
              return d;
          },
          py::arg("scenario"), py::arg("simulate") = true);
    m.def("compare", [](const std::string& a, const std::string& b, double tol) { return result(cmd_compare(a, b, tol)); },
          py::arg("a"), py::arg("b"), py::arg("tolerance") = 0.0);
}
