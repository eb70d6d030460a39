// Python bindings exposing the main operations on numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kscontrol/audit.hpp"
#include "kscontrol/cole_hopf.hpp"
#include "kscontrol/hum.hpp"
#include "kscontrol/linear_pde.hpp"
#include "kscontrol/mesh.hpp"
#include "kscontrol/nonlinear.hpp"
#include "kscontrol/trajectory.hpp"
#include "kscontrol/weights.hpp"

namespace py = pybind11;
using namespace ks;

namespace {

Field to_field(const py::array_t<double>& a, const Mesh1D& m) {
  if (a.ndim() != 1 || a.shape(0) != m.nx)
    throw DimensionError("expected a 1-d array with nx entries");
  Field f(m.nx);
  auto r = a.unchecked<1>();
  for (int i = 0; i < m.nx; ++i) f[i] = r(i);
  return f;
}

py::array_t<double> from_field(const Field& f) {
  py::array_t<double> a(static_cast<py::ssize_t>(f.size()));
  auto w = a.mutable_unchecked<1>();
  for (size_t i = 0; i < f.size(); ++i) w(i) = f[i];
  return a;
}

SpaceTimeField to_stf(const py::array_t<double>& a, const Mesh1D& m) {
  if (a.ndim() != 2 || a.shape(0) != m.nt + 1 || a.shape(1) != m.nx)
    throw DimensionError("expected a (nt+1, nx) array");
  SpaceTimeField f(m);
  auto r = a.unchecked<2>();
  for (int n = 0; n <= m.nt; ++n)
    for (int i = 0; i < m.nx; ++i) f[n][i] = r(n, i);
  return f;
}

py::array_t<double> from_stf(const SpaceTimeField& f) {
  const py::ssize_t nt1 = static_cast<py::ssize_t>(f.snaps.size());
  const py::ssize_t nx = static_cast<py::ssize_t>(f.snaps.empty() ? 0 : f[0].size());
  py::array_t<double> a({nt1, nx});
  auto w = a.mutable_unchecked<2>();
  for (py::ssize_t n = 0; n < nt1; ++n)
    for (py::ssize_t i = 0; i < nx; ++i) w(n, i) = f[static_cast<int>(n)][static_cast<size_t>(i)];
  return a;
}

Actuation parse_act(const std::string& s) {
  if (s == "chemical") return Actuation::chemical;
  if (s == "density") return Actuation::density;
  throw ParameterError("actuation must be 'chemical' or 'density'");
}

}  // namespace

PYBIND11_MODULE(_kscontrol, mod) {
  mod.doc() = "1D chemotaxis null-control toolkit";

  py::register_exception<Error>(mod, "KsError");

  py::class_<Mesh1D>(mod, "Mesh1D")
      .def(py::init<int, int, double, double>(), py::arg("nx"), py::arg("nt"),
           py::arg("length"), py::arg("horizon"))
      .def_readonly("nx", &Mesh1D::nx)
      .def_readonly("nt", &Mesh1D::nt)
      .def_readonly("length", &Mesh1D::length)
      .def_readonly("horizon", &Mesh1D::horizon)
      .def_readonly("dx", &Mesh1D::dx)
      .def_readonly("dt", &Mesh1D::dt)
      .def("x", &Mesh1D::x)
      .def("t", &Mesh1D::t);

  mod.def("laplacian", [](py::array_t<double> f, const Mesh1D& m, double left, double right) {
    return from_field(laplacian(to_field(f, m), m, {left, right}));
  }, py::arg("f"), py::arg("mesh"), py::arg("left") = 0.0, py::arg("right") = 0.0);
  mod.def("gradient", [](py::array_t<double> f, const Mesh1D& m) {
    return from_field(gradient(to_field(f, m), m));
  });
  mod.def("norm", [](py::array_t<double> f, const Mesh1D& m, const std::string& kind) {
    if (kind == "L2_space") return norm(to_field(f, m), m, NormKind::L2Space);
    if (kind == "H1_space") return norm(to_field(f, m), m, NormKind::H1Space);
    if (kind == "L2_spacetime") return norm(to_stf(f, m), m, NormKind::L2SpaceTime);
    throw ParameterError("kind must be L2_space | H1_space | L2_spacetime");
  });
  mod.def("sine_field", [](const Mesh1D& m, double amp, int mode) {
    return from_field(sine_field(m, amp, mode));
  });

  py::class_<Interval>(mod, "Interval")
      .def(py::init<double, double>())
      .def_readonly("lo", &Interval::lo)
      .def_readonly("hi", &Interval::hi);

  py::class_<RhoProfile>(mod, "RhoProfile")
      .def_readonly("p", &RhoProfile::p)
      .def_readonly("q", &RhoProfile::q)
      .def_readonly("critical_point", &RhoProfile::critical_point)
      .def_readonly("grad_lower_bound", &RhoProfile::grad_lower_bound)
      .def("value", &RhoProfile::value)
      .def("deriv", &RhoProfile::deriv);
  mod.def("build_rho", [](const Mesh1D& m, double lo, double hi, int max_exp) {
    return build_rho(m, {lo, hi}, max_exp);
  }, py::arg("mesh"), py::arg("lo"), py::arg("hi"), py::arg("max_exponent") = 4);

  py::class_<CutoffProfile>(mod, "CutoffProfile")
      .def_property_readonly("values",
                             [](const CutoffProfile& c) { return from_field(c.values); });
  mod.def("build_cutoff", [](const Mesh1D& m, double olo, double ohi, double ilo, double ihi) {
    return build_cutoff(m, {olo, ohi}, {ilo, ihi});
  });

  py::class_<WeightSet>(mod, "WeightSet")
      .def_readonly("s", &WeightSet::s)
      .def_readonly("lambda_", &WeightSet::lambda)
      .def_readonly("m", &WeightSet::m)
      .def_readonly("k", &WeightSet::k)
      .def_readonly("max_log_W", &WeightSet::max_log_W)
      .def_readonly("underflow_count", &WeightSet::underflow_count)
      .def("at", [](const WeightSet& w, const std::string& which, int i, int n) {
        WeightKind kind;
        if (which == "phi") kind = WeightKind::phi;
        else if (which == "xi") kind = WeightKind::xi;
        else if (which == "theta") kind = WeightKind::theta;
        else if (which == "phi_star") kind = WeightKind::phi_star;
        else if (which == "xi_star") kind = WeightKind::xi_star;
        else if (which == "control_W") kind = WeightKind::control_W;
        else if (which == "obs_V") kind = WeightKind::obs_V;
        else throw ParameterError("unknown weight kind '" + which + "'");
        return w.at(kind, i, n);
      });
  mod.def("build_weight_set", &build_weight_set, py::arg("mesh"), py::arg("rho"), py::arg("s"),
          py::arg("lambda_"), py::arg("m") = 4, py::arg("k") = 5.0);
  mod.def("sweep_weight_params", [](const Mesh1D& m, const RhoProfile& rho, int mm, double k) {
    const SweepChoice c = sweep_weight_params(m, rho, mm, k);
    return py::make_tuple(c.lambda, c.s);
  }, py::arg("mesh"), py::arg("rho"), py::arg("m") = 4, py::arg("k") = 5.0);

  mod.def("solve_free_trajectory",
          [](const Mesh1D& m, double p_bar, py::array_t<double> w0, py::array_t<double> v0,
             double smallness) {
            TrajectoryParams p;
            p.p_bar = p_bar;
            p.initial_w = to_field(w0, m);
            p.initial_v = to_field(v0, m);
            p.smallness = smallness;
            const TrajectoryResult r = solve_free_trajectory(p, m);
            py::dict d;
            d["u_bar"] = from_stf(r.u_bar);
            d["v_bar"] = from_stf(r.v_bar);
            d["energy"] = r.energy;
            d["min_u_minus_pbar"] = r.min_u_minus_pbar;
            d["min_v"] = r.min_v;
            d["smallness_ok"] = r.smallness_ok;
            return d;
          },
          py::arg("mesh"), py::arg("p_bar"), py::arg("w0"), py::arg("v0"),
          py::arg("smallness") = 1e-2);

  py::class_<StepOperators>(mod, "StepOperators")
      .def(py::init([](const Mesh1D& m, py::array_t<double> a, py::array_t<double> b,
                       py::array_t<double> B, const CutoffProfile& cutoff,
                       const std::string& actuation) {
             CoefficientSet c;
             c.a = to_stf(a, m);
             c.b = to_stf(b, m);
             c.B = to_stf(B, m);
             c.actuation = parse_act(actuation);
             return new StepOperators(c, cutoff, m);
           }),
           py::arg("mesh"), py::arg("a"), py::arg("b"), py::arg("B"), py::arg("cutoff"),
           py::arg("actuation") = "chemical")
      .def("forward",
           [](const StepOperators& ops, py::array_t<double> y0, py::array_t<double> z0,
              py::object h) {
             const Mesh1D& m = ops.mesh();
             StatePair st;
             if (h.is_none()) {
               st = ops.forward(to_field(y0, m), to_field(z0, m));
             } else {
               SpaceTimeField hf = to_stf(h.cast<py::array_t<double>>(), m);
               st = ops.forward(to_field(y0, m), to_field(z0, m), &hf);
             }
             return py::make_tuple(from_stf(st.y), from_stf(st.z));
           },
           py::arg("y0"), py::arg("z0"), py::arg("h") = py::none())
      .def("adjoint", [](const StepOperators& ops, py::array_t<double> fT, py::array_t<double> gT) {
        const Mesh1D& m = ops.mesh();
        AdjointPair ad = ops.adjoint(to_field(fT, m), to_field(gT, m));
        return py::make_tuple(from_stf(ad.phi), from_stf(ad.psi));
      });
  mod.def("steady_operators",
          [](const Mesh1D& m, double a, double b, double B, const CutoffProfile& cutoff,
             const std::string& actuation) {
            return new StepOperators(steady_coefficients(m, a, b, B, parse_act(actuation)),
                                     cutoff, m);
          },
          py::arg("mesh"), py::arg("a"), py::arg("b"), py::arg("B"), py::arg("cutoff"),
          py::arg("actuation") = "chemical");
  mod.def("duality_gap",
          [](const StepOperators& ops, py::array_t<double> y0, py::array_t<double> z0,
             py::array_t<double> h, py::array_t<double> fT, py::array_t<double> gT) {
            const Mesh1D& m = ops.mesh();
            return duality_gap(ops, to_field(y0, m), to_field(z0, m), to_stf(h, m),
                               to_field(fT, m), to_field(gT, m));
          });

  mod.def("auto_weight_scale",
          [](const StepOperators& ops, const WeightSet& w, py::array_t<double> y0,
             py::array_t<double> z0) {
            const Mesh1D& m = ops.mesh();
            return auto_weight_scale(ops, w, to_field(y0, m), to_field(z0, m));
          });
  mod.def("solve_penalized",
          [](const StepOperators& ops, const WeightSet& w, double eps, py::array_t<double> y0,
             py::array_t<double> z0, double weight_scale, double cg_tol, int max_iter) {
            const Mesh1D& m = ops.mesh();
            PenalizedProblem prob;
            prob.eps = eps;
            prob.weights = &w;
            prob.ops = &ops;
            prob.y0 = to_field(y0, m);
            prob.z0 = to_field(z0, m);
            prob.weight_scale = weight_scale;
            const ControlSolution sol = solve_penalized(prob, cg_tol, max_iter);
            py::dict d;
            d["h"] = from_stf(sol.h);
            d["terminal_norm"] = sol.terminal_norm;
            d["control_energy"] = sol.control_energy;
            d["penalty_term"] = sol.penalty_term;
            d["cost_ratio"] = sol.cost_ratio;
            d["cg_iterations"] = sol.cg_iterations;
            d["cg_residual"] = sol.cg_residual;
            d["weight_scale"] = sol.weight_scale;
            d["initial_norm"] = sol.initial_norm;
            return d;
          },
          py::arg("ops"), py::arg("weights"), py::arg("eps"), py::arg("y0"), py::arg("z0"),
          py::arg("weight_scale") = 0.0, py::arg("cg_tol") = 1e-10, py::arg("max_iter") = 500);

  mod.def("fixed_point_control",
          [](const Mesh1D& m, py::array_t<double> y0, py::array_t<double> z0, double p_bar,
             const WeightSet& w, const CutoffProfile& cutoff, double damping, int max_iters,
             double rel_tol, double eps) {
            TrajectoryParams tp;
            tp.p_bar = p_bar;
            tp.initial_w = Field(m.nx, 0.0);
            tp.initial_v = Field(m.nx, 0.0);
            const TrajectoryResult traj = solve_free_trajectory(tp, m);
            FixedPointConfig cfg;
            cfg.damping = damping;
            cfg.max_iters = max_iters;
            cfg.rel_tol = rel_tol;
            cfg.eps = eps;
            const NonlinearControlResult r =
                fixed_point_control(to_field(y0, m), to_field(z0, m), traj, cfg, w, cutoff, m);
            py::dict d;
            d["h"] = from_stf(r.h);
            d["iterates"] = r.iterates;
            d["history"] = r.history;
            d["closed_loop_terminal_norm"] = r.closed_loop_terminal_norm;
            d["inner_terminal_norm"] = r.inner_terminal_norm;
            d["min_u"] = r.min_u;
            d["nonneg_ok"] = r.nonneg_ok;
            return d;
          },
          py::arg("mesh"), py::arg("y0"), py::arg("z0"), py::arg("p_bar"), py::arg("weights"),
          py::arg("cutoff"), py::arg("damping") = 1.0, py::arg("max_iters") = 20,
          py::arg("rel_tol") = 1e-6, py::arg("eps") = 1e-8);

  mod.def("chemical_to_gradient", [](py::array_t<double> c0, const Mesh1D& m) {
    return from_field(chemical_to_gradient(to_field(c0, m), m));
  });
  mod.def("reconstruct_chemical",
          [](py::array_t<double> u, py::array_t<double> v, py::array_t<double> c0,
             const Mesh1D& m) {
            const ChemicalField c = reconstruct_chemical(to_stf(u, m), to_stf(v, m),
                                                         to_field(c0, m), m);
            py::dict d;
            d["c"] = from_stf(c.c);
            d["strictly_positive"] = c.strictly_positive;
            d["overflow_clamps"] = c.overflow_clamps;
            return d;
          });
  mod.def("physical_scaling",
          [](const Mesh1D& m, py::array_t<double> u, py::array_t<double> v, double D,
             double chi, double mu, const std::string& direction) {
            PhysicalParams pp{D, chi, mu};
            const ScalingDirection dir = direction == "to_physical"
                                             ? ScalingDirection::to_physical
                                             : ScalingDirection::to_normalized;
            const ScaledSystem s = physical_scaling(pp, dir, m, to_stf(u, m), to_stf(v, m));
            py::dict d;
            d["length"] = s.mesh.length;
            d["horizon"] = s.mesh.horizon;
            d["u"] = from_stf(s.u);
            d["v"] = from_stf(s.v);
            return d;
          },
          py::arg("mesh"), py::arg("u"), py::arg("v"), py::arg("D") = 1.0, py::arg("chi") = 1.0,
          py::arg("mu") = 1.0, py::arg("direction") = "to_normalized");

  auto report_dict = [](const AuditReport& rep) {
    py::dict d;
    d["samples"] = rep.samples;
    d["max_ratio"] = rep.max_ratio;
    d["median_ratio"] = rep.median_ratio;
    d["max_log10_ratio"] = rep.max_log10_ratio;
    d["median_log10_ratio"] = rep.median_log10_ratio;
    d["counterexample_evidence"] = rep.counterexample_evidence;
    d["verdict"] = rep.verdict;
    d["constancy_deviation"] = rep.constancy_deviation;
    return d;
  };
  mod.def("observability_ratio",
          [report_dict](int samples, const WeightSet& w, const StepOperators& ops, double olo,
                        double ohi, uint64_t seed) {
            return report_dict(
                observability_ratio(samples, w, ops, {olo, ohi}, ops.mesh(), seed));
          });
  mod.def("carleman_ratio",
          [report_dict](int samples, const WeightSet& w, const StepOperators& ops, double olo,
                        double ohi, uint64_t seed) {
            return report_dict(carleman_ratio(samples, w, ops, {olo, ohi}, ops.mesh(), seed));
          });
  mod.def("neumann_counterexample",
          [report_dict](const Mesh1D& m, const WeightSet& w, double a, double b, double B,
                        double olo, double ohi) {
            const AuditReport rep = neumann_counterexample(
                m, w, steady_coefficients(m, a, b, B), {olo, ohi});
            py::dict d = report_dict(rep);
            d["lhs"] = rep.rows[0].lhs;
            d["rhs"] = rep.rows[0].rhs;
            return d;
          },
          py::arg("mesh"), py::arg("weights"), py::arg("a") = 0.0, py::arg("b") = 0.0,
          py::arg("B") = 1.0, py::arg("omega_lo") = 0.3, py::arg("omega_hi") = 0.7);
}
