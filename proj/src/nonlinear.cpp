#include "kscontrol/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ks {

namespace {

CoefficientSet coefficients_from(const SpaceTimeField& eta, const TrajectoryResult& traj,
                                 const Mesh1D& mesh, Actuation act) {
  CoefficientSet c;
  c.actuation = act;
  c.a = SpaceTimeField(mesh);
  c.b = SpaceTimeField(mesh);
  c.B = traj.u_bar;
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i) {
      c.a[n][i] = eta[n][i] + traj.v_bar[n][i];
      c.b[n][i] = eta[n][i] + 2.0 * traj.v_bar[n][i];
    }
  return c;
}

double rel_change(const SpaceTimeField& next, const SpaceTimeField& prev, const Mesh1D& mesh) {
  double num = 0.0, den = 0.0;
  for (int n = 0; n <= mesh.nt; ++n) {
    Field d(mesh.nx);
    for (int i = 0; i < mesh.nx; ++i) d[i] = next[n][i] - prev[n][i];
    const double wq = (n == 0 || n == mesh.nt) ? 0.5 : 1.0;
    num += wq * inner(d, d, mesh);
    den += wq * inner(next[n], next[n], mesh);
  }
  num = std::sqrt(num * mesh.dt);
  den = std::sqrt(den * mesh.dt);
  return den > 0.0 ? num / den : num;
}

}  // namespace

NonlinearControlResult fixed_point_control(const Field& y0, const Field& z0,
                                           const TrajectoryResult& traj,
                                           const FixedPointConfig& cfg, const WeightSet& weights,
                                           const CutoffProfile& cutoff, const Mesh1D& mesh) {
  if (!(cfg.damping > 0.0 && cfg.damping <= 1.0))
    throw ParameterError("fixed_point_control: damping must lie in (0, 1]");
  if (!(cfg.rel_tol > 0.0)) throw ParameterError("fixed_point_control: rel_tol must be > 0");
  check_on_mesh(y0, mesh, "fixed_point y0");
  check_on_mesh(z0, mesh, "fixed_point z0");

  const double data_norm =
      std::sqrt(inner(y0, y0, mesh) + inner(z0, z0, mesh));
  if (data_norm > cfg.smallness_bound) {
    std::ostringstream os;
    os << "fixed_point_control: |(y0, z0)| = " << data_norm << " exceeds the smallness bound "
       << cfg.smallness_bound;
    throw DomainError(os.str());
  }
  double ubar_min = traj.u_bar[0][0];
  for (const Field& s : traj.u_bar.snaps) ubar_min = std::min(ubar_min, *std::min_element(s.begin(), s.end()));
  if (!(ubar_min > 0.0))
    throw HypothesisError("fixed_point_control: the trajectory u_bar must stay positive (B = u_bar)");

  NonlinearControlResult res;
  SpaceTimeField eta(mesh);
  ControlSolution inner_sol;
  double scale = cfg.weight_scale;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const CoefficientSet coeffs = coefficients_from(eta, traj, mesh, cfg.actuation);
    StepOperators ops(coeffs, cutoff, mesh);
    if (scale <= 0.0) scale = auto_weight_scale(ops, weights, y0, z0);

    PenalizedProblem prob;
    prob.eps = cfg.eps;
    prob.weights = &weights;
    prob.ops = &ops;
    prob.y0 = y0;
    prob.z0 = z0;
    prob.weight_scale = scale;
    inner_sol = solve_penalized(prob, cfg.cg_tol, cfg.cg_max_iter);

    const StatePair st = ops.forward(y0, z0, &inner_sol.h);
    SpaceTimeField eta_next(mesh);
    for (int n = 0; n <= mesh.nt; ++n)
      for (int i = 0; i < mesh.nx; ++i) {
        double v = (1.0 - cfg.damping) * eta[n][i] + cfg.damping * st.z[n][i];
        if (v > 1.0) {
          v = 1.0;
          ++res.projections;
        } else if (v < -1.0) {
          v = -1.0;
          ++res.projections;
        }
        eta_next[n][i] = v;
      }
    const double rc = rel_change(eta_next, eta, mesh);
    res.history.push_back(rc);
    res.inner_terminal_history.push_back(inner_sol.terminal_norm);
    res.iterates = it;
    eta = std::move(eta_next);
    if (rc < cfg.rel_tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged) {
    std::ostringstream os;
    os << "fixed_point_control: no convergence within " << cfg.max_iters
       << " iterations; relative-change history:";
    for (double v : res.history) os << " " << v;
    throw ConvergenceError(os.str());
  }

  res.h = inner_sol.h;
  res.inner_terminal_norm = inner_sol.terminal_norm;
  res.weight_scale = scale;
  res.last_cg_iterations = inner_sol.cg_iterations;

  const ClosedLoopReport rep =
      closed_loop_verify(res.h, y0, z0, traj, cutoff, mesh, cfg.actuation);
  res.closed_loop_terminal_norm = rep.terminal_norm;
  res.min_u = rep.min_u;
  res.nonneg_ok = rep.nonneg_ok;
  return res;
}

ClosedLoopReport closed_loop_verify(const SpaceTimeField& h, const Field& y0, const Field& z0,
                                    const TrajectoryResult& traj, const CutoffProfile& cutoff,
                                    const Mesh1D& mesh, Actuation actuation, double nonneg_tol) {
  check_on_mesh(h, mesh, "closed_loop h");
  // linear part frozen at the trajectory (eta = 0); quadratic terms lagged
  SpaceTimeField zero_eta(mesh);
  const CoefficientSet coeffs = coefficients_from(zero_eta, traj, mesh, actuation);
  StepOperators ops(coeffs, cutoff, mesh);

  auto lagged = [&mesh](int /*n*/, const Field& yp, const Field& zp, Field& sy, Field& sz) {
    Field yz(mesh.nx), zz(mesh.nx);
    for (int i = 0; i < mesh.nx; ++i) {
      yz[i] = yp[i] * zp[i];
      zz[i] = zp[i] * zp[i];
    }
    const Field d_yz = gradient(yz, mesh);
    const Field d_zz = gradient(zz, mesh);
    for (int i = 0; i < mesh.nx; ++i) {
      sy[i] = -d_yz[i];
      sz[i] = d_zz[i];
    }
  };
  const StatePair st = ops.forward_with_sources(y0, z0, &h, lagged);

  ClosedLoopReport rep;
  const int nt = mesh.nt;
  rep.terminal_norm = std::sqrt(inner(st.y[nt], st.y[nt], mesh) +
                                inner(st.z[nt], st.z[nt], mesh));
  double mu = st.y[0][0] + traj.u_bar[0][0];
  for (int n = 0; n <= nt; ++n)
    for (int i = 0; i < mesh.nx; ++i)
      mu = std::min(mu, st.y[n][i] + traj.u_bar[n][i]);
  rep.min_u = mu;
  rep.nonneg_ok = mu >= -nonneg_tol;
  return rep;
}

}  // namespace ks
