#include "kscontrol/hum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ks {

namespace {

// Realized normalized weight exp(log W - max log W) at time node n; zero at
// the endpoints and wherever the shifted log underflows.
struct NormalizedWeight {
  const WeightSet* w;
  double scale;
  double value(int n, int i) const {
    if (n == 0 || n == w->nt) return 0.0;
    const double lw = w->logW(n, i) - w->max_log_W;
    return lw < -745.0 ? 0.0 : scale * std::exp(lw);
  }
};

struct GramianContext {
  const StepOperators* ops;
  const Mesh1D* mesh;
  NormalizedWeight what;
  Field zero;

  // adjoint from q, control kernel sampled duality-consistently at level n-1
  SpaceTimeField control_from(const AdjointPair& ad) const {
    const SpaceTimeField& co =
        ops->actuation() == Actuation::chemical ? ad.psi : ad.phi;
    SpaceTimeField h(*mesh);
    const Field& rt = ops->cutoff().values;
    for (int n = 1; n <= mesh->nt; ++n)
      for (int i = 1; i < mesh->nx - 1; ++i)
        h[n][i] = rt[i] * what.value(n, i) * co[n - 1][i];
    return h;
  }

  // terminal of the forward run from zero data driven by h(q)
  TerminalPair apply_A(const TerminalPair& q, SpaceTimeField* h_out = nullptr,
                       double* energy = nullptr) const {
    const AdjointPair ad = ops->adjoint(q.phi_T, q.psi_T);
    SpaceTimeField h = control_from(ad);
    if (energy) {
      const SpaceTimeField& co =
          ops->actuation() == Actuation::chemical ? ad.psi : ad.phi;
      const Field& rt = ops->cutoff().values;
      double e = 0.0;
      for (int n = 1; n < mesh->nt; ++n)
        for (int i = 1; i < mesh->nx - 1; ++i) {
          const double c = co[n - 1][i];
          e += rt[i] * rt[i] * what.value(n, i) * c * c;
        }
      *energy = e * mesh->dt * mesh->dx;
    }
    const StatePair st = ops->forward(zero, zero, &h);
    if (h_out) *h_out = std::move(h);
    return {st.y[mesh->nt], st.z[mesh->nt]};
  }
};

double pair_dot(const TerminalPair& a, const TerminalPair& b, const Mesh1D& mesh) {
  return inner(a.phi_T, b.phi_T, mesh) + inner(a.psi_T, b.psi_T, mesh);
}

void axpy(TerminalPair& y, double alpha, const TerminalPair& x) {
  for (size_t i = 0; i < y.phi_T.size(); ++i) {
    y.phi_T[i] += alpha * x.phi_T[i];
    y.psi_T[i] += alpha * x.psi_T[i];
  }
}

GramianContext make_context(const PenalizedProblem& p, double scale) {
  if (!p.ops || !p.weights) throw ParameterError("PenalizedProblem: ops and weights required");
  if (!(p.eps > 0.0)) throw ParameterError("PenalizedProblem: eps must be > 0");
  GramianContext ctx;
  ctx.ops = p.ops;
  ctx.mesh = &p.ops->mesh();
  ctx.what = NormalizedWeight{p.weights, scale};
  ctx.zero.assign(ctx.mesh->nx, 0.0);
  return ctx;
}

}  // namespace

double auto_weight_scale(const StepOperators& ops, const WeightSet& weights, const Field& y0,
                         const Field& z0) {
  const Mesh1D& mesh = ops.mesh();
  PenalizedProblem p;
  p.ops = &ops;
  p.weights = &weights;
  p.eps = 1.0;
  GramianContext ctx = make_context(p, 1.0);
  const StatePair free_run = ops.forward(y0, z0);
  TerminalPair f{free_run.y[mesh.nt], free_run.z[mesh.nt]};
  const double nf = std::sqrt(pair_dot(f, f, mesh));
  if (!(nf > 0.0)) return 1.0;
  for (double& v : f.phi_T) v /= nf;
  for (double& v : f.psi_T) v /= nf;
  const TerminalPair Af = ctx.apply_A(f);
  const double rayleigh = pair_dot(Af, f, mesh);
  if (!(rayleigh > 0.0)) return 1.0;
  return 10.0 / rayleigh;
}

TerminalPair gramian_apply(const TerminalPair& q, const PenalizedProblem& problem) {
  const double scale = problem.weight_scale > 0.0
                           ? problem.weight_scale
                           : auto_weight_scale(*problem.ops, *problem.weights, problem.y0,
                                               problem.z0);
  GramianContext ctx = make_context(problem, scale);
  TerminalPair out = ctx.apply_A(q);
  axpy(out, problem.eps, q);
  return out;
}

ControlSolution solve_penalized(const PenalizedProblem& problem, double cg_tol, int max_iter) {
  const Mesh1D& mesh = problem.ops->mesh();
  const double scale = problem.weight_scale > 0.0
                           ? problem.weight_scale
                           : auto_weight_scale(*problem.ops, *problem.weights, problem.y0,
                                               problem.z0);
  GramianContext ctx = make_context(problem, scale);

  ControlSolution sol;
  sol.weight_scale = scale;
  sol.initial_norm = std::sqrt(inner(problem.y0, problem.y0, mesh) +
                               inner(problem.z0, problem.z0, mesh));

  const StatePair free_run = problem.ops->forward(problem.y0, problem.z0);
  TerminalPair f{free_run.y[mesh.nt], free_run.z[mesh.nt]};
  const double nb = std::sqrt(pair_dot(f, f, mesh));

  TerminalPair q{Field(mesh.nx, 0.0), Field(mesh.nx, 0.0)};
  if (nb == 0.0) {
    // zero data: h = 0, q* = 0
    sol.h = SpaceTimeField(mesh);
    sol.q_phi = q.phi_T;
    sol.q_psi = q.psi_T;
    return sol;
  }

  // CG on (A + eps I) q = -f
  TerminalPair r = f;
  for (double& v : r.phi_T) v = -v;
  for (double& v : r.psi_T) v = -v;
  TerminalPair p = r;
  double rr = pair_dot(r, r, mesh);
  sol.residual_history.push_back(std::sqrt(rr) / nb);
  int it = 0;
  while (it < max_iter && std::sqrt(rr) > cg_tol * nb) {
    TerminalPair Gp = ctx.apply_A(p);
    axpy(Gp, problem.eps, p);
    const double alpha = rr / pair_dot(p, Gp, mesh);
    axpy(q, alpha, p);
    axpy(r, -alpha, Gp);
    const double rr_new = pair_dot(r, r, mesh);
    ++it;
    sol.residual_history.push_back(std::sqrt(rr_new) / nb);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (size_t i = 0; i < p.phi_T.size(); ++i) {
      p.phi_T[i] = r.phi_T[i] + beta * p.phi_T[i];
      p.psi_T[i] = r.psi_T[i] + beta * p.psi_T[i];
    }
  }
  sol.cg_iterations = it;
  sol.cg_residual = std::sqrt(rr) / nb;
  if (sol.cg_residual > cg_tol) {
    std::ostringstream os;
    os << "solve_penalized: CG stalled at relative residual " << sol.cg_residual << " after "
       << it << " iterations (tol " << cg_tol << ")";
    throw ConvergenceError(os.str());
  }

  // extract the control from q*, then re-run the controlled forward solve
  const AdjointPair ad = problem.ops->adjoint(q.phi_T, q.psi_T);
  sol.h = ctx.control_from(ad);
  {
    const SpaceTimeField& co =
        problem.ops->actuation() == Actuation::chemical ? ad.psi : ad.phi;
    const Field& rt = problem.ops->cutoff().values;
    double e = 0.0;
    for (int n = 1; n < mesh.nt; ++n)
      for (int i = 1; i < mesh.nx - 1; ++i) {
        const double c = co[n - 1][i];
        e += rt[i] * rt[i] * ctx.what.value(n, i) * c * c;
      }
    sol.control_energy = e * mesh.dt * mesh.dx;
  }
  const StatePair controlled = problem.ops->forward(problem.y0, problem.z0, &sol.h);
  const int nt = mesh.nt;
  sol.terminal_norm = std::sqrt(inner(controlled.y[nt], controlled.y[nt], mesh) +
                                inner(controlled.z[nt], controlled.z[nt], mesh));
  sol.penalty_term = sol.terminal_norm * sol.terminal_norm / problem.eps;
  sol.cost_ratio = sol.initial_norm > 0.0
                       ? (sol.penalty_term + sol.control_energy) /
                             (sol.initial_norm * sol.initial_norm)
                       : 0.0;
  sol.q_phi = q.phi_T;
  sol.q_psi = q.psi_T;

  // optimality: terminal state = -eps q* up to CG residual and recomputation
  // rounding; a gross defect would indicate a sign error in the chain
  double defect = 0.0;
  for (int i = 0; i < mesh.nx; ++i) {
    const double dy = controlled.y[nt][i] + problem.eps * q.phi_T[i];
    const double dz = controlled.z[nt][i] + problem.eps * q.psi_T[i];
    defect += dy * dy + dz * dz;
  }
  sol.optimality_defect = std::sqrt(defect * mesh.dx) / nb;
  if (sol.optimality_defect > std::max(1e3 * sol.cg_residual, 1e-4))
    throw Error("solve_penalized: optimality defect " + std::to_string(sol.optimality_defect) +
                " breaks the terminal condition of the adjoint system");
  return sol;
}

}  // namespace ks
