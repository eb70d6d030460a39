#pragma once

#include <vector>

#include "kscontrol/linear_pde.hpp"
#include "kscontrol/weights.hpp"

namespace ks {

struct TerminalPair {
  Field phi_T;
  Field psi_T;
};

// Penalized optimal control problem: minimize the weighted control energy
// plus (1/(2 eps)) times the terminal energy, solved by conjugate gradient
// on the adjoint terminal data.
//
// The Gramian applies the max-normalized control weight
//   what = exp(log W - max log W) * weight_scale,
// a multiplicative renormalization of the raw table (which spans hundreds of
// orders of magnitude); weight_scale <= 0 requests the automatic calibration
// that sets the Rayleigh quotient along the free terminal direction to 10.
struct PenalizedProblem {
  double eps = 1e-6;
  const WeightSet* weights = nullptr;
  const StepOperators* ops = nullptr;
  Field y0;
  Field z0;
  double weight_scale = 0.0;  // <= 0: auto
};

struct ControlSolution {
  SpaceTimeField h;       // rho~ * what * (adjoint sample); exact zeros outside omega
  Field q_phi, q_psi;     // terminal adjoint data found by CG
  double terminal_norm = 0.0;
  double control_energy = 0.0;  // dt dx sum rho~^2 what |psi|^2
  double penalty_term = 0.0;    // terminal_norm^2 / eps
  double cost_ratio = 0.0;      // (penalty + energy) / |(y0,z0)|^2
  double initial_norm = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double weight_scale = 1.0;  // the applied linear multiplier on what
  double optimality_defect = 0.0;
  std::vector<double> residual_history;
};

// A q = (terminal state of the controlled solve driven by q) + eps q.
TerminalPair gramian_apply(const TerminalPair& q, const PenalizedProblem& problem);

double auto_weight_scale(const StepOperators& ops, const WeightSet& weights, const Field& y0,
                         const Field& z0);

ControlSolution solve_penalized(const PenalizedProblem& problem, double cg_tol = 1e-10,
                                int max_iter = 500);

}  // namespace ks
