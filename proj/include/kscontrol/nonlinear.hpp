#pragma once

#include <vector>

#include "kscontrol/hum.hpp"
#include "kscontrol/trajectory.hpp"

namespace ks {

struct FixedPointConfig {
  double damping = 1.0;
  int max_iters = 20;
  double rel_tol = 1e-6;
  double eps = 1e-8;            // penalization of each inner solve
  double smallness_bound = 1e-2;
  double cg_tol = 1e-10;
  int cg_max_iter = 500;
  double weight_scale = 0.0;    // <= 0: calibrated once at the first iteration
  Actuation actuation = Actuation::chemical;
};

struct NonlinearControlResult {
  SpaceTimeField h;
  int iterates = 0;
  std::vector<double> history;  // per-iteration relative change of eta
  std::vector<double> inner_terminal_history;
  double inner_terminal_norm = 0.0;
  double closed_loop_terminal_norm = 0.0;
  double min_u = 0.0;
  bool nonneg_ok = false;
  bool converged = false;
  long projections = 0;  // grid points clipped by the |eta| <= 1 cap
  double weight_scale = 1.0;
  int last_cg_iterations = 0;
};

struct ClosedLoopReport {
  double terminal_norm = 0.0;
  double min_u = 0.0;
  bool nonneg_ok = false;
};

// Damped Picard iteration on the linearizing coefficient field eta:
// a = eta + v_bar, b = eta + 2 v_bar, B = u_bar, inner solves by
// solve_penalized, eta updated from the z-component of the inner solution.
NonlinearControlResult fixed_point_control(const Field& y0, const Field& z0,
                                           const TrajectoryResult& traj,
                                           const FixedPointConfig& cfg, const WeightSet& weights,
                                           const CutoffProfile& cutoff, const Mesh1D& mesh);

// Runs the full nonlinear perturbation system with the frozen control h
// (linear part implicit, quadratic terms lagged) and reports the terminal
// norm and the minimum of u = y + u_bar.
ClosedLoopReport closed_loop_verify(const SpaceTimeField& h, const Field& y0, const Field& z0,
                                    const TrajectoryResult& traj, const CutoffProfile& cutoff,
                                    const Mesh1D& mesh,
                                    Actuation actuation = Actuation::chemical,
                                    double nonneg_tol = 1e-8);

}  // namespace ks
