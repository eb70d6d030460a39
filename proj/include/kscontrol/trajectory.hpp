#pragma once

#include <vector>

#include "kscontrol/mesh.hpp"

namespace ks {

struct TrajectoryParams {
  double p_bar = 1.0;
  Field initial_w;  // u0 - p_bar, vanishing at the boundary
  Field initial_v;  // v0, vanishing at the boundary
  double smallness = 1e-2;
};

struct TrajectoryResult {
  SpaceTimeField u_bar;
  SpaceTimeField v_bar;
  std::vector<double> energy;  // E(t_n) per time node
  double min_u_minus_pbar = 0.0;
  double min_v = 0.0;
  double p_bar = 1.0;
  bool smallness_ok = true;
  double initial_h1 = 0.0;
};

// Time-marches the shifted free system with implicit diffusion and lagged
// first-order terms, then reconstructs u_bar = w_bar + p_bar.
TrajectoryResult solve_free_trajectory(const TrajectoryParams& params, const Mesh1D& mesh);

struct NonnegReport {
  double min_value = 0.0;
  bool violation = false;
  int x_index = -1;
  int t_index = -1;
};

NonnegReport check_nonnegativity(const SpaceTimeField& field, double tol);

}  // namespace ks
