#pragma once

#include <cstdint>
#include <vector>

#include "kscontrol/mesh.hpp"

namespace ks {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x > lo && x < hi; }
  // strict nesting: this strictly inside outer
  bool inside(const Interval& outer) const { return lo > outer.lo && hi < outer.hi; }
};

// Normalized monomial bump rho(x) = x^p (L-x)^q / max, with the unique
// interior critical point x_c = pL/(p+q) inside omega0 and max rho = 1.
struct RhoProfile {
  int p = 1;
  int q = 1;
  double length = 1.0;
  double normalizer = 1.0;
  Interval omega0;
  double critical_point = 0.5;
  double grad_lower_bound = 0.0;  // achieved min |rho'| on interior nodes outside closure(omega0)

  double value(double x) const;
  double deriv(double x) const;
};

RhoProfile build_rho(const Mesh1D& mesh, Interval omega0, int max_exponent);

// C^2 bump equal to 1 on omega1, 0 outside omega, quintic-smoothstep
// transitions in between.
struct CutoffProfile {
  Interval omega;
  Interval omega1;
  Field values;
};

CutoffProfile build_cutoff(const Mesh1D& mesh, Interval omega, Interval omega1);

enum class WeightKind { phi, xi, theta, phi_star, xi_star, control_W, obs_V };

// Carleman weight family tables. All exponentials are kept in log space;
// exponentiation happens at use sites with underflow clamped to 0.
// Interior time nodes carry finite logs; t = 0 and t = T extend W, V, theta
// by 0 and phi, xi, phi*, xi* by +infinity.
struct WeightSet {
  double s = 1.0;
  double lambda = 1.0;
  int m = 4;
  double k = 5.0;
  RhoProfile rho;

  int nx = 0;
  int nt = 0;
  // row-major (nt+1) x nx tables; rows 0 and nt are the continuous extensions
  std::vector<double> log_phi;
  std::vector<double> log_xi;
  std::vector<double> log_W;
  std::vector<double> log_V;
  std::vector<double> log_phi_star;  // per time node
  std::vector<double> log_xi_star;

  double max_log_W = 0.0;
  double max_log_V = 0.0;
  long underflow_count = 0;  // entries of W or V that clamp to 0 in double

  double at(WeightKind which, int x_index, int t_index) const;
  double logW(int n, int i) const { return log_W[static_cast<size_t>(n) * nx + i]; }
  double logV(int n, int i) const { return log_V[static_cast<size_t>(n) * nx + i]; }
};

WeightSet build_weight_set(const Mesh1D& mesh, const RhoProfile& rho, double s, double lambda,
                           int m, double k);

// Smallest (lambda, then s) on geometric grids passing the pointwise
// validation 4*phi > 2*phi* with the peak of log W inside (-600, 600).
struct SweepChoice {
  double lambda = 0.0;
  double s = 0.0;
  int tried = 0;
};
SweepChoice sweep_weight_params(const Mesh1D& mesh, const RhoProfile& rho, int m, double k);

}  // namespace ks
