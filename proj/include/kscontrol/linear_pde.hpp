#pragma once

#include <array>
#include <functional>
#include <vector>

#include "kscontrol/mesh.hpp"
#include "kscontrol/weights.hpp"

namespace ks {

enum class Actuation { chemical, density };

// Space-time coefficient tables of the linearized coupled system.
struct CoefficientSet {
  SpaceTimeField a;
  SpaceTimeField b;
  SpaceTimeField B;
  Actuation actuation = Actuation::chemical;
};

CoefficientSet steady_coefficients(const Mesh1D& mesh, double a, double b, double B,
                                   Actuation act = Actuation::chemical);

// Diagnostic switches for the coupling terms; analytic heat oracles in the
// tests disable individual couplings to decouple the pair.
struct CouplingMask {
  bool convection_a = true;  // -d_x(a y) in the y-equation
  bool convection_b = true;  // +d_x(b z) in the z-equation
  bool cross_Bz = true;      // -d_x(B z) in the y-equation
  bool cross_y = true;       // +d_x y    in the z-equation
};

struct StatePair {
  SpaceTimeField y;
  SpaceTimeField z;
  double max_l2 = 0.0;  // stability monitor: largest pair L2 norm over time
};

struct AdjointPair {
  SpaceTimeField phi;
  SpaceTimeField psi;
};

// One implicit step of the coupled pair per time level, factored once.
// M_n = I + dt*K_n with diffusion and all first-order couplings implicit,
// coefficients frozen at the target time level. The adjoint chain applies
// the exact transposes of the same factors backward in time.
class StepOperators {
 public:
  StepOperators(const CoefficientSet& coeffs, const CutoffProfile& cutoff, const Mesh1D& mesh,
                CouplingMask mask = {});

  // h (optional) is the control on the full grid; the injection multiplies
  // by the cutoff, so the actuated equation receives rho_tilde * h.
  StatePair forward(const Field& y0, const Field& z0, const SpaceTimeField* h = nullptr) const;

  // Extended step driver used by the nonlinear module: per-step explicit
  // sources (full-grid fields) added to the right-hand side.
  StatePair forward_with_sources(
      const Field& y0, const Field& z0, const SpaceTimeField* h,
      const std::function<void(int, const Field&, const Field&, Field&, Field&)>& lagged) const;

  AdjointPair adjoint(const Field& phi_T, const Field& psi_T) const;

  const Mesh1D& mesh() const { return mesh_; }
  const CutoffProfile& cutoff() const { return cutoff_; }
  Actuation actuation() const { return actuation_; }

 private:
  using Block = std::array<double, 4>;  // row-major 2x2

  void factor_level(int n, const CoefficientSet& coeffs, CouplingMask mask);
  void solve_level(int n, std::vector<double>& u) const;    // M_n u = rhs (in place)
  void solve_level_T(int n, std::vector<double>& u) const;  // M_n^T u = rhs (in place)

  Mesh1D mesh_;
  CutoffProfile cutoff_;
  Actuation actuation_;
  int ni_;  // interior node count
  // per level: sub L, diag-inverse Cinv, super P blocks (block-Thomas factors)
  std::vector<std::vector<Block>> L_, Cinv_, P_;

  friend double duality_gap(const StepOperators&, const Field&, const Field&,
                            const SpaceTimeField&, const Field&, const Field&);
};

double duality_gap(const StepOperators& ops, const Field& y0, const Field& z0,
                   const SpaceTimeField& h, const Field& phi_T, const Field& psi_T);

}  // namespace ks
