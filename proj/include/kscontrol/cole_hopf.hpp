#pragma once

#include "kscontrol/mesh.hpp"

namespace ks {

struct PhysicalParams {
  double diffusivity = 1.0;  // D
  double sensitivity = 1.0;  // chi
  double degradation = 1.0;  // mu
};

enum class ScalingDirection { to_normalized, to_physical };

// v0 = gradient(ln c0); c0 must be strictly positive.
Field chemical_to_gradient(const Field& c0, const Mesh1D& mesh);

struct ChemicalField {
  SpaceTimeField c;
  bool strictly_positive = false;
  long overflow_clamps = 0;
};

// c(x, t_n) = c0(x) * exp( trapezoid over [0, t_n] of (d_x v - v^2 + u) );
// nonnegative by construction wherever c0 >= 0.
ChemicalField reconstruct_chemical(const SpaceTimeField& u, const SpaceTimeField& v,
                                   const Field& c0, const Mesh1D& mesh);

struct ScaledSystem {
  Mesh1D mesh;
  SpaceTimeField u;
  SpaceTimeField v;
};

// Rescales mesh extents and the v field between the physical variables and
// the normalized working variables (t = (chi mu / D) t~, x = (sqrt(chi mu)/D) x~,
// v = sqrt(chi/mu) v~); u is unchanged.
ScaledSystem physical_scaling(const PhysicalParams& params, ScalingDirection direction,
                              const Mesh1D& mesh, const SpaceTimeField& u,
                              const SpaceTimeField& v);

}  // namespace ks
