#include "kscontrol/cole_hopf.hpp"

#include <cmath>
#include <sstream>

namespace ks {

Field chemical_to_gradient(const Field& c0, const Mesh1D& mesh) {
  check_on_mesh(c0, mesh, "chemical_to_gradient");
  for (int i = 0; i < mesh.nx; ++i)
    if (!(c0[i] > 0.0)) {
      std::ostringstream os;
      os << "chemical_to_gradient: c0 must be positive, found " << c0[i] << " at x = "
         << mesh.x(i);
      throw DomainError(os.str());
    }
  Field ln(mesh.nx);
  for (int i = 0; i < mesh.nx; ++i) ln[i] = std::log(c0[i]);
  return gradient(ln, mesh);
}

ChemicalField reconstruct_chemical(const SpaceTimeField& u, const SpaceTimeField& v,
                                   const Field& c0, const Mesh1D& mesh) {
  check_on_mesh(u, mesh, "reconstruct_chemical u");
  check_on_mesh(v, mesh, "reconstruct_chemical v");
  check_on_mesh(c0, mesh, "reconstruct_chemical c0");
  for (double x : c0)
    if (x < 0.0) throw DomainError("reconstruct_chemical: c0 must be nonnegative");

  ChemicalField out;
  out.c = SpaceTimeField(mesh);
  out.strictly_positive = true;
  const int nt = mesh.nt, nx = mesh.nx;

  auto integrand = [&](int n) {
    Field g = gradient(v[n], mesh);
    for (int i = 0; i < nx; ++i) g[i] += -v[n][i] * v[n][i] + u[n][i];
    return g;
  };

  Field accum(nx, 0.0);
  Field prev = integrand(0);
  out.c[0] = c0;
  for (double x : c0) out.strictly_positive = out.strictly_positive && x > 0.0;
  for (int n = 1; n <= nt; ++n) {
    Field cur = integrand(n);
    for (int i = 0; i < nx; ++i) {
      accum[i] += 0.5 * mesh.dt * (prev[i] + cur[i]);
      double e = accum[i];
      if (e > 709.0) {
        e = 709.0;
        ++out.overflow_clamps;
      }
      out.c[n][i] = c0[i] * std::exp(e);
      out.strictly_positive = out.strictly_positive && out.c[n][i] > 0.0;
    }
    prev = std::move(cur);
  }
  return out;
}

ScaledSystem physical_scaling(const PhysicalParams& params, ScalingDirection direction,
                              const Mesh1D& mesh, const SpaceTimeField& u,
                              const SpaceTimeField& v) {
  if (!(params.diffusivity > 0.0 && params.sensitivity > 0.0 && params.degradation > 0.0))
    throw ParameterError("physical_scaling: D, chi, mu must be positive");
  check_on_mesh(u, mesh, "physical_scaling u");
  check_on_mesh(v, mesh, "physical_scaling v");

  const double time_factor = params.sensitivity * params.degradation / params.diffusivity;
  const double space_factor =
      std::sqrt(params.sensitivity * params.degradation) / params.diffusivity;
  const double v_factor = std::sqrt(params.sensitivity / params.degradation);

  double L = mesh.length, T = mesh.horizon, vf = v_factor;
  if (direction == ScalingDirection::to_normalized) {
    L = mesh.length * space_factor;
    T = mesh.horizon * time_factor;
  } else {
    L = mesh.length / space_factor;
    T = mesh.horizon / time_factor;
    vf = 1.0 / v_factor;
  }
  ScaledSystem out{Mesh1D(mesh.nx, mesh.nt, L, T), u, v};
  for (Field& s : out.v.snaps)
    for (double& x : s) x *= vf;
  return out;
}

}  // namespace ks
