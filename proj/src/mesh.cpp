#include "kscontrol/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ks {

Mesh1D::Mesh1D(int nx_, int nt_, double length_, double horizon_)
    : nx(nx_), nt(nt_), length(length_), horizon(horizon_) {
  if (nx < 8) throw ConstructionError("Mesh1D: nx must be >= 8, got " + std::to_string(nx));
  if (nt < 8) throw ConstructionError("Mesh1D: nt must be >= 8, got " + std::to_string(nt));
  if (!(length > 0.0)) throw ConstructionError("Mesh1D: length must be > 0");
  if (!(horizon > 0.0)) throw ConstructionError("Mesh1D: horizon must be > 0");
  dx = length / (nx - 1);
  dt = horizon / nt;
}

void check_on_mesh(const Field& f, const Mesh1D& mesh, const char* what) {
  if (static_cast<int>(f.size()) != mesh.nx)
    throw DimensionError(std::string(what) + ": field has " + std::to_string(f.size()) +
                         " entries, mesh has nx = " + std::to_string(mesh.nx));
}

void check_on_mesh(const SpaceTimeField& f, const Mesh1D& mesh, const char* what) {
  if (f.nt() != mesh.nt)
    throw DimensionError(std::string(what) + ": space-time field has " +
                         std::to_string(f.snaps.size()) + " snapshots, mesh needs " +
                         std::to_string(mesh.nt + 1));
  for (const Field& s : f.snaps) check_on_mesh(s, mesh, what);
}

Field laplacian(const Field& f, const Mesh1D& mesh, Dirichlet bc) {
  check_on_mesh(f, mesh, "laplacian");
  const int nx = mesh.nx;
  const double idx2 = 1.0 / (mesh.dx * mesh.dx);
  Field g(nx, 0.0);
  // difference form keeps affine fields at exact zero
  for (int i = 1; i < nx - 1; ++i) {
    const double fm = (i == 1) ? bc.left : f[i - 1];
    const double fp = (i == nx - 2) ? bc.right : f[i + 1];
    g[i] = ((fm - f[i]) + (fp - f[i])) * idx2;
  }
  return g;
}

Field gradient(const Field& f, const Mesh1D& mesh) {
  check_on_mesh(f, mesh, "gradient");
  const int nx = mesh.nx;
  const double i2dx = 1.0 / (2.0 * mesh.dx);
  Field g(nx);
  // one-sided second-order stencils written in difference form so constants
  // map to exact zeros
  g[0] = (4.0 * (f[1] - f[0]) - (f[2] - f[0])) * i2dx;
  for (int i = 1; i < nx - 1; ++i) g[i] = (f[i + 1] - f[i - 1]) * i2dx;
  g[nx - 1] = (4.0 * (f[nx - 1] - f[nx - 2]) - (f[nx - 1] - f[nx - 3])) * i2dx;
  return g;
}

double inner(const Field& f, const Field& g, const Mesh1D& mesh) {
  check_on_mesh(f, mesh, "inner");
  check_on_mesh(g, mesh, "inner");
  const int nx = mesh.nx;
  double s = 0.5 * (f[0] * g[0] + f[nx - 1] * g[nx - 1]);
  for (int i = 1; i < nx - 1; ++i) s += f[i] * g[i];
  return s * mesh.dx;
}

double norm(const Field& f, const Mesh1D& mesh, NormKind kind) {
  switch (kind) {
    case NormKind::L2Space:
      return std::sqrt(inner(f, f, mesh));
    case NormKind::H1Space: {
      const Field g = gradient(f, mesh);
      return std::sqrt(inner(f, f, mesh) + inner(g, g, mesh));
    }
    case NormKind::L2SpaceTime:
      throw DimensionError("norm: L2SpaceTime needs a SpaceTimeField");
  }
  return 0.0;
}

double norm(const SpaceTimeField& f, const Mesh1D& mesh, NormKind kind) {
  check_on_mesh(f, mesh, "norm");
  if (kind != NormKind::L2SpaceTime)
    throw DimensionError("norm: space-time fields only support L2SpaceTime");
  const int nt = mesh.nt;
  double s = 0.0;
  for (int n = 0; n <= nt; ++n) {
    const double w = (n == 0 || n == nt) ? 0.5 : 1.0;
    s += w * inner(f[n], f[n], mesh);
  }
  return std::sqrt(s * mesh.dt);
}

double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

double min_value(const SpaceTimeField& f) {
  double m = f.snaps.empty() ? 0.0 : f[0][0];
  for (const Field& s : f.snaps)
    for (double v : s) m = std::min(m, v);
  return m;
}

Field sine_field(const Mesh1D& mesh, double amplitude, int mode) {
  Field f(mesh.nx);
  const double w = mode * M_PI / mesh.length;
  for (int i = 0; i < mesh.nx; ++i) f[i] = amplitude * std::sin(w * mesh.x(i));
  f[0] = 0.0;
  f[mesh.nx - 1] = 0.0;  // sin(mode*pi) up to roundoff; pin the homogeneous value
  return f;
}

}  // namespace ks
