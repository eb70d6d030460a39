#pragma once

#include <vector>

#include "kscontrol/errors.hpp"

namespace ks {

// Uniform space-time grid on (0, L) x (0, T). Node x_i = i*dx spans [0, L]
// with nx nodes (two of them boundary); t_n = n*dt spans [0, T] with nt
// steps, i.e. nt+1 time nodes.
struct Mesh1D {
  int nx;
  int nt;
  double length;
  double horizon;
  double dx;
  double dt;

  Mesh1D(int nx_, int nt_, double length_, double horizon_);

  double x(int i) const { return i * dx; }
  double t(int n) const { return n * dt; }
  bool same(const Mesh1D& o) const {
    return nx == o.nx && nt == o.nt && length == o.length && horizon == o.horizon;
  }
};

// Nodal values of one scalar unknown, one entry per spatial node.
using Field = std::vector<double>;

// One Field per time node (nt+1 snapshots).
struct SpaceTimeField {
  std::vector<Field> snaps;

  SpaceTimeField() = default;
  SpaceTimeField(const Mesh1D& mesh, double fill = 0.0)
      : snaps(mesh.nt + 1, Field(mesh.nx, fill)) {}

  int nt() const { return static_cast<int>(snaps.size()) - 1; }
  Field& operator[](int n) { return snaps[n]; }
  const Field& operator[](int n) const { return snaps[n]; }
};

struct Dirichlet {
  double left = 0.0;
  double right = 0.0;
};

enum class NormKind { L2Space, H1Space, L2SpaceTime };

// Second-order central Laplacian. Boundary nodes of f carry the imposed
// Dirichlet values before differencing; output boundary entries are 0.
Field laplacian(const Field& f, const Mesh1D& mesh, Dirichlet bc = {});

// Central differences at interior nodes, one-sided second-order at the two
// boundary nodes.
Field gradient(const Field& f, const Mesh1D& mesh);

double norm(const Field& f, const Mesh1D& mesh, NormKind kind);
double norm(const SpaceTimeField& f, const Mesh1D& mesh, NormKind kind);

// Trapezoid-rule inner product over [0, L].
double inner(const Field& f, const Field& g, const Mesh1D& mesh);

double max_abs(const Field& f);
double min_value(const SpaceTimeField& f);

Field sine_field(const Mesh1D& mesh, double amplitude, int mode);

void check_on_mesh(const Field& f, const Mesh1D& mesh, const char* what);
void check_on_mesh(const SpaceTimeField& f, const Mesh1D& mesh, const char* what);

}  // namespace ks
