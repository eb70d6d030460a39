#include "kscontrol/linear_pde.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace ks {

namespace {
constexpr double kDivergenceLimit = 1e6;

inline std::array<double, 4> inv2x2(const std::array<double, 4>& a, int level) {
  const double det = a[0] * a[3] - a[1] * a[2];
  if (!(std::abs(det) > 1e-300)) {
    std::ostringstream os;
    os << "StepOperators: singular implicit block at time level " << level
       << "; reduce dt";
    throw StabilityError(os.str());
  }
  const double id = 1.0 / det;
  return {a[3] * id, -a[1] * id, -a[2] * id, a[0] * id};
}

inline void mul2(const std::array<double, 4>& a, const double* x, double* y) {
  y[0] = a[0] * x[0] + a[1] * x[1];
  y[1] = a[2] * x[0] + a[3] * x[1];
}

inline void mulT2(const std::array<double, 4>& a, const double* x, double* y) {
  y[0] = a[0] * x[0] + a[2] * x[1];
  y[1] = a[1] * x[0] + a[3] * x[1];
}

inline std::array<double, 4> mul22(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}
}  // namespace

CoefficientSet steady_coefficients(const Mesh1D& mesh, double a, double b, double B,
                                   Actuation act) {
  CoefficientSet c;
  c.a = SpaceTimeField(mesh, a);
  c.b = SpaceTimeField(mesh, b);
  c.B = SpaceTimeField(mesh, B);
  c.actuation = act;
  return c;
}

StepOperators::StepOperators(const CoefficientSet& coeffs, const CutoffProfile& cutoff,
                             const Mesh1D& mesh, CouplingMask mask)
    : mesh_(mesh), cutoff_(cutoff), actuation_(coeffs.actuation), ni_(mesh.nx - 2) {
  check_on_mesh(coeffs.a, mesh, "StepOperators a");
  check_on_mesh(coeffs.b, mesh, "StepOperators b");
  check_on_mesh(coeffs.B, mesh, "StepOperators B");
  check_on_mesh(cutoff.values, mesh, "StepOperators cutoff");
  if (actuation_ == Actuation::chemical) {
    for (const Field& snap : coeffs.B.snaps)
      for (double v : snap)
        if (!(v > 0.0))
          throw HypothesisError(
              "StepOperators: B must have a positive lower bound under chemical actuation");
  }
  L_.resize(mesh.nt + 1);
  Cinv_.resize(mesh.nt + 1);
  P_.resize(mesh.nt + 1);
  for (int n = 1; n <= mesh.nt; ++n) factor_level(n, coeffs, mask);
}

void StepOperators::factor_level(int n, const CoefficientSet& coeffs, CouplingMask mask) {
  const int ni = ni_;
  const double dt = mesh_.dt, dx = mesh_.dx;
  const double idt = dt / (dx * dx);
  const double cc = dt / (2.0 * dx);
  const Field& a = coeffs.a[n];
  const Field& b = coeffs.b[n];
  const Field& B = coeffs.B[n];

  // Blocks of M = I + dt*K on the interleaved pair (y_i, z_i), i = 1..ni.
  // y-row: y - dt*lap y + dt*d_x(a y) + dt*d_x(B z)
  // z-row: z - dt*lap z - dt*d_x(b z) - dt*d_x y  (minus the control term)
  std::vector<Block> D(ni), S(ni), P(ni);
  for (int j = 0; j < ni; ++j) {
    const int i = j + 1;
    D[j] = {1.0 + 2.0 * idt, 0.0, 0.0, 1.0 + 2.0 * idt};
    // sub-block couples to node i-1 (zero Dirichlet kills i-1 = 0 terms)
    S[j] = {-idt - (mask.convection_a ? cc * a[i - 1] : 0.0),
            -(mask.cross_Bz ? cc * B[i - 1] : 0.0),
            (mask.cross_y ? cc : 0.0),
            -idt + (mask.convection_b ? cc * b[i - 1] : 0.0)};
    // super-block couples to node i+1
    P[j] = {-idt + (mask.convection_a ? cc * a[i + 1] : 0.0),
            (mask.cross_Bz ? cc * B[i + 1] : 0.0),
            -(mask.cross_y ? cc : 0.0),
            -idt - (mask.convection_b ? cc * b[i + 1] : 0.0)};
  }
  // block-Thomas factorization: C_1 = D_1; L_j = S_j C_{j-1}^{-1};
  // C_j = D_j - L_j P_{j-1}
  auto& Lf = L_[n];
  auto& Cf = Cinv_[n];
  auto& Pf = P_[n];
  Lf.assign(ni, {0, 0, 0, 0});
  Cf.assign(ni, {0, 0, 0, 0});
  Pf = P;
  Block C = D[0];
  Cf[0] = inv2x2(C, n);
  for (int j = 1; j < ni; ++j) {
    Lf[j] = mul22(S[j], Cf[j - 1]);
    const Block LP = mul22(Lf[j], P[j - 1]);
    C = {D[j][0] - LP[0], D[j][1] - LP[1], D[j][2] - LP[2], D[j][3] - LP[3]};
    Cf[j] = inv2x2(C, n);
  }
}

void StepOperators::solve_level(int n, std::vector<double>& u) const {
  const int ni = ni_;
  const auto& L = L_[n];
  const auto& Ci = Cinv_[n];
  const auto& P = P_[n];
  // forward sweep: g_j = b_j - L_j g_{j-1}
  for (int j = 1; j < ni; ++j) {
    double t[2];
    mul2(L[j], &u[2 * (j - 1)], t);
    u[2 * j] -= t[0];
    u[2 * j + 1] -= t[1];
  }
  // back substitution: u_j = C_j^{-1} (g_j - P_j u_{j+1})
  double t[2];
  mul2(Ci[ni - 1], &u[2 * (ni - 1)], t);
  u[2 * (ni - 1)] = t[0];
  u[2 * (ni - 1) + 1] = t[1];
  for (int j = ni - 2; j >= 0; --j) {
    double pv[2];
    mul2(P[j], &u[2 * (j + 1)], pv);
    const double g0 = u[2 * j] - pv[0];
    const double g1 = u[2 * j + 1] - pv[1];
    double r[2] = {g0, g1};
    mul2(Ci[j], r, t);
    u[2 * j] = t[0];
    u[2 * j + 1] = t[1];
  }
}

void StepOperators::solve_level_T(int n, std::vector<double>& u) const {
  const int ni = ni_;
  const auto& L = L_[n];
  const auto& Ci = Cinv_[n];
  const auto& P = P_[n];
  // M = Lhat * U with Lhat unit-lower (blocks L_j), U upper (C_j, P_j).
  // M^T v = c  =>  U^T w = c, then Lhat^T v = w.
  double t[2];
  mulT2(Ci[0], &u[0], t);
  u[0] = t[0];
  u[1] = t[1];
  for (int j = 1; j < ni; ++j) {
    double pv[2];
    mulT2(P[j - 1], &u[2 * (j - 1)], pv);
    double r[2] = {u[2 * j] - pv[0], u[2 * j + 1] - pv[1]};
    mulT2(Ci[j], r, t);
    u[2 * j] = t[0];
    u[2 * j + 1] = t[1];
  }
  for (int j = ni - 2; j >= 0; --j) {
    double lv[2];
    mulT2(L[j + 1], &u[2 * (j + 1)], lv);
    u[2 * j] -= lv[0];
    u[2 * j + 1] -= lv[1];
  }
}

StatePair StepOperators::forward(const Field& y0, const Field& z0,
                                 const SpaceTimeField* h) const {
  return forward_with_sources(y0, z0, h, {});
}

StatePair StepOperators::forward_with_sources(
    const Field& y0, const Field& z0, const SpaceTimeField* h,
    const std::function<void(int, const Field&, const Field&, Field&, Field&)>& lagged) const {
  check_on_mesh(y0, mesh_, "forward y0");
  check_on_mesh(z0, mesh_, "forward z0");
  if (h) check_on_mesh(*h, mesh_, "forward h");
  if (std::abs(y0.front()) > 0.0 || std::abs(y0.back()) > 0.0 || std::abs(z0.front()) > 0.0 ||
      std::abs(z0.back()) > 0.0)
    throw DomainError("forward: initial data must vanish at the boundary nodes");

  const int ni = ni_, nt = mesh_.nt;
  const double dt = mesh_.dt;
  StatePair out;
  out.y = SpaceTimeField(mesh_);
  out.z = SpaceTimeField(mesh_);
  out.y[0] = y0;
  out.z[0] = z0;

  std::vector<double> u(2 * ni);
  for (int j = 0; j < ni; ++j) {
    u[2 * j] = y0[j + 1];
    u[2 * j + 1] = z0[j + 1];
  }
  Field src_y(mesh_.nx, 0.0), src_z(mesh_.nx, 0.0);
  const int comp = actuation_ == Actuation::chemical ? 1 : 0;
  for (int n = 1; n <= nt; ++n) {
    if (lagged) {
      std::fill(src_y.begin(), src_y.end(), 0.0);
      std::fill(src_z.begin(), src_z.end(), 0.0);
      lagged(n, out.y[n - 1], out.z[n - 1], src_y, src_z);
      for (int j = 0; j < ni; ++j) {
        u[2 * j] += dt * src_y[j + 1];
        u[2 * j + 1] += dt * src_z[j + 1];
      }
    }
    if (h) {
      const Field& hn = (*h)[n];
      for (int j = 0; j < ni; ++j)
        u[2 * j + comp] += dt * cutoff_.values[j + 1] * hn[j + 1];
    }
    solve_level(n, u);
    Field& yn = out.y[n];
    Field& zn = out.z[n];
    double l2 = 0.0;
    for (int j = 0; j < ni; ++j) {
      yn[j + 1] = u[2 * j];
      zn[j + 1] = u[2 * j + 1];
      l2 += u[2 * j] * u[2 * j] + u[2 * j + 1] * u[2 * j + 1];
    }
    l2 = std::sqrt(l2 * mesh_.dx);
    out.max_l2 = std::max(out.max_l2, l2);
    if (!(l2 < kDivergenceLimit)) {
      std::ostringstream os;
      os << "forward: state norm " << l2 << " exceeds " << kDivergenceLimit << " at t = "
         << mesh_.t(n);
      throw DivergenceError(os.str());
    }
  }
  return out;
}

AdjointPair StepOperators::adjoint(const Field& phi_T, const Field& psi_T) const {
  check_on_mesh(phi_T, mesh_, "adjoint phi_T");
  check_on_mesh(psi_T, mesh_, "adjoint psi_T");
  if (std::abs(phi_T.front()) > 0.0 || std::abs(phi_T.back()) > 0.0 ||
      std::abs(psi_T.front()) > 0.0 || std::abs(psi_T.back()) > 0.0)
    throw DomainError("adjoint: terminal data must vanish at the boundary nodes");

  const int ni = ni_, nt = mesh_.nt;
  AdjointPair out;
  out.phi = SpaceTimeField(mesh_);
  out.psi = SpaceTimeField(mesh_);
  out.phi[nt] = phi_T;
  out.psi[nt] = psi_T;

  std::vector<double> p(2 * ni);
  for (int j = 0; j < ni; ++j) {
    p[2 * j] = phi_T[j + 1];
    p[2 * j + 1] = psi_T[j + 1];
  }
  for (int n = nt; n >= 1; --n) {
    solve_level_T(n, p);
    Field& fn = out.phi[n - 1];
    Field& gn = out.psi[n - 1];
    for (int j = 0; j < ni; ++j) {
      fn[j + 1] = p[2 * j];
      gn[j + 1] = p[2 * j + 1];
    }
  }
  return out;
}

double duality_gap(const StepOperators& ops, const Field& y0, const Field& z0,
                   const SpaceTimeField& h, const Field& phi_T, const Field& psi_T) {
  const Mesh1D& mesh = ops.mesh();
  const StatePair st = ops.forward(y0, z0, &h);
  const AdjointPair ad = ops.adjoint(phi_T, psi_T);
  const int nt = mesh.nt;

  const double termT =
      inner(st.y[nt], phi_T, mesh) + inner(st.z[nt], psi_T, mesh);
  const double term0 =
      inner(y0, ad.phi[0], mesh) + inner(z0, ad.psi[0], mesh);
  // control pairing: the step from n-1 to n injects rho~ h^n against the
  // adjoint state at level n-1 (the transpose chain samples it there)
  double pairing = 0.0;
  const SpaceTimeField& co = ops.actuation() == Actuation::chemical ? ad.psi : ad.phi;
  Field rh(mesh.nx, 0.0);
  for (int n = 1; n <= nt; ++n) {
    for (int i = 0; i < mesh.nx; ++i) rh[i] = ops.cutoff().values[i] * h[n][i];
    pairing += inner(rh, co[n - 1], mesh);
  }
  pairing *= mesh.dt;

  const double gap = std::abs(termT - term0 - pairing);
  const double scale = std::abs(termT) + std::abs(term0) + std::abs(pairing);
  return scale > 0.0 ? gap / scale : gap;
}

}  // namespace ks
