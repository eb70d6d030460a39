#include "kscontrol/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ks {

namespace {
constexpr double kDivergenceLimit = 1e6;

// Thomas solve of (I - dt*lap) u = rhs on the interior nodes, in place.
// Constant tridiagonal (off, diag, off); elimination factors precomputed.
struct HeatSolve {
  std::vector<double> c_prime;
  std::vector<double> inv_m;
  double off;

  explicit HeatSolve(const Mesh1D& mesh) {
    const int ni = mesh.nx - 2;
    const double r = mesh.dt / (mesh.dx * mesh.dx);
    off = -r;
    const double diag = 1.0 + 2.0 * r;
    c_prime.resize(ni);
    inv_m.resize(ni);
    double m = diag;
    for (int j = 0; j < ni; ++j) {
      inv_m[j] = 1.0 / m;
      c_prime[j] = off * inv_m[j];
      m = diag - off * c_prime[j];
    }
  }

  void solve(std::vector<double>& u) const {
    const int ni = static_cast<int>(u.size());
    u[0] *= inv_m[0];
    for (int j = 1; j < ni; ++j) u[j] = (u[j] - off * u[j - 1]) * inv_m[j];
    for (int j = ni - 2; j >= 0; --j) u[j] -= c_prime[j] * u[j + 1];
  }
};

double trapz(const Field& f, const Mesh1D& mesh) {
  double s = 0.5 * (f.front() + f.back());
  for (int i = 1; i < mesh.nx - 1; ++i) s += f[i];
  return s * mesh.dx;
}
}  // namespace

NonnegReport check_nonnegativity(const SpaceTimeField& field, double tol) {
  NonnegReport rep;
  rep.min_value = field.snaps.empty() ? 0.0 : field[0][0];
  for (int n = 0; n < static_cast<int>(field.snaps.size()); ++n) {
    const Field& s = field[n];
    for (int i = 0; i < static_cast<int>(s.size()); ++i) {
      if (s[i] < rep.min_value) rep.min_value = s[i];
      if (!rep.violation && s[i] < -tol) {
        rep.violation = true;
        rep.x_index = i;
        rep.t_index = n;
      }
    }
  }
  return rep;
}

TrajectoryResult solve_free_trajectory(const TrajectoryParams& params, const Mesh1D& mesh) {
  check_on_mesh(params.initial_w, mesh, "trajectory initial_w");
  check_on_mesh(params.initial_v, mesh, "trajectory initial_v");
  if (!(params.p_bar > 0.0)) throw ParameterError("trajectory: p_bar must be positive");
  if (std::abs(params.initial_w.front()) > 0.0 || std::abs(params.initial_w.back()) > 0.0 ||
      std::abs(params.initial_v.front()) > 0.0 || std::abs(params.initial_v.back()) > 0.0)
    throw DomainError("trajectory: shifted initial data must vanish at the boundary");

  // explicit first-order terms against implicit diffusion: amplitude guard
  const double amp = 1.0 + params.p_bar + max_abs(params.initial_w) + max_abs(params.initial_v);
  if (mesh.dt * amp * amp > 4.0) {
    std::ostringstream os;
    os << "trajectory: dt = " << mesh.dt << " too large for coefficient magnitude " << amp
       << "; reduce dt";
    throw StabilityError(os.str());
  }

  const double pb = params.p_bar;
  const int nt = mesh.nt, nx = mesh.nx, ni = nx - 2;
  TrajectoryResult res;
  res.p_bar = pb;
  SpaceTimeField W(mesh), V(mesh);
  W[0] = params.initial_w;
  V[0] = params.initial_v;

  const double h1 = std::sqrt(std::pow(norm(params.initial_w, mesh, NormKind::H1Space), 2) +
                              std::pow(norm(params.initial_v, mesh, NormKind::H1Space), 2));
  res.initial_h1 = h1;
  res.smallness_ok = h1 * h1 <= params.smallness;

  auto energy = [&](const Field& w, const Field& v) {
    const Field gw = gradient(w, mesh);
    const Field gv = gradient(v, mesh);
    Field e(nx);
    for (int i = 0; i < nx; ++i)
      e[i] = pb * w[i] * w[i] + pb * pb * v[i] * v[i] + gw[i] * gw[i] + pb * gv[i] * gv[i];
    return 0.5 * trapz(e, mesh);
  };
  res.energy.resize(nt + 1);
  res.energy[0] = energy(W[0], V[0]);

  HeatSolve hs(mesh);
  Field wv(nx), vv(nx);
  std::vector<double> uw(ni), uv(ni);
  for (int n = 1; n <= nt; ++n) {
    const Field& w = W[n - 1];
    const Field& v = V[n - 1];
    for (int i = 0; i < nx; ++i) {
      wv[i] = w[i] * v[i];
      vv[i] = v[i] * v[i];
    }
    const Field d_wv = gradient(wv, mesh);
    const Field d_v = gradient(v, mesh);
    const Field d_vv = gradient(vv, mesh);
    const Field d_w = gradient(w, mesh);
    for (int j = 0; j < ni; ++j) {
      const int i = j + 1;
      uw[j] = w[i] + mesh.dt * (-d_wv[i] - pb * d_v[i]);
      uv[j] = v[i] + mesh.dt * (d_vv[i] + d_w[i]);
    }
    hs.solve(uw);
    hs.solve(uv);
    double l2 = 0.0;
    for (int j = 0; j < ni; ++j) {
      W[n][j + 1] = uw[j];
      V[n][j + 1] = uv[j];
      l2 += uw[j] * uw[j] + uv[j] * uv[j];
    }
    l2 = std::sqrt(l2 * mesh.dx);
    if (!(l2 < kDivergenceLimit)) {
      std::ostringstream os;
      os << "trajectory: state norm " << l2 << " exceeds " << kDivergenceLimit << " at t = "
         << mesh.t(n);
      throw DivergenceError(os.str());
    }
    res.energy[n] = energy(W[n], V[n]);
  }

  res.min_u_minus_pbar = min_value(W);
  res.min_v = min_value(V);
  res.v_bar = V;
  res.u_bar = W;
  for (Field& s : res.u_bar.snaps)
    for (double& x : s) x += pb;
  return res;
}

}  // namespace ks
