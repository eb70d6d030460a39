#include "kscontrol/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ks {

namespace {
constexpr double kLogUnderflow = -745.0;  // exp underflows to 0 below this

double smoothstep5(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
}  // namespace

double RhoProfile::value(double x) const {
  return std::pow(x, p) * std::pow(length - x, q) / normalizer;
}

double RhoProfile::deriv(double x) const {
  const double a = p * std::pow(x, p - 1) * std::pow(length - x, q);
  const double b = q * std::pow(x, p) * std::pow(length - x, q - 1);
  return (a - b) / normalizer;
}

RhoProfile build_rho(const Mesh1D& mesh, Interval omega0, int max_exponent) {
  const double L = mesh.length;
  if (!(omega0.lo > 0.0 && omega0.hi < L && omega0.lo < omega0.hi))
    throw ConstructionError("build_rho: omega0 must be strictly inside (0, L)");
  if (max_exponent < 2) throw ConstructionError("build_rho: max_exponent must be >= 2");

  int bp = 0, bq = 0;
  for (int sum = 2; sum <= 2 * max_exponent && bp == 0; ++sum) {
    for (int p = 1; p < sum && bp == 0; ++p) {
      const int q = sum - p;
      if (p > max_exponent || q > max_exponent || q < 1) continue;
      const double xc = p * L / (p + q);
      if (omega0.contains(xc)) {
        bp = p;
        bq = q;
      }
    }
  }
  if (bp == 0) {
    const double lo = L / (1.0 + max_exponent);
    const double hi = L * max_exponent / (1.0 + max_exponent);
    std::ostringstream os;
    os << "build_rho: no exponents p, q <= " << max_exponent
       << " place the critical point in omega0 = (" << omega0.lo << ", " << omega0.hi
       << "); attainable critical points lie in [" << lo << ", " << hi << "]";
    throw ConstructionError(os.str());
  }

  RhoProfile rho;
  rho.p = bp;
  rho.q = bq;
  rho.length = L;
  rho.omega0 = omega0;
  rho.critical_point = bp * L / (bp + bq);
  rho.normalizer = std::pow(rho.critical_point, bp) * std::pow(L - rho.critical_point, bq);

  double cmin = std::numeric_limits<double>::infinity();
  for (int i = 1; i < mesh.nx - 1; ++i) {
    const double x = mesh.x(i);
    if (x >= omega0.lo && x <= omega0.hi) continue;
    cmin = std::min(cmin, std::abs(rho.deriv(x)));
  }
  rho.grad_lower_bound = std::isfinite(cmin) ? cmin : 0.0;
  return rho;
}

CutoffProfile build_cutoff(const Mesh1D& mesh, Interval omega, Interval omega1) {
  if (!(omega.lo >= 0.0 && omega.hi <= mesh.length && omega.lo < omega.hi))
    throw ConstructionError("build_cutoff: omega must lie in [0, L]");
  if (!omega1.inside(omega))
    throw ConstructionError("build_cutoff: omega1 must be strictly inside omega");
  CutoffProfile c;
  c.omega = omega;
  c.omega1 = omega1;
  c.values.assign(mesh.nx, 0.0);
  for (int i = 0; i < mesh.nx; ++i) {
    const double x = mesh.x(i);
    if (x <= omega.lo || x >= omega.hi) continue;
    if (x < omega1.lo)
      c.values[i] = smoothstep5((x - omega.lo) / (omega1.lo - omega.lo));
    else if (x > omega1.hi)
      c.values[i] = smoothstep5((omega.hi - x) / (omega.hi - omega1.hi));
    else
      c.values[i] = 1.0;
  }
  return c;
}

WeightSet build_weight_set(const Mesh1D& mesh, const RhoProfile& rho, double s, double lambda,
                           int m, double k) {
  if (!(s > 1.0) || !(lambda > 1.0))
    throw ParameterError("build_weight_set: s and lambda must be > 1");
  if (m <= 3) throw ParameterError("build_weight_set: m must be an integer > 3");
  if (!(k > m)) throw ParameterError("build_weight_set: k must be > m");

  const int nx = mesh.nx, nt = mesh.nt;
  // |rho|_inf = 1 by normalization
  const double logE = k * (m + 1) / static_cast<double>(m) * lambda;  // log of the big constant
  const double E = std::exp(logE);
  const double ekL = std::exp(lambda * k);  // exp(lambda * k * |rho|_inf) at the boundary

  WeightSet w;
  w.s = s;
  w.lambda = lambda;
  w.m = m;
  w.k = k;
  w.rho = rho;
  w.nx = nx;
  w.nt = nt;
  const double inf = std::numeric_limits<double>::infinity();
  w.log_phi.assign(static_cast<size_t>(nt + 1) * nx, inf);
  w.log_xi.assign(static_cast<size_t>(nt + 1) * nx, inf);
  w.log_W.assign(static_cast<size_t>(nt + 1) * nx, -inf);
  w.log_V.assign(static_cast<size_t>(nt + 1) * nx, -inf);
  w.log_phi_star.assign(nt + 1, inf);
  w.log_xi_star.assign(nt + 1, inf);

  std::vector<double> rv(nx), ekr(nx), g4(nx), g2(nx);
  for (int i = 0; i < nx; ++i) {
    rv[i] = std::clamp(rho.value(mesh.x(i)), 0.0, 1.0);
    ekr[i] = std::exp(lambda * (k + rv[i]));
    if (!(E - ekr[i] > 0.0))
      throw ParameterError("build_weight_set: phi numerator not positive (needs k/m > rho)");
    g4[i] = 2.0 * E - 4.0 * ekr[i] + 2.0 * ekL;  // (4 phi - 2 phi*) * (t(T-t))^m
    g2[i] = E - 2.0 * ekr[i] + ekL;              // (2 phi - phi*)  * (t(T-t))^m
  }
  // pointwise validation 4 phi > 2 phi* at every interior-time grid point
  for (int i = 0; i < nx; ++i) {
    if (!(g4[i] > 0.0)) {
      std::ostringstream os;
      os << "build_weight_set: 4*phi > 2*phi* violated at x = " << mesh.x(i)
         << " (lambda = " << lambda << "); increase lambda";
      throw ParameterError(os.str());
    }
  }

  double maxW = -inf, maxV = -inf;
  long clamps = 0;
  for (int n = 1; n < nt; ++n) {
    // tau = t (T - t), written as the symmetric product so that tables obey
    // table(x, t_n) == table(x, T - t_n) bitwise
    const double tau = (n * mesh.dt) * ((nt - n) * mesh.dt);
    const double logtau_m = m * std::log(tau);
    w.log_phi_star[n] = std::log(E - ekL) - logtau_m;
    w.log_xi_star[n] = lambda * k - logtau_m;
    for (int i = 0; i < nx; ++i) {
      const size_t id = static_cast<size_t>(n) * nx + i;
      w.log_phi[id] = std::log(E - ekr[i]) - logtau_m;
      w.log_xi[id] = lambda * (k + rv[i]) - logtau_m;
      const double lw = -s * g4[i] / std::pow(tau, m) + 8.0 * (lambda * (k + rv[i]) - logtau_m);
      const double lv = -s * g2[i] / std::pow(tau, m) + 4.0 * (lambda * (k + rv[i]) - logtau_m);
      w.log_W[id] = lw;
      w.log_V[id] = lv;
      if (i > 0 && i < nx - 1) {
        maxW = std::max(maxW, lw);
        maxV = std::max(maxV, lv);
        if (lw < kLogUnderflow) ++clamps;
        if (lv < kLogUnderflow) ++clamps;
      }
    }
  }
  w.max_log_W = maxW;
  w.max_log_V = maxV;
  w.underflow_count = clamps;
  return w;
}

double WeightSet::at(WeightKind which, int x_index, int t_index) const {
  if (x_index < 0 || x_index >= nx || t_index < 0 || t_index > nt)
    throw DimensionError("WeightSet::at: index out of range");
  const size_t id = static_cast<size_t>(t_index) * nx + x_index;
  switch (which) {
    case WeightKind::phi:
      return std::exp(log_phi[id]);
    case WeightKind::xi:
      return std::exp(log_xi[id]);
    case WeightKind::theta: {
      const double phi = std::exp(log_phi[id]);
      return std::isfinite(phi) ? std::exp(-s * phi) : 0.0;
    }
    case WeightKind::phi_star:
      return std::exp(log_phi_star[t_index]);
    case WeightKind::xi_star:
      return std::exp(log_xi_star[t_index]);
    case WeightKind::control_W:
      return (t_index == 0 || t_index == nt) ? 0.0 : std::exp(log_W[id]);
    case WeightKind::obs_V:
      return (t_index == 0 || t_index == nt) ? 0.0 : std::exp(log_V[id]);
  }
  return 0.0;
}

SweepChoice sweep_weight_params(const Mesh1D& mesh, const RhoProfile& rho, int m, double k) {
  // validation predicate 4 phi > 2 phi* at the grid maximum of rho
  double rho_max = 0.0;
  for (int i = 1; i < mesh.nx - 1; ++i)
    rho_max = std::max(rho_max, std::clamp(rho.value(mesh.x(i)), 0.0, 1.0));
  auto validates = [&](double lam) {
    return std::exp(lam * k / m) + 1.0 - 2.0 * std::exp(lam * rho_max) > 0.0;
  };

  // smallest validating lambda: bisection above 1 (the predicate has a single
  // crossing from below on [1, inf) for k > m)
  double lam_star = 1.001;
  if (!validates(lam_star)) {
    double lo = lam_star, hi = 64.0;
    if (!validates(hi))
      throw ParameterError("sweep_weight_params: validation unreachable on the lambda range");
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (validates(mid) ? hi : lo) = mid;
    }
    lam_star = hi;
  }

  // geometric grids: relative margin above the threshold, then s
  SweepChoice choice;
  for (double margin = 1e-3; margin <= 10.0; margin *= 3.1622776601683795) {
    const double lambda = lam_star * (1.0 + margin);
    double s = 1.01;
    for (int i = 0; i < 18; ++i, s *= 1.5) {
      ++choice.tried;
      try {
        WeightSet w = build_weight_set(mesh, rho, s, lambda, m, k);
        if (std::abs(w.max_log_W) < 600.0 && w.max_log_V < 600.0) {
          choice.lambda = lambda;
          choice.s = s;
          return choice;
        }
      } catch (const ParameterError&) {
        break;  // this lambda fails validation on the grid; enlarge the margin
      }
    }
  }
  throw ParameterError(
      "sweep_weight_params: no (lambda, s) on the grid passes validation with a representable "
      "weight peak; the horizon is likely too short for m = " +
      std::to_string(m));
}

}  // namespace ks
