#include "kscontrol/audit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace ks {

namespace {

constexpr double kLn10 = 2.302585092994045684;

// log-shifted accumulation of sum_j exp(logw_j) * f_j^2 over quadrature
// points; returns {value (may be 0 or inf in double), log of the value}.
struct ShiftedSum {
  double shift = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  std::vector<double> quads;  // squared factor * quadrature weight

  void add(double logw, double f, double quad_weight) {
    if (f == 0.0 || !std::isfinite(logw)) return;
    const double lt = logw + 2.0 * std::log(std::abs(f));
    logs.push_back(lt);
    quads.push_back(quad_weight);
    shift = std::max(shift, lt);
  }

  // returns log of the sum; -inf when empty
  double log_value() const {
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (size_t j = 0; j < logs.size(); ++j) acc += quads[j] * std::exp(logs[j] - shift);
    return shift + std::log(acc);
  }
};

double log10_of(double log_e) { return log_e / kLn10; }

void finalize_report(AuditReport& rep) {
  std::vector<double> ratios, logratios;
  for (const AuditSample& s : rep.rows) {
    if (s.skipped) continue;
    ratios.push_back(s.lhs / s.rhs);
    logratios.push_back(s.log10_ratio);
    rep.counterexample_evidence = rep.counterexample_evidence || s.counterexample;
  }
  if (!ratios.empty()) {
    std::vector<double> r = ratios, lr = logratios;
    std::sort(r.begin(), r.end());
    std::sort(lr.begin(), lr.end());
    rep.max_ratio = r.back();
    rep.median_ratio = r[r.size() / 2];
    rep.max_log10_ratio = lr.back();
    rep.median_log10_ratio = lr[lr.size() / 2];
  }
  rep.verdict = rep.counterexample_evidence ? "observability fails" : "ratios finite";
}

}  // namespace

void random_terminal_pair(Rng& rng, const Mesh1D& mesh, int modes, Field& phi_T, Field& psi_T) {
  phi_T.assign(mesh.nx, 0.0);
  psi_T.assign(mesh.nx, 0.0);
  for (int j = 1; j <= modes; ++j) {
    const double a = rng.next_normal();
    const double b = rng.next_normal();
    const double w = j * M_PI / mesh.length;
    for (int i = 1; i < mesh.nx - 1; ++i) {
      const double sv = std::sin(w * mesh.x(i));
      phi_T[i] += a * sv;
      psi_T[i] += b * sv;
    }
  }
}

AuditReport observability_ratio(int samples, const WeightSet& weights, const StepOperators& ops,
                                const Interval& omega, const Mesh1D& mesh, uint64_t seed) {
  if (samples < 1) throw ParameterError("observability_ratio: samples must be >= 1");
  AuditReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.s = weights.s;
  rep.lambda = weights.lambda;
  rep.k = weights.k;
  rep.m = weights.m;

  Rng rng(seed);
  for (int sm = 0; sm < samples; ++sm) {
    Field phi_T, psi_T;
    random_terminal_pair(rng, mesh, 8, phi_T, psi_T);
    AuditSample row;
    const double data_mag = max_abs(phi_T) + max_abs(psi_T);
    if (data_mag == 0.0) {
      row.skipped = true;
      rep.rows.push_back(row);
      continue;
    }
    const AdjointPair ad = ops.adjoint(phi_T, psi_T);
    row.lhs = inner(ad.phi[0], ad.phi[0], mesh) + inner(ad.psi[0], ad.psi[0], mesh);
    ShiftedSum rhs;
    for (int n = 1; n < mesh.nt; ++n)
      for (int i = 0; i < mesh.nx; ++i) {
        const double x = mesh.x(i);
        if (x < omega.lo || x > omega.hi) continue;
        rhs.add(2.0 * weights.logV(n, i), ad.psi[n][i], mesh.dx * mesh.dt);
      }
    const double log_rhs = rhs.log_value();
    row.rhs = std::exp(log_rhs);
    row.log10_lhs = log10_of(std::log(row.lhs));
    row.log10_rhs = log10_of(log_rhs);
    row.log10_ratio = row.log10_lhs - row.log10_rhs;
    row.counterexample = row.rhs < 1e-300 && row.lhs > 1e-12;
    rep.rows.push_back(row);
  }
  finalize_report(rep);
  return rep;
}

AuditReport carleman_ratio(int samples, const WeightSet& weights, const StepOperators& ops,
                           const Interval& omega, const Mesh1D& mesh, uint64_t seed) {
  if (samples < 1) throw ParameterError("carleman_ratio: samples must be >= 1");
  AuditReport rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.s = weights.s;
  rep.lambda = weights.lambda;
  rep.k = weights.k;
  rep.m = weights.m;

  const double s = weights.s, lam = weights.lambda;
  const double T = mesh.horizon;
  const double log_c1 = std::log(s) + 2.0 * std::log(lam);
  const double log_c2 = 3.0 * std::log(s) + 4.0 * std::log(lam);
  const double log_c3 = 6.0 * std::log(s) + 8.0 * std::log(lam);
  const double log_cr = std::log1p(std::pow(T, 2.0 * weights.m)) + 8.0 * std::log(s) +
                        8.0 * std::log(lam);

  Rng rng(seed);
  for (int sm = 0; sm < samples; ++sm) {
    Field phi_T, psi_T;
    random_terminal_pair(rng, mesh, 8, phi_T, psi_T);
    AuditSample row;
    if (max_abs(phi_T) + max_abs(psi_T) == 0.0) {
      row.skipped = true;
      rep.rows.push_back(row);
      continue;
    }
    const AdjointPair ad = ops.adjoint(phi_T, psi_T);
    ShiftedSum i_lap, i_grad, i_psi, rhs;
    for (int n = 1; n < mesh.nt; ++n) {
      const Field lap_phi = laplacian(ad.phi[n], mesh);
      const Field grad_phi = gradient(ad.phi[n], mesh);
      for (int i = 1; i < mesh.nx - 1; ++i) {
        const size_t id = static_cast<size_t>(n) * mesh.nx + i;
        const double phi = std::exp(weights.log_phi[id]);
        const double lxi = weights.log_xi[id];
        const double qw = mesh.dx * mesh.dt;
        i_lap.add(-2.0 * s * phi + lxi, lap_phi[i], qw);
        i_grad.add(-2.0 * s * phi + 3.0 * lxi, grad_phi[i], qw);
        i_psi.add(-2.0 * s * phi + 6.0 * lxi, ad.psi[n][i], qw);
        const double x = mesh.x(i);
        if (x >= omega.lo && x <= omega.hi)
          rhs.add(weights.log_W[id], ad.psi[n][i], qw);
      }
    }
    // LHS = c1*I_lap + c2*I_grad + c3*I_psi, combined in log space
    const std::array<double, 3> terms = {log_c1 + i_lap.log_value(),
                                         log_c2 + i_grad.log_value(),
                                         log_c3 + i_psi.log_value()};
    const double mx = std::max({terms[0], terms[1], terms[2]});
    double acc = 0.0;
    for (double t : terms)
      if (std::isfinite(t)) acc += std::exp(t - mx);
    const double log_lhs = mx + std::log(acc);
    const double log_rhs = log_cr + rhs.log_value();
    row.lhs = std::exp(log_lhs);
    row.rhs = std::exp(log_rhs);
    row.log10_lhs = log10_of(log_lhs);
    row.log10_rhs = log10_of(log_rhs);
    row.log10_ratio = log10_of(log_lhs - log_rhs);
    row.counterexample = row.rhs < 1e-300 && row.lhs > 1e-12;
    rep.rows.push_back(row);
  }
  finalize_report(rep);
  return rep;
}

namespace {

// Backward implicit solve of the adjoint pair with homogeneous Neumann
// conditions on both components (mirror ghost nodes; first-order terms
// vanish at the boundary nodes). All nx nodes are unknowns.
struct NeumannAdjoint {
  const Mesh1D& mesh;
  const CoefficientSet& coeffs;

  std::pair<SpaceTimeField, SpaceTimeField> solve(const Field& phi_T, const Field& psi_T) const {
    const int nx = mesh.nx, nt = mesh.nt;
    const double dt = mesh.dt, dx = mesh.dx;
    const double r = dt / (dx * dx);
    const double cc = dt / (2.0 * dx);
    SpaceTimeField phi(mesh), psi(mesh);
    phi[nt] = phi_T;
    psi[nt] = psi_T;

    using Blk = std::array<double, 4>;
    // phi-row: phi - dt(lap phi + a d_x phi - d_x psi) = phi^n
    // psi-row: psi - dt(lap psi - b d_x psi + B d_x phi) = psi^n
    // Mirror ghosts at the boundary: lap f = 2(f_inner - f_0)/dx^2, d_x f = 0.
    std::vector<Blk> D(nx), S(nx), P(nx);
    const Field& a = coeffs.a[0];
    const Field& b = coeffs.b[0];
    const Field& B = coeffs.B[0];
    for (int i = 0; i < nx; ++i) {
      D[i] = {1.0 + 2.0 * r, 0.0, 0.0, 1.0 + 2.0 * r};
      S[i] = {0, 0, 0, 0};
      P[i] = {0, 0, 0, 0};
    }
    P[0] = {-2.0 * r, 0.0, 0.0, -2.0 * r};
    S[nx - 1] = {-2.0 * r, 0.0, 0.0, -2.0 * r};
    for (int i = 1; i < nx - 1; ++i) {
      S[i] = {-r + cc * a[i], -cc, cc * B[i], -r - cc * b[i]};
      P[i] = {-r - cc * a[i], +cc, -cc * B[i], -r + cc * b[i]};
    }
    // block-Thomas
    auto inv = [](const Blk& m) {
      const double det = m[0] * m[3] - m[1] * m[2];
      const double id = 1.0 / det;
      return Blk{m[3] * id, -m[1] * id, -m[2] * id, m[0] * id};
    };
    auto mul = [](const Blk& m, const Blk& n) {
      return Blk{m[0] * n[0] + m[1] * n[2], m[0] * n[1] + m[1] * n[3],
                 m[2] * n[0] + m[3] * n[2], m[2] * n[1] + m[3] * n[3]};
    };
    std::vector<Blk> Ci(nx), Lf(nx);
    Blk C = D[0];
    Ci[0] = inv(C);
    for (int i = 1; i < nx; ++i) {
      Lf[i] = mul(S[i], Ci[i - 1]);
      const Blk LP = mul(Lf[i], P[i - 1]);
      C = {D[i][0] - LP[0], D[i][1] - LP[1], D[i][2] - LP[2], D[i][3] - LP[3]};
      Ci[i] = inv(C);
    }
    // delta form: M delta = -dt K P^n with the spatial terms evaluated as
    // node differences, so exact constant data produces exact-zero updates
    std::vector<double> u(2 * nx), rhs(2 * nx);
    for (int i = 0; i < nx; ++i) {
      u[2 * i] = phi_T[i];
      u[2 * i + 1] = psi_T[i];
    }
    auto solve_in_place = [&](std::vector<double>& w) {
      for (int i = 1; i < nx; ++i) {
        const double g0 = Lf[i][0] * w[2 * (i - 1)] + Lf[i][1] * w[2 * (i - 1) + 1];
        const double g1 = Lf[i][2] * w[2 * (i - 1)] + Lf[i][3] * w[2 * (i - 1) + 1];
        w[2 * i] -= g0;
        w[2 * i + 1] -= g1;
      }
      {
        const int i = nx - 1;
        const double t0 = Ci[i][0] * w[2 * i] + Ci[i][1] * w[2 * i + 1];
        const double t1 = Ci[i][2] * w[2 * i] + Ci[i][3] * w[2 * i + 1];
        w[2 * i] = t0;
        w[2 * i + 1] = t1;
      }
      for (int i = nx - 2; i >= 0; --i) {
        const double p0 = P[i][0] * w[2 * (i + 1)] + P[i][1] * w[2 * (i + 1) + 1];
        const double p1 = P[i][2] * w[2 * (i + 1)] + P[i][3] * w[2 * (i + 1) + 1];
        const double g0 = w[2 * i] - p0;
        const double g1 = w[2 * i + 1] - p1;
        w[2 * i] = Ci[i][0] * g0 + Ci[i][1] * g1;
        w[2 * i + 1] = Ci[i][2] * g0 + Ci[i][3] * g1;
      }
    };
    for (int n = nt; n >= 1; --n) {
      for (int i = 0; i < nx; ++i) {
        const int im = i == 0 ? 1 : i - 1;
        const int ip = i == nx - 1 ? nx - 2 : i + 1;
        const double f = u[2 * i], g = u[2 * i + 1];
        const double lap_f = (u[2 * im] - f) + (u[2 * ip] - f);
        const double lap_g = (u[2 * im + 1] - g) + (u[2 * ip + 1] - g);
        const double dfx = (i == 0 || i == nx - 1) ? 0.0 : u[2 * ip] - u[2 * im];
        const double dgx = (i == 0 || i == nx - 1) ? 0.0 : u[2 * ip + 1] - u[2 * im + 1];
        // rhs = -dt K u = dt (lap + first-order terms) in the stepped form
        rhs[2 * i] = r * lap_f + cc * a[i] * dfx - cc * dgx;
        rhs[2 * i + 1] = r * lap_g - cc * b[i] * dgx + cc * B[i] * dfx;
      }
      solve_in_place(rhs);
      for (int i = 0; i < 2 * nx; ++i) u[i] += rhs[i];
      for (int i = 0; i < nx; ++i) {
        phi[n - 1][i] = u[2 * i];
        psi[n - 1][i] = u[2 * i + 1];
      }
    }
    return {phi, psi};
  }
};

}  // namespace

AuditReport neumann_counterexample(const Mesh1D& mesh, const WeightSet& weights,
                                   const CoefficientSet& coeffs, const Interval& omega) {
  AuditReport rep;
  rep.samples = 1;
  rep.s = weights.s;
  rep.lambda = weights.lambda;
  rep.k = weights.k;
  rep.m = weights.m;

  Field phi_T(mesh.nx, 1.0), psi_T(mesh.nx, 0.0);
  NeumannAdjoint na{mesh, coeffs};
  auto [phi, psi] = na.solve(phi_T, psi_T);

  double dev = 0.0;
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i)
      dev = std::max({dev, std::abs(phi[n][i] - 1.0), std::abs(psi[n][i])});

  AuditSample row;
  row.lhs = inner(phi[0], phi[0], mesh) + inner(psi[0], psi[0], mesh);
  ShiftedSum rhs;
  for (int n = 1; n < mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i) {
      const double x = mesh.x(i);
      if (x < omega.lo || x > omega.hi) continue;
      rhs.add(2.0 * weights.logV(n, i), psi[n][i], mesh.dx * mesh.dt);
    }
  const double log_rhs = rhs.log_value();
  row.rhs = std::exp(log_rhs);
  row.log10_lhs = log10_of(std::log(row.lhs));
  row.log10_rhs = log10_of(log_rhs);
  row.log10_ratio = row.log10_lhs - row.log10_rhs;
  row.counterexample = row.rhs < 1e-300 && row.lhs > 1e-12;
  rep.rows.push_back(row);
  rep.counterexample_evidence = row.counterexample;
  rep.max_ratio = row.rhs > 0.0 ? row.lhs / row.rhs : std::numeric_limits<double>::infinity();
  rep.median_ratio = rep.max_ratio;
  rep.max_log10_ratio = row.log10_ratio;
  rep.median_log10_ratio = row.log10_ratio;
  rep.constancy_deviation = dev;
  rep.verdict = rep.counterexample_evidence ? "observability fails" : "constants not preserved";
  return rep;
}

}  // namespace ks
