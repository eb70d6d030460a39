#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kscontrol/linear_pde.hpp"
#include "kscontrol/rng.hpp"

using namespace ks;

namespace {

CutoffProfile mid_cutoff(const Mesh1D& m) { return build_cutoff(m, {0.3, 0.7}, {0.34, 0.66}); }

Field smooth_random(Rng& rng, const Mesh1D& m, int modes = 6) {
  Field f(m.nx, 0.0);
  for (int j = 1; j <= modes; ++j) {
    const double a = rng.next_normal();
    for (int i = 1; i < m.nx - 1; ++i) f[i] += a * std::sin(j * M_PI * m.x(i) / m.length);
  }
  return f;
}

SpaceTimeField smooth_random_st(Rng& rng, const Mesh1D& m) {
  SpaceTimeField f(m);
  for (int n = 0; n <= m.nt; ++n) f[n] = smooth_random(rng, m, 4);
  return f;
}

}  // namespace

TEST_CASE("zero data and zero control give zero states") {
  Mesh1D m(33, 16, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.3, -0.2, 1.5), mid_cutoff(m), m);
  Field z(m.nx, 0.0);
  StatePair st = ops.forward(z, z);
  for (int n = 0; n <= m.nt; ++n)
    for (int i = 0; i < m.nx; ++i) {
      CHECK(st.y[n][i] == 0.0);
      CHECK(st.z[n][i] == 0.0);
    }
}

TEST_CASE("B positivity is required under chemical actuation only") {
  Mesh1D m(33, 16, 1.0, 1.0);
  CHECK_THROWS_AS(StepOperators(steady_coefficients(m, 0.0, 0.0, 0.0), mid_cutoff(m), m),
                  HypothesisError);
  CHECK_NOTHROW(
      StepOperators(steady_coefficients(m, 0.0, 0.0, 0.0, Actuation::density), mid_cutoff(m), m));
}

TEST_CASE("first step equals the pure heat step when cross couplings are masked") {
  Mesh1D m(101, 100, 1.0, 1.0);
  CouplingMask mask;
  mask.cross_Bz = false;
  mask.cross_y = false;
  StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m, mask);
  Field y0 = sine_field(m, 1.0, 1);
  Field z0(m.nx, 0.0);
  StatePair st = ops.forward(y0, z0);
  // reference: scalar implicit heat step (I - dt lap) y1 = y0
  const int ni = m.nx - 2;
  std::vector<double> a(ni, -m.dt / (m.dx * m.dx)), b(ni, 1.0 + 2.0 * m.dt / (m.dx * m.dx));
  std::vector<double> rhs(ni);
  for (int j = 0; j < ni; ++j) rhs[j] = y0[j + 1];
  for (int j = 1; j < ni; ++j) {
    const double w = a[j] / b[j - 1];
    b[j] -= w * a[j - 1];
    rhs[j] -= w * rhs[j - 1];
  }
  std::vector<double> ref(ni);
  ref[ni - 1] = rhs[ni - 1] / b[ni - 1];
  for (int j = ni - 2; j >= 0; --j) ref[j] = (rhs[j] - a[j] * ref[j + 1]) / b[j];
  for (int j = 0; j < ni; ++j)
    CHECK(st.y[1][j + 1] == doctest::Approx(ref[j]).epsilon(1e-12));
}

TEST_CASE("heat oracle: masked z-equation decays like exp(-pi^2 T)") {
  // parabolic refinement keeps the dt and dx^2 error contributions balanced
  auto run = [](int nx, int nt) {
    Mesh1D m(nx, nt, 1.0, 0.25);
    CouplingMask mask;
    mask.cross_y = false;  // z no longer sees d_x y
    StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m, mask);
    Field z0 = sine_field(m, 1.0, 1);
    Field y0(m.nx, 0.0);
    StatePair st = ops.forward(y0, z0);
    double num = 0.0, den = 0.0;
    const double decay = std::exp(-M_PI * M_PI * m.horizon);
    for (int i = 0; i < m.nx; ++i) {
      const double exact = decay * std::sin(M_PI * m.x(i));
      num += std::pow(st.z[m.nt][i] - exact, 2);
      den += exact * exact;
    }
    return std::sqrt(num / den);
  };
  const double fine = run(201, 400);
  CHECK(fine <= 1e-2);
  const double coarse = run(101, 100);
  CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("adjoint heat oracle: masked backward solve matches the heat kernel") {
  Mesh1D m(201, 400, 1.0, 0.25);
  CouplingMask mask;
  mask.cross_y = false;
  mask.cross_Bz = false;
  StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m, mask);
  Field psi_T = sine_field(m, 1.0, 1);
  Field phi_T(m.nx, 0.0);
  AdjointPair ad = ops.adjoint(phi_T, psi_T);
  double num = 0.0, den = 0.0;
  const double decay = std::exp(-M_PI * M_PI * m.horizon);
  for (int i = 0; i < m.nx; ++i) {
    const double exact = decay * std::sin(M_PI * m.x(i));
    num += std::pow(ad.psi[0][i] - exact, 2);
    den += exact * exact;
  }
  CHECK(std::sqrt(num / den) <= 1e-2);
}

TEST_CASE("self-convergence of the coupled solver at order dt + dx^2") {
  auto solve_at = [](int nx, int nt) {
    Mesh1D m(nx, nt, 1.0, 0.5);
    StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m);
    Field z0 = sine_field(m, 1.0, 1);
    Field y0(m.nx, 0.0);
    return ops.forward(y0, z0);
  };
  // reference on a much finer mesh, compared at shared nodes
  StatePair ref = solve_at(401, 6400);
  auto err = [&](int nx, int nt) {
    StatePair st = solve_at(nx, nt);
    const int sx = 400 / (nx - 1), stp = 6400 / nt;
    double e = 0.0;
    for (int i = 0; i < nx; ++i)
      e = std::max(e, std::abs(st.y[nt][i] - ref.y[6400][i * sx]) +
                          std::abs(st.z[nt][i] - ref.z[6400][i * sx]));
    (void)stp;
    return e;
  };
  const double e1 = err(101, 400), e2 = err(201, 1600);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("adjoint self-convergence: the transpose chain is a consistent scheme") {
  // the transpose of the forward factors, run backward, approximates the
  // continuous adjoint system at order dt + dx^2
  auto solve_at = [](int nx, int nt) {
    Mesh1D m(nx, nt, 1.0, 0.5);
    StepOperators ops(steady_coefficients(m, 0.3, -0.2, 1.0), mid_cutoff(m), m);
    Field fT = sine_field(m, 1.0, 1);
    Field gT = sine_field(m, 0.5, 2);
    return ops.adjoint(fT, gT);
  };
  AdjointPair ref = solve_at(401, 6400);
  auto err = [&](int nx, int nt) {
    AdjointPair ad = solve_at(nx, nt);
    const int sx = 400 / (nx - 1);
    double e = 0.0;
    for (int i = 0; i < nx; ++i)
      e = std::max(e, std::abs(ad.phi[0][i] - ref.phi[0][i * sx]) +
                          std::abs(ad.psi[0][i] - ref.psi[0][i * sx]));
    return e;
  };
  const double e1 = err(101, 400), e2 = err(201, 1600);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3));
}

TEST_CASE("transpose identity: forward and adjoint maps are exactly dual") {
  Mesh1D m(65, 80, 1.0, 1.0);
  Rng rng(7);
  SpaceTimeField a_c(m), b_c(m), B_c(m);
  for (int n = 0; n <= m.nt; ++n)
    for (int i = 0; i < m.nx; ++i) {
      const double x = m.x(i), t = m.t(n);
      a_c[n][i] = 0.4 * std::sin(2 * M_PI * x) * std::cos(t);
      b_c[n][i] = -0.3 * std::cos(M_PI * x);
      B_c[n][i] = 1.0 + 0.5 * std::sin(M_PI * x) * std::sin(t);
    }
  CoefficientSet coeffs{a_c, b_c, B_c, Actuation::chemical};
  StepOperators ops(coeffs, mid_cutoff(m), m);

  for (int rep = 0; rep < 5; ++rep) {
    Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
    Field fT = smooth_random(rng, m), gT = smooth_random(rng, m);
    StatePair st = ops.forward(y0, z0);
    AdjointPair ad = ops.adjoint(fT, gT);
    const double lhs = inner(st.y[m.nt], fT, m) + inner(st.z[m.nt], gT, m);
    const double rhs = inner(y0, ad.phi[0], m) + inner(z0, ad.psi[0], m);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + std::abs(rhs)));
  }
}

TEST_CASE("duality gap vanishes to rounding") {
  Mesh1D m(101, 200, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.2, -0.1, 1.0), mid_cutoff(m), m);
  Field zero(m.nx, 0.0);
  SpaceTimeField h0(m);

  SUBCASE("all zero inputs") {
    CHECK(duality_gap(ops, zero, zero, h0, zero, zero) == 0.0);
  }
  SUBCASE("random smooth instances stay below 1e-10") {
    Rng rng(12345);
    for (int rep = 0; rep < 20; ++rep) {
      Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
      Field fT = smooth_random(rng, m), gT = smooth_random(rng, m);
      SpaceTimeField h = smooth_random_st(rng, m);
      CHECK(duality_gap(ops, y0, z0, h, fT, gT) <= 1e-10);
    }
  }
  SUBCASE("zero terminal data reduces to the zero adjoint") {
    Rng rng(99);
    Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
    CHECK(duality_gap(ops, y0, z0, h0, zero, zero) == 0.0);
  }
  SUBCASE("density actuation pairs the control against phi") {
    StepOperators dops(steady_coefficients(m, 0.2, -0.1, 1.0, Actuation::density),
                       mid_cutoff(m), m);
    Rng rng(31);
    for (int rep = 0; rep < 5; ++rep) {
      Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
      Field fT = smooth_random(rng, m), gT = smooth_random(rng, m);
      SpaceTimeField h = smooth_random_st(rng, m);
      CHECK(duality_gap(dops, y0, z0, h, fT, gT) <= 1e-10);
    }
  }
}

TEST_CASE("forward solve is linear in data and control") {
  Mesh1D m(65, 100, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.1, 0.2, 1.0), mid_cutoff(m), m);
  Rng rng(3);
  Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
  SpaceTimeField h = smooth_random_st(rng, m);
  StatePair st1 = ops.forward(y0, z0, &h);
  Field y2 = y0, z2 = z0;
  for (double& v : y2) v *= 2.0;
  for (double& v : z2) v *= 2.0;
  SpaceTimeField h2 = h;
  for (Field& s : h2.snaps)
    for (double& v : s) v *= 2.0;
  StatePair st2 = ops.forward(y2, z2, &h2);
  for (int i = 0; i < m.nx; ++i) {
    CHECK(st2.y[m.nt][i] == doctest::Approx(2.0 * st1.y[m.nt][i]).epsilon(1e-12));
    CHECK(st2.z[m.nt][i] == doctest::Approx(2.0 * st1.z[m.nt][i]).epsilon(1e-12));
  }
}

TEST_CASE("actuation locality: control outside omega changes nothing") {
  Mesh1D m(101, 50, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m);
  Rng rng(5);
  Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
  SpaceTimeField h(m);
  for (int n = 0; n <= m.nt; ++n)
    for (int i = 0; i < m.nx; ++i)
      if (m.x(i) < 0.3 || m.x(i) > 0.7) h[n][i] = 10.0 * std::sin(n + i);
  StatePair with = ops.forward(y0, z0, &h);
  StatePair without = ops.forward(y0, z0);
  for (int i = 0; i < m.nx; ++i) {
    CHECK(with.y[m.nt][i] == without.y[m.nt][i]);
    CHECK(with.z[m.nt][i] == without.z[m.nt][i]);
  }
}

TEST_CASE("runaway states trip the divergence guard") {
  Mesh1D m(101, 100, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.0, 0.0, 1.0), mid_cutoff(m), m);
  Field zero(m.nx, 0.0);
  SpaceTimeField h(m, 1e9);
  CHECK_THROWS_AS(ops.forward(zero, zero, &h), DivergenceError);
}

TEST_CASE("boundary columns of computed states are exactly zero") {
  Mesh1D m(33, 40, 1.0, 1.0);
  StepOperators ops(steady_coefficients(m, 0.5, 0.5, 2.0), mid_cutoff(m), m);
  Rng rng(11);
  Field y0 = smooth_random(rng, m), z0 = smooth_random(rng, m);
  StatePair st = ops.forward(y0, z0);
  for (int n = 0; n <= m.nt; ++n) {
    CHECK(st.y[n][0] == 0.0);
    CHECK(st.y[n][m.nx - 1] == 0.0);
    CHECK(st.z[n][0] == 0.0);
    CHECK(st.z[n][m.nx - 1] == 0.0);
  }
}
