"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

ks = pytest.importorskip("kscontrol")


@pytest.fixture(scope="module")
def mesh():
    return ks.Mesh1D(65, 100, 1.0, 6.0)


def test_mesh_calculus(mesh):
    x = np.array([mesh.x(i) for i in range(mesh.nx)])
    quad = x * (1.0 - x)
    lap = ks.laplacian(quad, mesh)
    assert np.allclose(lap[1:-1], -2.0, atol=1e-12)
    assert abs(ks.norm(np.ones(mesh.nx), mesh, "L2_space") - 1.0) < 1e-12


def test_trajectory_energy_decays(mesh):
    w0 = ks.sine_field(mesh, 1e-3, 1)
    v0 = ks.sine_field(mesh, 1e-3, 1)
    r = ks.solve_free_trajectory(mesh, 1.0, w0, v0)
    e = np.array(r["energy"])
    assert np.all(np.diff(e) <= 1e-10)
    assert r["min_v"] >= -1e-10


def test_hum_control_reduces_terminal(mesh):
    rho = ks.build_rho(mesh, 0.4, 0.6)
    cutoff = ks.build_cutoff(mesh, 0.3, 0.7, 0.34, 0.66)
    weights = ks.build_weight_set(mesh, rho, 1.01, 1.001, 4, 6.0)
    ops = ks.steady_operators(mesh, 0.0, 0.0, 1.0, cutoff)
    y0 = ks.sine_field(mesh, 1e-2, 1)
    z0 = np.zeros(mesh.nx)
    sol = ks.solve_penalized(ops, weights, 1e-8, y0, z0)
    assert sol["cg_iterations"] <= 500
    assert sol["terminal_norm"] <= 1e-3 * sol["initial_norm"]
    h = sol["h"]
    x = np.array([mesh.x(i) for i in range(mesh.nx)])
    outside = (x <= 0.3) | (x >= 0.7)
    assert np.all(h[:, outside] == 0.0)


def test_duality_gap_tiny(mesh):
    cutoff = ks.build_cutoff(mesh, 0.3, 0.7, 0.34, 0.66)
    ops = ks.steady_operators(mesh, 0.2, -0.1, 1.0, cutoff)
    rng = np.random.default_rng(0)
    x = np.array([mesh.x(i) for i in range(mesh.nx)])
    def smooth():
        f = np.zeros(mesh.nx)
        for j in range(1, 5):
            f += rng.standard_normal() * np.sin(j * math.pi * x)
        f[0] = f[-1] = 0.0
        return f
    h = np.zeros((mesh.nt + 1, mesh.nx))
    for n in range(mesh.nt + 1):
        h[n] = smooth()
    gap = ks.duality_gap(ops, smooth(), smooth(), h, smooth(), smooth())
    assert gap <= 1e-10


def test_cole_hopf_round_trip(mesh):
    u = np.full((mesh.nt + 1, mesh.nx), 0.5)
    v = np.full((mesh.nt + 1, mesh.nx), -0.25)
    out = ks.physical_scaling(mesh, u, v, D=2.0, chi=4.0, mu=1.0, direction="to_normalized")
    assert out["horizon"] == pytest.approx(2.0 * mesh.horizon, rel=1e-14)
    assert np.allclose(out["v"], 2.0 * v, rtol=1e-14)


def test_neumann_counterexample(mesh):
    rho = ks.build_rho(mesh, 0.4, 0.6)
    weights = ks.build_weight_set(mesh, rho, 1.01, 1.001, 4, 6.0)
    rep = ks.neumann_counterexample(mesh, weights)
    assert rep["verdict"] == "observability fails"
    assert rep["rhs"] == 0.0
    assert rep["lhs"] == pytest.approx(mesh.length, rel=1e-12)
