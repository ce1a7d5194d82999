"""Theta bases, winding certification and critical points on the torus."""

import cmath
import math

import numpy as np
import pytest
from scipy import stats

from branchcover.elliptic import (BundlePoint, EllipticSurface, ThetaBasis,
                                  base_theta_basis, critical_points_torus,
                                  sample_bundle, sample_torus,
                                  sample_torus_indices, theta_basis,
                                  torus_point_to_z, torus_roots_batch,
                                  winding_count, z_to_torus_point)
from branchcover.ensemble import EnsembleSpec
from branchcover.errors import (DegeneratePairError, DomainError,
                                IncompleteRootSetError)
from branchcover.geometry import SurfaceGeometry, TorusPoint, build_grid
from branchcover.roots import CriticalSet

TAU = 0.25 + 1.1j


# ---------------------------------------------------------------------------
# surface and bundle sampling


def test_surface_modulus_validation():
    with pytest.raises(DomainError):
        EllipticSurface(1.0 - 0.5j)
    assert EllipticSurface(TAU).geometry.kind == "torus"


def test_bundle_point_validation_and_shift():
    with pytest.raises(DomainError):
        BundlePoint(1.0, 0.5)
    t = BundlePoint(0.25, 0.5)
    assert t.shift(2j) == 0.25 + 1j


def test_sample_bundle_uniformity():
    rng = np.random.default_rng(0)
    draws = np.array([[b.t1, b.t2] for b in
                      (sample_bundle(rng) for _ in range(100_000))])
    assert np.max(np.abs(draws.mean(axis=0) - 0.5)) < 0.005
    assert stats.kstest(draws[:10_000, 0], "uniform").pvalue > 0.01
    assert stats.kstest(draws[:10_000, 1], "uniform").pvalue > 0.01


def test_sample_torus_determinism():
    spec = EnsembleSpec(kind="torus", degree=3, seed=5)
    t1, a1, b1 = sample_torus(spec, 7)
    t2, a2, b2 = sample_torus(spec, 7)
    assert (t1.t1, t1.t2) == (t2.t1, t2.t2)
    assert np.array_equal(a1, a2) and np.array_equal(b1, b2)
    T0, A, B = sample_torus_indices(spec, [7])
    assert T0[0] == complex(t1.t1, t1.t2)
    assert np.array_equal(A[0], a1) and np.array_equal(B[0], b1)


# ---------------------------------------------------------------------------
# theta basis


def test_quasi_periodicity():
    # theta(z+1) = theta(z); theta(z+tau) = exp(-i pi d tau - 2 pi i d z) theta(z)
    rng = np.random.default_rng(1)
    for d in (1, 2, 5):
        basis = theta_basis(d, TAU)
        z = (rng.random(100) - 0.5) + 1j * TAU.imag * (rng.random(100) - 0.5)
        for j in range(d):
            v = basis.theta_values(j, z)
            v1 = basis.theta_values(j, z + 1.0)
            vt = basis.theta_values(j, z + TAU)
            factor = np.exp(-1j * math.pi * d * TAU - 2j * math.pi * d * z)
            scale = np.abs(v) + 1e-300
            assert np.max(np.abs(v1 - v) / scale) < 1e-12
            assert np.max(np.abs(vt - factor * v) / np.abs(factor * v)) < 1e-11


def test_quasi_periodicity_with_translate():
    # keep z + t0 + tau inside the height band where the truncated series is
    # accurate (the window is sized for the fundamental domain)
    d = 3
    basis = theta_basis(d, TAU, BundlePoint(0.3, 0.3))
    rng = np.random.default_rng(2)
    z = rng.random(50) - 1j * TAU.imag * 0.5 * rng.random(50)
    t0 = 0.3 + 0.3 * TAU
    v = basis.theta_values(0, z)
    vt = basis.theta_values(0, z + TAU)
    factor = np.exp(-1j * math.pi * d * TAU - 2j * math.pi * d * (z + t0))
    assert np.max(np.abs(vt - factor * v) / np.abs(factor * v)) < 1e-11


def test_degree_one_section_has_one_zero():
    basis = theta_basis(1, TAU)
    count = winding_count(lambda z: basis.theta_values(0, z),
                          -0.01 - 0.02 * TAU, TAU)
    assert count == 1


def test_gram_matrix_identity():
    # quadrature Gram of the weighted basis functions, ~1e5 nodes
    d = 4
    basis = theta_basis(d, TAU)
    grid = build_grid("torus", 100_000, tau=TAU)
    z = grid.xs + TAU * grid.ys
    w = np.exp(basis.log_weight(z))
    vals = np.stack([basis.theta_values(j, z) * w for j in range(d)])
    gram = (vals * grid.weights) @ vals.conj().T
    assert np.max(np.abs(gram - np.eye(d))) < 1e-6


def test_theta_basis_validation():
    with pytest.raises(DomainError):
        ThetaBasis(0, TAU)
    with pytest.raises(DomainError):
        ThetaBasis(2, 1.0 + 0j)
    with pytest.raises(DomainError):
        theta_basis(3, TAU).section_freq_coeffs(np.ones(2))


def test_weight_makes_norm_doubly_periodic():
    d = 3
    basis = theta_basis(d, TAU)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    z = rng.random(20) + 1j * TAU.imag * rng.random(20)
    n0 = basis.section_norm(c, z)
    n1 = basis.section_norm(c, z + 1.0)
    nt = basis.section_norm(c, z + TAU)
    assert np.max(np.abs(n1 / n0 - 1.0)) < 1e-10
    assert np.max(np.abs(nt / n0 - 1.0)) < 1e-10


# ---------------------------------------------------------------------------
# charts


def test_lattice_chart_roundtrip():
    rng = np.random.default_rng(4)
    for _ in range(20):
        p = TorusPoint(float(rng.random()), float(rng.random()))
        q = z_to_torus_point(torus_point_to_z(p, TAU), TAU)
        assert abs(p.x - q.x) < 1e-12 and abs(p.y - q.y) < 1e-12


# ---------------------------------------------------------------------------
# winding certification


def test_winding_count_polynomial_in_q():
    # q = exp(2 pi i z) maps the fundamental domain onto an annulus; q - q0
    # has exactly one zero there when |q0| sits inside
    q0 = 0.3 * cmath.exp(-2j * math.pi * 0.3)

    def fn(z):
        return np.exp(2j * math.pi * z) - q0

    assert winding_count(fn, -0.013 - 0.017j, 1j) == 1


# ---------------------------------------------------------------------------
# critical points


def test_riemann_hurwitz_torus():
    for d in (2, 3):
        spec = EnsembleSpec(kind="torus", degree=d, seed=d)
        for i in range(3):
            t, a, b = sample_torus(spec, i)
            basis = ThetaBasis(d, TAU, t)
            cs = critical_points_torus((a, b), basis)
            assert cs.total_multiplicity == 2 * d
            assert cs.genus == 1 and cs.tau == TAU


def test_torus_residuals_small():
    d = 2
    spec = EnsembleSpec(kind="torus", degree=d, seed=11)
    t, a, b = sample_torus(spec, 0)
    basis = ThetaBasis(d, TAU, t)
    cs = critical_points_torus((a, b), basis)
    fa = basis.section_freq_coeffs(a)
    fb = basis.section_freq_coeffs(b)

    def weighted_w(z):
        f = basis.eval_freq(fa, z)
        g = basis.eval_freq(fb, z)
        f1 = basis.eval_freq(fa, z, deriv=1)
        g1 = basis.eval_freq(fb, z, deriv=1)
        return np.abs(f * g1 - g * f1) \
            * np.exp(basis.log_weight(z, bundle_degree=2 * d))

    grid = build_grid("torus", 4096, tau=TAU)
    zg = grid.xs + TAU * grid.ys
    sup = float(np.max(weighted_w(zg)))
    zr = np.array([torus_point_to_z(p, TAU) for p, _ in cs.points])
    assert float(np.max(weighted_w(zr))) < 1e-8 * sup


def test_dependent_sections_rejected():
    basis = theta_basis(3, TAU)
    rng = np.random.default_rng(5)
    a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    with pytest.raises(DegeneratePairError):
        critical_points_torus((a, (2.0 - 1.0j) * a), basis)


def test_translate_equivariance_exact():
    # shifting the bundle translate by s shifts every critical point by -s
    d = 2
    spec = EnsembleSpec(kind="torus", degree=d, seed=6)
    t, a, b = sample_torus(spec, 1)
    basis = ThetaBasis(d, TAU, t)
    cs = critical_points_torus((a, b), basis)
    s = BundlePoint(0.37, 0.21)
    shifted = BundlePoint((t.t1 + s.t1) % 1.0, (t.t2 + s.t2) % 1.0)
    basis2 = ThetaBasis(d, TAU, shifted)
    cs2 = critical_points_torus((a, b), basis2)
    geo = SurfaceGeometry.torus(TAU)
    moved = sorted((TorusPoint.make(p.x - s.t1, p.y - s.t2) for p, _ in cs.points),
                   key=lambda p: (round(p.x, 6), round(p.y, 6)))
    got = sorted((p for p, _ in cs2.points),
                 key=lambda p: (round(p.x, 6), round(p.y, 6)))
    for p, q in zip(moved, got):
        assert geo.distance(p, q) < 1e-7


def test_haar_covariance_ks():
    # the law of T_u(cap) is unchanged by a global translate of the bundle
    d = 2
    n = 10_000
    cap_c = TorusPoint(0.45, 0.55)
    radius = math.sqrt(0.08 / math.pi)
    geo = SurfaceGeometry.torus(1j)

    def t_values(seed, shift):
        spec = EnsembleSpec(kind="torus", degree=d, seed=seed)
        T0, A, B = sample_torus_indices(spec, range(n))
        T0 = (T0.real + shift[0]) % 1.0 + 1j * ((T0.imag + shift[1]) % 1.0)
        xs, ys, ok = torus_roots_batch(d, 1j, T0, A, B)
        dist = geo.torus_distance_arrays(xs[ok], ys[ok], cap_c.x, cap_c.y)
        return (dist < radius).mean(axis=1)

    t_a = t_values(0, (0.0, 0.0))
    t_b = t_values(1, (0.37, 0.81))
    assert stats.ks_2samp(t_a, t_b).pvalue > 0.01


def test_batch_matches_certified_path():
    d = 3
    spec = EnsembleSpec(kind="torus", degree=d, seed=8)
    n = 12
    T0, A, B = sample_torus_indices(spec, range(n))
    xs, ys, ok = torus_roots_batch(d, TAU, T0, A, B)
    geo = SurfaceGeometry.torus(TAU)
    checked = 0
    for r in range(n):
        if not ok[r]:
            continue
        t = BundlePoint(float(T0[r].real), float(T0[r].imag))
        basis = ThetaBasis(d, TAU, t)
        cs = critical_points_torus((A[r], B[r]), basis)
        flat = [p for p, m in cs.points for _ in range(m)]
        D = np.array([[geo.distance(TorusPoint.make(xs[r, i], ys[r, i]), p)
                       for p in flat] for i in range(2 * d)])
        assert max(D.min(axis=0).max(), D.min(axis=1).max()) < 1e-6
        checked += 1
    assert checked >= n - 1


def test_critical_set_json_roundtrip_genus1():
    d = 2
    spec = EnsembleSpec(kind="torus", degree=d, seed=9)
    t, a, b = sample_torus(spec, 0)
    cs = critical_points_torus((a, b), ThetaBasis(d, TAU, t))
    back = CriticalSet.from_json(cs.to_json())
    assert back.genus == 1 and back.tau == TAU
    assert back.total_multiplicity == 2 * d


def test_base_theta_basis_cache():
    b1 = base_theta_basis(4, TAU)
    b2 = base_theta_basis(4, TAU)
    assert b1 is b2
