"""Root finders, critical sets and the empirical measure (genus 0)."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchcover.ensemble import (EnsembleSpec, SectionPair, make_basis,
                                  random_su2, rotate_coefficients,
                                  rotate_point, sample_pair)
from branchcover.errors import CommonZeroError, DegeneratePairError
from branchcover.geometry import Cap, R_SPHERE, SpherePoint, build_grid
from branchcover.roots import (CriticalSet, aberth_roots, companion_roots,
                               critical_points, empirical_measure,
                               hausdorff_chordal, roots_binary_form)
from branchcover.wronskian import jacobian_form, sup_norm, wronskian_norm


def pair_from_chart(f, g):
    """SectionPair whose chart polynomials are exactly f and g."""
    d = len(f) - 1
    basis = make_basis(d)
    a = (np.asarray(f, dtype=complex)[::-1]) / basis.weights
    b = (np.asarray(g, dtype=complex)[::-1]) / basis.weights
    return SectionPair(d, a, b)


def as_multiset(found):
    return sorted(((round(p.z0.real, 6), round(p.z0.imag, 6),
                    round(p.z1.real, 6), round(p.z1.imag, 6)), m)
                  for p, m in found)


# ---------------------------------------------------------------------------
# binary-form roots


def test_coordinate_product_roots():
    # z0 z1: one root at each pole
    found = roots_binary_form(np.array([0.0, 1.0, 0.0]))
    assert sorted(m for _, m in found) == [1, 1]
    pts = {((round(abs(p.z0))), round(abs(p.z1))) for p, _ in found}
    assert pts == {(1, 0), (0, 1)}


def test_sum_of_squares_roots():
    # z0^2 + z1^2 <-> chart z^2 + 1: roots [1:i], [1:-i]
    found = roots_binary_form(np.array([1.0, 0.0, 1.0]))
    assert len(found) == 2
    for p, m in found:
        assert m == 1
        assert abs(p.z0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert abs(p.z1.imag) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_constructed_multiplicity():
    # (z0 - z1)^3 z1: triple root at [1:1]/sqrt2, simple at [1:0].
    # a triple root is located to ~eps^(1/3), so the clustering radius
    # 10*sqrt(tol) needs tol >~ 1e-8 to see one cluster
    c = np.array([0.0, 1.0, -3.0, 3.0, -1.0], dtype=complex)
    found = roots_binary_form(c, tol=1e-8)
    mults = sorted(m for _, m in found)
    assert mults == [1, 3]
    for p, m in found:
        if m == 3:
            assert abs(p.z0 - p.z1) < 1e-5
        else:
            assert abs(p.z1) < 1e-12


def test_random_form_matches_companion_oracle():
    rng = np.random.default_rng(0)
    c = rng.standard_normal(21) + 1j * rng.standard_normal(21)
    a = roots_binary_form(c)
    b = companion_roots(c)
    assert hausdorff_chordal(a, b) < 1e-8


def test_zero_form_rejected():
    with pytest.raises(DegeneratePairError):
        roots_binary_form(np.zeros(5))


def test_aberth_batch_shapes_and_convergence():
    rng = np.random.default_rng(1)
    C = rng.standard_normal((16, 13)) + 1j * rng.standard_normal((16, 13))
    roots, conv = aberth_roots(C)
    assert roots.shape == (16, 12) and conv.shape == (16,)
    assert conv.all()
    # residuals at the returned roots are tiny relative to the coeff scale
    for r in range(16):
        vals = np.polyval(C[r, ::-1], roots[r])
        scale = np.max(np.abs(C[r])) * (1 + np.abs(roots[r])) ** 12
        assert np.max(np.abs(vals) / scale) < 1e-10


@given(st.lists(st.complex_numbers(max_magnitude=3.0, allow_nan=False,
                                   allow_infinity=False),
                min_size=2, max_size=8))
@settings(max_examples=40, deadline=None)
def test_roots_recovered_from_known_factorization(zs):
    # build prod (z - z_i) and require recovery of every well-separated root
    zs = [z for z in zs if abs(z) < 3.0]
    if len(zs) < 2:
        return
    sep = min([abs(a - b) for i, a in enumerate(zs) for b in zs[i + 1:]],
              default=1.0)
    if sep < 1e-3:
        return
    c = np.array([1.0 + 0j])
    for z in zs:
        c = np.convolve(c, np.array([-z, 1.0]))
    found = roots_binary_form(c)
    assert sum(m for _, m in found) == len(zs)
    target = [(SpherePoint.from_chart(z), 1) for z in zs]
    assert hausdorff_chordal(found, target) < 1e-6


# ---------------------------------------------------------------------------
# critical sets


def test_monomial_critical_set():
    # (z0^d, z1^d): critical points at the poles, multiplicity d-1 each
    d = 6
    basis = make_basis(d)
    a = np.zeros(d + 1, dtype=complex)
    b = np.zeros(d + 1, dtype=complex)
    a[d] = 1.0 / basis.weights[d]
    b[0] = 1.0 / basis.weights[0]
    cs = critical_points(SectionPair(d, a, b))
    assert cs.total_multiplicity == 2 * d - 2 == cs.expected_count
    mults = sorted(m for _, m in cs.points)
    assert mults == [d - 1, d - 1]


def test_degree_one_has_no_critical_points():
    cs = critical_points(sample_pair(EnsembleSpec(degree=1, seed=0), 0))
    assert cs.points == () and cs.expected_count == 0


def test_riemann_hurwitz_on_random_samples():
    for d in (2, 5, 12):
        spec = EnsembleSpec(degree=d, seed=d)
        for i in range(10):
            cs = critical_points(sample_pair(spec, i))
            assert cs.total_multiplicity == 2 * d - 2


def test_critical_point_residuals():
    pair = sample_pair(EnsembleSpec(degree=8, seed=5), 2)
    W = jacobian_form(pair)
    grid = build_grid("sphere", 2000)
    sup = sup_norm(W, grid)
    for p, _ in critical_points(pair).points:
        assert wronskian_norm(W, p) < 1e-8 * sup


def test_common_zero_detected():
    # both chart polynomials vanish at z = 0
    pair = pair_from_chart([0.0, 1.0, 1.0], [0.0, 1.0, 0.0, -1.0][:3])
    pair = pair_from_chart([0.0, 1.0, 1.0, 0.5], [0.0, 1.0, -0.3, 0.2])
    with pytest.raises(CommonZeroError):
        critical_points(pair)


def test_dependent_pair_raises():
    d = 5
    rng = np.random.default_rng(3)
    a = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
    with pytest.raises(DegeneratePairError):
        critical_points(SectionPair(d, a, -2j * a))


def test_scale_invariance():
    pair = sample_pair(EnsembleSpec(degree=7, seed=6), 0)
    cs = critical_points(pair)
    scaled = SectionPair(pair.degree, (0.3 - 4j) * pair.a, 17.0 * pair.b)
    cs2 = critical_points(scaled)
    assert hausdorff_chordal(cs.points, cs2.points) < 1e-8


def test_rotation_equivariance():
    d = 5
    pair = sample_pair(EnsembleSpec(degree=d, seed=7), 1)
    cs = critical_points(pair)
    rng = np.random.default_rng(4)
    for _ in range(10):
        U = random_su2(rng)
        rpair = SectionPair(d, rotate_coefficients(U, pair.a),
                            rotate_coefficients(U, pair.b))
        rcs = critical_points(rpair)
        rotated = [(rotate_point(U, p), m) for p, m in cs.points]
        assert hausdorff_chordal(rcs.points, rotated) < 1e-8


def test_critical_set_json_roundtrip():
    cs = critical_points(sample_pair(EnsembleSpec(degree=4, seed=8), 0))
    back = CriticalSet.from_json(cs.to_json())
    assert back.degree == cs.degree and back.genus == 0
    assert hausdorff_chordal(back.points, cs.points) < 1e-15
    assert [m for _, m in back.points] == [m for _, m in cs.points]


# ---------------------------------------------------------------------------
# empirical measure


def test_empirical_measure_is_probability():
    cs = critical_points(sample_pair(EnsembleSpec(degree=9, seed=9), 0))
    one = lambda p: 1.0
    assert empirical_measure(cs, one) == pytest.approx(1.0, abs=1e-15)


def test_empirical_measure_monomial_cap():
    d = 6
    basis = make_basis(d)
    a = np.zeros(d + 1, dtype=complex)
    b = np.zeros(d + 1, dtype=complex)
    a[d] = 1.0 / basis.weights[d]
    b[0] = 1.0 / basis.weights[0]
    cs = critical_points(SectionPair(d, a, b))
    cap = Cap(SpherePoint.make(1.0, 0.0), 0.9 * math.pi * R_SPHERE)
    assert empirical_measure(cs, cap) == pytest.approx(0.5, abs=1e-15)


def test_empirical_measure_linearity():
    from branchcover.geometry import spherical_harmonic
    cs = critical_points(sample_pair(EnsembleSpec(degree=7, seed=10), 3))
    u1, u3 = spherical_harmonic(1), spherical_harmonic(3)
    fsum = lambda p: u1(p) + u3(p)
    assert empirical_measure(cs, fsum) == pytest.approx(
        empirical_measure(cs, u1) + empirical_measure(cs, u3), abs=1e-12)
