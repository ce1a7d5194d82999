"""Zero-finding for binary forms on CP^1 and critical-set extraction (genus 0).

Two independent root finders are provided: the Aberth-Ehrlich simultaneous
iteration (primary, fast at high degree) and a companion-matrix eigenvalue
solver (oracle for tests).  Disagreement between them is a test failure, not
a runtime fallback.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (CommonZeroError, ConvergenceError, DegeneratePairError,
                     DomainError)
from .ensemble import SectionPair, chart_coefficients, make_basis
from .geometry import Cap, SpherePoint, SurfaceGeometry, SurfacePoint, TorusPoint
from .wronskian import jacobian_form

STRIP_RTOL = 1e-13


@dataclass(frozen=True)
class CriticalSet:
    """Critical points with multiplicities; carries the empirical measure T_u."""

    degree: int
    genus: int
    points: tuple  # of (SurfacePoint, multiplicity)
    tau: complex | None = None

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.points)

    @property
    def expected_count(self) -> int:
        return 2 * self.degree + 2 * self.genus - 2

    def to_json(self) -> str:
        if self.genus == 0:
            pts = [[p.z0.real, p.z0.imag, p.z1.real, p.z1.imag, m]
                   for p, m in self.points]
            return json.dumps({"d": self.degree, "genus": 0, "points": pts})
        pts = [[p.x, p.y, m] for p, m in self.points]
        return json.dumps({"d": self.degree, "genus": 1,
                           "tau": [self.tau.real, self.tau.imag], "points": pts})

    @staticmethod
    def from_json(text: str) -> "CriticalSet":
        doc = json.loads(text)
        if doc["genus"] == 0:
            pts = tuple((SpherePoint(complex(a, b), complex(c, e)), int(m))
                        for a, b, c, e, m in doc["points"])
            return CriticalSet(doc["d"], 0, pts)
        pts = tuple((TorusPoint(x, y), int(m)) for x, y, m in doc["points"])
        return CriticalSet(doc["d"], 1, pts, tau=complex(*doc["tau"]))


# ---------------------------------------------------------------------------
# Aberth-Ehrlich


def aberth_roots(coeffs: np.ndarray, tol: float = 1e-12, max_sweeps: int = 500):
    """All complex roots of sum_k c[k] z^k by simultaneous iteration.

    ``coeffs`` may be a single vector or a (batch, n+1) matrix; leading and
    constant coefficients must be nonzero (caller strips exact zeros).
    Returns (roots, converged) with shapes (batch, n) and (batch,).

    The stop rule is max relative correction < tol; a stagnation exit at the
    intrinsic multiple-root plateau (below sqrt(tol)) also counts as
    converged, since clustering resolves anything inside that radius.
    """
    c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    B, m = c.shape
    n = m - 1
    if n < 1:
        raise DomainError("need degree >= 1")
    # perturbed-circle start at the root-magnitude scale
    with np.errstate(divide="ignore", over="ignore"):
        r0 = np.abs(c[:, 0] / c[:, -1]) ** (1.0 / n)
    r0 = np.clip(np.nan_to_num(r0, nan=1.0, posinf=1e6, neginf=1.0), 1e-6, 1e6)
    ang = 2.0 * np.pi * (np.arange(n) + 0.35) / n + 0.4
    # radius jitter breaks the conjugate symmetry of real-coefficient input,
    # which otherwise traps the iteration in long oscillations
    jig = 1.0 + 0.1 * ((np.arange(n) * 0.6180339887498949) % 1.0)
    z = r0[:, None] * (jig * np.exp(1j * ang))[None, :]

    active = np.ones(B, dtype=bool)
    best = np.full(B, np.inf)
    stale = np.zeros(B, dtype=int)
    for _ in range(max_sweeps):
        if not active.any():
            break
        za = z[active]
        N = _newton_ratio(c[active], za)
        diff = za[:, :, None] - za[:, None, :]
        idx = np.arange(n)
        diff[:, idx, idx] = 1.0
        S = np.sum(1.0 / diff, axis=2) - 1.0  # subtract the diagonal 1/1 terms
        denom = 1.0 - N * S
        small = np.abs(denom) < 1e-300
        denom = np.where(small, 1.0, denom)
        delta = N / denom
        z_new = za - delta
        corr = np.max(np.abs(delta) / (1.0 + np.abs(za)), axis=1)
        z[active] = z_new

        ai = np.flatnonzero(active)
        improved = corr < 0.5 * best[ai]
        best[ai] = np.minimum(best[ai], corr)
        stale[ai] = np.where(improved, 0, stale[ai] + 1)
        done = corr < tol
        stalled = stale[ai] > 100
        active[ai[done | stalled]] = False
    converged = best < math.sqrt(tol)
    roots = z if np.ndim(coeffs) > 1 else z[0]
    return roots, (converged if np.ndim(coeffs) > 1 else bool(converged[0]))


def _newton_ratio(c, z):
    """p(z)/p'(z), evaluated through the reversed polynomial when |z| > 1
    so high powers cannot overflow."""
    n = c.shape[1] - 1
    big = np.abs(z) > 1.0
    zin = np.where(big, 1.0 / z, z)
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    q = np.zeros_like(z)
    dq = np.zeros_like(z)
    for k in range(n, -1, -1):
        dp = dp * zin + p
        p = p * zin + c[:, k:k + 1]
        dq = dq * zin + q
        q = q * zin + c[:, n - k:n - k + 1]
    # direct chart: N = p/p'; reversed chart: N = z*q / (n*q - w*q')
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = p / dp
        rev = z * q / (n * q - zin * dq)
    out = np.where(big, rev, direct)
    return np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0)


def newton_polish(coeffs, roots, steps: int = 3, clamp: float = 1e-3):
    """A few Newton steps per root; corrections are clamped so clustered
    roots cannot be thrown away."""
    c = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    z = np.atleast_2d(np.asarray(roots, dtype=complex)).copy()
    for _ in range(steps):
        delta = _newton_ratio(c, z)
        scale = 1.0 + np.abs(z)
        mag = np.abs(delta)
        delta = np.where(mag > clamp * scale,
                         delta * (clamp * scale / np.where(mag > 0, mag, 1.0)),
                         delta)
        z = z - delta
    return z if np.ndim(roots) > 1 else z[0]


# ---------------------------------------------------------------------------
# companion-matrix oracle


def companion_roots_inner(coeffs: np.ndarray) -> np.ndarray:
    """Eigenvalues of the companion matrix of sum c[k] z^k (c[-1] != 0)."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    monic = c / c[-1]
    M = np.zeros((n, n), dtype=complex)
    M[1:, :-1] = np.eye(n - 1)
    M[:, -1] = -monic[:n]
    return np.linalg.eigvals(M)


# ---------------------------------------------------------------------------
# binary forms on CP^1


def _strip(coeffs):
    c = np.asarray(coeffs, dtype=complex)
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        raise DegeneratePairError("zero binary form")
    thr = STRIP_RTOL * scale
    lo = int(np.argmax(np.abs(c) > thr))
    hi = len(c) - 1 - int(np.argmax(np.abs(c[::-1]) > thr))
    return c, lo, hi


def _chordal(z0a, z1a, z0b, z1b):
    return np.abs(z0a * z1b - z1a * z0b)


def _cluster_roots(unit_pairs, counts, tol_cluster):
    """Greedy single-linkage clustering of points of CP^1 by chordal distance."""
    m = len(unit_pairs)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if _chordal(unit_pairs[i][0], unit_pairs[i][1],
                        unit_pairs[j][0], unit_pairs[j][1]) <= tol_cluster:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        mult = sum(counts[i] for i in members)
        w = np.array([counts[i] for i in members], dtype=float)
        ref = unit_pairs[members[0]]
        vecs = []
        for i in members:
            v = np.array(unit_pairs[i])
            phase = np.vdot(np.array(ref), v)
            if phase != 0:
                v = v * (phase.conjugate() / abs(phase))
            vecs.append(v)
        mean = np.average(np.array(vecs), axis=0, weights=w)
        out.append((SpherePoint.make(mean[0], mean[1]), mult))
    return out


def roots_binary_form(coeffs: np.ndarray, tol: float = 1e-12):
    """Zeros of a binary form on CP^1 as (SpherePoint, multiplicity) pairs.

    Leading/trailing coefficient blocks below 1e-13 * max|c| become exact
    roots at [1:0] / [0:1]; the rest go through Aberth-Ehrlich in the better
    conditioned chart, Newton polish, and chordal clustering at 10*sqrt(tol).
    """
    c, lo, hi = _strip(coeffs)
    form_degree = len(c) - 1
    tol_cluster = 10.0 * math.sqrt(tol)
    pairs = []
    counts = []
    if lo > 0:
        pairs.append((1.0 + 0j, 0.0 + 0j))
        counts.append(lo)
    if hi < form_degree:
        pairs.append((0.0 + 0j, 1.0 + 0j))
        counts.append(form_degree - hi)
    inner = c[lo:hi + 1]
    if len(inner) > 1:
        inner = inner / np.max(np.abs(inner))
        # dehomogenize in the better-conditioned chart
        flip = abs(inner[-1]) < abs(inner[0])
        work = inner[::-1] if flip else inner
        roots, ok = aberth_roots(work, tol=tol)
        if not ok:
            raise ConvergenceError("Aberth-Ehrlich did not converge",
                                   partial=roots)
        roots = newton_polish(work, roots, clamp=tol_cluster)
        if flip:
            with np.errstate(divide="ignore"):
                roots = np.where(roots != 0, 1.0 / roots, np.inf)
        for z in roots:
            if np.isinf(z):
                p = (0.0 + 0j, 1.0 + 0j)
            elif abs(z) <= 1.0:
                nrm = math.sqrt(1.0 + abs(z) ** 2)
                p = (1.0 / nrm + 0j, z / nrm)
            else:
                w = 1.0 / z
                nrm = math.sqrt(1.0 + abs(w) ** 2)
                p = (w / nrm, 1.0 / nrm + 0j)
            pairs.append(p)
            counts.append(1)
    clustered = _cluster_roots(pairs, counts, tol_cluster)
    assert sum(m for _, m in clustered) == form_degree
    return clustered


def companion_roots(coeffs: np.ndarray):
    """Oracle twin of roots_binary_form using companion-matrix eigenvalues."""
    c, lo, hi = _strip(coeffs)
    form_degree = len(c) - 1
    pairs = []
    counts = []
    if lo > 0:
        pairs.append((1.0 + 0j, 0.0 + 0j))
        counts.append(lo)
    if hi < form_degree:
        pairs.append((0.0 + 0j, 1.0 + 0j))
        counts.append(form_degree - hi)
    inner = c[lo:hi + 1]
    if len(inner) > 1:
        for z in companion_roots_inner(inner / np.max(np.abs(inner))):
            if abs(z) <= 1.0:
                nrm = math.sqrt(1.0 + abs(z) ** 2)
                pairs.append((1.0 / nrm + 0j, z / nrm))
            else:
                w = 1.0 / z
                nrm = math.sqrt(1.0 + abs(w) ** 2)
                pairs.append((w / nrm, 1.0 / nrm + 0j))
            counts.append(1)
    out = []
    for (z0, z1), m in zip(pairs, counts):
        out.append((SpherePoint.make(z0, z1), m))
    return out


def hausdorff_chordal(set_a, set_b) -> float:
    """Hausdorff distance (chordal metric) between two root multisets."""
    pa = np.array([[p.z0, p.z1] for p, _ in set_a])
    pb = np.array([[p.z0, p.z1] for p, _ in set_b])
    D = _chordal(pa[:, None, 0], pa[:, None, 1], pb[None, :, 0], pb[None, :, 1])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# ---------------------------------------------------------------------------
# critical sets


COMMON_ZERO_TOL = 1e-10


def critical_points(pair: SectionPair, tol: float = 1e-12) -> CriticalSet:
    """Critical set of the covering [alpha : beta]: zeros of the Wronskian.

    Raises CommonZeroError if alpha and beta share a zero (the pair defines
    no degree-d covering and the caller should resample).
    """
    W = jacobian_form(pair)
    if W.is_zero():
        raise DegeneratePairError("linearly dependent sections")
    found = roots_binary_form(W.coeffs, tol=tol)
    z0s = np.array([p.z0 for p, _ in found])
    z1s = np.array([p.z1 for p, _ in found])
    basis = make_basis(pair.degree)
    fa = chart_coefficients(pair.a, basis)
    fb = chart_coefficients(pair.b, basis)
    na = _form_abs(fa, z0s, z1s)
    nb = _form_abs(fb, z0s, z1s)
    if len(found) and float(np.min(np.maximum(na, nb))) < COMMON_ZERO_TOL:
        raise CommonZeroError("sections share a zero")
    return CriticalSet(pair.degree, 0, tuple(found))


def _form_abs(chart_coeffs, z0s, z1s):
    from .wronskian import binary_form_log_abs
    return np.exp(binary_form_log_abs(np.asarray(chart_coeffs), z0s, z1s))


def empirical_measure(cs: CriticalSet, f_or_cap,
                      geometry: SurfaceGeometry | None = None) -> float:
    """T_u(f): multiplicity-weighted average of f over the critical set.

    A Cap argument means its indicator (strict interior test).
    """
    denom = cs.expected_count
    if denom <= 0:
        return 0.0
    if isinstance(f_or_cap, Cap):
        geometry = geometry or (SurfaceGeometry.sphere() if cs.genus == 0
                                else SurfaceGeometry.torus(cs.tau))
        total = sum(m for p, m in cs.points if geometry.contains(f_or_cap, p))
    else:
        total = sum(m * f_or_cap(p) for p, m in cs.points)
    return total / denom
