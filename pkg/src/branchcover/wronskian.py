"""Wronskian of a section pair, its hermitian norm field, and log-norm statistics.

For degree-d binary forms alpha = z0^d f(z), beta = z0^d g(z) (chart z = z1/z0)
the homogeneous Jacobian d0(alpha) d1(beta) - d1(alpha) d0(beta) equals
``d * (f g' - g f')`` in the chart, a binary form of degree 2d-2 whose zeros
are the critical points of [alpha : beta].

Norm convention: ``|W(p)|`` is the modulus of the homogeneous Jacobian at the
unit representative of p, i.e. ``|J_chart(z)| * (1+|z|^2)^(1-d)`` with
``J_chart = d*(f g' - g f')``.  Every statement tested downstream is either
convention-free (counts, equidistribution) or a decay rate in d, which absorbs
the constant factors separating this from other normalizations in the
literature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePairError, DomainError
from .ensemble import BasisSpec, SectionPair, chart_coefficients, make_basis
from .geometry import QuadratureGrid, SpherePoint

# near-root clamp for log evaluations; events are counted, not hidden
LOG_CLAMP = 1e-300


@dataclass(frozen=True)
class WronskianForm:
    """Degree-(2d-2) binary form in the chart coefficient convention.

    ``coeffs[k]`` multiplies z1^k z0^(2d-2-k); the chart polynomial in
    z = z1/z0 is sum_k coeffs[k] z^k.
    """

    degree: int  # parent section degree d
    coeffs: np.ndarray

    @property
    def form_degree(self) -> int:
        return 2 * self.degree - 2

    def is_zero(self, rtol: float = 1e-13) -> bool:
        scale = max(np.max(np.abs(self.coeffs)), 0.0)
        return scale == 0.0


def jacobian_chart(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Chart coefficients of f g' - g f' for chart polynomials f, g."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    d = len(f) - 1
    if d == 0:
        return np.zeros(1, dtype=complex)
    k = np.arange(1, d + 1)
    fp = f[1:] * k
    gp = g[1:] * k
    out = np.convolve(f, gp) - np.convolve(g, fp)  # degree <= 2d-1
    # the top (z^{2d-1}) coefficient cancels identically
    return out[: 2 * d - 1]


def jacobian_form(pair: SectionPair, basis: BasisSpec | None = None) -> WronskianForm:
    """Homogeneous Jacobian of the pair as a degree-(2d-2) binary form."""
    d = pair.degree
    if d < 1:
        raise DomainError("Wronskian needs degree >= 1")
    basis = basis or make_basis(d)
    f = chart_coefficients(pair.a, basis)
    g = chart_coefficients(pair.b, basis)
    J = d * jacobian_chart(f, g)
    # linearly dependent pairs leave pure cancellation noise; snap it to zero
    scale = d * float(np.max(np.abs(f))) * float(np.max(np.abs(g))) * d
    if np.max(np.abs(J)) < 1e-12 * scale:
        J = np.zeros_like(J)
    return WronskianForm(d, J)


def jacobian_coeff_batch(d: int, A: np.ndarray, B: np.ndarray,
                         basis: BasisSpec | None = None) -> np.ndarray:
    """Batched chart Jacobians: rows of A, B are Kostlan coefficient vectors.

    Returns an (n_samples, 2d-1) array of chart coefficients of
    d*(f g' - g f'); FFT-based products keep this fast for many samples.
    """
    basis = basis or make_basis(d)
    F = A[:, ::-1] * basis.weights[::-1]
    G = B[:, ::-1] * basis.weights[::-1]
    k = np.arange(1, d + 1)
    Fp = F[:, 1:] * k
    Gp = G[:, 1:] * k
    L = 1
    while L < 2 * d + 1:
        L *= 2
    ff = np.fft.fft(F, L, axis=1)
    gg = np.fft.fft(G, L, axis=1)
    ffp = np.fft.fft(Fp, L, axis=1)
    ggp = np.fft.fft(Gp, L, axis=1)
    prod = np.fft.ifft(ff * ggp - gg * ffp, axis=1)
    return d * prod[:, : 2 * d - 1]


# ---------------------------------------------------------------------------
# norm field


def binary_form_log_abs(coeffs, z0s, z1s) -> np.ndarray:
    """log of the modulus of a binary form at unit representatives.

    Evaluates the chart polynomial in whichever chart keeps |coordinate| <= 1
    (connection independence makes the two charts agree); ``coeffs[k]``
    multiplies z1^k z0^(n-k).
    """
    c = np.asarray(coeffs)
    n = len(c) - 1
    z0s = np.asarray(z0s, dtype=complex)
    z1s = np.asarray(z1s, dtype=complex)
    use_z = np.abs(z1s) <= np.abs(z0s)
    # chart z = z1/z0 where |z| <= 1, else the reversed chart w = z0/z1
    z = np.where(use_z,
                 z1s / np.where(z0s != 0, z0s, 1.0),
                 z0s / np.where(z1s != 0, z1s, 1.0))
    fwd = np.zeros_like(z)
    bwd = np.zeros_like(z)
    for k in range(len(c) - 1, -1, -1):
        fwd = fwd * z + c[k]
        bwd = bwd * z + c[len(c) - 1 - k]
    pz = np.abs(np.where(use_z, fwd, bwd))
    base = np.where(use_z, np.abs(z0s), np.abs(z1s))
    out = np.full(np.shape(pz), -np.inf)
    np.log(pz, out=out, where=pz > 0)
    return out + n * np.log(base)


def log_norm_arrays(W: WronskianForm, z0s, z1s) -> np.ndarray:
    """log |W| at canonical unit representatives, vectorized over points."""
    return binary_form_log_abs(W.coeffs, z0s, z1s)


def wronskian_norm(W: WronskianForm, p: SpherePoint) -> float:
    """Hermitian norm |W(p)| at the unit representative."""
    ln = log_norm_arrays(W, np.array([p.z0]), np.array([p.z1]))[0]
    return float(np.exp(ln)) if np.isfinite(ln) else 0.0


def log_norm_grid(W: WronskianForm, grid: QuadratureGrid) -> np.ndarray:
    if grid.kind != "sphere":
        raise DomainError("binary-form Wronskian lives on the sphere")
    return log_norm_arrays(W, grid.z0, grid.z1)


def log_norm_integral(pair_or_form, grid: QuadratureGrid):
    """Integral of |log |W|| against omega over the grid.

    Returns (value, clamp_count): nodes where |W| < 1e-300 are clamped to the
    threshold and counted.
    """
    W = pair_or_form if isinstance(pair_or_form, WronskianForm) \
        else jacobian_form(pair_or_form)
    if W.is_zero():
        raise DegeneratePairError("identically-zero Wronskian")
    ln = log_norm_grid(W, grid)
    clamp = math.log(LOG_CLAMP)
    clamped = int(np.count_nonzero(ln < clamp))
    ln = np.maximum(ln, clamp)
    return float(np.dot(grid.weights, np.abs(ln))), clamped


def sup_norm(W: WronskianForm, grid: QuadratureGrid, ascent_steps: int = 25) -> float:
    """Lower bound on sup |W|: best grid node polished by gradient ascent.

    Ascent runs on F(z) = log|J(z)| - (d-1) log(1+|z|^2) in the chart of the
    best node and never returns less than the grid maximum.
    """
    ln = log_norm_grid(W, grid)
    i = int(np.argmax(ln))
    best = float(ln[i])
    n = W.form_degree
    z0, z1 = grid.z0[i], grid.z1[i]
    swap = abs(z1) > abs(z0)
    c = W.coeffs[::-1] if swap else W.coeffs
    z = (z0 / z1) if swap else (z1 / z0)

    def F(z):
        v = 0.0j
        for k in range(len(c) - 1, -1, -1):
            v = v * z + c[k]
        a = abs(v)
        return (math.log(a) if a > 0 else -math.inf) \
            - 0.5 * n * math.log1p(abs(z) ** 2)

    step = 0.5 / max(1.0, math.sqrt(n))
    cur, fcur = z, F(z)
    h = 1e-6
    for _ in range(ascent_steps):
        gx = (F(cur + h) - F(cur - h)) / (2 * h)
        gy = (F(cur + 1j * h) - F(cur - 1j * h)) / (2 * h)
        g = complex(gx, gy)
        if abs(g) == 0:
            break
        trial = cur + step * g / abs(g)
        ftrial = F(trial)
        if ftrial > fcur:
            cur, fcur = trial, ftrial
        else:
            step *= 0.5
            if step < 1e-12:
                break
    return float(math.exp(max(best, fcur)))
