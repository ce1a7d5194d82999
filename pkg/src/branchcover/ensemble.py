"""Orthonormal section bases and Gaussian sampling (genus 0).

Degree-d sections of O(d) on CP^1 are binary forms in (z0, z1).  The basis
``e_j = sqrt((d+1) * C(d,j)) * z0^j * z1^(d-j)`` is L2-orthonormal against the
unit-mass Fubini-Study form with the curvature-d*omega fiber metric; the
random pair is 2*(d+1) iid standard complex Gaussian coefficients in it.

Coefficient-vector convention used by the chart helpers: ``c[k]`` multiplies
``z1^k * z0^(deg-k)``, so the chart polynomial in z = z1/z0 is
``sum_k c[k] z^k``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import SpherePoint

# above this degree the Kostlan weights overflow naive binomials; everything
# here goes through log-space, the constant just documents the regime.
LOG_SPACE_DEGREE = 300


def log_binomial(n: int, k) -> np.ndarray:
    k = np.asarray(k)
    return (math.lgamma(n + 1)
            - np.vectorize(math.lgamma)(k + 1.0)
            - np.vectorize(math.lgamma)(n - k + 1.0))


@dataclass(frozen=True)
class BasisSpec:
    """The Kostlan orthonormal basis of degree-d sections.

    ``log_weights[j] = log sqrt((d+1)*C(d,j))`` (computed in log-space so
    degrees of a few thousand stay finite).
    """

    degree: int
    log_weights: np.ndarray

    @property
    def dimension(self) -> int:
        return self.degree + 1

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def make_basis(d: int) -> BasisSpec:
    if d < 0:
        raise DomainError("degree must be nonnegative")
    j = np.arange(d + 1)
    logw = 0.5 * (math.log(d + 1) + log_binomial(d, j))
    return BasisSpec(d, logw)


@dataclass(frozen=True)
class EnsembleSpec:
    """Sampling recipe: surface kind, degree, seed, sampler variant."""

    kind: str = "sphere"
    degree: int = 1
    seed: int = 0
    variant: str = "gaussian"

    def __post_init__(self):
        if self.variant != "gaussian":
            raise DomainError(f"unknown sampler variant {self.variant!r}")
        if self.degree < 1:
            raise DomainError("ensemble degree must be >= 1")


@dataclass(frozen=True)
class SectionPair:
    """Coefficient vectors of (alpha, beta) in the orthonormal basis."""

    degree: int
    a: np.ndarray
    b: np.ndarray
    seed: tuple | None = None

    def __post_init__(self):
        if not (np.all(np.isfinite(self.a)) and np.all(np.isfinite(self.b))):
            raise DomainError("section coefficients must be finite")
        if not (np.any(self.a != 0) or np.any(self.b != 0)):
            raise DomainError("both sections are identically zero")

    def to_json(self) -> str:
        def hexpairs(v):
            return [[float(c.real).hex(), float(c.imag).hex()] for c in v]
        return json.dumps({
            "degree": self.degree,
            "a": hexpairs(self.a),
            "b": hexpairs(self.b),
            "seed": list(self.seed) if self.seed is not None else None,
        })

    @staticmethod
    def from_json(text: str) -> "SectionPair":
        doc = json.loads(text)

        def unhex(rows):
            return np.array([complex(float.fromhex(re), float.fromhex(im))
                             for re, im in rows])

        seed = tuple(doc["seed"]) if doc["seed"] is not None else None
        return SectionPair(doc["degree"], unhex(doc["a"]), unhex(doc["b"]), seed)


def pair_rng(seed: int, index: int) -> np.random.Generator:
    """Deterministic per-sample generator; pure function of (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def _complex_normals(rng, n):
    z = rng.standard_normal(2 * n)
    return (z[:n] + 1j * z[n:]) / math.sqrt(2.0)


def sample_pair(spec: EnsembleSpec, index: int) -> SectionPair:
    """Draw the (index)-th section pair of the ensemble.

    Coefficients are iid standard complex Gaussians (real and imaginary parts
    iid N(0, 1/2)); the draw depends only on (spec.seed, index).
    """
    rng = pair_rng(spec.seed, index)
    n = spec.degree + 1
    a = _complex_normals(rng, n)
    b = _complex_normals(rng, n)
    return SectionPair(spec.degree, a, b, seed=(spec.seed, index))


def sample_coeff_batch(spec: EnsembleSpec, lo: int, hi: int):
    """Coefficient matrices for sample indices lo..hi-1 (rows match
    sample_pair exactly)."""
    return sample_coeff_indices(spec, range(lo, hi))


def sample_coeff_indices(spec: EnsembleSpec, indices):
    """Coefficient matrices for an arbitrary index list (rows match
    sample_pair exactly; order follows the list)."""
    n = spec.degree + 1
    indices = list(indices)
    A = np.empty((len(indices), n), dtype=complex)
    B = np.empty((len(indices), n), dtype=complex)
    for r, i in enumerate(indices):
        rng = pair_rng(spec.seed, int(i))
        A[r] = _complex_normals(rng, n)
        B[r] = _complex_normals(rng, n)
    return A, B


# ---------------------------------------------------------------------------
# evaluation


def chart_coefficients(coeffs: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Monomial coefficient vector c with c[k] multiplying z1^k z0^(d-k).

    e_j carries z1^(d-j), so c[k] = coeffs[d-k] * weight[d-k].
    """
    return (np.asarray(coeffs) * basis.weights)[::-1]


def chart_coefficients_normalized(coeffs: np.ndarray, basis: BasisSpec):
    """Chart coefficients scaled to unit max modulus, via log-space.

    Returns (normalized coefficients, log of the removed scale).  Safe for
    degrees where the raw Kostlan weights overflow.
    """
    c = np.asarray(coeffs)[::-1]
    logw = basis.log_weights[::-1]
    mag = np.abs(c)
    with np.errstate(divide="ignore"):
        logmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), -np.inf) + logw
    top = np.max(logmag)
    if not np.isfinite(top):
        return np.zeros_like(c), 0.0
    phase = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 0.0)
    return np.exp(logmag - top) * phase, float(top)


def evaluate_section(coeffs: np.ndarray, p: SpherePoint):
    """Value at the unit representative and its hermitian norm.

    The modulus at the unit vector equals the chart formula
    |f(z)| * (1+|z|^2)^(-d/2); evaluation is log-space stable.
    """
    d = len(coeffs) - 1
    basis = make_basis(d)
    j = np.arange(d + 1)
    la0, la1 = _log_abs(p.z0), _log_abs(p.z1)
    # 0 * (-inf) at the poles must contribute 0, not nan
    t0 = j * la0 if math.isfinite(la0) else np.where(j > 0, -math.inf, 0.0)
    t1 = (d - j) * la1 if math.isfinite(la1) \
        else np.where(j < d, -math.inf, 0.0)
    logmag = basis.log_weights + t0 + t1
    ph0 = p.z0 / abs(p.z0) if abs(p.z0) > 0 else 0.0
    ph1 = p.z1 / abs(p.z1) if abs(p.z1) > 0 else 0.0
    terms = np.where(np.isfinite(logmag), np.exp(logmag), 0.0) \
        * _safe_power(ph0, j) * _safe_power(ph1, d - j)
    value = complex(np.dot(np.asarray(coeffs), terms))
    return value, abs(value)


def _log_abs(z):
    a = abs(z)
    return math.log(a) if a > 0 else -math.inf


def _safe_power(ph, k):
    # 0^0 = 1 for the phase bookkeeping
    k = np.asarray(k)
    if ph == 0.0:
        return np.where(k == 0, 1.0 + 0j, 0.0 + 0j)
    return ph ** k


# ---------------------------------------------------------------------------
# SU(2) rotations


def random_su2(rng: np.random.Generator) -> np.ndarray:
    """Haar-random SU(2) matrix (normalized quaternion)."""
    q = rng.standard_normal(4)
    q = q / np.linalg.norm(q)
    a, b, c, dd = q
    return np.array([[a + 1j * b, c + 1j * dd],
                     [-c + 1j * dd, a - 1j * b]])


def rotate_point(U: np.ndarray, p: SpherePoint) -> SpherePoint:
    v = U @ np.array([p.z0, p.z1])
    return SpherePoint.make(v[0], v[1])


def rotation_to_origin(p: SpherePoint) -> np.ndarray:
    """SU(2) matrix taking p to the chart center [1:0]."""
    return np.array([[np.conj(p.z0), np.conj(p.z1)],
                     [-p.z1, p.z0]])


def rotate_coefficients(U: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of alpha o U^{-1} in the Kostlan basis.

    The SU(2) action is unitary on the coefficient vectors (the basis is
    orthonormal and the ensemble rotation invariant).
    """
    d = len(coeffs) - 1
    basis = make_basis(d)
    V = np.conj(U).T  # U^{-1} for SU(2)
    # monomial coefficients: alpha = sum_j A_j z0^j z1^(d-j)
    A = np.asarray(coeffs) * basis.weights
    out = np.zeros(d + 1, dtype=complex)
    for j in range(d + 1):
        if A[j] == 0:
            continue
        # z0 -> V00 Z0 + V01 Z1, z1 -> V10 Z0 + V11 Z1
        p1 = _binomial_power(V[0, 0], V[0, 1], j)
        p2 = _binomial_power(V[1, 0], V[1, 1], d - j)
        out += A[j] * np.convolve(p1, p2)
    return out / basis.weights


def _binomial_power(a, b, m):
    """Coefficients over Z0-power of (a Z0 + b Z1)^m (index = power of Z0)."""
    k = np.arange(m + 1)
    logc = log_binomial(m, k) if m > 0 else np.zeros(1)
    co = np.exp(logc) * _safe_power(a if a != 0 else 0.0, k) \
        * _safe_power(b if b != 0 else 0.0, m - k)
    return co
