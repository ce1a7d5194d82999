"""Bergman kernel diagnostics and peak sections on the sphere.

With the unit-mass conventions of this library the diagonal kernel is exactly
``K(x,x) = d+1`` (binomial identity at unit vectors) and the mixed second
derivative along the diagonal is ``pi * d * (d+1)`` (the factor pi is the
squared metric length of dz at the chart origin, where the area density is
1/pi).  The literature's ``d/pi`` constants come from a different metric
normalization; only the growth rates in d are convention-free and that is
what the tests pin down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .ensemble import (make_basis, rotate_coefficients, rotation_to_origin)
from .geometry import SpherePoint

# squared metric length of the chart differential dz at the chart origin
CHART_COTANGENT_SQ = math.pi


@dataclass(frozen=True)
class KernelDiagnostics:
    degree: int
    diagonal: float          # K(x,x)
    d1_abs: float            # |d/dz K(x,x)| in the chart at x
    d2_mixed: float          # mixed second derivative at the diagonal


@dataclass(frozen=True)
class PeakPair:
    """Peak sections at x: sigma0 spans (ker ev_x)^perp, sigma1 spans the
    orthogonal of ker j1_x inside ker ev_x."""

    degree: int
    point: SpherePoint
    sigma0: np.ndarray
    sigma1: np.ndarray
    norm0_sq: float      # |sigma0(x)|^2
    grad1_sq: float      # |nabla sigma1(x)|^2


def bergman_diagonal(d: int, p: SpherePoint) -> float:
    """K(x,x) = sum_j |e_j(p)|^2, evaluated stably in log-space."""
    if d < 0:
        raise DomainError("degree must be nonnegative")
    basis = make_basis(d)
    j = np.arange(d + 1)
    la0 = math.log(abs(p.z0)) if abs(p.z0) > 0 else -math.inf
    la1 = math.log(abs(p.z1)) if abs(p.z1) > 0 else -math.inf
    # 0 * (-inf) at the poles must contribute 0, not nan
    t0 = 2.0 * j * la0 if math.isfinite(la0) \
        else np.where(j > 0, -math.inf, 0.0)
    t1 = 2.0 * (d - j) * la1 if math.isfinite(la1) \
        else np.where(j < d, -math.inf, 0.0)
    logterm = 2.0 * basis.log_weights + t0 + t1
    top = float(np.max(logterm))
    return float(math.exp(top) * np.sum(np.exp(logterm - top)))


def peak_sections(d: int, x: SpherePoint, materialize: bool = True) -> PeakPair:
    """Peak sections at x via the rotation taking x to the chart center.

    At the rotated origin the evaluation functional picks out the top Kostlan
    basis element and the first jet the next one; |sigma0(x)|^2 equals the
    diagonal kernel, and the gradient of sigma1 is the chart derivative
    (the potential's first derivative vanishes at the origin) times the
    cotangent normalization.
    """
    if d < 2:
        raise DomainError("peak sections need degree >= 2")
    basis = make_basis(d)
    norm0_sq = float(d + 1)                      # = K(x,x)
    grad1_sq = (d + 1) * d * CHART_COTANGENT_SQ  # (chart derivative)^2 * |dz|^2
    if materialize:
        U = rotation_to_origin(x)
        Uinv = np.conj(U).T
        e_top = np.zeros(d + 1, dtype=complex)
        e_top[d] = 1.0      # sqrt(d+1) z0^d, the section peaking at [1:0]
        e_next = np.zeros(d + 1, dtype=complex)
        e_next[d - 1] = 1.0
        sigma0 = rotate_coefficients(Uinv, e_top)
        sigma1 = rotate_coefficients(Uinv, e_next)
    else:
        sigma0 = sigma1 = None
    return PeakPair(d, x, sigma0, sigma1, norm0_sq, grad1_sq)


def kernel_derivative_growth(d: int, p: SpherePoint) -> KernelDiagnostics:
    """Diagonal kernel diagnostics at p.

    The first derivative is a symmetric finite difference of the diagonal in
    the chart at p (identically zero by rotational symmetry, up to round-off);
    the mixed second derivative is the squared-norm sum of covariant basis
    derivatives, evaluated at the rotated chart origin where only the linear
    basis element contributes.
    """
    K = bergman_diagonal(d, p)
    U = rotation_to_origin(p)
    Uinv = np.conj(U).T
    h = 1e-5

    def diag_at(z):
        from .ensemble import rotate_point
        q = rotate_point(Uinv, SpherePoint.from_chart(z))
        return bergman_diagonal(d, q)

    d1 = abs(complex(diag_at(h) - diag_at(-h),
                     diag_at(1j * h) - diag_at(-1j * h))) / (2 * h)
    # chart derivatives of the rotated basis at the origin: unitarity reduces
    # the sum to the single linear element with weight sqrt((d+1) d)
    d2 = (d + 1) * d * CHART_COTANGENT_SQ if d >= 1 else 0.0
    return KernelDiagnostics(d, K, float(d1), float(d2))
