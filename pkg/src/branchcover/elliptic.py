"""Genus-1 model: theta-function section bases over the torus C/(Z + tau Z).

Degree-d sections are spanned by the classical theta functions with
characteristics j/d.  In frequency form,

    theta_j(z) = sum_{nu = j mod d} exp(i pi tau nu^2 / d) exp(2 pi i nu z),

which satisfies theta(z+1) = theta(z) and
theta(z+tau) = exp(-i pi d tau - 2 pi i d z) theta(z).  The hermitian weight
making the pointwise norm doubly periodic is exp(-pi d (Im z)^2 / Im tau);
its curvature is d times the unit-mass flat form.  The degree-d Picard torus
is realized as translates z -> z + t1 + t2*tau with (t1,t2) Haar-uniform on
[0,1)^2.

Torus points are lattice coordinates (x, y), z = x + tau*y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf

from .errors import (CommonZeroError, DegeneratePairError, DomainError,
                     IncompleteRootSetError)
from .geometry import SurfaceGeometry, TorusPoint
from .roots import CriticalSet

TAIL_BOUND = 1e-18


@dataclass(frozen=True)
class EllipticSurface:
    """The torus with modulus tau and flat unit-mass area form."""

    tau: complex

    def __post_init__(self):
        if self.tau.imag <= 0:
            raise DomainError("modulus must satisfy Im tau > 0")

    @property
    def geometry(self) -> SurfaceGeometry:
        return SurfaceGeometry.torus(self.tau)


@dataclass(frozen=True)
class BundlePoint:
    """Haar coordinate on Pic^d(torus) ~ torus: translate (t1, t2)."""

    t1: float
    t2: float

    def __post_init__(self):
        if not (0.0 <= self.t1 < 1.0 and 0.0 <= self.t2 < 1.0):
            raise DomainError("bundle coordinates must lie in [0,1)")

    def shift(self, tau: complex) -> complex:
        return self.t1 + self.t2 * tau


def sample_bundle(rng: np.random.Generator) -> BundlePoint:
    """Haar-uniform degree-d bundle (uniform translate on the torus)."""
    return BundlePoint(float(rng.random()), float(rng.random()))


class ThetaBasis:
    """Truncated theta basis of degree d, modulus tau, translate t.

    The truncation window keeps every frequency whose Gaussian tail exceeds
    1e-18 anywhere on the fundamental domain: exp(-pi Im(tau) d M^2) < 1e-18.
    All d basis functions share one frequency window; normalization constants
    make each L2 norm exactly 1 (closed erf form of the Gaussian y-integral).
    """

    def __init__(self, d: int, tau: complex, t: BundlePoint | None = None):
        if d < 1:
            raise DomainError("theta basis needs degree >= 1")
        if tau.imag <= 0:
            raise DomainError("modulus must satisfy Im tau > 0")
        self.d = d
        self.tau = tau
        self.t = t or BundlePoint(0.0, 0.0)
        self.M = max(1, math.ceil(math.sqrt(-math.log(TAIL_BOUND)
                                            / (math.pi * tau.imag * d))))
        # dominant frequency ranges over [-d, 0] across the fundamental domain
        self.freqs = np.arange(-d * (self.M + 1), d * self.M + 1)
        self.amp = np.exp(1j * math.pi * tau * self.freqs ** 2 / d)
        self.char = np.mod(self.freqs, d)
        self.log_norms = self._log_norms()

    def _log_norms(self) -> np.ndarray:
        """log of the L2 norm of each theta_j against the weighted flat form."""
        a = 2.0 * math.pi * self.d * self.tau.imag
        b = 4.0 * math.pi * self.freqs * self.tau.imag
        sa = math.sqrt(a)
        # |amp|^2 * int_0^1 exp(-a y^2 - b y) dy; the Gaussian prefactors
        # cancel exactly, leaving the erf bracket
        bracket = erf((2.0 * a + b) / (2.0 * sa)) - erf(b / (2.0 * sa))
        terms = math.sqrt(math.pi) / (2.0 * sa) * bracket
        norms_sq = np.zeros(self.d)
        np.add.at(norms_sq, self.char, terms)
        return 0.5 * np.log(norms_sq)

    # -- frequency-space section handling ------------------------------------

    def section_freq_coeffs(self, coeffs: np.ndarray) -> np.ndarray:
        """Frequency amplitudes of sum_j coeffs[j] theta_j / ||theta_j||,
        with the bundle translate folded in."""
        c = np.asarray(coeffs, dtype=complex)
        if c.shape[-1] != self.d:
            raise DomainError("coefficient vector length must equal the degree")
        t0 = self.t.shift(self.tau)
        phase = np.exp(2j * math.pi * self.freqs * t0)
        scale = self.amp * phase
        return c[..., self.char] * scale * np.exp(-self.log_norms[self.char])

    def eval_freq(self, fc: np.ndarray, z: np.ndarray, deriv: int = 0) -> np.ndarray:
        """Evaluate frequency-space sections at complex points z.

        fc has shape (..., n_freq); z any shape; result (..., *z.shape).
        """
        z = np.asarray(z, dtype=complex)
        E = np.exp(2j * math.pi * np.multiply.outer(self.freqs, z.ravel()))
        if deriv:
            E = (2j * math.pi * self.freqs)[:, None] ** deriv * E
        out = fc @ E
        return out.reshape(fc.shape[:-1] + z.shape)

    def theta_values(self, j: int, z: np.ndarray, deriv: int = 0,
                     normalized: bool = True, translated: bool = True) -> np.ndarray:
        """Values (or derivatives) of theta_j at points z."""
        mask = self.char == j
        fc = np.where(mask, self.amp, 0.0)
        if translated:
            fc = fc * np.exp(2j * math.pi * self.freqs * self.t.shift(self.tau))
        if normalized:
            fc = fc * math.exp(-self.log_norms[j])
        return self.eval_freq(fc, z, deriv=deriv)

    # -- hermitian weight -----------------------------------------------------

    def log_weight(self, z: np.ndarray, bundle_degree: int | None = None) -> np.ndarray:
        """log of the hermitian weight at z (+ translate) for the given
        bundle degree (default d)."""
        deg = self.d if bundle_degree is None else bundle_degree
        y = np.imag(np.asarray(z, dtype=complex) + self.t.shift(self.tau))
        return -math.pi * deg * y * y / self.tau.imag

    def section_norm(self, coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
        fc = self.section_freq_coeffs(coeffs)
        return np.abs(self.eval_freq(fc, z)) * np.exp(self.log_weight(z))


def theta_basis(d: int, tau: complex, t: BundlePoint | None = None) -> ThetaBasis:
    return ThetaBasis(d, tau, t)


# ---------------------------------------------------------------------------
# points and charts


def torus_point_to_z(p: TorusPoint, tau: complex) -> complex:
    return p.x + tau * p.y


def z_to_torus_point(z: complex, tau: complex) -> TorusPoint:
    y = z.imag / tau.imag
    x = z.real - y * tau.real
    return TorusPoint.make(x, y)


# ---------------------------------------------------------------------------
# winding-number certification


def winding_count(values_fn, corner: complex, tau: complex,
                  n_per_edge: int = 256, max_refine: int = 4) -> int:
    """Argument-principle zero count inside the fundamental parallelogram
    with the given corner; refines the edge sampling until every phase step
    is unambiguous."""
    n = n_per_edge
    for _ in range(max_refine + 1):
        s = np.arange(n) / n
        edges = np.concatenate([
            corner + s,
            corner + 1.0 + s * tau,
            corner + 1.0 + tau - s,
            corner + tau - s * tau,
        ])
        v = values_fn(edges)
        av = np.abs(v)
        # the unweighted values have huge (but harmless) dynamic range along
        # the contour; only a zero ON it is a problem, visible as a value far
        # below both neighbors
        near_zero = np.any(av == 0) or np.any(
            av < 1e-10 * np.minimum(np.roll(av, 1), np.roll(av, -1)))
        steps = np.angle(np.roll(v, -1) / np.where(v != 0, v, 1.0))
        if not near_zero and np.max(np.abs(steps)) < 2.5:
            total = float(np.sum(steps)) / (2.0 * math.pi)
            if abs(total - round(total)) < 0.1:
                return int(round(total))
        corner = corner - 0.003 - 0.004j
        n *= 2
    raise IncompleteRootSetError("argument-principle winding did not stabilize")


# ---------------------------------------------------------------------------
# critical points on the torus


def _wronskian_values_fn(basis: ThetaBasis, fa, fb):
    def fn(z):
        f = basis.eval_freq(fa, z)
        g = basis.eval_freq(fb, z)
        fp = basis.eval_freq(fa, z, deriv=1)
        gp = basis.eval_freq(fb, z, deriv=1)
        return f * gp - g * fp
    return fn


def critical_points_torus(pair_coeffs, basis: ThetaBasis,
                          tol: float = 1e-12) -> CriticalSet:
    """Zeros of the Wronskian of a theta-basis section pair.

    Coarse grid scan for |W| minima -> Newton polish -> dedupe -> certify the
    total count 2d by the argument principle, refining the scan (up to 4
    times) on a mismatch.
    """
    a, b = pair_coeffs
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = basis.d
    # linear dependence: W vanishes identically
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0 or np.linalg.norm(
            b / nb - (np.vdot(a, b) / (na * nb)) * a / na) < 1e-12:
        raise DegeneratePairError("linearly dependent sections")
    fa = basis.section_freq_coeffs(a)
    fb = basis.section_freq_coeffs(b)
    wfn = _wronskian_values_fn(basis, fa, fb)
    expected = 2 * d
    total_winding = winding_count(wfn, -0.003 - 0.004 * basis.tau, basis.tau,
                                  n_per_edge=64 * max(1, d))
    if total_winding != expected:
        raise IncompleteRootSetError(
            f"winding {total_winding} != 2d = {expected}")

    geometry = SurfaceGeometry.torus(basis.tau)
    cluster_tol = 10.0 * math.sqrt(tol)
    m = max(8, math.ceil(4.0 * math.sqrt(expected)))
    for _ in range(5):
        roots = _scan_and_polish(basis, wfn, fa, fb, m, tol, cluster_tol, geometry)
        mult_total = sum(mm for _, mm in roots)
        if mult_total == expected:
            _check_common_zeros(basis, fa, fb, roots)
            return CriticalSet(d, 1, tuple(roots), tau=basis.tau)
        m *= 2
    raise IncompleteRootSetError(
        f"found multiplicity {mult_total}, expected {expected}")


def _scan_and_polish(basis, wfn, fa, fb, m, tol, cluster_tol, geometry):
    tau = basis.tau
    xs = (np.arange(m) + 0.5) / m
    X, Y = np.meshgrid(xs, xs)
    Z = X + tau * Y
    vals = np.abs(wfn(Z.ravel())).reshape(m, m)
    # local minima against the 8-neighborhood with wrap-around
    neigh = np.stack([np.roll(np.roll(vals, i, 0), j, 1)
                      for i in (-1, 0, 1) for j in (-1, 0, 1)
                      if (i, j) != (0, 0)])
    is_min = vals <= neigh.min(axis=0)
    cand = Z.ravel()[is_min.ravel()]
    # Newton iteration on W
    z = cand.copy()
    for _ in range(60):
        f = basis.eval_freq(fa, z)
        g = basis.eval_freq(fb, z)
        f1 = basis.eval_freq(fa, z, deriv=1)
        g1 = basis.eval_freq(fb, z, deriv=1)
        f2 = basis.eval_freq(fa, z, deriv=2)
        g2 = basis.eval_freq(fb, z, deriv=2)
        W = f * g1 - g * f1
        Wp = f * g2 - g * f2
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.abs(Wp) > 0, W / np.where(Wp != 0, Wp, 1.0), 0.0)
        # keep Newton local: a step longer than a grid cell is a bad basin
        mag = np.abs(step)
        step = np.where(mag > 0.5 / m,
                        step * (0.5 / m) / np.where(mag > 0, mag, 1.0), step)
        z = z - step
        if np.max(np.abs(step)) < tol:
            break
    # discard non-converged candidates; compare hermitian (weighted) norms so
    # the filter is uniform over the torus
    logw = basis.log_weight(z, bundle_degree=2 * basis.d)
    res = np.abs(wfn(z)) * np.exp(logw)
    grid_logw = basis.log_weight(Z.ravel(), bundle_degree=2 * basis.d)
    scale = float(np.max(np.abs(wfn(Z.ravel())) * np.exp(grid_logw)))
    keep = res < 1e-8 * scale
    z = z[keep]
    pts = [z_to_torus_point(complex(zz), tau) for zz in z]
    # dedupe by metric distance
    roots = []
    for p in pts:
        merged = False
        for i, (q, mm) in enumerate(roots):
            if geometry.distance(p, q) <= cluster_tol:
                roots[i] = (q, mm)
                merged = True
                break
        if not merged:
            roots.append((p, 1))
    # multiplicities by local winding around each distinct zero
    out = []
    for p, _ in roots:
        z0 = torus_point_to_z(p, tau)
        mult = _local_winding(wfn, z0, max(1e-5, 2 * cluster_tol))
        if mult > 0:
            out.append((p, mult))
    return out


def _local_winding(wfn, center: complex, radius: float) -> int:
    ang = 2.0 * math.pi * np.arange(64) / 64
    v = wfn(center + radius * np.exp(1j * ang))
    steps = np.angle(np.roll(v, -1) / v)
    return int(round(float(np.sum(steps)) / (2.0 * math.pi)))


# ---------------------------------------------------------------------------
# sampling


def sample_torus(spec, index: int):
    """Draw (bundle translate, a, b) for the torus ensemble: Haar translate
    followed by 2d iid standard complex Gaussian coefficients.  Pure function
    of (spec.seed, index)."""
    from .ensemble import _complex_normals, pair_rng
    rng = pair_rng(spec.seed, int(index))
    t = BundlePoint(float(rng.random()), float(rng.random()))
    a = _complex_normals(rng, spec.degree)
    b = _complex_normals(rng, spec.degree)
    return t, a, b


def sample_torus_indices(spec, indices):
    """Batched sample_torus: (translates t1+t2*tau, A, B) with rows matching
    the per-sample draws exactly."""
    indices = list(indices)
    d = spec.degree
    T0 = np.empty(len(indices), dtype=complex)
    A = np.empty((len(indices), d), dtype=complex)
    B = np.empty((len(indices), d), dtype=complex)
    for r, i in enumerate(indices):
        t, a, b = sample_torus(spec, i)
        T0[r] = t.t1
        T0[r] += 1j * t.t2  # stored as t1 + i t2; caller applies tau
        A[r] = a
        B[r] = b
    return T0, A, B


@lru_cache(maxsize=32)
def base_theta_basis(d: int, tau: complex) -> ThetaBasis:
    return ThetaBasis(d, tau)


# ---------------------------------------------------------------------------
# batched Wronskian zeros via the Fourier-side polynomial
#
# In q = exp(2 pi i z) the truncated Wronskian is q^(mu_min) P(q) for a
# polynomial P; its roots in the height-one annulus are exactly the torus
# zeros, and selecting a height-one window of log|q| with no root near the
# boundary certifies the count 2d without per-sample contour work.


def torus_roots_batch(d: int, tau: complex, T0raw: np.ndarray,
                      A: np.ndarray, B: np.ndarray, tol: float = 1e-12):
    """Wronskian zeros for a batch of torus samples.

    T0raw rows are t1 + i*t2 as produced by sample_torus_indices.  Returns
    (xs, ys, ok): root lattice coordinates of shape (m, 2d) and a per-sample
    success mask; failed rows need the certified per-sample path.
    """
    basis = base_theta_basis(d, tau)
    t0 = T0raw.real + tau * T0raw.imag
    nu = basis.freqs
    base = basis.amp * np.exp(-basis.log_norms[basis.char])
    phase = np.exp(2j * math.pi * np.multiply.outer(t0, nu))
    FA = A[:, basis.char] * base * phase
    FB = B[:, basis.char] * base * phase
    DB = FB * (2j * math.pi * nu)
    DA = FA * (2j * math.pi * nu)
    nf = len(nu)
    # direct convolution: FFT noise (absolute, at the peak scale) would swamp
    # the Gaussian-small edge coefficients, which control the far annuli
    W = np.zeros((FA.shape[0], 2 * nf - 1), dtype=complex)
    for k in range(2 * nf - 1):
        i0, i1 = max(0, k - nf + 1), min(k, nf - 1) + 1
        j = k - np.arange(i0, i1)
        W[:, k] = np.einsum("mi,mi->m", FA[:, i0:i1], DB[:, j]) \
            - np.einsum("mi,mi->m", FB[:, i0:i1], DA[:, j])
    # strip coefficient tails that are pure truncation noise (batch-common)
    prof = np.max(np.abs(W), axis=0)
    keep = prof > 1e-30 * np.max(prof)
    lo_k, hi_k = int(np.argmax(keep)), len(keep) - int(np.argmax(keep[::-1]))
    C = W[:, lo_k:hi_k]
    m, ncoef = C.shape
    ok = np.ones(m, dtype=bool)
    if ncoef < 2:
        return np.zeros((m, 2 * d)), np.zeros((m, 2 * d)), np.zeros(m, bool)
    # the Gaussian frequency envelope makes edge coefficients small by
    # nature; extreme roots then sit far outside the selection window and the
    # count certification below rejects anything that went wrong
    rowmax = np.max(np.abs(C), axis=1)
    ok &= (rowmax > 0) & (np.abs(C[:, -1]) > 0)
    xs = np.zeros((m, 2 * d))
    ys = np.zeros((m, 2 * d))
    if not ok.any():
        return xs, ys, ok
    # stacked companion eigenvalues (with LAPACK balancing) cope with the
    # stiff coefficient range better than simultaneous iteration here; every
    # candidate in a double-height band is then Newton-polished on the exact
    # series, non-converging ones are dropped, and the survivors must dedupe
    # (mod lattice) to exactly 2d
    Cn = C[ok] / C[ok][:, -1:]
    ncomp = ncoef - 1
    M = np.zeros((int(ok.sum()), ncomp, ncomp), dtype=complex)
    M[:, 1:, :-1] = np.eye(ncomp - 1)
    M[:, :, -1] = -Cn[:, :-1]
    q = np.linalg.eigvals(M)
    y_all = -np.log(np.abs(q)) / (2.0 * math.pi * tau.imag)
    rows = np.flatnonzero(ok)
    band = (y_all > -0.6) & (y_all < 1.6)
    Z = np.where(band, np.angle(q) / (2.0 * math.pi)
                 + 1j * tau.imag * y_all, np.nan)
    cA, cB, dA, dB = FA[rows], FB[rows], DA[rows], DB[rows]
    d2A = dA * (2j * math.pi * nu)
    d2B = dB * (2j * math.pi * nu)
    with np.errstate(invalid="ignore"):
        for _ in range(8):
            E = np.exp(2j * math.pi * np.multiply.outer(
                np.nan_to_num(Z), nu))  # (r, k, nf)
            f = np.einsum("rn,rkn->rk", cA, E)
            g = np.einsum("rn,rkn->rk", cB, E)
            f1 = np.einsum("rn,rkn->rk", dA, E)
            g1 = np.einsum("rn,rkn->rk", dB, E)
            f2 = np.einsum("rn,rkn->rk", d2A, E)
            g2 = np.einsum("rn,rkn->rk", d2B, E)
            Wv = f * g1 - g * f1
            Wp = f * g2 - g * f2
            with np.errstate(divide="ignore"):
                step = np.where(np.abs(Wp) > 0,
                                Wv / np.where(Wp != 0, Wp, 1.0), 0.0)
            big = np.abs(step) > 0.05
            step = np.where(big, 0.0, step)
            last = np.where(band & ~big, np.abs(step), np.inf)
            Z = Z - step
        good_cand = band & (last < 1e-9)
    yrep = Z.imag / tau.imag
    xr = np.mod(Z.real - tau.real * yrep, 1.0)
    yr = np.mod(yrep, 1.0)
    for r, row in enumerate(rows):
        gi = np.flatnonzero(good_cand[r])
        # central copies carry the least truncation error; lattice copies of
        # one zero agree only to ~1e-6 near the band edges, so dedupe at 1e-4
        # (zeros of a random Wronskian are never that close; a genuine merge
        # just sends the sample to the certified fallback)
        gi = gi[np.argsort(np.abs(yrep[r, gi] - 0.5))]
        px, py = xr[r, gi], yr[r, gi]
        taken_x, taken_y = [], []
        for i in range(len(gi)):
            if taken_x:
                ddx = np.abs(np.asarray(taken_x) - px[i])
                ddx = np.minimum(ddx, 1.0 - ddx)
                ddy = np.abs(np.asarray(taken_y) - py[i])
                ddy = np.minimum(ddy, 1.0 - ddy)
                if np.any((ddx < 1e-4) & (ddy < 1e-4)):
                    continue
            taken_x.append(px[i])
            taken_y.append(py[i])
        if len(taken_x) != 2 * d:
            ok[row] = False
            continue
        xs[row] = taken_x
        ys[row] = taken_y
    return xs, ys, ok


def _check_common_zeros(basis, fa, fb, roots):
    if not roots:
        return
    z = np.array([torus_point_to_z(p, basis.tau) for p, _ in roots])
    w = np.exp(basis.log_weight(z))
    na = np.abs(basis.eval_freq(fa, z)) * w
    nb = np.abs(basis.eval_freq(fb, z)) * w
    if float(np.min(np.maximum(na, nb))) < 1e-10:
        raise CommonZeroError("sections share a zero")
