"""Points, metric, caps, test functions and quadrature on the two model surfaces.

The sphere is the round sphere of total area 1 (radius ``R = 1/(2*sqrt(pi))``),
seen as CP^1 with the unit-mass Fubini-Study form.  The torus C/(Z + tau*Z)
carries the flat area form rescaled to unit mass; a point is stored in lattice
coordinates (x, y) in [0,1)^2, i.e. z = x + tau*y.

Normalization used throughout: the laplacian density ``l_f`` of a function f is
defined by ``(i/pi) ddbar f = l_f * omega``; in a conformal chart with
``omega = mu dx dy`` this is ``l_f = Laplacian_euclid(f) / (2*pi*mu)``.
For the first-order spherical harmonics u1, u2, u3 of the S^2 embedding this
gives exactly ``l_u = -4*u``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, KindMismatchError

# Radius of the round sphere with total area 1.
R_SPHERE = 1.0 / (2.0 * math.sqrt(math.pi))

# Eigenvalue constant in l_u = -LAMBDA_HARMONIC * u for first-order harmonics.
LAMBDA_HARMONIC = 4.0

_PHASE_TOL = 1e-14


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class SpherePoint:
    """A point of CP^1 as a unit vector (z0, z1) in canonical phase.

    Canonical phase: the component of largest modulus is real and >= 0, which
    makes equality well defined under the CP^1 quotient.
    """

    z0: complex
    z1: complex

    @staticmethod
    def make(z0: complex, z1: complex) -> "SpherePoint":
        n = math.hypot(abs(z0), abs(z1))
        if n == 0.0:
            raise DomainError("zero vector does not define a point of CP^1")
        z0, z1 = z0 / n, z1 / n
        ref = z0 if abs(z0) >= abs(z1) else z1
        if abs(ref) > 0:
            phase = ref / abs(ref)
            z0, z1 = z0 / phase, z1 / phase
        return SpherePoint(complex(z0), complex(z1))

    @staticmethod
    def from_chart(z: complex) -> "SpherePoint":
        """Point with chart coordinate z = z1/z0 (chart center [1:0])."""
        if abs(z) <= 1.0:
            return SpherePoint.make(1.0, z)
        return SpherePoint.make(1.0 / z, 1.0)

    @property
    def chart(self) -> complex:
        """Chart coordinate z1/z0 (infinite at [0:1])."""
        if self.z0 == 0:
            return complex(math.inf, 0.0)
        return self.z1 / self.z0

    def unit_vector(self) -> np.ndarray:
        """The point of the embedded S^2 (unit vector in R^3, Hopf image)."""
        n1 = 2.0 * (self.z0.conjugate() * self.z1).real
        n2 = 2.0 * (self.z0.conjugate() * self.z1).imag
        n3 = abs(self.z0) ** 2 - abs(self.z1) ** 2
        return np.array([n1, n2, n3])


@dataclass(frozen=True)
class TorusPoint:
    """A point of the torus in lattice coordinates (x, y) in [0,1)^2."""

    x: float
    y: float

    @staticmethod
    def make(x: float, y: float) -> "TorusPoint":
        # x % 1.0 can round up to exactly 1.0 for tiny negative x
        x, y = x % 1.0, y % 1.0
        return TorusPoint(x if x < 1.0 else 0.0, y if y < 1.0 else 0.0)


SurfacePoint = SpherePoint | TorusPoint


@dataclass(frozen=True)
class Cap:
    """Geodesic disk: all points within ``radius`` of ``center``.

    Radii are geodesic lengths in the unit-mass metric.
    """

    center: SurfacePoint
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise DomainError("cap radius must be nonnegative")


# ---------------------------------------------------------------------------
# vectorized sphere helpers (operate on parallel arrays of (z0, z1))


def sphere_distance_arrays(z0a, z1a, z0b, z1b):
    inner = np.abs(z0a * np.conj(z0b) + z1a * np.conj(z1b))
    return 2.0 * R_SPHERE * np.arccos(np.clip(inner, 0.0, 1.0))


def chart_to_unit(z):
    """Chart coordinates -> canonical unit vectors (z0s, z1s), vectorized."""
    z = np.asarray(z, dtype=complex)
    big = np.abs(z) > 1.0
    zsafe = np.where(big, z, 1.0)
    z0 = np.where(big, 1.0 / zsafe, 1.0)
    z1 = np.where(big, 1.0, z)
    n = np.sqrt(np.abs(z0) ** 2 + np.abs(z1) ** 2)
    return z0 / n, z1 / n


class SurfaceGeometry:
    """One of the two concrete surfaces, with its unit-mass volume form."""

    def __init__(self, kind: str, tau: complex | None = None):
        if kind not in ("sphere", "torus"):
            raise DomainError(f"unknown surface kind {kind!r}")
        if kind == "torus":
            if tau is None or tau.imag <= 0:
                raise DomainError("torus requires a modulus tau with Im tau > 0")
        self.kind = kind
        self.tau = tau

    @staticmethod
    def sphere() -> "SurfaceGeometry":
        return SurfaceGeometry("sphere")

    @staticmethod
    def torus(tau: complex = 1j) -> "SurfaceGeometry":
        return SurfaceGeometry("torus", tau)

    # -- metric -------------------------------------------------------------

    def _check_point(self, p: SurfacePoint):
        ok = isinstance(p, SpherePoint) if self.kind == "sphere" else isinstance(p, TorusPoint)
        if not ok:
            raise KindMismatchError(f"{type(p).__name__} does not live on a {self.kind}")

    def _torus_scale(self) -> float:
        # conformal factor: metric = |dz|^2 / Im(tau) has unit area.
        return 1.0 / math.sqrt(self.tau.imag)

    def _torus_embed(self, x, y):
        """Lattice coords -> metric-plane coords (unit-area embedding)."""
        s = self._torus_scale()
        u = (x + y * self.tau.real) * s
        v = y * self.tau.imag * s
        return u, v

    def distance(self, p: SurfacePoint, q: SurfacePoint) -> float:
        self._check_point(p)
        self._check_point(q)
        if self.kind == "sphere":
            return float(sphere_distance_arrays(p.z0, p.z1, q.z0, q.z1))
        return float(self.torus_distance_arrays(np.array([p.x]), np.array([p.y]),
                                                np.array([q.x]), np.array([q.y]))[0])

    def torus_distance_arrays(self, xa, ya, xb, yb):
        dx = (xa - xb) % 1.0
        dy = (ya - yb) % 1.0
        best = None
        for mx in (-1.0, 0.0, 1.0):
            for my in (-1.0, 0.0, 1.0):
                u, v = self._torus_embed(dx + mx, dy + my)
                d2 = u * u + v * v
                best = d2 if best is None else np.minimum(best, d2)
        return np.sqrt(best)

    def injectivity_radius(self) -> float:
        if self.kind == "sphere":
            return math.pi * R_SPHERE
        # half the shortest nonzero lattice vector in the unit-area embedding
        best = math.inf
        for mx in (-1, 0, 1):
            for my in (-1, 0, 1):
                if mx == 0 and my == 0:
                    continue
                u, v = self._torus_embed(float(mx), float(my))
                best = min(best, math.hypot(u, v))
        return 0.5 * best

    def diameter(self) -> float:
        if self.kind == "sphere":
            return math.pi * R_SPHERE
        xs = np.linspace(0.0, 1.0, 64, endpoint=False)
        X, Y = np.meshgrid(xs, xs)
        d = self.torus_distance_arrays(X.ravel(), Y.ravel(),
                                       np.zeros(64 * 64), np.zeros(64 * 64))
        return float(d.max()) * 1.05

    # -- caps ---------------------------------------------------------------

    def cap_volume(self, cap: Cap) -> float:
        if cap.radius < 0:
            raise DomainError("negative cap radius")
        self._check_point(cap.center)
        if self.kind == "sphere":
            t = min(cap.radius / R_SPHERE, math.pi)
            return 0.5 * (1.0 - math.cos(t))
        r = cap.radius
        if 2.0 * r <= 2.0 * self.injectivity_radius():
            return min(math.pi * r * r, 1.0)
        if r >= self.diameter():
            return 1.0
        # wrap-around regime: count on a fixed fine lattice-coordinate grid
        m = 1024
        xs = (np.arange(m) + 0.5) / m
        X, Y = np.meshgrid(xs, xs)
        d = self.torus_distance_arrays(X.ravel(), Y.ravel(),
                                       np.full(m * m, cap.center.x),
                                       np.full(m * m, cap.center.y))
        return float(np.count_nonzero(d <= r)) / (m * m)

    def contains(self, cap: Cap, p: SurfacePoint) -> bool:
        """Strict interior test."""
        return self.distance(cap.center, p) < cap.radius

    def random_cap(self, rng: np.random.Generator, volume: float) -> Cap:
        """Cap of prescribed volume with uniform random center."""
        if self.kind == "sphere":
            z0 = rng.standard_normal() + 1j * rng.standard_normal()
            z1 = rng.standard_normal() + 1j * rng.standard_normal()
            center = SpherePoint.make(z0, z1)
            radius = R_SPHERE * math.acos(1.0 - 2.0 * volume)
        else:
            center = TorusPoint.make(rng.random(), rng.random())
            radius = math.sqrt(volume / math.pi)
            if radius > self.injectivity_radius():
                raise DomainError("requested torus cap volume exceeds the flat-disk regime")
        return Cap(center, radius)

    # -- quadrature ---------------------------------------------------------

    def build_grid(self, n: int) -> "QuadratureGrid":
        return build_grid(self.kind, n, tau=self.tau)


def fs_distance(p: SurfacePoint, q: SurfacePoint, geometry: SurfaceGeometry | None = None) -> float:
    """Geodesic distance in the unit-mass metric.

    Sphere points need no geometry argument; torus points do (the modulus
    enters the flat metric).
    """
    if isinstance(p, SpherePoint) != isinstance(q, SpherePoint):
        raise KindMismatchError("points live on different surfaces")
    if geometry is None:
        if not isinstance(p, SpherePoint):
            raise KindMismatchError("torus distance requires a SurfaceGeometry")
        geometry = SurfaceGeometry.sphere()
    return geometry.distance(p, q)


def cap_volume(cap: Cap, geometry: SurfaceGeometry | None = None) -> float:
    if geometry is None:
        if not isinstance(cap.center, SpherePoint):
            raise KindMismatchError("torus cap volume requires a SurfaceGeometry")
        geometry = SurfaceGeometry.sphere()
    return geometry.cap_volume(cap)


class QuadratureGrid:
    """Nodes and positive weights realizing the integral against omega.

    Sphere grids are Fibonacci lattices with equal weights 1/n; torus grids
    are uniform m x m product grids in lattice coordinates.  Weights sum to 1
    by construction.
    """

    def __init__(self, kind, weights, z0=None, z1=None, xs=None, ys=None, tau=None):
        self.kind = kind
        self.weights = np.asarray(weights, dtype=float)
        self.z0 = z0
        self.z1 = z1
        self.xs = xs
        self.ys = ys
        self.tau = tau

    def __len__(self):
        return len(self.weights)

    @property
    def points(self):
        if self.kind == "sphere":
            return [SpherePoint(complex(a), complex(b)) for a, b in zip(self.z0, self.z1)]
        return [TorusPoint(float(x), float(y)) for x, y in zip(self.xs, self.ys)]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def integrate_fn(self, f) -> float:
        return self.integrate([f(p) for p in self.points])

    def to_json(self) -> str:
        if self.kind == "sphere":
            nodes = [[z0.real, z0.imag, z1.real, z1.imag]
                     for z0, z1 in zip(self.z0, self.z1)]
        else:
            nodes = [[float(x), float(y)] for x, y in zip(self.xs, self.ys)]
        doc = {"kind": self.kind, "nodes": nodes, "weights": self.weights.tolist()}
        if self.kind == "torus":
            doc["tau"] = [self.tau.real, self.tau.imag]
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "QuadratureGrid":
        doc = json.loads(text)
        w = np.asarray(doc["weights"], dtype=float)
        if doc["kind"] == "sphere":
            nodes = np.asarray(doc["nodes"], dtype=float)
            return QuadratureGrid("sphere", w,
                                  z0=nodes[:, 0] + 1j * nodes[:, 1],
                                  z1=nodes[:, 2] + 1j * nodes[:, 3])
        nodes = np.asarray(doc["nodes"], dtype=float)
        tau = complex(doc["tau"][0], doc["tau"][1])
        return QuadratureGrid("torus", w, xs=nodes[:, 0], ys=nodes[:, 1], tau=tau)


def build_grid(kind: str, n: int, tau: complex | None = None) -> QuadratureGrid:
    """Equal-weight quadrature grid with about n nodes."""
    if n < 16:
        raise DomainError("grid needs at least 16 nodes")
    if kind == "sphere":
        i = np.arange(n)
        n3 = 1.0 - (2.0 * i + 1.0) / n
        phi = math.pi * (3.0 - math.sqrt(5.0)) * i
        theta = np.arccos(np.clip(n3, -1.0, 1.0))
        z0 = np.cos(theta / 2.0).astype(complex)
        z1 = np.sin(theta / 2.0) * np.exp(1j * phi)
        # canonical phase: here z0 is already real >= 0; fix the |z1|>|z0| half
        flip = np.abs(z1) > np.abs(z0)
        ph = np.where(flip, z1 / np.where(np.abs(z1) > 0, np.abs(z1), 1.0), 1.0)
        z0, z1 = z0 / ph, z1 / ph
        return QuadratureGrid("sphere", np.full(n, 1.0 / n), z0=z0, z1=z1)
    if kind == "torus":
        m = max(4, round(math.sqrt(n)))
        xs = (np.arange(m) + 0.5) / m
        X, Y = np.meshgrid(xs, xs)
        w = np.full(m * m, 1.0 / (m * m))
        return QuadratureGrid("torus", w, xs=X.ravel(), ys=Y.ravel(), tau=tau)
    raise DomainError(f"unknown surface kind {kind!r}")


# ---------------------------------------------------------------------------
# cutoff profile


def rho(t):
    """Smooth cutoff: 1 for t <= 1/3, 0 for t >= 2/3, quintic in between (C^2)."""
    t = np.asarray(t, dtype=float)
    u = np.clip((t - 1.0 / 3.0) * 3.0, 0.0, 1.0)
    s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    return 1.0 - s


def rho_d1(t):
    t = np.asarray(t, dtype=float)
    u = (t - 1.0 / 3.0) * 3.0
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    ds = 30.0 * u * u * (1.0 - u) ** 2 * 3.0
    return np.where(inside, -ds, 0.0)


def rho_d2(t):
    t = np.asarray(t, dtype=float)
    u = (t - 1.0 / 3.0) * 3.0
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    d2s = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) * 9.0
    return np.where(inside, -d2s, 0.0)


# ---------------------------------------------------------------------------
# test functions


class TestFunction:
    """A member of the built-in family, with its analytic laplacian density.

    ``lap_density`` realizes l_f with (i/pi) ddbar f = l_f * omega; the
    integral of l_f against omega vanishes since f is globally defined.
    """

    def __init__(self, tag, kind, eval_fn, lap_fn, lap_sup, mean,
                 arrays_fn=None, lap_arrays_fn=None):
        self.tag = tag
        self.kind = kind
        self._eval = eval_fn
        self._lap = lap_fn
        self.lap_sup = lap_sup
        self.mean = mean  # exact/precomputed integral of f against omega
        self._arrays = arrays_fn
        self._lap_arrays = lap_arrays_fn

    def __call__(self, p: SurfacePoint) -> float:
        return float(self._eval(p))

    def lap_density(self, p: SurfacePoint) -> float:
        return float(self._lap(p))

    def eval_arrays(self, *coords) -> np.ndarray:
        """Vectorized evaluation: (z0s, z1s) on the sphere, (xs, ys) on the torus."""
        return self._arrays(*coords)

    def eval_grid(self, grid: QuadratureGrid) -> np.ndarray:
        if grid.kind == "sphere":
            return self.eval_arrays(grid.z0, grid.z1)
        return self.eval_arrays(grid.xs, grid.ys)

    def lap_grid(self, grid: QuadratureGrid) -> np.ndarray:
        if self._lap_arrays is not None:
            if grid.kind == "sphere":
                return self._lap_arrays(grid.z0, grid.z1)
            return self._lap_arrays(grid.xs, grid.ys)
        return np.array([self._lap(p) for p in grid.points])


def constant_function(kind: str = "sphere", value: float = 1.0) -> TestFunction:
    return TestFunction(
        f"const({value})", kind,
        lambda p: value, lambda p: 0.0, 0.0, value,
        arrays_fn=lambda *cs: np.full(np.shape(cs[0]), float(value)),
        lap_arrays_fn=lambda *cs: np.zeros(np.shape(cs[0])),
    )


def _harmonic_arrays(i):
    def fn(z0, z1):
        if i == 1:
            return 2.0 * (np.conj(z0) * z1).real
        if i == 2:
            return 2.0 * (np.conj(z0) * z1).imag
        return np.abs(z0) ** 2 - np.abs(z1) ** 2
    return fn


def spherical_harmonic(i: int) -> TestFunction:
    """First-order spherical harmonic u_i of the S^2 embedding (i in 1..3)."""
    if i not in (1, 2, 3):
        raise DomainError("harmonic index must be 1, 2 or 3")
    arrays = _harmonic_arrays(i)

    def ev(p):
        return float(arrays(np.asarray(p.z0), np.asarray(p.z1)))

    return TestFunction(
        f"u{i}", "sphere", ev,
        lambda p: -LAMBDA_HARMONIC * ev(p),
        LAMBDA_HARMONIC, 0.0, arrays_fn=arrays,
        lap_arrays_fn=lambda *cs: -LAMBDA_HARMONIC * arrays(*cs),
    )


class SmoothedIndicator(TestFunction):
    """One-sided smoothing psi+/psi- of a cap indicator with width eps.

    psi+ = rho(dist(x, U)/eps) dominates 1_U; psi- = 1 - rho(dist(x, U^c)/eps)
    is dominated by it.  The laplacian density comes from the radial profile:
    l = Delta_g f / (2*pi) with Delta_g f = f'' + cot(s/R)/R * f' on the
    sphere and f'' + f'/s on the flat torus.
    """

    def __init__(self, cap: Cap, eps: float, side: str,
                 geometry: SurfaceGeometry | None = None):
        if eps <= 0:
            raise DomainError("smoothing width must be positive")
        if side not in ("+", "-"):
            raise DomainError("side must be '+' or '-'")
        geometry = geometry or SurfaceGeometry.sphere()
        geometry._check_point(cap.center)
        self.cap = cap
        self.eps = eps
        self.side = side
        self.geometry = geometry
        r = cap.radius

        def profile(s):
            if side == "+":
                return rho(np.maximum(0.0, s - r) / eps)
            return 1.0 - rho(np.maximum(0.0, r - s) / eps)

        def profile_d1(s):
            if side == "+":
                inside = s > r
                return np.where(inside, rho_d1(np.maximum(0.0, s - r) / eps) / eps, 0.0)
            inside = s < r
            return np.where(inside, rho_d1(np.maximum(0.0, r - s) / eps) / eps, 0.0)

        def profile_d2(s):
            if side == "+":
                inside = s > r
                return np.where(inside, rho_d2(np.maximum(0.0, s - r) / eps) / eps ** 2, 0.0)
            inside = s < r
            return np.where(inside, rho_d2(np.maximum(0.0, r - s) / eps) / eps ** 2, 0.0)

        self._profile = profile
        self._profile_d1 = profile_d1
        self._profile_d2 = profile_d2

        def dist_of(p):
            return geometry.distance(cap.center, p)

        def radial_lap(s):
            s = np.asarray(s, dtype=float)
            d1 = profile_d1(s)
            d2 = profile_d2(s)
            if geometry.kind == "sphere":
                with np.errstate(divide="ignore", invalid="ignore"):
                    cot = np.where(np.abs(np.sin(s / R_SPHERE)) > 1e-12,
                                   1.0 / np.tan(s / R_SPHERE), 0.0)
                lap = d2 + cot / R_SPHERE * d1
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    lap = d2 + np.where(s > 1e-12, d1 / np.maximum(s, 1e-12), 0.0)
            return lap / (2.0 * math.pi)

        self._radial_lap = radial_lap

        sgrid = np.linspace(1e-9, geometry.diameter(), 20001)
        lap_sup = float(np.max(np.abs(radial_lap(sgrid))))

        def dist_arrays(*coords):
            if geometry.kind == "sphere":
                return sphere_distance_arrays(coords[0], coords[1],
                                              cap.center.z0, cap.center.z1)
            return geometry.torus_distance_arrays(
                np.asarray(coords[0]), np.asarray(coords[1]),
                cap.center.x, cap.center.y)

        def arrays(*coords):
            return profile(dist_arrays(*coords))

        super().__init__(
            f"psi{side}(r={r:.4g},eps={eps:.4g})", geometry.kind,
            lambda p: float(profile(dist_of(p))),
            lambda p: float(radial_lap(dist_of(p))),
            lap_sup, None, arrays_fn=arrays,
            lap_arrays_fn=lambda *cs: radial_lap(dist_arrays(*cs)),
        )


# ---------------------------------------------------------------------------
# finite-difference oracle for the laplacian density (test support)


def laplacian_density_fd(f, p: SpherePoint, h: float = 1e-3) -> float:
    """5-point chart-stencil approximation of l_f, Richardson-extrapolated.

    Works in the chart centered at p (rotate p to the chart origin), where
    l_f = (1+|z|^2)^2 * Delta_euclid(f) / 2 evaluates at z = 0.
    """
    from .ensemble import rotation_to_origin, rotate_point  # lazy: avoids cycle

    U = rotation_to_origin(p)
    Uinv = U.conj().T

    def g(z):
        # chart coordinate around p via the rotation taking p -> [1:0]
        q = rotate_point(Uinv, SpherePoint.from_chart(z))
        return f(q)

    def lap(hh):
        return (g(hh) + g(-hh) + g(1j * hh) + g(-1j * hh) - 4.0 * g(0.0)) / hh ** 2

    l1, l2 = lap(h), lap(h / 2.0)
    lap_rich = (4.0 * l2 - l1) / 3.0
    return lap_rich / 2.0
