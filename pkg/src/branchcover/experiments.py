"""Monte-Carlo engine: equidistribution, hole, and Wronskian-tail experiments.

A run draws section pairs (pure function of (seed, sample index)), evaluates
one or more event statistics per sample, and aggregates counts with Wilson
intervals and an exponential decay-rate fit of log(k/n) against the degree.
Samples hitting degenerate pairs or root-finder failures are redrawn from a
deterministic replacement ladder (index + n, + 2n, ...), so results are
bit-identical for any worker count; the run aborts if more than 0.1% of the
samples need replacing.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import elliptic, roots, wronskian
from .ensemble import (EnsembleSpec, SectionPair, make_basis,
                       sample_coeff_indices)
from .errors import (CommonZeroError, ConvergenceError, DegeneratePairError,
                     DomainError, IncompleteRootSetError,
                     InsufficientDataError)
from .geometry import (Cap, QuadratureGrid, SpherePoint, SurfaceGeometry,
                       TestFunction, TorusPoint, build_grid, chart_to_unit,
                       sphere_distance_arrays)

MAX_FAILURE_FRACTION = 1e-3
MAX_CLAMP_FRACTION = 1e-4
WILSON_Z = 1.959963984540054          # two-sided 95%
WILSON_Z_ONE_SIDED = 1.6448536269514722


# ---------------------------------------------------------------------------
# statistic descriptors


@dataclass(frozen=True)
class DeviationStat:
    """Event |T_u(f) - int f omega| >= eps_d, eps_d = eps0 * d^-alpha."""

    f: TestFunction
    eps0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class HoleStat:
    """Event: no critical point meets the cap."""

    cap: Cap


@dataclass(frozen=True)
class CountDeviationStat:
    """Event |fraction of critical points in cap - cap volume| >= eps_d."""

    cap: Cap
    eps0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class TailSupStat:
    """Event sup_x ||W|| >= exp(eps_d * d)."""

    eps0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class TailPointStat:
    """Event ||W(x)|| <= exp(-eps_d * d) at a fixed point."""

    x: SpherePoint
    eps0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class TailL1Stat:
    """Event int |log ||W|| | omega >= eps_d * d."""

    eps0: float
    alpha: float = 0.0


@dataclass(frozen=True)
class PLResidualStat:
    """Per-sample residual of the zero-counting identity
    sum_i mult_i f(x_i) - (2d-2) int f omega = int log||W|| * lap(f) omega;
    the event is residual >= threshold."""

    f: TestFunction
    threshold: float = 5e-3


STATS_WITH_EPS = (DeviationStat, CountDeviationStat, TailSupStat,
                  TailPointStat, TailL1Stat)


def stat_eps(stat, d: int) -> float:
    return stat.eps0 * float(d) ** (-stat.alpha)


def stat_label(stat) -> str:
    if isinstance(stat, DeviationStat):
        return f"deviation[{stat.f.tag},eps0={stat.eps0:g},a={stat.alpha:g}]"
    if isinstance(stat, HoleStat):
        return f"hole[r={stat.cap.radius:g}]"
    if isinstance(stat, CountDeviationStat):
        return (f"count_deviation[r={stat.cap.radius:g},"
                f"eps0={stat.eps0:g},a={stat.alpha:g}]")
    if isinstance(stat, TailSupStat):
        return f"tail_sup[eps0={stat.eps0:g},a={stat.alpha:g}]"
    if isinstance(stat, TailPointStat):
        return f"tail_point[eps0={stat.eps0:g},a={stat.alpha:g}]"
    if isinstance(stat, TailL1Stat):
        return f"tail_L1[eps0={stat.eps0:g},a={stat.alpha:g}]"
    if isinstance(stat, PLResidualStat):
        return f"pl_residual[{stat.f.tag},thr={stat.threshold:g}]"
    raise DomainError(f"unknown statistic {stat!r}")


def _needs_roots(stat) -> bool:
    return isinstance(stat, (DeviationStat, HoleStat, CountDeviationStat,
                             PLResidualStat))


def _needs_grid(stat) -> bool:
    return isinstance(stat, (TailSupStat, TailL1Stat, PLResidualStat))


# ---------------------------------------------------------------------------
# config / result


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    degrees: tuple
    samples: int
    seed: int
    statistics: tuple
    grid_size: int = 2048
    tau: complex = 1j
    chunk_size: int = 512
    tol: float = 1e-12

    def __post_init__(self):
        if self.kind not in ("sphere", "torus"):
            raise DomainError(f"unknown surface kind {self.kind!r}")
        degs = tuple(int(d) for d in self.degrees)
        if not degs or any(d < 1 for d in degs) or list(degs) != sorted(degs):
            raise DomainError("degrees must be ascending positive integers")
        object.__setattr__(self, "degrees", degs)
        if self.samples < 100:
            raise DomainError("need at least 100 samples per degree")
        stats = self.statistics
        if not isinstance(stats, tuple):
            stats = (stats,)
        if not stats:
            raise DomainError("at least one statistic is required")
        for s in stats:
            if isinstance(s, STATS_WITH_EPS) and not stat_eps(s, degs[0]) > 0:
                raise DomainError("statistic needs eps > 0")
        object.__setattr__(self, "statistics", stats)
        if self.kind == "torus" and complex(self.tau).imag <= 0:
            raise DomainError("torus requires Im tau > 0")


@dataclass(frozen=True)
class DegreeRow:
    degree: int
    statistic: str
    k: int
    n: int
    estimate: float
    wilson_lo: float
    wilson_hi: float
    mean: float       # mean of the underlying per-sample value
    se: float         # empirical standard error of that mean

    @property
    def rule_of_three(self):
        return 3.0 / self.n if self.k == 0 else None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: tuple
    rates: dict
    clamped: int = 0
    resampled: int = 0
    hard_samples: int = 0
    wall_clock: float = 0.0

    def rows_for(self, stat) -> list:
        lbl = stat_label(stat)
        return [r for r in self.rows if r.statistic == lbl]

    def to_json(self) -> str:
        return json.dumps({
            "kind": self.config.kind,
            "degrees": list(self.config.degrees),
            "samples": self.config.samples,
            "seed": self.config.seed,
            "statistics": [stat_label(s) for s in self.config.statistics],
            "rows": [{
                "d": r.degree, "statistic": r.statistic, "k": r.k, "n": r.n,
                "p": r.estimate, "lo": r.wilson_lo, "hi": r.wilson_hi,
                "mean": r.mean, "se": r.se,
                "rule_of_three": r.rule_of_three,
            } for r in self.rows],
            "rates": {k: (list(v) if v is not None else None)
                      for k, v in self.rates.items()},
            "clamped": self.clamped,
            "resampled": self.resampled,
            "hard_samples": self.hard_samples,
            "wall_clock": self.wall_clock,
        }, indent=2)

    def to_csv(self) -> str:
        lines = ["# schema=1", "d,statistic,k,n,p,lo,hi"]
        for r in self.rows:
            lines.append(f"{r.degree},{r.statistic},{r.k},{r.n},"
                         f"{r.estimate:.10g},{r.wilson_lo:.10g},{r.wilson_hi:.10g}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# intervals and rate fits


def wilson_interval(k: int, n: int, z: float = WILSON_Z):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise DomainError("empty sample")
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def wilson_upper(k: int, n: int) -> float:
    """One-sided 95% upper confidence bound."""
    return wilson_interval(k, n, z=WILSON_Z_ONE_SIDED)[1]


def fit_rate(points):
    """OLS of log(k/n) on d over degrees with k >= 5.

    Returns (slope, intercept, R^2); raises InsufficientDataError with fewer
    than 3 usable degrees.  Zero-count degrees are the caller's to report via
    the rule-of-three bound; they never enter the fit.
    """
    usable = [(d, k, n) for d, k, n in points if k >= 5]
    if len(usable) < 3:
        raise InsufficientDataError(
            f"rate fit needs >= 3 degrees with k >= 5, have {len(usable)}")
    x = np.array([d for d, _, _ in usable], dtype=float)
    y = np.array([math.log(k / n) for _, k, n in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def tail_bound_check(result: ExperimentResult, bound, stat=None):
    """Per-degree comparison of the one-sided Wilson upper bound against an
    analytic curve d -> bound(d).  Returns a list of report dicts."""
    rows = result.rows_for(stat) if stat is not None else list(result.rows)
    report = []
    for r in rows:
        b = float(bound(r.degree))
        upper = wilson_upper(r.k, r.n)
        report.append({"d": r.degree, "statistic": r.statistic, "k": r.k,
                       "n": r.n, "upper": upper, "bound": b,
                       "pass": upper <= b})
    return report


# ---------------------------------------------------------------------------
# worker-count handling


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("BRANCHCOVER_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# batched evaluation helpers (sphere)


def batch_form_log_abs(C: np.ndarray, z0s: np.ndarray, z1s: np.ndarray):
    """log-modulus at unit representatives for a batch of binary forms.

    C is (m, n+1) rows of chart coefficients; points are unit pairs of shape
    (p,).  Returns (m, p).  Dual-chart Horner, as in the single-form case.
    """
    C = np.asarray(C)
    m, ncoef = C.shape
    n = ncoef - 1
    use_z = np.abs(z1s) <= np.abs(z0s)
    z = np.where(use_z,
                 z1s / np.where(z0s != 0, z0s, 1.0),
                 z0s / np.where(z1s != 0, z1s, 1.0))
    fwd = np.zeros((m, len(z)), dtype=complex)
    bwd = np.zeros((m, len(z)), dtype=complex)
    for k in range(n, -1, -1):
        fwd = fwd * z + C[:, k][:, None]
        bwd = bwd * z + C[:, n - k][:, None]
    pz = np.abs(np.where(use_z, fwd, bwd))
    base = np.where(use_z, np.abs(z0s), np.abs(z1s))
    out = np.full(pz.shape, -np.inf)
    np.log(pz, out=out, where=pz > 0)
    return out + n * np.log(base)[None, :]


def batch_sup_log_norm(C: np.ndarray, grid: QuadratureGrid,
                       ascent_steps: int = 15):
    """Per-sample lower bound on sup log||W||: best grid node plus projected
    gradient ascent in the chart of that node, vectorized over samples."""
    ln = batch_form_log_abs(C, grid.z0, grid.z1)
    m, ncoef = C.shape
    n = ncoef - 1
    i = np.argmax(ln, axis=1)
    best = ln[np.arange(m), i]
    z0b, z1b = grid.z0[i], grid.z1[i]
    swap = np.abs(z1b) > np.abs(z0b)
    Cc = np.where(swap[:, None], C[:, ::-1], C)
    z = np.where(swap, z0b / np.where(z1b != 0, z1b, 1.0),
                 z1b / np.where(z0b != 0, z0b, 1.0))

    def F(zz):
        v = np.zeros(m, dtype=complex)
        for k in range(n, -1, -1):
            v = v * zz + Cc[:, k]
        a = np.abs(v)
        out = np.full(m, -np.inf)
        np.log(a, out=out, where=a > 0)
        return out - 0.5 * n * np.log1p(np.abs(zz) ** 2)

    step = np.full(m, 0.5 / max(1.0, math.sqrt(n)))
    cur, fcur = z.astype(complex), F(z)
    h = 1e-6
    for _ in range(ascent_steps):
        gx = (F(cur + h) - F(cur - h)) / (2 * h)
        gy = (F(cur + 1j * h) - F(cur - 1j * h)) / (2 * h)
        g = gx + 1j * gy
        ga = np.abs(g)
        trial = cur + step * g / np.where(ga > 0, ga, 1.0)
        ftrial = F(trial)
        better = ftrial > fcur
        cur = np.where(better, trial, cur)
        fcur = np.where(better, ftrial, fcur)
        step = np.where(better, step, step * 0.5)
    return np.maximum(best, fcur)


# ---------------------------------------------------------------------------
# per-degree context


class _DegreeContext:
    def __init__(self, config: ExperimentConfig, d: int):
        self.config = config
        self.d = d
        self.kind = config.kind
        self.spec = EnsembleSpec(kind=config.kind, degree=d, seed=config.seed)
        self.geometry = (SurfaceGeometry.sphere() if config.kind == "sphere"
                         else SurfaceGeometry.torus(config.tau))
        self.need_roots = any(_needs_roots(s) for s in config.statistics)
        self.need_grid = any(_needs_grid(s) for s in config.statistics)
        self.basis = make_basis(d) if config.kind == "sphere" else None
        self.grid = (build_grid(config.kind, config.grid_size, tau=config.tau)
                     if self.need_grid else None)


class _ChunkOut:
    __slots__ = ("k", "n", "vsum", "vsumsq", "clamped", "resampled", "hard")

    def __init__(self, nstats):
        self.k = np.zeros(nstats, dtype=np.int64)
        self.n = 0
        self.vsum = np.zeros(nstats)
        self.vsumsq = np.zeros(nstats)
        self.clamped = 0
        self.resampled = 0
        self.hard = 0


# ---------------------------------------------------------------------------
# sphere chunk evaluation


def _sphere_batch(ctx: _DegreeContext, indices):
    """Evaluate all statistics for the given sample indices.

    Returns (values, events, bad, clamped, hard): arrays (S, m)/(S, m)/(m,).
    """
    cfg = ctx.config
    d = ctx.d
    stats = cfg.statistics
    m = len(indices)
    A, B = sample_coeff_indices(ctx.spec, indices)
    J = wronskian.jacobian_coeff_batch(d, A, B, ctx.basis)
    rowmax = np.max(np.abs(J), axis=1)
    bad = rowmax == 0.0
    values = np.zeros((len(stats), m))
    events = np.zeros((len(stats), m), dtype=bool)
    clamped = 0
    hard = 0

    z0R = z1R = None
    if ctx.need_roots and d >= 2 and not bad.all():
        nroots = 2 * d - 2
        z0R = np.zeros((m, nroots), dtype=complex)
        z1R = np.zeros((m, nroots), dtype=complex)
        lead_ok = np.abs(J[:, -1]) > 1e-12 * rowmax
        easy = lead_ok & ~bad
        if easy.any():
            rts, conv = roots.aberth_roots(J[easy], tol=cfg.tol)
            rts = roots.newton_polish(J[easy], rts)
            cz0, cz1 = chart_to_unit(rts)
            z0R[easy] = cz0
            z1R[easy] = cz1
            easy_rows = np.flatnonzero(easy)
            retry = easy_rows[~conv]
        else:
            retry = np.array([], dtype=int)
        fallback = np.concatenate([np.flatnonzero(~lead_ok & ~bad), retry])
        for i in fallback:
            hard += 1
            try:
                pts = roots.roots_binary_form(J[i], tol=cfg.tol)
            except Exception:
                bad[i] = True
                continue
            flat = [p for p, mult in pts for _ in range(mult)]
            if len(flat) != nroots:
                bad[i] = True
                continue
            z0R[i] = [p.z0 for p in flat]
            z1R[i] = [p.z1 for p in flat]

    grid_ln = None
    if ctx.need_grid and any(isinstance(s, (TailSupStat, TailL1Stat))
                             for s in stats):
        grid_ln = batch_form_log_abs(J, ctx.grid.z0, ctx.grid.z1)

    for si, stat in enumerate(stats):
        if isinstance(stat, (DeviationStat, HoleStat, CountDeviationStat)):
            if d == 1:
                # no critical points at all: holes are certain, measures empty
                if isinstance(stat, HoleStat):
                    values[si] = 1.0
                    events[si] = True
                else:
                    tv = 0.0
                    target = (stat.f.mean if isinstance(stat, DeviationStat)
                              else ctx.geometry.cap_volume(stat.cap))
                    values[si] = tv
                    events[si] = abs(tv - target) >= stat_eps(stat, d)
                continue
            if isinstance(stat, DeviationStat):
                fv = stat.f.eval_arrays(z0R, z1R)
                T = fv.mean(axis=1)
                values[si] = T
                events[si] = np.abs(T - stat.f.mean) >= stat_eps(stat, d)
            else:
                c = stat.cap.center
                dist = sphere_distance_arrays(z0R, z1R, c.z0, c.z1)
                inside = dist < stat.cap.radius
                if isinstance(stat, HoleStat):
                    empty = ~inside.any(axis=1)
                    values[si] = empty.astype(float)
                    events[si] = empty
                else:
                    T = inside.mean(axis=1)
                    vol = ctx.geometry.cap_volume(stat.cap)
                    values[si] = T
                    events[si] = np.abs(T - vol) >= stat_eps(stat, d)
        elif isinstance(stat, TailPointStat):
            ln = batch_form_log_abs(
                J, np.array([stat.x.z0]), np.array([stat.x.z1]))[:, 0]
            values[si] = ln
            events[si] = ln <= -stat_eps(stat, d) * d
        elif isinstance(stat, TailSupStat):
            sup = batch_sup_log_norm(J, ctx.grid)
            values[si] = sup
            events[si] = sup >= stat_eps(stat, d) * d
        elif isinstance(stat, TailL1Stat):
            clamp = math.log(wronskian.LOG_CLAMP)
            ln = np.maximum(grid_ln, clamp)
            clamped += int(np.count_nonzero(grid_ln < clamp))
            L1 = np.abs(ln) @ ctx.grid.weights
            values[si] = L1
            events[si] = L1 >= stat_eps(stat, d) * d
        elif isinstance(stat, PLResidualStat):
            for r, i in enumerate(indices):
                if bad[r]:
                    continue
                pair = SectionPair(d, A[r], B[r], seed=(cfg.seed, int(i)))
                try:
                    res, nclamp = pl_residual(pair, stat.f, ctx.grid)
                except (DegeneratePairError, CommonZeroError,
                        IncompleteRootSetError):
                    bad[r] = True
                    continue
                clamped += nclamp
                values[si, r] = res
                events[si, r] = res >= stat.threshold
        else:
            raise DomainError(f"unknown statistic {stat!r}")
    return values, events, bad, clamped, hard


# ---------------------------------------------------------------------------
# torus chunk evaluation


def _torus_batch(ctx: _DegreeContext, indices):
    cfg = ctx.config
    d = ctx.d
    stats = cfg.statistics
    m = len(indices)
    for s in stats:
        if not isinstance(s, (DeviationStat, HoleStat, CountDeviationStat)):
            raise DomainError(
                f"statistic {stat_label(s)} is only defined on the sphere")
    T0, A, B = elliptic.sample_torus_indices(ctx.spec, indices)
    xs, ys, ok = elliptic.torus_roots_batch(d, cfg.tau, T0, A, B, tol=cfg.tol)
    bad = np.zeros(m, dtype=bool)
    hard = 0
    for r in np.flatnonzero(~ok):
        hard += 1
        t = elliptic.BundlePoint(float(T0[r].real), float(T0[r].imag))
        basis = elliptic.ThetaBasis(d, cfg.tau, t)
        try:
            cs = elliptic.critical_points_torus((A[r], B[r]), basis,
                                                tol=cfg.tol)
        except Exception:
            bad[r] = True
            continue
        flat = [p for p, mult in cs.points for _ in range(mult)]
        xs[r] = [p.x for p in flat]
        ys[r] = [p.y for p in flat]

    values = np.zeros((len(stats), m))
    events = np.zeros((len(stats), m), dtype=bool)
    for si, stat in enumerate(stats):
        if isinstance(stat, DeviationStat):
            fv = stat.f.eval_arrays(xs, ys)
            T = fv.mean(axis=1)
            values[si] = T
            events[si] = np.abs(T - stat.f.mean) >= stat_eps(stat, d)
        else:
            c = stat.cap.center
            dist = ctx.geometry.torus_distance_arrays(xs, ys, c.x, c.y)
            inside = dist < stat.cap.radius
            if isinstance(stat, HoleStat):
                empty = ~inside.any(axis=1)
                values[si] = empty.astype(float)
                events[si] = empty
            else:
                T = inside.mean(axis=1)
                vol = ctx.geometry.cap_volume(stat.cap)
                values[si] = T
                events[si] = np.abs(T - vol) >= stat_eps(stat, d)
    return values, events, bad, 0, hard


# ---------------------------------------------------------------------------
# the Poincare-Lelong residual


def pl_residual(pair: SectionPair, f: TestFunction, grid: QuadratureGrid):
    """|sum_i mult_i f(x_i) - (2d-2) int f omega - int log||W|| lap_f omega|.

    Returns (residual, clamp_count)."""
    cs = roots.critical_points(pair)
    lhs = sum(mult * f(p) for p, mult in cs.points)
    lhs -= (2 * pair.degree - 2) * f.mean
    W = wronskian.jacobian_form(pair)
    ln = wronskian.log_norm_grid(W, grid)
    clamp = math.log(wronskian.LOG_CLAMP)
    nclamp = int(np.count_nonzero(ln < clamp))
    ln = np.maximum(ln, clamp)
    rhs = float(np.dot(grid.weights, ln * f.lap_grid(grid)))
    return abs(lhs - rhs), nclamp


# ---------------------------------------------------------------------------
# the runner


def _process_chunk(ctx: _DegreeContext, lo: int, hi: int) -> _ChunkOut:
    cfg = ctx.config
    stats = cfg.statistics
    out = _ChunkOut(len(stats))
    n_total = cfg.samples
    evaluate = _sphere_batch if cfg.kind == "sphere" else _torus_batch
    slots = np.arange(lo, hi)
    vals = np.zeros((len(stats), len(slots)))
    evs = np.zeros((len(stats), len(slots)), dtype=bool)
    pending = np.arange(len(slots))
    attempt = 0
    while len(pending) and attempt < 50:
        indices = slots[pending] + attempt * n_total
        v, e, bad, clamped, hard = evaluate(ctx, list(indices))
        out.clamped += clamped
        out.hard += hard
        good = ~bad
        vals[:, pending[good]] = v[:, good]
        evs[:, pending[good]] = e[:, good]
        out.resampled += int(np.count_nonzero(bad))
        pending = pending[bad]
        attempt += 1
    if len(pending):
        raise ConvergenceError(
            f"chunk [{lo},{hi}) could not resolve {len(pending)} samples "
            f"after {attempt} replacement rounds")
    out.n = len(slots)
    out.k = evs.sum(axis=1).astype(np.int64)
    out.vsum = vals.sum(axis=1)
    out.vsumsq = (vals ** 2).sum(axis=1)
    return out


def run(config: ExperimentConfig) -> ExperimentResult:
    """Execute the experiment; deterministic given config for any worker
    count (fixed chunk boundaries, chunk-ordered aggregation)."""
    t_start = time.time()
    stats = config.statistics
    rows = []
    counters = {"clamped": 0, "resampled": 0, "hard": 0}
    per_stat_points = {stat_label(s): [] for s in stats}
    for d in config.degrees:
        ctx = _DegreeContext(config, d)
        bounds = list(range(0, config.samples, config.chunk_size))
        chunks = [(lo, min(lo + config.chunk_size, config.samples))
                  for lo in bounds]
        nw = worker_count()
        if nw > 1:
            with ThreadPoolExecutor(max_workers=nw) as ex:
                outs = list(ex.map(lambda c: _process_chunk(ctx, *c), chunks))
        else:
            outs = [_process_chunk(ctx, *c) for c in chunks]
        n = sum(o.n for o in outs)
        resampled = sum(o.resampled for o in outs)
        if resampled > MAX_FAILURE_FRACTION * n:
            raise ConvergenceError(
                f"degree {d}: {resampled} of {n} samples needed replacement "
                f"(> {MAX_FAILURE_FRACTION:.1%})")
        counters["clamped"] += sum(o.clamped for o in outs)
        counters["resampled"] += resampled
        counters["hard"] += sum(o.hard for o in outs)
        for si, s in enumerate(stats):
            k = int(sum(o.k[si] for o in outs))
            vsum = sum(o.vsum[si] for o in outs)
            vsumsq = sum(o.vsumsq[si] for o in outs)
            mean = vsum / n
            var = max(vsumsq / n - mean * mean, 0.0)
            se = math.sqrt(var / n)
            lo_ci, hi_ci = wilson_interval(k, n)
            rows.append(DegreeRow(d, stat_label(s), k, n, k / n,
                                  lo_ci, hi_ci, mean, se))
            per_stat_points[stat_label(s)].append((d, k, n))
    rates = {}
    for lbl, pts in per_stat_points.items():
        try:
            rates[lbl] = fit_rate(pts)
        except InsufficientDataError:
            rates[lbl] = None
    return ExperimentResult(config, tuple(rows), rates,
                            clamped=counters["clamped"],
                            resampled=counters["resampled"],
                            hard_samples=counters["hard"],
                            wall_clock=time.time() - t_start)
