"""Command-line batch runner.

Subcommands map onto the library entry points; every run writes a manifest
(JSON: config hash, seed, version, timestamps, outputs, failure counters)
plus CSV/JSON results under --out, and nothing anywhere else.  Exit codes:
0 success, 2 configuration error, 3 experiment abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bergman import bergman_diagonal, kernel_derivative_growth
from .elliptic import ThetaBasis, critical_points_torus, sample_torus
from .ensemble import EnsembleSpec, sample_pair
from .errors import BranchcoverError, ConvergenceError, DomainError
from .experiments import (CountDeviationStat, DeviationStat, ExperimentConfig,
                          HoleStat, PLResidualStat, TailL1Stat, TailPointStat,
                          TailSupStat, pl_residual, run, stat_label)
from .geometry import (Cap, SpherePoint, SurfaceGeometry, build_grid,
                       spherical_harmonic)
from .roots import critical_points


def _parse_degrees(text: str):
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        # argparse only converts its own error type into usage + exit 2
        raise argparse.ArgumentTypeError(f"bad degree list {text!r}")


def _parse_tau(text: str) -> complex:
    t = complex(text.replace("i", "j"))
    if t.imag <= 0:
        raise DomainError("tau needs positive imaginary part")
    return t


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


class _Manifest:
    def __init__(self, out_dir: Path, config_doc: dict):
        self.out_dir = out_dir
        self.doc = {
            "config": config_doc,
            "config_hash": _config_hash(config_doc),
            "seed": config_doc.get("seed"),
            "version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "finished": None,
            "outputs": [],
            "failures": {"clamped": 0, "resampled": 0, "hard": 0},
        }

    def write_text(self, name: str, text: str):
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8")
        self.doc["outputs"].append(name)

    def finish(self):
        self.doc["finished"] = time.strftime("%Y-%m-%dT%H:%M:%SZ",
                                             time.gmtime())
        (self.out_dir / "manifest.json").write_text(
            json.dumps(self.doc, indent=2), encoding="utf-8")


def _run_and_write(config: ExperimentConfig, config_doc: dict, out: str) -> int:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(out_dir, config_doc)
    try:
        result = run(config)
    except ConvergenceError as e:
        manifest.doc["failures"]["abort"] = str(e)
        manifest.finish()
        print(f"experiment aborted: {e}", file=sys.stderr)
        return 3
    manifest.doc["failures"] = {"clamped": result.clamped,
                                "resampled": result.resampled,
                                "hard": result.hard_samples}
    manifest.write_text("result.csv", result.to_csv())
    manifest.write_text("result.json", result.to_json())
    manifest.finish()
    for row in result.rows:
        print(f"d={row.degree} {row.statistic}: {row.estimate:.6g} "
              f"[{row.wilson_lo:.6g}, {row.wilson_hi:.6g}]  (k={row.k})")
    return 0


def _cap_from_args(args, geometry: SurfaceGeometry) -> Cap:
    rng = np.random.default_rng(args.seed + 1)
    return geometry.random_cap(rng, args.cap_vol)


# ---------------------------------------------------------------------------
# subcommands


def _cmd_sample(args) -> int:
    if args.kind == "torus":
        tau = _parse_tau(args.tau)
        spec = EnsembleSpec(kind="torus", degree=args.d[0], seed=args.seed)
        t, a, b = sample_torus(spec, args.index)
        basis = ThetaBasis(spec.degree, tau, t)
        cs = critical_points_torus((a, b), basis)
        doc = {"kind": "torus", "degree": spec.degree, "seed": args.seed,
               "index": args.index, "t": [t.t1, t.t2],
               "critical_set": json.loads(cs.to_json())}
    else:
        spec = EnsembleSpec(degree=args.d[0], seed=args.seed)
        pair = sample_pair(spec, args.index)
        cs = critical_points(pair)
        doc = {"kind": "sphere", "pair": json.loads(pair.to_json()),
               "critical_set": json.loads(cs.to_json())}
    text = json.dumps(doc, indent=2)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = _Manifest(out_dir, {"cmd": "sample", "seed": args.seed,
                                       "d": list(args.d),
                                       "index": args.index,
                                       "kind": args.kind})
        manifest.write_text("sample.json", text)
        manifest.finish()
    else:
        print(text)
    return 0


def _cmd_holes(args) -> int:
    geometry = SurfaceGeometry.sphere()
    cap = _cap_from_args(args, geometry)
    config = ExperimentConfig("sphere", args.d, args.samples, args.seed,
                              (HoleStat(cap),), chunk_size=args.chunk_size)
    doc = {"cmd": "holes", "d": list(args.d), "cap_vol": args.cap_vol,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


def _cmd_deviations(args) -> int:
    f = spherical_harmonic(args.harmonic)
    config = ExperimentConfig(
        "sphere", args.d, args.samples, args.seed,
        (DeviationStat(f, args.eps, args.alpha),), chunk_size=args.chunk_size)
    doc = {"cmd": "deviations", "d": list(args.d), "harmonic": args.harmonic,
           "eps": args.eps, "alpha": args.alpha,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


def _cmd_counts(args) -> int:
    geometry = SurfaceGeometry.sphere()
    cap = _cap_from_args(args, geometry)
    config = ExperimentConfig(
        "sphere", args.d, args.samples, args.seed,
        (CountDeviationStat(cap, args.eps, args.alpha),),
        chunk_size=args.chunk_size)
    doc = {"cmd": "counts", "d": list(args.d), "cap_vol": args.cap_vol,
           "eps": args.eps, "alpha": args.alpha,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


def _cmd_tails(args) -> int:
    x0 = SpherePoint.make(complex(0), complex(1))
    stats = (TailSupStat(args.eps, args.alpha),
             TailPointStat(x0, args.eps, args.alpha),
             TailL1Stat(args.eps, args.alpha))
    config = ExperimentConfig("sphere", args.d, args.samples, args.seed,
                              stats, grid_size=args.grid,
                              chunk_size=args.chunk_size)
    doc = {"cmd": "tails", "d": list(args.d), "eps": args.eps,
           "alpha": args.alpha, "grid": args.grid,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


def _cmd_bergman(args) -> int:
    rng = np.random.default_rng(args.seed)
    lines = ["# schema=1", "d,K,d1,d2"]
    for d in args.d:
        z = rng.standard_normal(4)
        p = SpherePoint.make(complex(z[0], z[1]), complex(z[2], z[3]))
        diag = kernel_derivative_growth(d, p)
        lines.append(f"{d},{diag.diagonal:.12g},{diag.d1_abs:.6g},"
                     f"{diag.d2_mixed:.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = _Manifest(out_dir, {"cmd": "bergman", "d": list(args.d),
                                       "seed": args.seed})
        manifest.write_text("bergman.csv", text)
        manifest.finish()
    else:
        print(text, end="")
    return 0


def _cmd_pl_check(args) -> int:
    f = spherical_harmonic(args.harmonic)
    config = ExperimentConfig(
        "sphere", args.d, args.samples, args.seed,
        (PLResidualStat(f, args.threshold),), grid_size=args.grid,
        chunk_size=args.chunk_size)
    doc = {"cmd": "pl-check", "d": list(args.d), "harmonic": args.harmonic,
           "threshold": args.threshold, "grid": args.grid,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


def _cmd_elliptic(args) -> int:
    tau = _parse_tau(args.tau)
    geometry = SurfaceGeometry.torus(tau)
    cap = _cap_from_args(args, geometry)
    config = ExperimentConfig(
        "torus", args.d, args.samples, args.seed,
        (HoleStat(cap), CountDeviationStat(cap, args.eps, args.alpha)),
        tau=tau, chunk_size=args.chunk_size)
    doc = {"cmd": "elliptic", "d": list(args.d), "tau": args.tau,
           "cap_vol": args.cap_vol, "eps": args.eps, "alpha": args.alpha,
           "samples": args.samples, "seed": args.seed}
    return _run_and_write(config, doc, args.out)


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="branchcover",
        description="Monte-Carlo experiments on critical points of random "
                    "meromorphic functions")
    sub = top.add_subparsers(dest="cmd", required=True)

    def common(p, samples_default=100000):
        p.add_argument("--d", type=_parse_degrees, required=True,
                       help="comma-separated ascending degree list")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=samples_default)
        p.add_argument("--chunk-size", type=int, default=512)
        p.add_argument("--out", required=True,
                       help="output directory (all files go here)")

    p = sub.add_parser("sample", help="dump one sampled pair + critical set")
    p.add_argument("--d", type=_parse_degrees, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--kind", choices=("sphere", "torus"), default="sphere")
    p.add_argument("--tau", default="0.0+1.0i")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("holes", help="hole-probability decay in the degree")
    common(p)
    p.add_argument("--cap-vol", type=float, default=0.05)
    p.set_defaults(fn=_cmd_holes)

    p = sub.add_parser("deviations", help="measure-deviation probabilities")
    common(p)
    p.add_argument("--harmonic", type=int, default=3, choices=(1, 2, 3))
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(fn=_cmd_deviations)

    p = sub.add_parser("counts", help="cap counting-measure deviations")
    common(p)
    p.add_argument("--cap-vol", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(fn=_cmd_counts)

    p = sub.add_parser("tails", help="Wronskian-norm tail probabilities")
    common(p)
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=2048)
    p.set_defaults(fn=_cmd_tails)

    p = sub.add_parser("bergman", help="kernel diagonal and derivative growth")
    p.add_argument("--d", type=_parse_degrees, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_bergman)

    p = sub.add_parser("pl-check", help="per-sample zero-counting residuals")
    common(p, samples_default=100)
    p.add_argument("--harmonic", type=int, default=3, choices=(1, 2, 3))
    p.add_argument("--threshold", type=float, default=5e-3)
    p.add_argument("--grid", type=int, default=100000)
    p.set_defaults(fn=_cmd_pl_check)

    p = sub.add_parser("elliptic", help="genus-1 hole/count experiments")
    common(p)
    p.add_argument("--tau", default="0.0+1.0i")
    p.add_argument("--cap-vol", type=float, default=0.05)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.0)
    p.set_defaults(fn=_cmd_elliptic)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except ConvergenceError as e:
        print(f"experiment aborted: {e}", file=sys.stderr)
        return 3
    except (DomainError, BranchcoverError, ValueError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
