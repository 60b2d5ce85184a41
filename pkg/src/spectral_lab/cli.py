"""Command-line entry point: ``spectral-lab {verify,kappa,mass,sweep-alpha}``.

Exit codes: 0 all margins within slack, 1 at least one violation,
2 configuration, I/O or numerical hard failure.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys

import numpy as np

from .config import ConfigError, DEFAULT_CONFIG, make_domain, parse_config
from .domains import DomainError
from .report import emit_report, report_csv
from .transforms import build_quadrature, mass
from .verify import k_of_alpha, quartic_residual, run_campaign

EXIT_OK, EXIT_VIOLATION, EXIT_FAILURE = 0, 1, 2

_PI_EXPR = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_angle(text: str) -> float:
    """Float, or a multiple of pi such as ``pi/2``, ``0.25pi``, ``3*pi/8``."""
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_EXPR.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")
    num = float(m.group(1)) if m.group(1) else 1.0
    den = float(m.group(2)) if m.group(2) else 1.0
    return num * math.pi / den


def parse_domain(text: str):
    """``halfplane``, ``hyperbola:a,b``, ``parabola:p`` or ``sector-approx:alpha``."""
    kind, _, args = text.partition(":")
    vals = [v for v in args.split(",") if v]
    if kind == "halfplane":
        d = {"kind": kind}
    elif kind == "hyperbola":
        a, b = (float(v) for v in (vals or ["1", "1"]))
        d = {"kind": kind, "a": a, "b": b}
    elif kind == "parabola":
        d = {"kind": kind, "p": float(vals[0]) if vals else 1.0}
    elif kind == "sector-approx":
        d = {"kind": kind, "alpha": parse_angle(vals[0])}
    else:
        raise argparse.ArgumentTypeError(f"unknown domain {text!r}")
    return make_domain(d)


def cmd_kappa(args) -> int:
    a = args.alpha
    k = k_of_alpha(a)
    print(f"alpha = {a!r}")
    print(f"K(alpha) = {k!r}")
    print(f"quartic residual at K = {quartic_residual(k, a)!r}")
    return EXIT_OK


def cmd_mass(args) -> int:
    domain = args.domain
    if args.boundary_t is not None:
        z = domain.boundary_point(args.boundary_t).sigma
        on_bd = True
    else:
        z = complex(args.z.replace("i", "j"))
        on_bd = False
    quad = build_quadrature(domain, [z], args.tol)
    val = mass(quad, z, on_bd)
    expected = domain.expected_mass(on_bd)
    print(f"domain = {domain}")
    print(f"z = {z!r} ({'boundary' if on_bd else 'interior'})")
    print(f"nodes = {quad.size}, m = {quad.truncation_m!r}, tail bound = {quad.tail_bound:.3e}")
    print(f"mass = {val!r}")
    print(f"expected = {expected!r}")
    print(f"difference = {val - expected:.3e}")
    return EXIT_OK


def _load_config(path):
    if path is None:
        return parse_config(json.dumps(DEFAULT_CONFIG))
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    for key in ("csv_path", "json_path", "svg_path"):
        val = getattr(args, key.replace("_path", ""))
        if val:
            config.outputs[key] = val
    report = run_campaign(config, threads=args.threads)
    emit_report(report, config)
    agg = report.aggregate
    if not any(config.outputs.values()):
        sys.stdout.write(report_csv(report))
    print(json.dumps({k: agg[k] for k in sorted(agg)}, indent=2), file=sys.stderr)
    if agg["failures"]:
        return EXIT_FAILURE
    return EXIT_VIOLATION if agg["violations"] else EXIT_OK


def cmd_sweep(args) -> int:
    """K(alpha) next to the largest observed ratio on hyperbolas of half-angle alpha."""
    k = args.points
    alphas = [math.pi / 2 * (i + 0.5) / k for i in range(k)]
    print("alpha,k_alpha,max_ratio,max_ratio_over_k")
    worst = 0
    for a in alphas:
        doc = {
            "domains": [{"kind": "hyperbola", "a": 1.0, "b": math.tan(a)}],
            "ensembles": [{"kind": "jordan", "n": args.n, "count": args.count, "margin": 0.05},
                          {"kind": "ginibre", "n": args.n, "count": args.count, "margin": 0.05}],
            "seed": args.seed,
        }
        config = parse_config(doc)
        report = run_campaign(config, threads=args.threads)
        agg = report.aggregate
        worst = max(worst, agg["violations"] + agg["failures"])
        print(f"{a!r},{k_of_alpha(a)!r},{agg['max_ratio']!r},{agg['max_ratio_over_k']!r}")
    return EXIT_VIOLATION if worst else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spectral-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the full verification campaign")
    v.add_argument("--config", help="JSON campaign config (default: built-in campaign)")
    v.add_argument("--csv", help="CSV output path")
    v.add_argument("--json", help="JSON report path")
    v.add_argument("--svg", help="SVG figure path")
    v.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $SPECTRAL_LAB_THREADS or 1)")
    v.set_defaults(func=cmd_verify)

    k = sub.add_parser("kappa", help="print K(alpha) and the quartic root check")
    k.add_argument("--alpha", type=parse_angle, required=True)
    k.set_defaults(func=cmd_kappa)

    m = sub.add_parser("mass", help="quadrature mass of the double-layer kernel")
    m.add_argument("--domain", type=parse_domain, default="halfplane")
    g = m.add_mutually_exclusive_group(required=True)
    g.add_argument("--z", help="interior point, e.g. 2+0.5j")
    g.add_argument("--boundary-t", type=float, help="boundary parameter of a boundary point")
    m.add_argument("--tol", type=float, default=1e-8)
    m.set_defaults(func=cmd_mass)

    s = sub.add_parser("sweep-alpha", help="K(alpha) and empirical max ratio vs alpha")
    s.add_argument("--points", type=int, default=5)
    s.add_argument("--n", type=int, default=6)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FAILURE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (OSError, DomainError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
