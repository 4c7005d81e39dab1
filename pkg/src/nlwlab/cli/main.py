"""``nlwlab`` command line."""

from __future__ import annotations

import argparse
import json
import sys

import yaml

from ..errors import NLWError
from .config import HYPERBOLIC_DEFAULTS, HyperbolicSpec, load_config
from .runner import OUTPUT_ENV, diagnose, hyperbolic_run, run, scatter_run, sweep


def _values(text: str):
    """Sweep values as a YAML flow list, e.g. "[1e-3, 5e-4]" or "0.2,0.1"."""
    text = text.strip()
    if not text.startswith("["):
        text = f"[{text}]"
    vals = yaml.safe_load(text)
    if not isinstance(vals, list):
        raise argparse.ArgumentTypeError("values must form a list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nlwlab",
        description=f"Radial cubic wave equation lab. Output root: --out, ${OUTPUT_ENV}, or ./runs.")
    p.add_argument("--out", help="output root directory")
    strict = p.add_mutually_exclusive_group()
    strict.add_argument("--strict", dest="strict", action="store_true", default=True,
                        help="reject unknown config keys (default)")
    strict.add_argument("--no-strict", dest="strict", action="store_false")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("config")
    r.add_argument("--no-figures", action="store_true")

    s = sub.add_parser("sweep", help="run a scenario for each value of one parameter")
    s.add_argument("config")
    s.add_argument("--axis", required=True, help="dotted path, e.g. solver.dt")
    s.add_argument("--values", required=True, type=_values)
    s.add_argument("--figures", action="store_true")

    d = sub.add_parser("diagnose", help="recompute monitors from checkpoints")
    d.add_argument("run_dir")

    h = sub.add_parser("hyperbolic", help="hyperbolic transform, native evolution, checks")
    h.add_argument("run_dir")
    for key, default in HYPERBOLIC_DEFAULTS.items():
        h.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float, default=None,
                       help=f"default {default}")

    c = sub.add_parser("scatter", help="scattering diagnostics for a run")
    c.add_argument("run_dir")
    c.add_argument("--r-cone", type=float)
    c.add_argument("--tol-factor", type=float)
    return p


def _hyperbolic_spec(args, run_dir):
    overrides = {k: getattr(args, k) for k in HYPERBOLIC_DEFAULTS if getattr(args, k) is not None}
    if not overrides:
        return None
    from .runner import load_run

    sc, _ = load_run(run_dir)
    base = dict(HYPERBOLIC_DEFAULTS)
    if sc.hyperbolic is not None:
        base.update(vars(sc.hyperbolic))
    base.update(overrides)
    base["m"] = int(base["m"])
    base["output_stride"] = int(base["output_stride"])
    return HyperbolicSpec(**base)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            art = run(load_config(args.config, args.strict), args.out, not args.no_figures)
            print(f"{art.status}: {art.run_dir}")
            print(json.dumps(art.headline, indent=2, sort_keys=True, default=str))
            return 0 if art.status == "ok" else 2
        if args.command == "sweep":
            arts = sweep(load_config(args.config, args.strict), args.axis, args.values,
                         args.out, args.figures)
            for a in arts:
                print(f"{a.status}: {a.run_dir}")
            return 0 if all(a.status == "ok" for a in arts) else 2
        if args.command == "diagnose":
            print(diagnose(args.run_dir))
            return 0
        if args.command == "hyperbolic":
            rep = hyperbolic_run(args.run_dir, _hyperbolic_spec(args, args.run_dir))
            keys = ("energy_drift", "route_agreement", "change_of_variables")
            print(json.dumps({k: rep[k] for k in keys}, indent=2, default=str))
            return 0
        if args.command == "scatter":
            rep = scatter_run(args.run_dir, args.r_cone, args.tol_factor)
            print(json.dumps({"cauchy_defects": rep["cauchy_defects"],
                              "scattering_detected": rep["scattering_detected"]}, indent=2))
            return 0
    except NLWError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
