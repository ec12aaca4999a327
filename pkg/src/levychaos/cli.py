"""Command-line front end: expansion, verification suites, path simulation.

Exit codes: 0 success / all checks pass, 1 verification failure,
2 configuration or resource error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import DomainError, NonFiniteError, ResourceError
from .expansion import expand_product
from .kernelspace import (LevyMeasureSpec, StateSpace, TimeGrid, random_kernel)
from .levy import simulate_path
from .verify import (VerificationConfig, VerificationReport, verify_exponential,
                     verify_isometry, verify_pair_vs_general, verify_product_pathwise)

DEFAULT_SPACE_DOC = {
    "horizon": 1.0,
    "cells": 4,
    "marks": [{"size": 1.0, "rate": 2.5}, {"size": -0.5, "rate": 1.5}],
}


def _default_config_doc() -> dict:
    return {"schema": 1, "space": dict(DEFAULT_SPACE_DOC)}


def _load_config(args, overrides: dict | None = None) -> VerificationConfig:
    if args.config:
        with open(args.config) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DomainError(f"config is not valid JSON: {exc}") from exc
    else:
        doc = _default_config_doc()
    for key, val in (overrides or {}).items():
        doc.setdefault(key, val)
    for key in ("seed", "paths", "samples"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    return VerificationConfig.from_dict(doc)


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _report_text(report: VerificationReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json_lines()
    lines = [f"{'check':<42} {'metric':<8} {'value':>12} {'tol':>10}  status"]
    for r in report.records:
        status = "SKIP" if r.skipped else ("pass" if r.passed else "FAIL")
        lines.append(f"{r.name:<42} {r.metric:<8} {r.value:>12.3e} "
                     f"{r.tolerance:>10.1e}  {status}")
    s = report.summary()
    lines.append(f"{s['suite']}: {s['total'] - s['failed']}/{s['total']} passed, "
                 f"{s['skipped']} skipped")
    return "\n".join(lines)


def _run_report(args, report: VerificationReport) -> int:
    _emit(args, _report_text(report, args.format))
    return 0 if report.passed else 1


def _cmd_expand(args) -> int:
    if args.config:
        cfg = _load_config(args)
        space, degrees, kernels = cfg.space, cfg.degrees, cfg.kernels
    else:
        degrees = tuple(int(d) for d in args.degrees.split(",")) if args.degrees else (1, 1)
        if args.m is not None and args.m != len(degrees):
            raise DomainError(f"--m {args.m} disagrees with {len(degrees)} degrees")
        space = StateSpace(TimeGrid.regular(DEFAULT_SPACE_DOC["horizon"],
                                            DEFAULT_SPACE_DOC["cells"]),
                           LevyMeasureSpec(tuple((m["size"], m["rate"])
                                                 for m in DEFAULT_SPACE_DOC["marks"])))
        kernels = tuple(random_kernel(space, d, seed=[args.kernel_seed, 7, i],
                                      scale=args.scale)
                        for i, d in enumerate(degrees))
    if not kernels:
        raise DomainError("nothing to expand: no degrees/kernels configured")
    expansion = expand_product(list(kernels))
    if args.format == "json":
        lines = []
        for t in expansion.terms:
            pm = t.provenance
            lines.append(json.dumps({
                "l": {",".join(map(str, s)): v for s, v in pm.l} if pm else {},
                "n": {",".join(map(str, s)): v for s, v in pm.n} if pm else {},
                "coefficient": str(t.coefficient),
                "degree": t.degree,
                "kernel": np.atleast_1d(t.kernel.values).ravel().tolist(),
            }))
        _emit(args, "\n".join(lines))
    else:
        lines = [f"{'l':<20} {'n':<20} {'coeff':>8} {'degree':>7} {'|kernel|_max':>13}"]
        for t in expansion.terms:
            pm = t.provenance
            ltxt = ",".join(f"{s}:{v}" for s, v in pm.l) if pm and pm.l else "-"
            ntxt = ",".join(f"{s}:{v}" for s, v in pm.n) if pm and pm.n else "-"
            mx = float(np.max(np.abs(np.atleast_1d(t.kernel.values))))
            lines.append(f"{ltxt:<20} {ntxt:<20} {t.coefficient:>8} {t.degree:>7} {mx:>13.6e}")
        lines.append(f"{len(expansion.terms)} terms for q={expansion.q}")
        _emit(args, "\n".join(lines))
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    path = simulate_path(cfg.space, cfg.seed)
    _emit(args, json.dumps(path.to_json(seed=cfg.seed)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levychaos",
        description="Product expansion of multiple jump-measure integrals "
                    "and its pathwise verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (see README for the schema)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--paths", type=int, default=None, help="override path count")
        p.add_argument("--samples", type=int, default=None,
                       help="override Monte Carlo sample count")
        p.add_argument("--format", choices=("json", "table"), default="json")
        p.add_argument("--output", help="write to file instead of stdout")

    p = sub.add_parser("expand", help="emit the expansion term list")
    common(p)
    p.add_argument("--m", type=int, default=None, help="number of factors")
    p.add_argument("--degrees", help="comma-separated factor degrees, e.g. 1,1")
    p.add_argument("--kernel-seed", type=int, default=0, dest="kernel_seed")
    p.add_argument("--scale", type=float, default=1.0)
    p.set_defaults(func=_cmd_expand)

    for name, runner, needs in (
            ("verify-product", verify_product_pathwise, "degrees"),
            ("verify-pair", verify_pair_vs_general, None),
            ("verify-isometry", verify_isometry, None),
            ("verify-exponential", verify_exponential, "rho")):
        p = sub.add_parser(name, help=f"run the {name.split('-', 1)[1]} suite")
        common(p)
        p.set_defaults(func=lambda a, r=runner, nd=needs: _run_report(a, r(_load_config(a, _suite_defaults(nd)))))

    p = sub.add_parser("simulate", help="simulate one path and emit it as JSON")
    common(p)
    p.set_defaults(func=_cmd_simulate)
    return parser


def _suite_defaults(needs: str | None) -> dict:
    if needs == "degrees":
        return {"degrees": [1, 1]}
    if needs == "rho":
        return {"rho": {"random": {"seed": 0, "scale": 0.1}, "norm": 0.4},
                "truncation_order": 6}
    return {}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ResourceError, NonFiniteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
