"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
``CIFORGE_OUT`` sets the default output directory and ``CIFORGE_WORKERS``
the worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import rbc, sim
from .errors import ConfigurationError, NumericalError

_SIM_KINDS = {"ser": "ser", "ccdf": "ccdf_alpha", "signpred": "sign_pred", "csi": "csi_sweep"}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ciforge", description="CIP simulator with region-based constellations")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("sim", help="run a Monte Carlo experiment")
    ps.add_argument("kind", choices=sorted(_SIM_KINDS))
    ps.add_argument("--config", required=True)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--out")

    pa = sub.add_parser("analyze", help="numerical checks of the analytical results")
    pa.add_argument("what", choices=["props"])
    pa.add_argument("--config", required=True)
    pa.add_argument("--seed", type=int)
    pa.add_argument("--out")

    pd = sub.add_parser("dump", help="print constellation region descriptions")
    pd.add_argument("what", choices=["constellation"])
    pd.add_argument("--scheme", required=True)
    pd.add_argument("--M", type=int, required=True)
    return p


def _out_dir(arg):
    return arg or os.environ.get("CIFORGE_OUT") or "results"


def _run(kind, args):
    cfg = sim.load_config(args.config, kind, args.seed)
    recs, man = sim.run_experiment(cfg)
    if not recs:
        raise NumericalError("experiment produced no records")
    paths = sim.emit(recs, _out_dir(args.out), kind, man)
    for p in paths.values():
        print(p)
    if kind == "props":
        for r in recs:
            print(f"{r.name}: {'PASS' if r.passed else 'FAIL'} bound={r.bound_value:.6g} value={r.empirical_value:.6g}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "sim":
            _run(_SIM_KINDS[args.kind], args)
        elif args.command == "analyze":
            _run("props", args)
        else:
            c = rbc.build_constellation(args.scheme, args.M)
            for rec in rbc.describe(c):
                print(json.dumps(rec))
    except ConfigurationError as exc:
        print(f"ciforge: configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"ciforge: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
