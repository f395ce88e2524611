"""Command-line front end.

Exit status: 0 on success, 1 when the scenario does not parse or validate,
2 on any runtime failure. Failures print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import amc, ctmc, des
from .phy import rate_table, rate_table_csv
from .scenario import Scenario, ScenarioError, load

VERBS = ("rates", "solve", "simulate", "load-sweep", "ebn0-sweep", "amc-range", "compare")


class _Fail(Exception):
    def __init__(self, status: int, kind: str, message: str):
        super().__init__(message)
        self.status, self.kind = status, kind


def _lambda_label(scn: Scenario) -> float:
    rates = scn.traffic.lambda_new + scn.traffic.lambda_handoff
    # per-stream rate when all six agree, else the total
    return rates[0] if len(set(rates)) == 1 else sum(rates)


def _write(path: str | None, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sibling(path: str | None, suffix: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(p.stem + suffix + (p.suffix or ".csv")))


def _sim_config(scn: Scenario) -> des.SimConfig:
    if scn.seed is None:
        raise _Fail(1, "validation", "this command needs a seed (--seed or 'seed =')")
    cfg = des.SimConfig(scn.seed, scn.events, scn.traffic, scn.cell, scn.warmup_events, scn.alpha)
    problems = cfg.violations()
    if problems:
        raise _Fail(1, "validation", "; ".join(problems))
    return cfg


def execute(args: argparse.Namespace) -> int:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.events is not None:
        overrides.append(f"events={args.events}")
    if args.epsilon is not None:
        overrides.append(f"epsilon={args.epsilon}")
    try:
        scn = load(args.scenario, overrides)
    except ScenarioError as exc:
        raise _Fail(1, "validation", str(exc))
    except OSError as exc:
        raise _Fail(2, "io", str(exc))

    verb = args.verb
    if verb == "rates":
        _write(args.out, rate_table_csv(rate_table(scn.phy)))
    elif verb == "solve":
        sol = ctmc.solve(scn.cell, scn.traffic, scn.state_cap)
        _write(args.out, ctmc.qos_rows_csv([(_lambda_label(scn), scn.mcs.name, sol.report)]))
        if args.dump:
            Path(args.dump).write_text(ctmc.state_dump(sol.space, sol.stationary.pi))
    elif verb == "simulate":
        rep = des.run(_sim_config(scn))
        _write(args.out, des.sim_rows_csv([(_lambda_label(scn), scn.mcs.name, rep)]))
    elif verb == "compare":
        cfg = _sim_config(scn)
        sol = ctmc.solve(scn.cell, scn.traffic, scn.state_cap)
        rep = des.run(cfg)
        _write(args.out, des.comparison_csv(des.compare_with_ctmc(rep, sol.report, scn.cell)))
    elif verb == "load-sweep":
        points = amc.load_sweep(scn.cell, scn.load_grid, phy=scn.phy, mu=scn.traffic.mu[0],
                                alpha=scn.alpha, state_cap=scn.state_cap, workers=args.workers)
        main, sched = amc.load_sweep_csv(points), amc.schedule_csv(points)
        if args.out is None:
            _write(None, main + "\n" + sched)
        else:
            _write(args.out, main)
            _write(_sibling(args.out, "_schedule"), sched)
    elif verb in ("ebn0-sweep", "amc-range"):
        spec = amc.SweepSpec(scn.cell, scn.traffic, scn.phy, scn.ebn0_grid,
                             epsilon=scn.epsilon, reference_db=scn.ebn0_reference_db,
                             state_cap=scn.state_cap)
        result = amc.sweep(spec, workers=args.workers)
        if verb == "ebn0-sweep":
            _write(args.out, amc.sweep_csv(result))
        else:
            _write(args.out, amc.range_csv(amc.operating_range(result, scn.epsilon)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bwaqos", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--scenario", help="scenario file (default: bundled evaluation setup)")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario key; repeatable")
    p.add_argument("--seed", type=int)
    p.add_argument("--events", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--dump", help="solve: also write the stationary distribution here")
    p.add_argument("--workers", type=int, default=1, help="processes for sweep points")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return execute(args)
    except _Fail as exc:
        status, kind, msg = exc.status, exc.kind, str(exc)
    except ctmc.StateSpaceTooLargeError as exc:
        status, kind, msg = 2, "state_space_too_large", str(exc)
    except Exception as exc:  # noqa: BLE001 - reported, not swallowed
        status, kind, msg = 2, "runtime", f"{type(exc).__name__}: {exc}"
    print(json.dumps({"error": kind, "message": msg}), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
