"""Command-line entry point.

Every command writes its artefacts plus ``manifest.json`` into ``--out``.
The manifest records the command, the full configuration, digests of the
inputs and library versions; ``caprobust --manifest FILE`` replays it.

Exit codes: 0 success, 1 bad input, 2 solver failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .case import aggregate_to_steps, generate_synthetic_case, mini_case, pick_scenarios, rank_years, scenario_probabilities
from .caseio import case_digest, load_case, save_case
from .errors import CapRobustError, InvalidParameterError, SolverError
from .lp import BACKENDS, SolveOptions
from .rng import ALGORITHM
from .simulation import KINDS, run_simulation, worst_year_id
from .svg import scatter_svg
from .wnu import WnuConfig, sweep_wnu
from .wu import link_ids, mix_from_dict, solve_wu

log = logging.getLogger("caprobust")

BUILTIN = "mini"


class InputError(CapRobustError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # bad usage is bad input, not a crash
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _alphas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha list {text!r}") from None
    if not vals or any(not 0 < v <= 1 for v in vals):
        raise argparse.ArgumentTypeError("alphas must be a comma list of values in (0, 1]")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _n_range(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..")
            vals = list(range(int(a), int(b) + 1))
        else:
            vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid n range {text!r}; use a..b or a comma list") from None
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError("n range must be non-empty and non-negative")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="caprobust", description="Capacity expansion under weather and nuclear outage uncertainty.")
    p.add_argument("--manifest", help="replay the run recorded in this manifest")
    p.add_argument("--into", help="output directory for a replay (default: the recorded one)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--case", default=BUILTIN, help=f"case.toml or its directory ('{BUILTIN}' = bundled mini case)")
        sp.add_argument("--ts", type=int, help="hours per time step (default: case value)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--backend", choices=BACKENDS, help="LP backend (default: $CAPROBUST_SOLVER or highs-ds)")
        sp.add_argument("--time-limit", type=float)
        sp.add_argument("--workers", type=_positive_int, default=1, help="worker processes (results do not depend on it)")

    sp = sub.add_parser("wu", help="stochastic plan over weather scenarios")
    common(sp, seed=False)
    sp.add_argument("--scenarios", default="selected", help="'selected' (favorable/average/unfavorable), 'all', or comma ids")
    sp.add_argument("--fixed-n", type=int, help="force this many nuclear units")

    sp = sub.add_parser("wnu", help="robust sweep over confidence levels and fleet sizes")
    common(sp)
    sp.add_argument("--alphas", type=_alphas, default=[0.5, 0.9])
    sp.add_argument("--n-range", type=_n_range, default=[2, 3, 4])
    sp.add_argument("--n-r", type=int, default=5000, help="rows in the shared outage sample matrix")
    sp.add_argument("--n-p", type=int, default=100_000, help="Monte Carlo trials per budget estimate")

    sp = sub.add_parser("simulate", help="evaluate a plan over all weather years")
    common(sp)
    sp.add_argument("--plan", help="plan.json from 'wu' or pareto.json from 'wnu'")
    sp.add_argument("--entry", type=int, default=0, help="front entry when --plan is a Pareto front")
    sp.add_argument("--kind", choices=KINDS, default="normal")
    sp.add_argument("--worst-year", help="year replayed by unfavorable-weather (default: costliest deterministic year)")
    sp.add_argument("--intensity", type=float, default=0.4, help="Dunkelflaute capacity-factor multiplier")

    sp = sub.add_parser("select-scenarios", help="rank years by deterministic system cost")
    common(sp, seed=False)

    sp = sub.add_parser("synth-case", help="write a synthetic case directory")
    sp.add_argument("--seed", type=int, default=1)
    sp.add_argument("--regions", type=int, default=3)
    sp.add_argument("--years", type=int, default=3)
    sp.add_argument("--ts", type=int, default=24)
    sp.add_argument("--out", default="case")
    return p


# --------------------------------------------------------------------------


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load(cfg: dict):
    if cfg["case"] == BUILTIN:
        case, digest = mini_case(), f"builtin:{BUILTIN}"
    else:
        case, digest = load_case(cfg["case"]), case_digest(cfg["case"])
    return aggregate_to_steps(case, cfg.get("ts")), digest


def _options(cfg: dict) -> SolveOptions:
    return SolveOptions(backend=cfg.get("backend"), time_limit=cfg.get("time_limit"))


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _planning_scenarios(stepped, choice: str, options, workers: int = 1):
    if choice == "all":
        k = len(stepped.series)
        return [s.with_probability(1.0 / k) for s in stepped.series]
    if choice == "selected":
        if len(stepped.series) < 3:
            raise InputError("'selected' scenarios need at least 3 years; use --scenarios all")
        costs = rank_years(stepped, options, workers)
        idx = pick_scenarios(costs)
        return [stepped.series[i].with_probability(p) for i, p in zip(idx, scenario_probabilities(3))]
    ids = [s.strip() for s in choice.split(",") if s.strip()]
    try:
        chosen = [stepped.get(i) for i in ids]
    except KeyError as exc:
        raise InputError(f"unknown year {exc}") from None
    return [s.with_probability(1.0 / len(chosen)) for s in chosen]


def cmd_wu(cfg, out: Path) -> dict:
    stepped, digest = _load(cfg)
    opts = _options(cfg)
    scen = _planning_scenarios(stepped, cfg["scenarios"], opts, cfg.get("workers", 1))
    plan = solve_wu(stepped, scen, fixed_n=cfg.get("fixed_n"), options=opts)
    plan.to_json(out / "plan.json")
    plan.dispatch_csv(out / "dispatch.csv")
    print(f"SC = {plan.sc:.6g}  nuclear units = {plan.n_equivalent:.4g}  scenarios = {[s.id for s in scen]}")
    return {"case": digest}


def cmd_wnu(cfg, out: Path) -> dict:
    stepped, digest = _load(cfg)
    conf = WnuConfig(
        tuple(cfg["alphas"]), tuple(cfg["n_range"]), cfg["n_r"], cfg["n_p"], cfg["seed"], workers=cfg.get("workers", 1)
    )
    res = sweep_wnu(stepped, conf, options=_options(cfg))
    res.to_json(out / "pareto.json")
    res.to_csv(out / "pareto.csv")
    entries = res.front_sorted()
    pts = [(e.mean_cost / 1e6, e.mean_lol / 1e3) for e in entries]
    extremes = {0, len(pts) - 1}
    (out / "pareto.svg").write_text(
        scatter_svg(pts, "Pareto front", "mean cost (M/year)", "mean loss of load (GWh)", extremes), encoding="utf-8"
    )
    _dump(
        out / "candidates.json",
        [
            {"n": c.n, "alpha": c.alpha, "aop": c.budgets.aop, "mop": c.budgets.mop, "master_sc": c.master_cost,
             "mean_cost": c.entry.mean_cost, "mean_lol": c.entry.mean_lol, "selection": [list(r) for r in c.selection.rows]}
            for c in res.candidates
        ],
    )
    for n, a, msg in res.failures:
        print(f"warning: n={n} alpha={a} failed: {msg}", file=sys.stderr)
    print(f"{len(entries)} Pareto entries from {len(res.candidates)} candidates; scenarios {list(res.scenario_ids)}")
    return {"case": digest}


def cmd_simulate(cfg, out: Path) -> dict:
    if not cfg.get("plan"):
        raise InputError("simulate needs a capacity plan: pass --plan PLAN.json")
    plan_path = Path(cfg["plan"])
    if not plan_path.exists():
        raise InputError(f"--plan file {plan_path} does not exist")
    stepped, digest = _load(cfg)
    data = json.loads(plan_path.read_text(encoding="utf-8"))
    if isinstance(data, list):
        if not 0 <= cfg["entry"] < len(data):
            raise InputError(f"--entry {cfg['entry']} outside the {len(data)}-entry front")
        data = data[cfg["entry"]]
    mix = mix_from_dict(data, stepped.case.region_ids, link_ids(stepped))
    opts = _options(cfg)
    worst = cfg.get("worst_year")
    if cfg["kind"] == "unfavorable-weather" and worst is None:
        worst = worst_year_id(stepped, opts, cfg.get("workers", 1))
    summary = run_simulation(
        stepped,
        mix,
        cfg["kind"],
        cfg["seed"],
        worst_year=worst,
        dunkelflaute={"intensity": cfg["intensity"]},
        options=opts,
        workers=cfg.get("workers", 1),
    )
    summary.to_json(out / "simulation.json")
    summary.to_csv(out / "simulation.csv")
    print(
        f"{cfg['kind']}: mean cost {summary.mean_cost:.6g}, mean LoL {summary.mean_lol:.6g} MWh, "
        f"LoL years {summary.lol_years}/{len(summary.years)}"
    )
    return {"case": digest, "plan": _sha256(plan_path)}


def cmd_select(cfg, out: Path) -> dict:
    stepped, digest = _load(cfg)
    costs = rank_years(stepped, _options(cfg), cfg.get("workers", 1))
    fav, avg, unfav = pick_scenarios(costs)
    ids = [s.id for s in stepped.series]
    result = {
        "favorable": ids[fav],
        "average": ids[avg],
        "unfavorable": ids[unfav],
        "sc": {i: float(c) for i, c in zip(ids, costs)},
    }
    _dump(out / "scenarios.json", result)
    print(f"favorable {ids[fav]}, average {ids[avg]}, unfavorable {ids[unfav]}")
    return {"case": digest}


def cmd_synth(cfg, out: Path) -> dict:
    case = generate_synthetic_case(cfg["seed"], cfg["regions"], cfg["years"], cfg["ts"])
    path = save_case(case, out)
    print(f"wrote {path}")
    return {}


COMMANDS = {"wu": cmd_wu, "wnu": cmd_wnu, "simulate": cmd_simulate, "select-scenarios": cmd_select, "synth-case": cmd_synth}
_NOT_CONFIG = {"command", "manifest", "verbose", "into"}


def _versions() -> dict:
    return {
        "caprobust": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "rng": ALGORITHM,
    }


def _from_manifest(path: str, args) -> tuple[str, dict]:
    try:
        man = json.loads(Path(path).read_text(encoding="utf-8"))
        command, cfg = man["command"], dict(man["config"])
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from None
    if command not in COMMANDS:
        raise InputError(f"manifest names unknown command {command!r}")
    if args.into:
        cfg["out"] = args.into
    return command, cfg


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.manifest:
            command, cfg = _from_manifest(args.manifest, args)
        elif args.command:
            command = args.command
            cfg = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
        else:
            parser.print_usage(sys.stderr)
            print("caprobust: error: a command or --manifest is required", file=sys.stderr)
            return 1
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        inputs = COMMANDS[command](cfg, out)
        if args.manifest:
            recorded = json.loads(Path(args.manifest).read_text(encoding="utf-8")).get("inputs", {})
            if recorded != inputs:
                print("warning: input digests differ from the manifest", file=sys.stderr)
        _dump(out / "manifest.json", {"command": command, "config": cfg, "inputs": inputs, "versions": _versions()})
    except SolverError as exc:
        print(f"caprobust: solver failure: {exc}", file=sys.stderr)
        return 2
    except (InvalidParameterError, InputError, CapRobustError, ValueError, OSError) as exc:
        print(f"caprobust: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
