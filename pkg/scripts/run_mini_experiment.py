"""Full study on the bundled mini case.

Plans a deterministic (average year) and a stochastic (three weighted years)
capacity mix, sweeps the robust heuristic over fleet sizes and confidence
levels, simulates every plan under all four stress kinds, and reports the
value of the stochastic solution and the price of robustness.

    python scripts/run_mini_experiment.py --out results/mini
    python scripts/run_mini_experiment.py --quick      # small sample counts
"""

import argparse
import json
import logging
import time
from pathlib import Path

from caprobust.case import aggregate_to_steps, mini_case
from caprobust.simulation import KINDS, price_of_robustness, run_simulation, value_of_stochastic_solution, worst_year_id
from caprobust.svg import bar_svg, scatter_svg
from caprobust.wnu import WnuConfig, default_scenarios, sweep_wnu
from caprobust.wu import solve_wu


def simulate_all(stepped, mix, seed, worst):
    return {kind: run_simulation(stepped, mix, kind, seed, worst_year=worst) for kind in KINDS}


def row(label, sims):
    return {
        "plan": label,
        **{f"{k}_mean_cost": s.mean_cost for k, s in sims.items()},
        **{f"{k}_mean_lol": s.mean_lol for k, s in sims.items()},
        **{f"{k}_lol_years": s.lol_years for k, s in sims.items()},
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/mini")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--years", type=int, default=3, help="synthetic weather years in the mini case")
    ap.add_argument("--n-values", default="2,3,4")
    ap.add_argument("--alphas", default="0.5,0.9")
    ap.add_argument("--n-r", type=int, default=5000)
    ap.add_argument("--n-p", type=int, default=100_000)
    ap.add_argument("--quick", action="store_true", help="use 500 outage rows and 5000 budget trials")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    if args.quick:
        args.n_r, args.n_p = 500, 5000

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    stepped = aggregate_to_steps(mini_case(args.years), 24)
    scenarios = default_scenarios(stepped)
    worst = worst_year_id(stepped)
    average = scenarios[1].with_probability(1.0)  # favorable, average, unfavorable

    deterministic = solve_wu(stepped, [average])
    stochastic = solve_wu(stepped, scenarios)
    sims = {"deterministic": simulate_all(stepped, deterministic.mix, args.seed, worst)}
    sims["stochastic"] = simulate_all(stepped, stochastic.mix, args.seed, worst)

    cfg = WnuConfig(
        alphas=tuple(float(a) for a in args.alphas.split(",")),
        n_values=tuple(int(n) for n in args.n_values.split(",")),
        n_samples=args.n_r,
        n_trials=args.n_p,
        seed=args.seed,
    )
    sweep = sweep_wnu(stepped, cfg, scenarios)
    sweep.to_json(out / "pareto.json")
    sweep.to_csv(out / "pareto.csv")
    front = sweep.front_sorted()
    cheapest, safest = front[0], min(front, key=lambda e: (e.mean_lol, e.mean_cost))
    for label, entry in (("robust-cheapest", cheapest), ("robust-safest", safest)):
        sims[label] = simulate_all(stepped, entry.mix, args.seed, worst)

    det, sto = sims["deterministic"]["normal"], sims["stochastic"]["normal"]
    vss = value_of_stochastic_solution(det.mean_cost, sto.mean_cost)
    # a cheap plan can hide its shortfall in loss of load; the penalised gap prices that in
    vss_penalised = value_of_stochastic_solution(det.mean_sc_with_penalty, sto.mean_sc_with_penalty)
    por = price_of_robustness(safest.mean_cost, cheapest.mean_cost)
    summary = {
        "scenarios": [s.id for s in scenarios],
        "worst_year": worst,
        "planning_cost": {"deterministic": deterministic.sc, "stochastic": stochastic.sc},
        "nuclear_units": {"deterministic": deterministic.n_equivalent, "stochastic": stochastic.n_equivalent},
        "value_of_stochastic_solution": vss,
        "value_of_stochastic_solution_with_penalty": vss_penalised,
        "price_of_robustness": {"absolute": por[0], "relative": por[1]},
        "front": [{"n": e.n, "alpha": e.alpha, "mean_cost": e.mean_cost, "mean_lol": e.mean_lol} for e in front],
        "failures": [{"n": n, "alpha": a, "error": m} for n, a, m in sweep.failures],
        "simulations": [row(label, s) for label, s in sims.items()],
        "seconds": time.perf_counter() - t0,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    pts = [(c.entry.mean_cost / 1e6, c.entry.mean_lol / 1e3) for c in sweep.candidates]
    on_front = {i for i, c in enumerate(sweep.candidates) if c.entry in front}
    (out / "candidates.svg").write_text(scatter_svg(pts, "Robust candidates (front in red)", "mean cost (M/year)", "mean LoL (GWh)", on_front))
    labels = list(sims)
    (out / "normal_lol.svg").write_text(bar_svg(labels, [sims[k]["normal"].mean_lol / 1e3 for k in labels], "Mean LoL, normal", "GWh"))

    print(f"{'plan':18s}" + "".join(f"{k:>22s}" for k in KINDS))
    for label, by_kind in sims.items():
        cells = "".join(f"{s.mean_cost / 1e6:12.1f}M {s.mean_lol / 1e3:7.2f}GWh" for s in by_kind.values())
        print(f"{label:18s}{cells}")
    print(f"VSS {vss / 1e6:.2f} M/year ({vss_penalised / 1e6:.2f} with LoL penalty); price of robustness {por[0] / 1e6:.2f} M/year ({por[1]:.2%})")
    print(f"wrote {out} in {summary['seconds']:.0f} s")


if __name__ == "__main__":
    main()
