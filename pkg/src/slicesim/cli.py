"""Command line experiments: convergence traces, welfare CDFs, purchase sweeps.

Every subcommand reads an optional YAML spec, derives one reproducible random
stream per replication from the global seed, writes a CSV whose first line
embeds the fully resolved configuration as a JSON comment, and renders the
matching figures next to the CSV (disable with ``--no-figures``).  Re-running
a subcommand with the same spec produces byte-identical CSV files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import oracle
from .matching import MatchingConfig, initial_matching, mcmc_swap
from .mec import MecConfig, delay_profile, knapsack_capacity, fractional_knapsack
from .qlearning import QLearningConfig, run_qlearning
from .scenario import ScenarioConfig, generate_topology

DEFAULT_SLICE_SWEEP = (15, 20, 25, 30)
DEFAULT_POWER_MODES = ("qlearning", "uniform")
DEFAULT_THRESHOLD_SWEEP = (0.001, 0.003, 0.005)
DEFAULT_TOLERANCE_SWEEP = (0.3, 0.4)

# Fallback instance for `certify` when the configured scenario is too large
# to enumerate: compact cells make interference bite, which is the regime
# the swap search is meant to earn its keep in.
CERTIFY_SCENARIO = ScenarioConfig(
    num_mnos=2, sbs_per_mno=2, num_slices=5, capacities=(2, 2),
    cell_radius=30.0, wall_loss_db=0.0,
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved description of one experiment run."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    qlearning: QLearningConfig = field(default_factory=QLearningConfig)
    mec: MecConfig = field(default_factory=MecConfig)
    matching: MatchingConfig = field(default_factory=MatchingConfig)
    replications: int = 1
    seed: int = 0
    output_dir: str = "results"

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def _build_section(cls, data, where: str):
    if not isinstance(data, dict):
        raise ValueError(f"section {where!r} must be a mapping")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown key(s) in {where!r}: {', '.join(unknown)}")
    return cls(**data)


def load_spec(path: str | None) -> ExperimentSpec:
    """Build a spec from a YAML file; missing keys fall back to defaults."""
    data: dict = {}
    if path is not None:
        raw = Path(path).read_text()
        loaded = yaml.safe_load(raw)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config {path} must be a mapping at the top level")
        data = loaded

    known = {"scenario", "qlearning", "mec", "matching",
             "replications", "seed", "output_dir"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown top-level key(s): {', '.join(unknown)}")

    scenario = _build_section(ScenarioConfig, data.get("scenario", {}), "scenario")
    qcfg = _build_section(QLearningConfig, data.get("qlearning", {}), "qlearning")
    mec_cfg = _build_section(MecConfig, data.get("mec", {}), "mec")
    m_data = dict(data.get("matching", {}))
    if "qlearning" in m_data:
        raise ValueError("configure learning under the top-level 'qlearning' section")
    matching = _build_section(MatchingConfig, m_data, "matching")
    matching = replace(matching, qlearning=qcfg)
    return ExperimentSpec(
        scenario=scenario, qlearning=qcfg, mec=mec_cfg, matching=matching,
        replications=int(data.get("replications", 1)),
        seed=int(data.get("seed", 0)),
        output_dir=str(data.get("output_dir", "results")),
    )


def spec_as_dict(spec: ExperimentSpec) -> dict:
    """Resolved spec without the output location, which never affects data."""
    data = dataclasses.asdict(spec)
    data.pop("output_dir")
    return data


def replication_rngs(seed: int, *counters: int) -> tuple[int, np.random.Generator]:
    """Counter-derived (topology seed, search stream) for one replication."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(counters))
    topo_ss, run_ss = ss.spawn(2)
    topo_seed = int(topo_ss.generate_state(1, np.uint64)[0])
    return topo_seed, np.random.default_rng(run_ss)


def cycled_capacities(base, num_mnos: int) -> tuple[int, ...]:
    """Extend or trim a quota list to ``num_mnos`` entries by cycling it."""
    base = tuple(base)
    return tuple(base[i % len(base)] for i in range(num_mnos))


def write_csv(path, meta: dict, fieldnames, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)


def run_convergence(spec: ExperimentSpec) -> list[dict]:
    """Welfare trace of the swap search, one row per iteration."""
    rows = []
    for r in range(spec.replications):
        topo_seed, rng = replication_rngs(spec.seed, r)
        topo = generate_topology(replace(spec.scenario, rng_seed=topo_seed))
        res = mcmc_swap(topo, spec.matching, rng)
        tr = res.trace
        for i in range(tr.iteration.size):
            rows.append({
                "replication": r,
                "iteration": int(tr.iteration[i]),
                "welfare": float(tr.welfare[i]),
                "best_welfare": float(tr.best_welfare[i]),
                "accepted": int(tr.accepted[i]),
            })
    return rows


def run_cdf(spec: ExperimentSpec, slice_counts=None, mno_counts=None,
            power_modes=None) -> list[dict]:
    """Final best welfare per sweep cell and replication."""
    slice_counts = [spec.scenario.num_slices] if slice_counts is None else slice_counts
    mno_counts = [spec.scenario.num_mnos] if mno_counts is None else mno_counts
    power_modes = [spec.matching.power_mode] if power_modes is None else power_modes

    rows = []
    cell = 0
    for k in mno_counts:
        for l in slice_counts:
            for mode in power_modes:
                scfg = replace(
                    spec.scenario, num_mnos=k, num_slices=l,
                    capacities=cycled_capacities(spec.scenario.capacities, k),
                )
                mcfg = replace(spec.matching, power_mode=mode)
                for r in range(spec.replications):
                    topo_seed, rng = replication_rngs(spec.seed, cell, r)
                    topo = generate_topology(replace(scfg, rng_seed=topo_seed))
                    res = mcmc_swap(topo, mcfg, rng)
                    rows.append({
                        "num_mnos": k,
                        "num_slices": l,
                        "power_mode": mode,
                        "replication": r,
                        "seed": topo_seed,
                        "welfare": float(res.best_welfare),
                    })
                cell += 1
    return rows


def run_knapsack(spec: ExperimentSpec, delay_thresholds=None, tolerances=None,
                 mno_index: int = 0) -> list[dict]:
    """Caching purchase per station across the deadline/tolerance sweep.

    Rates come from training the chosen operator's power agents on the
    quota-fair random matching of each replication; the budget sweep then
    reuses those rates, so fractions are comparable across cells.
    """
    delay_thresholds = DEFAULT_THRESHOLD_SWEEP if delay_thresholds is None else delay_thresholds
    tolerances = DEFAULT_TOLERANCE_SWEEP if tolerances is None else tolerances
    if not 0 <= mno_index < spec.scenario.num_mnos:
        raise ValueError(f"mno index {mno_index} out of range")
    fk = spec.scenario.sbs_per_mno
    if len(spec.mec.sbs_prices) < fk:
        raise ValueError(
            f"need at least {fk} station prices, got {len(spec.mec.sbs_prices)}"
        )
    costs = np.asarray(spec.mec.sbs_prices[:fk], dtype=float)

    rows = []
    for r in range(spec.replications):
        topo_seed, rng = replication_rngs(spec.seed, r)
        topo = generate_topology(replace(spec.scenario, rng_seed=topo_seed))
        m = initial_matching(topo.config.num_slices, topo.config.capacities, rng)
        run = run_qlearning(m, topo, spec.qlearning, rng, mnos=[mno_index])
        station_ids = topo.sbs_of_mno(mno_index)
        rates = run.report.rate_per_sbs[station_ids]
        prof = delay_profile(rates, spec.mec)
        for dth in delay_thresholds:
            for eps in tolerances:
                sol = fractional_knapsack(costs, prof.total,
                                          knapsack_capacity(eps, dth))
                for i in range(fk):
                    y = float(sol.fractions[i])
                    t = float(prof.total[i])
                    rows.append({
                        "delay_threshold": dth,
                        "tolerance": eps,
                        "replication": r,
                        "sbs": i,
                        "cost": float(costs[i]),
                        "service_delay": float(prof.service[i]),
                        "downlink_delay": float(prof.downlink[i]),
                        "total_delay": t,
                        "fraction": y,
                        "weight": y * t if y > 0.0 else 0.0,
                    })
    return rows


def run_certify(spec: ExperimentSpec, instances: int = 50) -> tuple[list[dict], dict]:
    """Compare the swap search against enumeration on small instances.

    Returns per-instance rows plus a summary with attainment and stability
    rates and the count of instances where the search exceeded the
    enumerated optimum (which would indicate a defect).
    """
    base = spec.scenario
    if (base.num_slices > oracle.MAX_ENUM_SLICES
            or base.num_mnos > oracle.MAX_ENUM_MNOS):
        base = CERTIFY_SCENARIO
    mcfg = replace(spec.matching, power_mode="uniform", exact_rates=True)

    rows = []
    attained = stable_count = exceeded = 0
    for i in range(instances):
        topo_seed, rng = replication_rngs(spec.seed, i)
        topo = generate_topology(replace(base, rng_seed=topo_seed))
        best = oracle.exhaustive_matching(topo)
        res = mcmc_swap(topo, mcfg, rng)
        tol = 1e-9 * max(1.0, abs(best.optimal_welfare))
        hit = abs(res.best_welfare - best.optimal_welfare) <= tol
        over = res.best_welfare > best.optimal_welfare + tol
        is_stable, _ = oracle.check_swap_stability(res.best_matching, topo)
        attained += hit
        stable_count += is_stable
        exceeded += over
        rows.append({
            "instance": i,
            "seed": topo_seed,
            "num_enumerated": best.num_enumerated,
            "oracle_welfare": float(best.optimal_welfare),
            "chain_welfare": float(res.best_welfare),
            "attained": int(hit),
            "stable": int(is_stable),
        })
    summary = {
        "instances": instances,
        "attainment_rate": attained / instances,
        "stability_rate": stable_count / instances,
        "exceeded": exceeded,
        "scenario_used": dataclasses.asdict(base),
    }
    return rows, summary


def _csv_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _csv_modes(text: str) -> list[str]:
    modes = [x.strip() for x in text.split(",") if x.strip()]
    bad = [m for m in modes if m not in ("uniform", "qlearning")]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown power mode(s): {', '.join(bad)}")
    return modes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slicesim",
        description="Small-cell slicing experiments: run, sweep, certify.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment spec")
    common.add_argument("--seed", type=int, help="global seed (overrides spec)")
    common.add_argument("--out", help="output directory (overrides spec)")
    common.add_argument("--replications", type=int,
                        help="replication count (overrides spec)")
    common.add_argument("--literal-mode", action="store_true",
                        help="use the printed acceptance and exploration branches")
    common.add_argument("--no-figures", action="store_true",
                        help="write CSV only, skip figure rendering")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("converge", parents=[common],
                       help="welfare trace of the swap search")

    p = sub.add_parser("cdf", parents=[common],
                       help="final welfare distribution across a sweep")
    p.add_argument("--slices", type=_csv_ints, default=list(DEFAULT_SLICE_SWEEP),
                   help="comma-separated slice counts (default 15,20,25,30)")
    p.add_argument("--mnos", type=_csv_ints, default=None,
                   help="comma-separated operator counts (default: from spec)")
    p.add_argument("--power-modes", type=_csv_modes,
                   default=list(DEFAULT_POWER_MODES),
                   help="comma-separated power modes (default qlearning,uniform)")

    p = sub.add_parser("knapsack", parents=[common],
                       help="caching purchase across the deadline/tolerance sweep")
    p.add_argument("--dth", type=_csv_floats, default=list(DEFAULT_THRESHOLD_SWEEP),
                   help="comma-separated deadlines (default 0.001,0.003,0.005)")
    p.add_argument("--eps", type=_csv_floats, default=list(DEFAULT_TOLERANCE_SWEEP),
                   help="comma-separated tolerances (default 0.3,0.4)")
    p.add_argument("--mno", type=int, default=0, help="operator index (default 0)")

    p = sub.add_parser("certify", parents=[common],
                       help="swap search vs enumeration on small instances")
    p.add_argument("--instances", type=int, default=50,
                   help="number of seeded instances (default 50)")
    return parser


def _apply_overrides(spec: ExperimentSpec, args) -> ExperimentSpec:
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.out is not None:
        spec = replace(spec, output_dir=args.out)
    if args.replications is not None:
        spec = replace(spec, replications=args.replications)
    if args.literal_mode:
        qcfg = replace(spec.qlearning, discount_as_explore=True)
        mcfg = replace(spec.matching, literal_acceptance=True, qlearning=qcfg)
        spec = replace(spec, qlearning=qcfg, matching=mcfg)
    return spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _apply_overrides(load_spec(args.config), args)
        out_dir = Path(spec.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        meta = spec_as_dict(spec)

        if args.command == "converge":
            rows = run_convergence(spec)
            path = out_dir / "converge.csv"
            write_csv(path, meta,
                      ["replication", "iteration", "welfare", "best_welfare",
                       "accepted"], rows)
            print(f"wrote {path}")
            if not args.no_figures:
                from . import plots
                fig = out_dir / "converge.png"
                plots.save_convergence_figure(rows, fig)
                print(f"wrote {fig}")

        elif args.command == "cdf":
            meta = dict(meta, sweep={"slices": args.slices, "mnos": args.mnos,
                                     "power_modes": args.power_modes})
            rows = run_cdf(spec, slice_counts=args.slices,
                           mno_counts=args.mnos, power_modes=args.power_modes)
            path = out_dir / "cdf.csv"
            write_csv(path, meta,
                      ["num_mnos", "num_slices", "power_mode", "replication",
                       "seed", "welfare"], rows)
            print(f"wrote {path}")
            if not args.no_figures:
                from . import plots
                fig = out_dir / "cdf.png"
                plots.save_cdf_figure(rows, fig)
                print(f"wrote {fig}")

        elif args.command == "knapsack":
            meta = dict(meta, sweep={"delay_thresholds": args.dth,
                                     "tolerances": args.eps, "mno": args.mno})
            rows = run_knapsack(spec, delay_thresholds=args.dth,
                                tolerances=args.eps, mno_index=args.mno)
            path = out_dir / "knapsack.csv"
            write_csv(path, meta,
                      ["delay_threshold", "tolerance", "replication", "sbs",
                       "cost", "service_delay", "downlink_delay", "total_delay",
                       "fraction", "weight"], rows)
            print(f"wrote {path}")
            if not args.no_figures:
                from . import plots
                fig1 = out_dir / "knapsack_fractions.png"
                fig2 = out_dir / "knapsack_delays.png"
                plots.save_knapsack_figures(rows, fig1, fig2)
                print(f"wrote {fig1}")
                print(f"wrote {fig2}")

        elif args.command == "certify":
            rows, summary = run_certify(spec, instances=args.instances)
            path = out_dir / "certify.csv"
            write_csv(path, dict(meta, certify=summary),
                      ["instance", "seed", "num_enumerated", "oracle_welfare",
                       "chain_welfare", "attained", "stable"], rows)
            print(f"wrote {path}")
            print(f"attainment rate: {summary['attainment_rate']:.3f}")
            print(f"stability rate:  {summary['stability_rate']:.3f}")
            if summary["exceeded"]:
                print(f"error: search exceeded the enumerated optimum on "
                      f"{summary['exceeded']} instance(s)", file=sys.stderr)
                return 1

    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
