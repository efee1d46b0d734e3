"""Command-line driver.

Exit codes: 0 success, 2 infeasible instance or empty results, 3 bad config.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis
from .ilp import InfeasibleError, OracleBudgetError, check_feasible, export_ilp, oracle_solve
from .pathgen import save_catalog
from .pipeline import ConfigError, PipelineConfig, build_bundle, measure_scaling, run_sampler
from .qubo import export_qubo
from .sampler import BudgetExceededError, parse_schedule, read_jsonl
from .topology import TopologyError, save_topology
from .traffic import save_demands

EXIT_INFEASIBLE = 2
EXIT_CONFIG = 3


def _fail(msg: str, code: int):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _csv_list(text: str | None, conv):
    if text is None:
        return None
    try:
        return [conv(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        _fail(f"bad list {text!r}: {exc}", EXIT_CONFIG)


def _int_range(text: str) -> list[int]:
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",")]


def config_options(f):
    """Flags that override fields of the JSON config."""
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file."),
        click.option("--nodes", "n_nodes", type=int, help="Growing-network size (3..16)."),
        click.option("--topology", "topology_file", type=click.Path(dir_okay=False), help="Topology JSON file."),
        click.option("--mu", type=float), click.option("--sigma", type=float),
        click.option("--demand-seed", type=int),
        click.option("--max-demands", type=int, help="Keep only the first N demands."),
        click.option("-k", "k", type=int, help="Transmission paths per demand."),
        click.option("--max-patterns", type=int), click.option("--reach", "reach_km", type=float),
        click.option("--xi", type=float), click.option("-a", "a", type=int, help="Fractional digits."),
        click.option("--eta-max", type=int), click.option("--omega-max", type=int),
        click.option("-p", "--penalty", type=float),
        click.option("--method", type=click.Choice(["sa", "random", "exhaustive"])),
        click.option("-n", "--samples", "n_samples", type=int), click.option("--sweeps", type=int),
        click.option("--beta-min", type=float), click.option("--beta-max", type=float),
        click.option("--schedule", type=str), click.option("--seed", "sampler_seed", type=int),
        click.option("--bit-budget", type=int),
        click.option("-o", "--out", "output_dir", type=click.Path(file_okay=False)),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _resolve_config(config_path, **overrides) -> PipelineConfig:
    try:
        cfg = PipelineConfig.load(config_path) if config_path else PipelineConfig()
        return cfg.replace(**overrides)
    except (ConfigError, TypeError, ValueError) as exc:
        _fail(str(exc), EXIT_CONFIG)


def _bundle(cfg, **kw):
    try:
        return build_bundle(cfg, **kw)
    except (TopologyError, ValueError) as exc:
        _fail(str(exc), EXIT_CONFIG)


def _oracle_cost(inst) -> int | None:
    try:
        return oracle_solve(inst).cost
    except (OracleBudgetError, InfeasibleError):
        return None


def _run_cell(cfg: PipelineConfig, a: int, p: float, schedule: str, seed: int, oracle_cost=None):
    bundle = _bundle(cfg, a=a, penalty=p)
    cell_cfg = cfg.replace(schedule=schedule)
    try:
        ss = run_sampler(bundle.qubo, cell_cfg, seed)
    except BudgetExceededError as exc:
        _fail(str(exc), EXIT_CONFIG)
    batch = analysis.decode_batch(bundle.qubo, bundle.instance, ss)
    tags = {"p": p, "a": a, "method": cfg.method, "oracle_cost": oracle_cost}
    records = []
    for rec, feas, cost in zip(ss.records(**tags), batch.feasible, batch.costs):
        rec["feasible"] = bool(feas)
        rec["cost"] = int(cost)
        records.append(rec)
    return bundle, records


def _write_records(path: Path, records, append: bool):
    with open(path, "a" if append else "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


@click.group()
def main():
    """Optical network resource allocation as ILP/QUBO."""


@main.command()
@config_options
def generate(config_path, **overrides):
    """Write topology, demands, catalog, ILP and QUBO files for one instance."""
    cfg = _resolve_config(config_path, **overrides)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    b = _bundle(cfg)
    save_topology(b.topology, out / "topology.json")
    save_demands(b.demands, out / "demands.json")
    save_catalog(b.catalog, out / "catalog.json")
    export_ilp(b.instance, out / "ilp.txt")
    export_qubo(b.qubo, out / "qubo.txt")
    cfg.save(out / "config.json")
    inst = b.instance
    click.echo(
        f"|V|={inst.n_nodes} |D|={inst.n_demands} |T|={inst.n_patterns} |C|={inst.n_circuits} "
        f"K={inst.K} M={inst.M} N={b.qubo.N} couplings={b.qubo.n_couplings} -> {out}"
    )


@main.command()
@config_options
def oracle(config_path, **overrides):
    """Solve the ILP exactly by enumerating pattern selections."""
    cfg = _resolve_config(config_path, **overrides)
    b = _bundle(cfg)
    try:
        sol = oracle_solve(b.instance)
    except InfeasibleError as exc:
        _fail(str(exc), EXIT_INFEASIBLE)
    except OracleBudgetError as exc:
        _fail(str(exc), EXIT_CONFIG)
    assert check_feasible(b.instance, sol)
    click.echo(f"optimal cost = {sol.cost}")
    for d, sl in enumerate(b.catalog.demand_slices):
        j = sl.start + int(sol.g[sl].argmax())
        pat = b.catalog.patterns[j]
        dem = b.demands[d]
        segs = " + ".join("-".join(f"N{v}" for v in seg) for seg in pat.segments)
        click.echo(f"  N{dem.source}->N{dem.target}: {segs}")
    for c, w in enumerate(sol.omega):
        if w:
            click.echo(f"  circuit {'-'.join(f'N{v}' for v in b.catalog.circuits[c].nodes)}: {w}")


@main.command()
@config_options
@click.option("--append/--no-append", default=False, help="Append to an existing results.jsonl.")
def solve(config_path, append, **overrides):
    """Sample one QUBO and store the decoded samples in results.jsonl."""
    cfg = _resolve_config(config_path, **overrides)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    b0 = _bundle(cfg)
    oc = _oracle_cost(b0.instance)
    _, records = _run_cell(cfg, cfg.a, cfg.penalty, cfg.schedule, cfg.sampler_seed, oc)
    _write_records(out / "results.jsonl", records, append)
    feas = [r["cost"] for r in records if r["feasible"]]
    click.echo(
        f"{len(records)} samples, {len(feas)} feasible, best energy {min(r['energy'] for r in records):.6g}, "
        f"best feasible cost {min(feas) if feas else '-'} (oracle {oc if oc is not None else '-'})"
    )


@main.command()
@config_options
@click.option("--penalties", type=str, default="1,2,4,8,16,1000", show_default=True)
@click.option("--accuracies", type=str, default="1,2,3,4,5", show_default=True)
@click.option("--schedules", type=str, default=None, help="Comma separated, e.g. '1,100,100@0.35+20'.")
@click.option("--append/--no-append", default=False)
def sweep(config_path, penalties, accuracies, schedules, append, **overrides):
    """Sample every (penalty, accuracy, schedule) cell into results.jsonl."""
    cfg = _resolve_config(config_path, **overrides)
    ps = _csv_list(penalties, float)
    accs = _csv_list(accuracies, int)
    scheds = _csv_list(schedules, str) if schedules else [cfg.schedule]
    if not ps or not accs or not scheds:
        _fail("penalties, accuracies and schedules must be non-empty", EXIT_CONFIG)
    for s in scheds:
        try:
            parse_schedule(s)
        except ValueError as exc:
            _fail(str(exc), EXIT_CONFIG)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.jsonl"
    if not append:
        results.write_text("")

    cell = 0
    grid = []
    for a in accs:
        oc = _oracle_cost(_bundle(cfg, a=a).instance)
        for p in ps:
            for s in scheds:
                _, records = _run_cell(cfg, a, p, s, cfg.sampler_seed + cell, oc)
                _write_records(results, records, append=True)
                n_feas = sum(r["feasible"] for r in records)
                grid.append((a, p, parse_schedule(s).render(), len(records), n_feas))
                cell += 1
    click.echo("a\tp\tschedule\tsamples\tfeasible")
    for a, p, s, n, f in grid:
        click.echo(f"{a}\t{p:g}\t{s}\t{n}\t{f}")
    click.echo(f"{cell} cells -> {results}")


def _group_key(tag: dict):
    return (tag.get("schedule"), tag.get("p"), tag.get("a"))


@main.command()
@click.argument("results", required=False, type=click.Path(dir_okay=False))
@click.option("--mode", type=click.Choice(["run", "scaling"]), default="run", show_default=True)
@click.option("--bins", type=int, default=analysis.DEFAULT_BINS, show_default=True)
@click.option("--sizes", type=str, default="3-6", show_default=True, help="Scaling mode: node counts.")
@click.option("--accuracies", type=str, default="1,5", show_default=True, help="Scaling mode: digits a.")
@click.option("--chain-coeff", type=float, default=analysis.DEFAULT_CHAIN_COEFF, show_default=True)
@click.option("--qubits", type=int, default=5600, show_default=True)
@click.option("--couplers", type=int, default=40100, show_default=True)
@config_options
def report(results, mode, bins, sizes, accuracies, chain_coeff, qubits, couplers, config_path, **overrides):
    """Summarise results.jsonl (run mode) or estimate hardware scaling."""
    cfg = _resolve_config(config_path, **overrides)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if mode == "scaling":
        try:
            stats = measure_scaling(cfg, _int_range(sizes), _csv_list(accuracies, int))
            rep = analysis.scaling_report(stats, analysis.HardwareProfile(qubits, couplers), chain_coeff)
        except (TopologyError, ValueError) as exc:
            _fail(str(exc), EXIT_CONFIG)
        (out / "scaling.csv").write_text(rep.to_csv())
        click.echo(rep.text())
        return

    if results is None:
        _fail("run mode needs a results.jsonl path", EXIT_CONFIG)
    path = Path(results)
    if not path.exists():
        _fail(f"{path} does not exist", EXIT_INFEASIBLE)
    records = read_jsonl(path)
    if not records:
        _fail(f"{path} contains no samples", EXIT_INFEASIBLE)
    if any("feasible" not in r or "cost" not in r for r in records):
        _fail(f"{path} lacks decoded 'feasible'/'cost' fields", EXIT_CONFIG)

    batch = analysis.DecodedBatch(
        np.array([r["energy"] for r in records], dtype=float),
        np.array([r["cost"] for r in records], dtype=np.int64),
        np.array([r["feasible"] for r in records], dtype=bool),
        [{k: r.get(k) for k in ("schedule", "p", "a")} for r in records],
    )
    groups = analysis.summarize_groups(batch, _group_key, bins)
    (out / "report.csv").write_text(analysis.run_stats_csv(groups))
    overall = analysis.summarize(batch, "all", bins)
    oracle_costs = {r.get("oracle_cost") for r in records} - {None}
    for key, st in groups.items():
        sched, p, a = key
        click.echo(
            f"schedule={sched} p={p:g} a={a}: {st.total} samples, {st.feasible} feasible "
            f"({st.feasible_per_million:.1f} per million), best feasible cost "
            f"{st.best_feasible_cost if st.best_feasible_cost is not None else '-'}"
        )
    best = overall.best_feasible_cost
    click.echo(f"total samples = {overall.total}, feasible per million = {overall.feasible_per_million:.3f}")
    click.echo(f"best feasible cost = {best if best is not None else '-'}")
    if oracle_costs:
        click.echo(f"oracle cost = {min(oracle_costs)}")


if __name__ == "__main__":
    main()
