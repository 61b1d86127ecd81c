"""Command line entry point: ``vppbid <verb> --config cfg.toml --out dir``.

Exit codes: 0 success, 1 validation error, 2 solver failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checks import Report, check_es, check_lc, check_ls, check_og, unit_values
from .contracts import FAMILIES, ContractError, build_dag_model, extract_schedule
from .dataset import Dataset, DatasetError, DatasetIOError, load_dataset
from .fmt import num
from .milp import export_lp_file, solve_milp
from .milp.highs import set_threads
from .probust import (InternalInconsistency, ProbustResult, RegretUndefined, ScenarioInfeasible, SweepReport,
                      build_probust_model, find_min_feasible_p, solve_probust, solve_scenario_optima,
                      sweep_p)
from .report import (decision_csv, mrr_vs_profit_csv, offer_curves_csv, optima_csv, participation_csv,
                     profits_by_scenario_csv, settlement_csv, tradeoff_rows)
from .synthetic import SyntheticConfig, generate_marginals, table_contracts, write_dataset
from .vpp import build_vpp_model

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


class SolverFailure(RuntimeError):
    pass


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"[{stage}] {exc}")
        self.stage, self.exc = stage, exc


@dataclass
class Run:
    """Tracks stage timings and written files; becomes manifest.json."""
    out: Path
    command: str
    dataset: Dataset | None = None
    timings: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def stage(self, name: str, fn, *args, **kw):
        t = time.perf_counter()
        try:
            return fn(*args, **kw)
        except (DatasetError, DatasetIOError, ContractError, SolverFailure, ScenarioInfeasible,
                InternalInconsistency, RegretUndefined, OSError, ValueError) as e:
            raise StageError(name, e) from e
        finally:
            self.timings[name] = round(time.perf_counter() - t, 3)

    def write(self, name: str, text: str) -> None:
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / name).write_text(text)
        self.outputs.append(name)

    def manifest(self) -> None:
        ds = self.dataset
        m = {
            "tool": "vppbid",
            "version": __version__,
            "command": self.command,
            "dataset": None if ds is None else {"name": ds.name, "sha256": ds.digest,
                                                 "files": [Path(f).name for f in ds.files]},
            "settings": self.settings,
            "outputs": sorted(self.outputs),
            "timings": self.timings,  # wall-clock seconds; the only field that varies between runs
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")


def _load(run: Run, config: str | None, args) -> Dataset:
    if not config:
        raise StageError("load", DatasetError("--config is required"))
    ds = run.stage("load", load_dataset, config)
    if args.gap is not None:
        ds.solver.gap = args.gap
    if args.threads is not None:
        ds.solver.threads = args.threads
    set_threads(ds.solver.threads)
    run.dataset = ds
    run.settings = {"model": asdict(ds.options), "solver": asdict(ds.solver), "sweep": asdict(ds.sweep)}
    return ds


def _solve(model, ds: Dataset, what: str):
    sol = solve_milp(model, gap_tol=ds.solver.gap, backend=ds.solver.backend)
    if not sol.optimal:
        raise SolverFailure(f"{what}: {sol.status.value}")
    return sol


# -- verbs ------------------------------------------------------------------

def cmd_validate(args) -> int:
    run = Run(Path(args.out or "."), "validate")
    ds = _load(run, args.config, args)
    tree = ds.tree()
    n1, n2, n3, n4 = tree.shape
    print(f"ok: {ds.name}: horizon {ds.horizon}, {len(tree)} scenarios (N1={n1} N2={n2} N3={n3} N4={n4}), "
          f"{len(ds.assets.contracts)} contracts")
    return EXIT_OK


def _read_prices(path: str, H: int) -> np.ndarray:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise DatasetIOError(f"{p}: {e.strerror or e}") from e
    rows = list(csv.DictReader(text.splitlines()))
    if not rows or set(rows[0]) != {"hour", "price"}:
        raise DatasetError(f"{p.name}: expected columns hour,price")
    prices = np.full(H, np.nan)
    for k, r in enumerate(rows, start=2):
        try:
            h, v = int(r["hour"]), float(r["price"])
        except ValueError:
            raise DatasetError(f"{p.name} line {k}: cannot parse {r}") from None
        if not 1 <= h <= H:
            raise DatasetError(f"{p.name} line {k}: hour {h} outside 1..{H}")
        prices[h - 1] = v
    if np.isnan(prices).any():
        raise DatasetError(f"{p.name}: missing hours {list(np.where(np.isnan(prices))[0] + 1)}")
    return prices


def _dag_model(run: Run, ds: Dataset, prices_path: str | None):
    if not prices_path:
        raise StageError("load", DatasetError("--prices is required for the dag model"))
    prices = run.stage("load", _read_prices, prices_path, ds.horizon)
    model, handles = build_dag_model(ds.assets.contracts, prices, ds.options.ls_recovery)
    return prices, model, handles


def cmd_dag(args) -> int:
    run = Run(Path(args.out), "dag")
    ds = _load(run, args.config, args)
    prices, model, handles = _dag_model(run, ds, args.prices)
    sol = run.stage("solve", _solve, model, ds, "dag schedule")
    sched = extract_schedule(sol, handles)
    H = ds.horizon
    fams = [f for f in FAMILIES if f in sched.lor]
    rows = [[str(h + 1), num(prices[h])] + [num(sched.lor[f][h]) for f in fams] + [num(sched.cost[f][h]) for f in fams]
            for h in range(H)]
    run.write("dag_schedule.csv", _table(["hour", "price"] + [f"P_{f}" for f in fams] + [f"CP_{f}" for f in fams], rows))
    units = unit_values(sol.values, handles)
    rep = Report()
    fn = {"LC": check_lc, "LS": check_ls, "OG": check_og, "ES": check_es}
    cs = {"LC": ds.assets.contracts.lc, "LS": ds.assets.contracts.ls, "OG": ds.assets.contracts.og,
          "ES": ds.assets.contracts.es}
    urows = []
    for f in fams:
        for i, (c, d) in enumerate(zip(cs[f], units[f])):
            args_ = (rep, c, d, f"{f}{i + 1}") + ((ds.options.ls_recovery,) if f == "LS" else ())
            lor, cost = fn[f](*args_)
            for h in range(H):
                urows.append([f, str(i + 1), str(h + 1), str(int(round(d["y"][h]))), num(lor[h]), num(cost[h])])
    run.write("dag_units.csv", _table(["family", "contract", "hour", "on", "output", "cost"], urows))
    run.write("dag_summary.csv", _table(["objective"], [[num(sol.objective)]]))
    run.manifest()
    print(f"dag objective {num(sol.objective)}")
    return EXIT_OK


def _table(header, rows) -> str:
    return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"


def _probust_at(run: Run, ds: Dataset, tree, p: float) -> ProbustResult:
    optima = None
    if math.isfinite(p):
        optima = run.stage("scenario optima", solve_scenario_optima, ds.assets, tree, ds.options, ds.solver)
    else:
        optima = np.ones(len(tree))  # unused at p = inf
    res = run.stage("solve", solve_probust, ds.assets, tree, optima, p, ds.options, ds.solver, ds.sweep.regret)
    if not res.feasible:
        raise StageError("solve", SolverFailure(f"p = {p}: {res.status.value}"))
    return res


def cmd_solve(args) -> int:
    run = Run(Path(args.out), "solve")
    ds = _load(run, args.config, args)
    tree = ds.tree()
    res = _probust_at(run, ds, tree, args.p)
    run.write("decision.csv", decision_csv(res.decision, tree))
    run.write("settlement.csv", settlement_csv(res.decision, tree))
    run.write("offer_curves.csv", offer_curves_csv(res.decision, tree))
    run.write("participation.csv", participation_csv(res.decision, tree))
    run.manifest()
    print(f"expected profit {num(res.expected_profit)}")
    return EXIT_OK


def cmd_offer_curves(args) -> int:
    run = Run(Path(args.out), "offer-curves")
    ds = _load(run, args.config, args)
    tree = ds.tree()
    res = _probust_at(run, ds, tree, args.p)
    run.write("offer_curves.csv", offer_curves_csv(res.decision, tree))
    run.manifest()
    return EXIT_OK


@dataclass
class SweepOutcome:
    report: SweepReport
    p_min: float
    risk_averse: ProbustResult


def run_sweep(ds: Dataset, run: Run, grid=None, steps: int | None = None) -> SweepOutcome:
    tree = ds.tree()
    optima = run.stage("scenario optima", solve_scenario_optima, ds.assets, tree, ds.options, ds.solver)
    z = np.array([o.value for o in optima])
    grid = grid if grid is not None else ds.sweep.grid
    steps = steps or ds.sweep.steps
    report = run.stage("sweep", sweep_p, ds.assets, tree, grid, ds.options, ds.solver, z, ds.sweep.regret, steps)
    p_min, ra = run.stage("p_min", find_min_feasible_p, ds.assets, tree, ds.sweep.p_min_tol, ds.options, ds.solver,
                          z, report.risk_neutral)
    report.p_min = p_min
    return SweepOutcome(report, p_min, ra)


def cmd_sweep(args) -> int:
    res = sweep_command(args)
    rn, ra = res.report.risk_neutral, res.risk_averse
    print(f"risk-neutral: profit {num(rn.expected_profit)}, MRR {num(100 * rn.mrr)}%")
    print(f"p_min {num(res.p_min)}: profit {num(ra.expected_profit)}, MRR {num(100 * ra.mrr)}%")
    return EXIT_OK


def sweep_command(args) -> SweepOutcome:
    """Body of ``vppbid sweep``: runs the sweep, writes every table and returns the results."""
    run = Run(Path(args.out), "sweep")
    ds = _load(run, args.config, args)
    tree = ds.tree()
    grid = [float(x) for x in args.grid.split(",")] if args.grid else None
    res = run_sweep(ds, run, grid, args.steps)
    rep, rn, ra = res.report, res.report.risk_neutral, res.risk_averse
    run.write("scenario_optima.csv", optima_csv(rep.optima, tree.probabilities))
    run.write("profits_by_scenario.csv", profits_by_scenario_csv(rep))
    run.write("mrr_vs_profit.csv", mrr_vs_profit_csv(tradeoff_rows(rep, ra)))
    run.write("offer_curves_risk_neutral.csv", offer_curves_csv(rn.decision, tree))
    run.write("offer_curves_risk_averse.csv", offer_curves_csv(ra.decision, tree))
    run.write("participation_risk_neutral.csv", participation_csv(rn.decision, tree))
    run.write("participation_risk_averse.csv", participation_csv(ra.decision, tree))
    run.settings["p_min"] = num(res.p_min)
    run.manifest()
    return res


def cmd_export_lp(args) -> int:
    run = Run(Path(args.out).parent if args.out else Path("."), "export-lp")
    ds = _load(run, args.config, args)
    which = args.model
    if which == "dag":
        _, model, _ = _dag_model(run, ds, args.prices)
    elif which == "vpp":
        model, _ = build_vpp_model(ds.assets, ds.tree(), ds.options)
    elif which.startswith("probust@"):
        try:
            p = float(which.split("@", 1)[1])
        except ValueError:
            raise StageError("export", DatasetError(f"bad model selector {which!r}")) from None
        tree = ds.tree()
        if math.isfinite(p):
            optima = run.stage("scenario optima", solve_scenario_optima, ds.assets, tree, ds.options, ds.solver)
        else:
            optima = np.ones(len(tree))
        model, _ = run.stage("export", build_probust_model, ds.assets, tree, optima, p, ds.options, ds.sweep.regret)
    else:
        raise StageError("export", DatasetError(f"unknown model selector {which!r}; use dag, vpp or probust@P"))
    text = export_lp_file(model)
    if not args.out:
        sys.stdout.write(text)
    else:
        run.stage("write", Path(args.out).write_text, text)
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = SyntheticConfig(seed=args.seed if args.seed is not None else SyntheticConfig.seed)
    path = write_dataset(args.out, generate_marginals(cfg), table_contracts(), cfg.wind_capacity,
                         name=f"synthetic-seed{cfg.seed}")
    print(f"wrote {path}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="dataset config (TOML)")
    common.add_argument("--out", help="output directory (export-lp: output file)")
    common.add_argument("--threads", type=int, help="solver threads")
    common.add_argument("--seed", type=int, help="seed for synthetic data generation")
    common.add_argument("--gap", type=float, help="relative MIP gap")
    ap = argparse.ArgumentParser(prog="vppbid", parents=[common], description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)
    sub.add_parser("validate", parents=[common], help="load and validate a dataset")
    p = sub.add_parser("dag", parents=[common], help="self-schedule the contract portfolio against a price series")
    p.add_argument("--prices", help="CSV with columns hour,price")
    for verb, hlp in (("solve", "solve the offering model at one p"), ("offer-curves", "write hourly offering curves")):
        p = sub.add_parser(verb, parents=[common], help=hlp)
        p.add_argument("--p", type=float, default=math.inf, help="regret bound (default inf: risk-neutral)")
    p = sub.add_parser("sweep", parents=[common], help="p sweep, minimal p and trade-off tables")
    p.add_argument("--grid", help="explicit descending comma-separated p values")
    p.add_argument("--steps", type=int, help="default grid: risk-neutral MRR split in this many steps")
    p = sub.add_parser("export-lp", parents=[common], help="write an LP file for external solvers")
    p.add_argument("--model", default="vpp", help="dag, vpp or probust@P")
    p.add_argument("--prices", help="price CSV for the dag model")
    sub.add_parser("generate", parents=[common], help="write the seeded synthetic dataset to --out")
    return ap


VERBS = {"validate": cmd_validate, "dag": cmd_dag, "solve": cmd_solve, "offer-curves": cmd_offer_curves,
         "sweep": cmd_sweep, "export-lp": cmd_export_lp, "generate": cmd_generate}


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    if args.verb not in ("validate", "export-lp") and not args.out:
        print("error: --out is required", file=sys.stderr)
        return EXIT_IO
    try:
        return VERBS[args.verb](args)
    except StageError as e:
        exc = e.exc
        print(f"error {e}", file=sys.stderr)
        if isinstance(exc, (DatasetIOError, FileNotFoundError, PermissionError)) or (
                isinstance(exc, OSError) and not isinstance(exc, DatasetIOError)):
            return EXIT_IO
        if isinstance(exc, (SolverFailure, ScenarioInfeasible, InternalInconsistency)):
            return EXIT_SOLVER
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error [io] {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
