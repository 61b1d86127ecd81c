"""Dataset loading: one TOML config referencing CSV tables.

Config keys::

    schema_version = 1
    [dataset]   name, horizon
    [assets]    wind_capacity, expansion_cap (optional)
    [scenarios] wind, da_price, id_price, balancing   (CSV paths)
    [contracts] lc, ls, og, es                         (CSV paths, each optional)
    [model]     ls_recovery, in_nonanticipativity, intraday_purchases
    [solver]    backend, gap, threads
    [sweep]     steps or grid, p_min_tol, regret

Scenario CSV columns (branches and hours are 1-based):

    wind.csv, da_price.csv   branch,hour,value,probability
    id_price.csv             da_branch,branch,hour,value,probability
    balancing.csv            branch,[hour,]regime,ratio,probability

``probability`` is repeated on every row of a branch and must agree. For
``id_price`` it is conditional on the day-ahead branch. Without an ``hour``
column a balancing branch applies one (regime, ratio) to every hour.

Contract CSV columns are the contract fields; window columns of load-shifting
contracts hold hour ranges such as ``10-16``.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import MISSING, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np
import tomli

from .contracts import ContractError, ContractSet, EsContract, LcContract, LsContract, OgContract
from .milp import BACKENDS
from .probust import REGRET_MODES, SolverSettings
from .scenarios import (BalancingBranch, Branch, InvalidMarginals, InvalidRatio, MarginalScenarios,
                        build_symmetric_tree, expand_balancing_ratios, validate_tree)
from .vpp import VppAssets, VppOptions

SCHEMA_VERSION = 1
CONTRACT_TYPES = {"lc": LcContract, "ls": LsContract, "og": OgContract, "es": EsContract}
_SECTIONS = {
    "schema_version": None,
    "dataset": {"name", "horizon"},
    "assets": {"wind_capacity", "expansion_cap"},
    "scenarios": {"wind", "da_price", "id_price", "balancing"},
    "contracts": set(CONTRACT_TYPES),
    "model": {"ls_recovery", "in_nonanticipativity", "intraday_purchases"},
    "solver": {"backend", "gap", "threads"},
    "sweep": {"steps", "grid", "p_min_tol", "regret"},
}


class DatasetError(ValueError):
    """Invalid dataset content (validation failure)."""


class DatasetIOError(OSError):
    """Missing or unreadable dataset file."""


@dataclass
class SweepSettings:
    steps: int = 20
    grid: list[float] | None = None
    p_min_tol: float = 1e-4
    regret: str = "relative"


@dataclass
class Dataset:
    name: str
    horizon: int
    assets: VppAssets
    marginals: MarginalScenarios
    options: VppOptions = field(default_factory=VppOptions)
    solver: SolverSettings = field(default_factory=SolverSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    digest: str = ""
    files: list[str] = field(default_factory=list)

    def tree(self):
        return build_symmetric_tree(self.marginals)


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise DatasetIOError(f"{path}: {e.strerror or e}") from e


def _rows(path: Path, required: list[str], optional: tuple[str, ...] = ()) -> tuple[list[dict], list[str]]:
    text = _read(path).decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    cols = [c.strip() for c in (reader.fieldnames or [])]
    missing = [c for c in required if c not in cols]
    if missing:
        raise DatasetError(f"{path.name}: missing column(s) {', '.join(missing)}")
    unknown = [c for c in cols if c not in required and c not in optional]
    if unknown:
        raise DatasetError(f"{path.name}: unknown column(s) {', '.join(unknown)}")
    rows = []
    for k, r in enumerate(reader, start=2):
        rows.append({"_line": k, **{key.strip(): (v or "").strip() for key, v in r.items() if key is not None}})
    return rows, cols


def _num(path: Path, row: dict, col: str, kind=float):
    raw = row[col]
    try:
        v = kind(raw)
    except ValueError:
        raise DatasetError(f"{path.name} line {row['_line']}: column {col}: cannot parse {raw!r}") from None
    if kind is float and not math.isfinite(v):
        raise DatasetError(f"{path.name} line {row['_line']}: column {col}: non-finite value")
    return v


def _series(path: Path, rows: list[dict], key: tuple[str, ...], H: int) -> dict[tuple, tuple[np.ndarray, float]]:
    """Group rows by branch key into (hourly values, probability)."""
    out: dict[tuple, tuple[np.ndarray, float]] = {}
    seen: dict[tuple, set] = {}
    for r in rows:
        b = tuple(_num(path, r, c, int) for c in key)
        h = _num(path, r, "hour", int)
        if not 1 <= h <= H:
            raise DatasetError(f"{path.name} line {r['_line']}: hour {h} outside 1..{H}")
        v, p = _num(path, r, "value"), _num(path, r, "probability")
        if b not in out:
            out[b] = (np.full(H, np.nan), p)
            seen[b] = set()
        if abs(out[b][1] - p) > 1e-12:
            raise DatasetError(f"{path.name} line {r['_line']}: branch {b} probability {p} differs from {out[b][1]}")
        if h in seen[b]:
            raise DatasetError(f"{path.name} line {r['_line']}: duplicate hour {h} for branch {b}")
        seen[b].add(h)
        out[b][0][h - 1] = v
    for b, (vals, _) in out.items():
        if np.isnan(vals).any():
            raise DatasetError(f"{path.name}: branch {b} misses hours {list(np.where(np.isnan(vals))[0] + 1)}")
    return dict(sorted(out.items()))


def _consecutive(path: Path, keys, what: str) -> None:
    if list(keys) != list(range(1, len(keys) + 1)):
        raise DatasetError(f"{path.name}: {what} must be numbered 1..n, got {list(keys)}")


def _prob_sum(path: Path, probs, what: str = "branch probabilities") -> None:
    total = float(sum(probs))
    if abs(total - 1.0) > 1e-9:
        raise DatasetError(f"{path.name}: {what} sum to {total:.12g}, not 1")


def load_marginals(wind: Path, da: Path, intraday: Path, balancing: Path, H: int) -> MarginalScenarios:
    def simple(path):
        rows, _ = _rows(path, ["branch", "hour", "value", "probability"])
        ser = _series(path, rows, ("branch",), H)
        _consecutive(path, [b[0] for b in ser], "branches")
        _prob_sum(path, [p for _, p in ser.values()])
        return [Branch(v, p) for v, p in ser.values()]

    w, d = simple(wind), simple(da)
    rows, _ = _rows(intraday, ["da_branch", "branch", "hour", "value", "probability"])
    ser = _series(intraday, rows, ("da_branch", "branch"), H)
    ids: list[list[Branch]] = [[] for _ in d]
    for (db, ib), (v, p) in ser.items():
        if not 1 <= db <= len(d):
            raise DatasetError(f"{intraday.name}: da_branch {db} has no day-ahead series")
        if ib != len(ids[db - 1]) + 1:
            raise DatasetError(f"{intraday.name}: branches under da_branch {db} must be numbered 1..n")
        ids[db - 1].append(Branch(v, p))
    for db, bs in enumerate(ids, start=1):
        _prob_sum(intraday, [b.probability for b in bs], f"probabilities under da_branch {db}")
    bal = _load_balancing(balancing, H)
    m = MarginalScenarios(w, d, ids, bal)
    try:
        m.check()
    except InvalidMarginals as e:
        raise DatasetError(f"scenario files: {e}") from None
    return m


def _load_balancing(path: Path, H: int) -> list[BalancingBranch]:
    rows, cols = _rows(path, ["branch", "regime", "ratio", "probability"], optional=("hour",))
    hourly = "hour" in cols
    draws: dict[int, dict[int, tuple[str, float]]] = {}
    probs: dict[int, float] = {}
    for r in rows:
        b = _num(path, r, "branch", int)
        p = _num(path, r, "probability")
        if b in probs and abs(probs[b] - p) > 1e-12:
            raise DatasetError(f"{path.name} line {r['_line']}: branch {b} probability {p} differs from {probs[b]}")
        probs[b] = p
        hours = [_num(path, r, "hour", int)] if hourly else list(range(1, H + 1))
        for h in hours:
            if not 1 <= h <= H:
                raise DatasetError(f"{path.name} line {r['_line']}: hour {h} outside 1..{H}")
            if h in draws.setdefault(b, {}):
                raise DatasetError(f"{path.name} line {r['_line']}: duplicate hour {h} for branch {b}")
            draws[b][h] = (r["regime"], _num(path, r, "ratio"))
    _consecutive(path, sorted(draws), "branches")
    _prob_sum(path, probs.values())
    out = []
    for b in sorted(draws):
        if len(draws[b]) != H:
            raise DatasetError(f"{path.name}: branch {b} covers {len(draws[b])} of {H} hours")
        try:
            pairs = expand_balancing_ratios(draws[b][h] for h in range(1, H + 1))
        except InvalidRatio as e:
            raise DatasetError(f"{path.name}: branch {b}: {e}") from None
        out.append(BalancingBranch(np.array([x[0] for x in pairs]), np.array([x[1] for x in pairs]), probs[b]))
    return out


def _hour_range(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    out: list[int] = []
    for part in text.replace(";", " ").split():
        if "-" in part:
            a, b = (int(x) for x in part.split("-", 1))
            if b < a:
                raise ValueError(f"descending hour range {part!r}")
            out.extend(range(a, b + 1))
        else:
            out.append(int(part))
    return tuple(out)


def load_contracts(path: Path, kind: str) -> tuple:
    cls = CONTRACT_TYPES[kind]
    spec = {f.name: f for f in fields(cls)}
    required = [n for n, f in spec.items() if f.default is MISSING]
    rows, _ = _rows(path, required, optional=tuple(n for n in spec if n not in required))
    out = []
    for r in rows:
        kw: dict[str, Any] = {}
        for name, f in spec.items():
            if name not in r or r[name] == "":
                if name in required:
                    raise DatasetError(f"{path.name} line {r['_line']}: field {name} is empty")
                continue
            try:
                if name in ("reduction_window", "recovery_window"):
                    kw[name] = _hour_range(r[name])
                elif f.type in ("int", int):
                    kw[name] = int(r[name])
                else:
                    kw[name] = float(r[name])
            except ValueError:
                raise DatasetError(f"{path.name} line {r['_line']}: field {name}: cannot parse {r[name]!r}") from None
        out.append(cls(**kw))
    return tuple(out)


def _check_keys(cfg: dict, path: Path) -> None:
    for k, v in cfg.items():
        if k not in _SECTIONS:
            raise DatasetError(f"{path.name}: unknown field {k!r}")
        allowed = _SECTIONS[k]
        if allowed is not None:
            if not isinstance(v, dict):
                raise DatasetError(f"{path.name}: [{k}] must be a table")
            for kk in v:
                if kk not in allowed:
                    raise DatasetError(f"{path.name}: unknown field {k}.{kk}")


def load_dataset(config_path: str | Path) -> Dataset:
    """Parse and validate a dataset; raises DatasetError / DatasetIOError."""
    path = Path(config_path)
    raw = _read(path)
    try:
        cfg = tomli.loads(raw.decode("utf-8"))
    except tomli.TOMLDecodeError as e:
        raise DatasetError(f"{path.name}: {e}") from None
    _check_keys(cfg, path)
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise DatasetError(f"{path.name}: schema_version must be {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}")
    base = path.parent
    ds = cfg.get("dataset", {})
    try:
        H = int(ds["horizon"])
        wind_cap = float(cfg["assets"]["wind_capacity"])
        sc = cfg["scenarios"]
        files = {k: base / sc[k] for k in ("wind", "da_price", "id_price", "balancing")}
    except KeyError as e:
        raise DatasetError(f"{path.name}: missing field {e.args[0]!r}") from None
    if H < 1:
        raise DatasetError(f"{path.name}: dataset.horizon must be >= 1")
    used = [path] + list(files.values())
    marg = load_marginals(files["wind"], files["da_price"], files["id_price"], files["balancing"], H)
    parts = {}
    for kind, p in sorted(cfg.get("contracts", {}).items()):
        parts[kind] = load_contracts(base / p, kind)
        used.append(base / p)
    contracts = ContractSet(**parts)
    try:
        contracts.check(H)
    except ContractError as e:
        raise DatasetError(f"contracts: {e}") from None
    exp = cfg["assets"].get("expansion_cap")
    assets = VppAssets(wind_cap, contracts, None if exp is None else float(exp))
    if wind_cap < 0 or assets.component_cap < 0:
        raise DatasetError(f"{path.name}: capacities must be >= 0")
    model = cfg.get("model", {})
    options = VppOptions(model.get("ls_recovery", "uniform"), model.get("in_nonanticipativity", "branch"),
                         True, bool(model.get("intraday_purchases", False)))
    try:
        options.check()
    except ValueError as e:
        raise DatasetError(f"{path.name}: model: {e}") from None
    so = cfg.get("solver", {})
    solver = SolverSettings(backend=so.get("backend", "highs"), gap=float(so.get("gap", 1e-6)),
                            threads=int(so.get("threads", 1)))
    if solver.backend not in BACKENDS:
        raise DatasetError(f"{path.name}: solver.backend must be one of {BACKENDS}")
    sw = cfg.get("sweep", {})
    sweep = SweepSettings(int(sw.get("steps", 20)), [float(x) for x in sw["grid"]] if "grid" in sw else None,
                          float(sw.get("p_min_tol", 1e-4)), sw.get("regret", "relative"))
    if sweep.regret not in REGRET_MODES:
        raise DatasetError(f"{path.name}: sweep.regret must be one of {REGRET_MODES}")
    tree = build_symmetric_tree(marg)
    problems = validate_tree(tree)
    if problems:
        raise DatasetError("scenario tree: " + "; ".join(problems))
    h = hashlib.sha256()
    for f in used:
        h.update(f.name.encode())
        h.update(_read(f))
    return Dataset(ds.get("name", path.stem), H, assets, marg, options, solver, sweep, h.hexdigest(),
                   [str(f) for f in used])
