"""Solve exported LP files with CBC (shipped with pulp) and compare objectives.

Exports the DAG model (two-level price day) and the risk-neutral market model
of a dataset, solves each with the embedded HiGHS route and with the CBC
binary reading the LP text, and prints both objectives.
"""
import argparse
from pathlib import Path

import numpy as np

from vppbid.contracts import build_dag_model
from vppbid.dataset import load_dataset
from vppbid.external import cbc_objective, cbc_path
from vppbid.milp import export_lp_file, solve_milp
from vppbid.vpp import build_vpp_model

ROOT = Path(__file__).resolve().parents[1]


def two_level_prices(H: int) -> np.ndarray:
    return np.array([55.0 if (8 <= h < 14 or 18 <= h < 24) else 20.0 for h in range(H)])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "data" / "synthetic10" / "config.toml"))
    args = ap.parse_args()
    cbc = cbc_path()
    if cbc is None:
        raise SystemExit("pulp/CBC not available; pip install pulp")
    ds = load_dataset(args.config)
    models = {
        "dag": build_dag_model(ds.assets.contracts, two_level_prices(ds.horizon), ds.options.ls_recovery)[0],
        "vpp": build_vpp_model(ds.assets, ds.tree(), ds.options)[0],
    }
    for name, model in models.items():
        ours = solve_milp(model, gap_tol=1e-9, backend="highs").objective
        theirs = cbc_objective(export_lp_file(model), cbc)
        rel = abs(ours - theirs) / max(1.0, abs(ours))
        print(f"{name}: embedded {ours:.6f}  cbc {theirs:.6f}  rel diff {rel:.2e}")
