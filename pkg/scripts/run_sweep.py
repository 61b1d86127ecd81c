"""p sweep on a dataset, printing the trade-off table (risk-neutral row first, p_min last)."""
import argparse
import time
from pathlib import Path

from vppbid.cli import Run, run_sweep
from vppbid.dataset import load_dataset
from vppbid.report import mrr_vs_profit_csv, tradeoff_rows

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "data" / "synthetic10" / "config.toml"))
    ap.add_argument("--steps", type=int, default=None)
    args = ap.parse_args()
    ds = load_dataset(args.config)
    t0 = time.perf_counter()
    res = run_sweep(ds, Run(Path("."), "sweep"), steps=args.steps)
    print(mrr_vs_profit_csv(tradeoff_rows(res.report, res.risk_averse)), end="")
    bad = [r for r in res.report.results if not r.feasible]
    if bad:
        print(f"first infeasible grid value: {bad[0].p:.6f}")
    print(f"p_min = {res.p_min:.6f}  ({time.perf_counter() - t0:.1f} s)")
