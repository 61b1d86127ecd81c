"""Regenerate the bundled synthetic dataset (data/synthetic10)."""
import argparse
from pathlib import Path

from vppbid.synthetic import SyntheticConfig, generate_marginals, table_contracts, write_dataset

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "data" / "synthetic10"))
    ap.add_argument("--seed", type=int, default=SyntheticConfig.seed)
    args = ap.parse_args()
    cfg = SyntheticConfig(seed=args.seed)
    path = write_dataset(args.out, generate_marginals(cfg), table_contracts(), cfg.wind_capacity,
                         name=f"synthetic10-seed{cfg.seed}")
    print(path)
