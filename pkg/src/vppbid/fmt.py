"""Fixed-width number formatting shared by every CSV writer."""
from __future__ import annotations

import math


def num(v: float, places: int = 6) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.{places}f}"
    if s.startswith("-") and float(s) == 0.0:
        s = s[1:]
    return s
