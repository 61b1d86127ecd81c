"""Optional third-party cross-check: solve exported LP text with the CBC binary shipped by pulp."""
from __future__ import annotations

import re
import subprocess
import tempfile
from pathlib import Path


def cbc_path() -> str | None:
    """Path of pulp's bundled CBC executable, or None when pulp is not installed."""
    try:
        import pulp
    except ImportError:
        return None
    path = pulp.apis.PULP_CBC_CMD().path
    return path if path and Path(path).exists() else None


def cbc_objective(lp_text: str, cbc: str, timeout: float = 300.0) -> float:
    """Objective CBC reports for an LP-format model (raises unless CBC proves optimality)."""
    with tempfile.TemporaryDirectory() as tmp:
        lp = Path(tmp) / "model.lp"
        lp.write_text(lp_text)
        out = subprocess.run([cbc, str(lp), "ratio", "1e-9", "allow", "1e-7", "solve"],
                             capture_output=True, text=True, check=True, timeout=timeout).stdout
    m = re.search(r"Objective value:\s*([-+0-9.eE]+)", out)
    if not m or "Optimal" not in out:
        raise RuntimeError("CBC did not report an optimal objective:\n" + out[-2000:])
    return float(m.group(1))
