#!/usr/bin/env python3
"""Degraded-safety-level sweeps over the (eps0, lambda) robustness plane.

Reproduces the published table points for both plants and adds a dense grid
per plant for contour plotting (columns eps0, lambda, h_star, status).
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

from safefilter.cli import main as cli_main


def _dense_sweep(plant: str, delta: float, eps0_max: float, lam_max: float, out: str) -> int:
    doc = {
        "name": f"{plant}-hstar-grid",
        "plant": plant,
        "issf": {"eps0": 1.0, "lam": 0.0, "delta": delta},
        "sweep": {
            "eps0_grid": [round(v, 6) for v in np.linspace(0.05, eps0_max, 40)],
            "lambda_grid": [round(v, 6) for v in np.linspace(0.0, lam_max, 40)],
        },
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as handle:
        json.dump(doc, handle)
        path = handle.name
    try:
        return cli_main(["sweep", "--config", path, "--out", out])
    finally:
        Path(path).unlink(missing_ok=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/hstar", help="output directory")
    args = parser.parse_args()
    for preset in ("pendulum-hstar-sweep", "truck-hstar-sweep"):
        code = cli_main(["sweep", "--preset", preset, "--out", args.out])
        if code != 0:
            return code
    code = _dense_sweep("pendulum", delta=0.75, eps0_max=5.0, lam_max=15.0, out=args.out)
    if code != 0:
        return code
    return _dense_sweep("truck", delta=4.5, eps0_max=5.0, lam_max=0.6, out=args.out)


if __name__ == "__main__":
    sys.exit(main())
