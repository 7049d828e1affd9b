#!/usr/bin/env python3
"""Pendulum case study: nominal vs filtered vs robust-filtered trajectories.

Writes one trajectory CSV per run plus a summary table.  The four presets
cover the undisturbed comparison, the plain filter under the torque pulse,
and the robust filter with the constant and exponential robustness gains.
"""

import argparse
import sys

from safefilter.cli import main as cli_main

PRESETS = (
    "pendulum-undisturbed",
    "pendulum-pulse-cbf",
    "pendulum-pulse-issf-const",
    "pendulum-pulse-issf-exp",
)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/pendulum", help="output directory")
    args = parser.parse_args()
    for preset in PRESETS:
        code = cli_main(["simulate", "--preset", preset, "--out", args.out])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
