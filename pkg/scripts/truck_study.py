#!/usr/bin/env python3
"""Truck case study: braking scenarios, the disturbed rerun, and the cruise check.

The disturbed preset synthesizes the actuation-lag residual from the filtered
braking command and replays it against all three controllers, mirroring how a
recorded input disturbance would be re-injected in simulation.  Also runs the
barrier certification grid for the headway barrier.
"""

import argparse
import sys

from safefilter.cli import main as cli_main

PRESETS = ("truck-braking", "truck-braking-disturbed", "truck-cruise")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="out/truck", help="output directory")
    args = parser.parse_args()
    code = cli_main(["certify", "--preset", "paper-table-2", "--out", args.out])
    if code != 0:
        return code
    for preset in PRESETS:
        code = cli_main(["simulate", "--preset", preset, "--out", args.out])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
