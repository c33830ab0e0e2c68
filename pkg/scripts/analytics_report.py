#!/usr/bin/env python3
"""Emit the closed-form capacity curves (packets/blocks per wake cycle vs
bit error rate) plus the contention-success table, as CSV."""

import sys

from iamac_sim.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/analytics"
    sys.exit(main([
        "analytics", "--out", out, "--p0",
        "--ber-grid", "0,1e-6,1e-5,1e-4,3e-4,1e-3,3e-3,1e-2",
    ]))
