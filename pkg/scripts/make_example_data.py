#!/usr/bin/env python3
"""Generate a synthetic scalar ARMA(2,1) record as a CSV file.

The process is y(t) = 1.2 y(t-1) - 0.4 y(t-2) + e(t) + 0.3 e(t-1) with unit
white noise, burned in for 200 steps.
"""
import argparse
from pathlib import Path

import numpy as np


def arma_record(N: int, seed: int, burn: int = 200) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(N + burn)
    y = np.zeros(N + burn)
    for t in range(2, N + burn):
        y[t] = 1.2 * y[t - 1] - 0.4 * y[t - 2] + e[t] + 0.3 * e[t - 1]
    return y[burn:]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", type=Path)
    parser.add_argument("-N", type=int, default=4096, help="record length")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    y = arma_record(args.N, args.seed)
    args.output.write_text("y\n" + "\n".join(f"{v:.12g}" for v in y) + "\n")
    print(f"wrote {args.N} samples to {args.output}")


if __name__ == "__main__":
    main()
