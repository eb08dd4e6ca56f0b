"""Solve densities for many random covariance tensors and summarize failures and mass."""
import argparse
import time

import numpy as np

from blockrmt.density import density_curve
from blockrmt.model import DimensionProfile, ModelSpec, random_sigma


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--points", type=int, default=300)
    ap.add_argument("--max-d", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    fails, gaps = 0, []
    t0 = time.perf_counter()
    for _ in range(args.count):
        d = int(rng.integers(1, args.max_d + 1))
        cov = random_sigma(d, rng)
        if not np.any(cov.sigma):
            continue
        res = density_curve(ModelSpec(cov, DimensionProfile.square(d)), args.points, 1e-6)
        fails += len(res.failures)
        gaps.append(abs(res.curve.mass - 1))
    print(f"{len(gaps)} models, {fails} failed grid points, "
          f"max |mass - 1| = {max(gaps):.2e}, {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
