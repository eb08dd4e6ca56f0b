"""Moments of every preset three ways: pairing enumeration, recurrence, contour."""
import argparse

import numpy as np

from blockrmt.oracle import contour_moments, spec_moments
from blockrmt.presets import STANDARD_PRESETS, get_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-order", type=int, default=8)
    ap.add_argument("--presets", nargs="*", default=list(STANDARD_PRESETS))
    args = ap.parse_args()

    k = args.max_order
    print(f"{'preset':18s} {'enum-rec':>10s} {'contour-rec':>12s}  m_0..m_{k}")
    for name in args.presets:
        spec = get_preset(name).spec
        rec = spec_moments(spec, k)
        enu = spec_moments(spec, k, "enumerate")
        con = contour_moments(spec, k)
        scale = np.maximum(np.abs(rec), 1.0)
        e1 = np.max(np.abs(enu - rec) / scale)
        e2 = np.max(np.abs(con - rec) / scale)
        print(f"{name:18s} {e1:10.1e} {e2:12.1e}  " + " ".join(f"{v:.6g}" for v in rec))


if __name__ == "__main__":
    main()
