"""Stieltjes inversion, support brackets, and quadrature of density curves."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .eta import SAFETY, eta_norm
from .model import ModelSpec, WishartSpec
from .solver import solve_grid, trace_G
from . import wishart as _w

NEG_TOL = 1e-9
DEFAULT_POINTS = 1200
RICHARDSON = (4.0, 2.0, 1.0)   # multiples of epsilon


@dataclass(frozen=True)
class DensityCurve:
    xs: np.ndarray
    values: np.ndarray
    epsilon: float
    atom0: float = 0.0

    @property
    def mass(self) -> float:
        return float(np.trapezoid(self.values, self.xs)) + self.atom0


@dataclass(frozen=True)
class SpectralMoments:
    orders: tuple
    values: tuple

    def __getitem__(self, k: int) -> float:
        return self.values[self.orders.index(k)]


@dataclass
class CurveResult:
    """Density curve plus solver bookkeeping for one spec."""

    curve: DensityCurve
    bracket: tuple
    failures: list = field(default_factory=list)


def stieltjes_invert(xs, G, epsilon: float, atom0: float = 0.0) -> DensityCurve:
    """``-Im G(x + i eps) / pi`` on a sorted grid.

    Raises ``ValueError`` if a value is below ``-1e-9``; smaller negative
    noise is clipped to zero.
    """
    xs = np.asarray(xs, float)
    h = -np.asarray(G).imag / np.pi
    return _finish(xs, h, epsilon, atom0)


def _finish(xs, h, epsilon, atom0):
    if np.any(h < -NEG_TOL):
        k = int(np.argmin(h))
        raise ValueError(f"negative density {h[k]:.3e} at x={xs[k]:.6g}")
    return DensityCurve(xs, np.clip(h, 0.0, None), float(epsilon), float(atom0))


def richardson(h4, h2, h1):
    """Quadratic extrapolation to zero of samples at ``4e, 2e, e``."""
    return (8.0 * np.asarray(h1) - 6.0 * np.asarray(h2) + np.asarray(h4)) / 3.0


def _raw_norm(spec: ModelSpec) -> float:
    return eta_norm(spec.cov, spec.dims, safety=1.0)


def support_bracket(spec: Union[ModelSpec, WishartSpec], safety: float = SAFETY) -> tuple:
    """Interval guaranteed to contain the limiting spectrum.

    For a self-adjoint model this is ``[-R, R]`` with ``R = 2 sqrt(||eta||)``
    inflated by ``safety``; a Gram matrix gets ``[0, R^2]`` in its
    reported scale.
    """
    if isinstance(spec, WishartSpec):
        _, emb, _ = _w.embedded(spec)
        R = 2.0 * np.sqrt(_raw_norm(emb)) * safety
        return 0.0, R * R * _w.gram_scale(spec)
    R = 2.0 * np.sqrt(_raw_norm(spec)) * safety
    return -R, R


def default_grid(spec, points: int = DEFAULT_POINTS, xmin=None, xmax=None) -> np.ndarray:
    lo, hi = support_bracket(spec)
    if isinstance(spec, WishartSpec):
        lo = hi * 1e-4
    lo = lo if xmin is None else xmin
    hi = hi if xmax is None else xmax
    if not hi > lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, points)


def transform_grid(spec, xs, epsilon: float, threads: int = 1) -> tuple:
    """Cauchy transform along ``xs + i eps``: ``(xs_ok, G, atom0, failures)``.

    For a Gram matrix ``G`` is the continuous part; the mass of
    deterministic zero eigenvalues is returned separately as ``atom0``.
    """
    if isinstance(spec, WishartSpec):
        ok, vals, _, fails = _w.gram_grid(spec, xs, epsilon)
        return ok, vals, _w.gram_atom(spec), fails
    res = solve_grid(spec, xs, epsilon, threads=threads)
    vals = np.array([trace_G(p, spec.dims) for p in res.points])
    return res.zs.real, vals, 0.0, res.failures


def density_curve(spec, points: int = DEFAULT_POINTS, epsilon: float = 1e-6,
                  xmin: Optional[float] = None, xmax: Optional[float] = None,
                  extrapolate: bool = False, threads: int = 1) -> CurveResult:
    """Solve on a uniform grid and invert; optionally Richardson in epsilon."""
    xs = default_grid(spec, points, xmin, xmax)
    if not extrapolate:
        ok, G, atom, fails = transform_grid(spec, xs, epsilon, threads)
        return CurveResult(stieltjes_invert(ok, G, epsilon, atom), support_bracket(spec), fails)
    runs = [transform_grid(spec, xs, f * epsilon, threads) for f in RICHARDSON]
    common = set(runs[0][0])
    for r in runs[1:]:
        common &= set(r[0])
    keep = np.array(sorted(common))
    hs = [-(r[1][np.isin(r[0], keep)]).imag / np.pi for r in runs]
    fails = [f for r in runs for f in r[3]]
    for h in hs:
        _finish(keep, h, epsilon, 0.0)
    # the extrapolant itself may dip slightly below zero at the edges
    h = np.clip(richardson(*hs), 0.0, None)
    curve = DensityCurve(keep, h, float(epsilon), float(runs[0][2]))
    return CurveResult(curve, support_bracket(spec), fails)


def curve_moments(curve: DensityCurve, max_k: int) -> SpectralMoments:
    """Trapezoid moments ``int x^k h(x) dx`` plus the atom at zero."""
    orders = tuple(range(max_k + 1))
    vals = []
    for k in orders:
        m = float(np.trapezoid(curve.xs ** k * curve.values, curve.xs))
        if k == 0:
            m += curve.atom0
        vals.append(m)
    return SpectralMoments(orders, tuple(vals))


def curve_cauchy(curve: DensityCurve, z: complex) -> complex:
    """Cauchy transform of the curve (with its atom) by trapezoid quadrature."""
    g = np.trapezoid(curve.values / (z - curve.xs), curve.xs)
    return complex(g + curve.atom0 / z)


def mass_outside(curve: DensityCurve, lo: float, hi: float) -> float:
    out = (curve.xs < lo) | (curve.xs > hi)
    v = np.where(out, curve.values, 0.0)
    return float(np.trapezoid(v, curve.xs))


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def write_csv(curve: DensityCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["x", "density"])
        for x, h in zip(curve.xs, curve.values):
            out.writerow([f"{x:.17g}", f"{h:.17g}"])


def read_csv(path, epsilon: float = float("nan"), atom0: float = 0.0) -> DensityCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return DensityCurve(data[:, 0], data[:, 1], epsilon, atom0)


def curve_report(result: CurveResult, max_k: int = 6) -> dict:
    c = result.curve
    mom = curve_moments(c, max_k)
    return {
        "epsilon": c.epsilon,
        "atom0": c.atom0,
        "mass": c.mass,
        "moments": {str(k): v for k, v in zip(mom.orders, mom.values)},
        "bracket": list(result.bracket),
        "points": int(len(c.xs)),
        "failures": len(result.failures),
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
