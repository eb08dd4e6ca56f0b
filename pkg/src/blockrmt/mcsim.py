"""Monte Carlo realizations of Gaussian block matrices.

Every named block is drawn from its own counter-based stream keyed by
``(seed, rep, name)``, so realizations do not depend on execution order.
Assembly is linear in a vector of real standard normals, which lets the
entry covariance be audited exactly by feeding unit vectors.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .model import ModelSpec, SpecError, WishartSpec, _block_shapes

MAX_MOMENT = 6


class Unsupported(SpecError):
    """The model has no grid of named blocks to sample from."""


@dataclass(frozen=True)
class SimConfig:
    N: int = 100
    reps: int = 100
    seed: int = 0
    bins: int = 50
    threads: int = 1

    def __post_init__(self):
        if self.N < 1 or self.reps < 1 or self.bins < 1:
            raise ValueError("N, reps and bins must be positive")


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    masses: np.ndarray
    n_samples: int
    moments: tuple = ()

    @property
    def centers(self) -> np.ndarray:
        e = self.bin_edges
        return 0.5 * (e[1:] + e[:-1])


# ---------------------------------------------------------------------------
# layout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Layout:
    grid: object
    row_sizes: tuple
    col_sizes: tuple
    shapes: dict        # name -> (rows, cols)
    order: tuple        # sampling order of names
    n: int              # variance denominator
    wishart: bool
    gram_scale: float


def _base_sizes(spec: ModelSpec, N: int) -> tuple:
    if spec.dims.mode == "square":
        return (N,) * spec.d
    return spec.dims.scaled_sizes(N)


def layout(spec: Union[ModelSpec, WishartSpec], N: int) -> _Layout:
    if isinstance(spec, WishartSpec):
        g = spec.grid
        rows = tuple(N * s for s in spec.row_sizes)
        cols = tuple(N * s for s in spec.col_sizes)
        n = sum(rows) + sum(cols)
        scale = n / sum(rows) if spec.normalize == "rows" else 1.0
        wish = True
    else:
        if spec.grid is None:
            raise Unsupported("explicit-sigma specs cannot be sampled; give a block grid")
        g = spec.grid
        rows = cols = _base_sizes(spec, N)
        n = sum(rows)
        scale, wish = 1.0, False
    shapes = _block_shapes(g, rows, cols, "grid")
    # a correlated partner is drawn after the name it depends on
    order = sorted(shapes, key=lambda lab: (any(b == lab for _, b, _ in g.correlations), lab))
    return _Layout(g, rows, cols, shapes, tuple(order), n, wish, scale)


def _n_normals(lab: str, shp: tuple, selfadjoint: bool) -> int:
    p, q = shp
    return p * p if selfadjoint else 2 * p * q


def _raw_block(z: np.ndarray, shp: tuple, selfadjoint: bool, n: int) -> np.ndarray:
    """Linear map from real normals to a block with ``E|a|^2 = 1/n``."""
    p, q = shp
    if selfadjoint:
        A = np.zeros((p, p), dtype=complex)
        iu = np.triu_indices(p, 1)
        k = len(iu[0])
        A[iu] = (z[:k] + 1j * z[k:2 * k]) / np.sqrt(2.0)
        A = A + A.conj().T
        A[np.diag_indices(p)] = z[2 * k:2 * k + p]
        return A / np.sqrt(n)
    pq = p * q
    return ((z[:pq] + 1j * z[pq:]) / np.sqrt(2.0 * n)).reshape(p, q)


def _named_blocks(lay: _Layout, normals: dict) -> dict:
    g = lay.grid
    out = {}
    for lab in lay.order:
        shp = lay.shapes[lab]
        out[lab] = _raw_block(normals[lab], shp, g.names[lab], lay.n)
    for a, b, rho in g.correlations:
        if a in out and b in out:
            out[b] = rho * out[a] + np.sqrt(1.0 - rho * rho) * out[b]
    return out


def assemble(lay: _Layout, normals: dict) -> np.ndarray:
    """Block matrix (``X`` or ``H``) from real normals keyed by block name."""
    blocks = _named_blocks(lay, normals)
    ro = np.concatenate([[0], np.cumsum(lay.row_sizes)])
    co = np.concatenate([[0], np.cumsum(lay.col_sizes)])
    out = np.zeros((ro[-1], co[-1]), dtype=complex)
    for i, row in enumerate(lay.grid.entries):
        for j, ref in enumerate(row):
            if ref is None:
                continue
            B = blocks[ref.name]
            if ref.adjoint:
                B = B.conj().T
            out[ro[i]:ro[i + 1], co[j]:co[j + 1]] = ref.scale * B
    return out


def _stream(seed: int, rep: int, idx: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, rep, idx])))


def draw_normals(lay: _Layout, seed: int, rep: int) -> dict:
    names = sorted(lay.grid.names)
    out = {}
    for lab in lay.order:
        k = _n_normals(lab, lay.shapes[lab], lay.grid.names[lab])
        out[lab] = _stream(seed, rep, names.index(lab)).standard_normal(k)
    return out


def sample_matrix(spec, cfg: SimConfig, rep_index: int) -> np.ndarray:
    """One realization: ``X`` for a self-adjoint spec, ``H`` for a Gram spec."""
    lay = layout(spec, cfg.N)
    return assemble(lay, draw_normals(lay, cfg.seed, rep_index))


def realization_eigenvalues(spec, cfg: SimConfig, rep_index: int) -> np.ndarray:
    lay = layout(spec, cfg.N)
    A = assemble(lay, draw_normals(lay, cfg.seed, rep_index))
    if lay.wishart:
        return np.linalg.eigvalsh(lay.gram_scale * (A @ A.conj().T))
    return np.linalg.eigvalsh(A)


def entry_covariance(spec, N: int) -> tuple:
    """Exact ``E[x_ab x_cd]`` of the assembled matrix (no sampling).

    Returns ``(C, layout)`` with ``C[a, b, c, d]``; feasible for small ``N``.
    """
    lay = layout(spec, N)
    zeros = {lab: np.zeros(_n_normals(lab, lay.shapes[lab], lay.grid.names[lab]))
             for lab in lay.order}
    cols = []
    for lab in lay.order:
        for k in range(len(zeros[lab])):
            z = dict(zeros)
            e = np.zeros_like(zeros[lab])
            e[k] = 1.0
            z[lab] = e
            cols.append(assemble(lay, z))
    J = np.array(cols)  # (k, rows, cols)
    return np.einsum("kab,kcd->abcd", J, J), lay


def _pool(spec, cfg: SimConfig, fn) -> list:
    if cfg.threads <= 1:
        return [fn(spec, cfg, r) for r in range(cfg.reps)]
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        return list(ex.map(lambda r: fn(spec, cfg, r), range(cfg.reps)))


def trace_moments(spec, cfg: SimConfig, orders=(2, 4, 6)) -> np.ndarray:
    """Per-realization normalized traces ``tr X^m``, shape ``(reps, len(orders))``."""
    def one(s, c, r):
        ev = realization_eigenvalues(s, c, r)
        return [np.mean(ev ** m) for m in orders]
    return np.array(_pool(spec, cfg, one))


def empirical_spectrum(spec, cfg: SimConfig, edges: Optional[np.ndarray] = None) -> Histogram:
    """Pooled eigenvalue histogram over ``cfg.reps`` realizations.

    Without explicit ``edges`` the bins span the theoretical support bracket,
    widened if needed to hold every sample.
    """
    ev = np.concatenate(_pool(spec, cfg, realization_eigenvalues))
    if edges is None:
        from .density import support_bracket
        lo, hi = support_bracket(spec)
        lo, hi = min(lo, ev.min()), max(hi, ev.max())
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, cfg.bins + 1)
    counts, _ = np.histogram(np.clip(ev, edges[0], edges[-1]), bins=edges)
    moments = tuple(float(np.mean(ev ** k)) for k in range(MAX_MOMENT + 1))
    return Histogram(np.asarray(edges, float), counts / ev.size, int(ev.size), moments)


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def _curve_bin_masses(curve, edges) -> np.ndarray:
    xs, h = curve.xs, curve.values
    F = np.concatenate([[0.0], np.cumsum(0.5 * (h[1:] + h[:-1]) * np.diff(xs))])
    Fe = np.interp(edges, xs, F)
    m = np.diff(Fe)
    if curve.atom0:
        k = np.searchsorted(edges, 0.0, side="right") - 1
        m[min(max(k, 0), len(m) - 1)] += curve.atom0
    return m


def histogram_from_curve(curve, edges, n_samples: int = 0) -> Histogram:
    m = _curve_bin_masses(curve, np.asarray(edges, float))
    m = m / m.sum()
    c = 0.5 * (edges[1:] + edges[:-1])
    return Histogram(np.asarray(edges, float), m, n_samples,
                     tuple(float(np.sum(m * c ** k)) for k in range(MAX_MOMENT + 1)))


def compare(curve, hist: Histogram) -> dict:
    """Binned L1 and sup distances plus moment gaps up to order 6.

    The curve is integrated over each bin and renormalized to unit total so
    the comparison is between probability vectors.
    """
    from .density import curve_moments
    m = _curve_bin_masses(curve, hist.bin_edges)
    total = m.sum()
    p = m / total
    diff = np.abs(p - hist.masses)
    cm = curve_moments(curve, MAX_MOMENT).values
    hm = hist.moments or tuple(float(np.sum(hist.masses * hist.centers ** k))
                               for k in range(MAX_MOMENT + 1))
    return {
        "l1": float(diff.sum()),
        "sup_bin": float(diff.max()),
        "moment_gaps": [float(abs(cm[k] - hm[k])) for k in range(1, MAX_MOMENT + 1)],
        "curve_mass_in_bins": float(total),
        "bins": int(len(hist.masses)),
        "n_samples": int(hist.n_samples),
    }


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------


def write_histogram(hist: Histogram, path, meta: Optional[dict] = None) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["bin_left", "bin_right", "mass"])
        for a, b, m in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.masses):
            out.writerow([f"{a:.17g}", f"{b:.17g}", f"{m:.17g}"])
    if meta is not None:
        meta = dict(meta, n_samples=hist.n_samples, moments=list(hist.moments))
        with open(_meta_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _meta_path(path) -> Path:
    return Path(path).with_suffix(".json")


def read_histogram(path) -> Histogram:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    edges = np.concatenate([data[:, 0], data[-1:, 1]])
    moments, n = (), 0
    try:
        with open(_meta_path(path)) as fh:
            meta = json.load(fh)
        moments, n = tuple(meta.get("moments", ())), int(meta.get("n_samples", 0))
    except FileNotFoundError:
        pass
    return Histogram(edges, data[:, 2], n, moments)
