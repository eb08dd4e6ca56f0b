"""Block-matrix model descriptions and the covariance tensor sigma.

A model is either a self-adjoint block matrix ``X = sum_ij E_ij (x) A^(i,j)``
(:class:`ModelSpec`) or a rectangular block matrix ``H`` whose Gram matrix
``H H*`` is of interest (:class:`WishartSpec`).  Entries carry variance
``1/n`` with ``n`` the total matrix size, so ``sigma(i,j;k,l)`` is the only
free input of the limit theory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np


class SpecError(ValueError):
    """Raised when a model description is malformed or inconsistent."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovarianceTensor:
    """``sigma[i, j, k, l]`` (0-based) for a ``d x d`` block structure."""

    sigma: np.ndarray

    def __post_init__(self):
        s = np.array(self.sigma, dtype=complex)
        if s.ndim != 4 or len(set(s.shape)) != 1:
            raise SpecError(f"sigma must have shape (d, d, d, d), got {s.shape}")
        if not np.all(np.isfinite(s)):
            raise SpecError("sigma has non-finite entries")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @classmethod
    def zeros(cls, d: int) -> "CovarianceTensor":
        return cls(np.zeros((d, d, d, d), dtype=complex))


@dataclass(frozen=True)
class DimensionProfile:
    """Relative block sizes ``alpha`` (exact rationals summing to one).

    ``sizes`` holds the integer block sizes when they are known; in square
    mode every block has side ``N``.
    """

    alpha: tuple
    mode: str = "square"
    sizes: Optional[tuple] = None

    def __post_init__(self):
        alpha = tuple(Fraction(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if self.sizes is not None:
            object.__setattr__(self, "sizes", tuple(int(s) for s in self.sizes))
        if self.mode not in ("square", "rectangular"):
            raise SpecError(f"unknown dimension mode {self.mode!r}")
        if not alpha:
            raise SpecError("alpha must be non-empty")
        if any(not (0 < a <= 1) for a in alpha):
            raise SpecError(f"alpha entries must lie in (0, 1]: {alpha}")
        if sum(alpha) != 1:
            raise SpecError(f"alpha must sum to 1 exactly, got {sum(alpha)}")
        if self.mode == "square" and len(set(alpha)) != 1:
            raise SpecError("square mode requires alpha_i = 1/d")

    @property
    def d(self) -> int:
        return len(self.alpha)

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(a) for a in self.alpha])

    @classmethod
    def square(cls, d: int, N: Optional[int] = None) -> "DimensionProfile":
        sizes = None if N is None else (N,) * d
        return cls(alpha=(Fraction(1, d),) * d, mode="square", sizes=sizes)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "DimensionProfile":
        sizes = tuple(int(s) for s in sizes)
        if any(s <= 0 for s in sizes):
            raise SpecError(f"block sizes must be positive: {sizes}")
        n = sum(sizes)
        return cls(alpha=tuple(Fraction(s, n) for s in sizes),
                   mode="rectangular", sizes=sizes)

    def scaled_sizes(self, N: int) -> tuple:
        """Integer block sizes for a realization with base size ``N``.

        The smallest common denominator of ``alpha`` is mapped to ``N``.
        """
        if self.sizes is not None and self.mode == "rectangular":
            base = np.gcd.reduce(self.sizes)
            return tuple(N * s // base for s in self.sizes)
        if self.mode == "square":
            return (N,) * self.d
        den = np.lcm.reduce([a.denominator for a in self.alpha])
        return tuple(int(N * a * den) for a in self.alpha)


@dataclass(frozen=True)
class BlockRef:
    name: str
    adjoint: bool = False
    scale: float = 1.0


@dataclass(frozen=True)
class BlockGrid:
    """Grid of named Gaussian blocks; ``entries[i][j]`` is a BlockRef or None.

    ``names`` maps a label to its self-adjointness.  ``correlations`` lists
    ``(a, b, rho)``: entries of ``b`` are correlated with those of ``a`` with
    coefficient ``rho``.
    """

    entries: tuple
    names: dict
    correlations: tuple = ()

    @property
    def shape(self) -> tuple:
        return (len(self.entries), len(self.entries[0]) if self.entries else 0)

    @property
    def d(self) -> int:
        return len(self.entries)

    def correlation(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        for x, y, rho in self.correlations:
            if {x, y} == {a, b}:
                return rho
        return 0.0


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Self-adjoint block model: covariance, block sizes, optional grid."""

    cov: CovarianceTensor
    dims: DimensionProfile
    grid: Optional[BlockGrid] = None
    name: str = ""

    @property
    def d(self) -> int:
        return self.cov.d


@dataclass(frozen=True, eq=False)
class WishartSpec:
    """Rectangular ``r x s`` block matrix ``H``; the target is ``H H*``.

    ``normalize`` selects the reported law: ``"n"`` for ``H H*`` with entry
    variance ``1/(M+N)``, ``"rows"`` for variance ``1/M``.
    """

    grid: BlockGrid
    row_sizes: tuple
    col_sizes: tuple
    normalize: str = "n"
    name: str = ""

    def __post_init__(self):
        if sum(self.row_sizes) <= 0 or sum(self.col_sizes) <= 0:
            raise SpecError("H must have positive total size")
        if self.normalize not in ("n", "rows"):
            raise SpecError(f"unknown normalization {self.normalize!r}")

    @property
    def r(self) -> int:
        return len(self.row_sizes)

    @property
    def s(self) -> int:
        return len(self.col_sizes)

    @property
    def M(self) -> int:
        return sum(self.row_sizes)

    @property
    def N(self) -> int:
        return sum(self.col_sizes)

    def oriented(self) -> tuple:
        """Return ``(spec, flipped)`` with ``M <= N``, replacing H by H*."""
        if self.M <= self.N:
            return self, False
        entries = tuple(
            tuple(_adjoint_ref(self.grid.entries[i][j], self.grid.names)
                  for i in range(self.r))
            for j in range(self.s))
        grid = BlockGrid(entries, dict(self.grid.names), self.grid.correlations)
        flipped = WishartSpec(grid, self.col_sizes, self.row_sizes,
                              self.normalize, self.name)
        return flipped, True


Spec = Union[ModelSpec, WishartSpec]


def _adjoint_ref(ref, names):
    if ref is None:
        return None
    adj = False if names[ref.name] else not ref.adjoint
    return BlockRef(ref.name, adj, ref.scale)


# ---------------------------------------------------------------------------
# sigma derivation and validation
# ---------------------------------------------------------------------------


def _pair_weight(grid: BlockGrid, a: BlockRef, b: BlockRef) -> float:
    """Covariance weight between an entry ``a`` at (i,j) and the entry ``b``
    found at the transposed position (l,k) of the partner block."""
    if a is None or b is None:
        return 0.0
    rho = grid.correlation(a.name, b.name)
    if rho == 0.0:
        return 0.0
    sa = grid.names[a.name] and grid.names[b.name]
    if not sa and a.adjoint != b.adjoint:
        return 0.0
    return a.scale * b.scale * rho


def derive_sigma(grid: BlockGrid) -> CovarianceTensor:
    """Covariance tensor of a self-adjoint grid.

    ``sigma(i,j;k,l)`` pairs the entry at (i,j) with the entry at (l,k):
    both must reference the same (or a correlated) name with the same
    adjoint flag, the flag being irrelevant for self-adjoint names.
    """
    d = grid.d
    sigma = np.zeros((d, d, d, d), dtype=complex)
    E = grid.entries
    for i in range(d):
        for j in range(d):
            if E[i][j] is None:
                continue
            for k in range(d):
                for l in range(d):
                    w = _pair_weight(grid, E[i][j], E[l][k])
                    if w:
                        sigma[i, j, k, l] = w
    return CovarianceTensor(sigma)


def validate_sigma(cov: CovarianceTensor, dims: DimensionProfile,
                   atol: float = 1e-12) -> list:
    """List symmetry and block-fitting violations; empty when valid."""
    if cov.d != dims.d:
        raise SpecError(f"sigma has d={cov.d} but alpha has {dims.d} entries")
    s = cov.sigma
    out = []
    asym = np.abs(s - np.conj(s.transpose(2, 3, 0, 1))) > atol
    for i, j, k, l in zip(*np.nonzero(asym)):
        if (i, j) <= (k, l):
            out.append(("symmetry", (i + 1, j + 1, k + 1, l + 1)))
    a = dims.alpha
    for i, j, k, l in zip(*np.nonzero(np.abs(s) > atol)):
        if a[i] != a[l] or a[j] != a[k]:
            out.append(("fitting", (i + 1, j + 1, k + 1, l + 1)))
    return out


def random_sigma(d: int, rng: np.random.Generator, terms: int = 2,
                 density: float = 0.6) -> CovarianceTensor:
    """Covariance of a random Gaussian family ``X = sum c (x) Y + c^T (x) Y*
    + s (x) S`` with real coefficients; always a valid covariance."""
    sigma = np.zeros((d, d, d, d))
    for _ in range(terms):
        c = rng.standard_normal((d, d)) * (rng.random((d, d)) < density)
        sigma += np.einsum("ij,lk->ijkl", c, c) + np.einsum("ji,kl->ijkl", c, c)
        s = rng.standard_normal((d, d)) * (rng.random((d, d)) < density)
        s = (s + s.T) / 2
        sigma += np.einsum("ij,kl->ijkl", s, s)
    return CovarianceTensor(sigma.astype(complex))


def random_grid(d: int, rng: np.random.Generator, n_names: int = 3) -> BlockGrid:
    """A random self-adjoint grid over a few names, for property tests."""
    labels = [chr(ord("A") + t) for t in range(n_names)]
    names = {lab: bool(rng.random() < 0.5) for lab in labels}
    names["S"] = True
    entries = [[None] * d for _ in range(d)]
    for i in range(d):
        if rng.random() < 0.7:
            entries[i][i] = BlockRef("S", False, float(rng.uniform(0.5, 1.5)))
        for j in range(i + 1, d):
            if rng.random() < 0.3:
                continue
            lab = labels[rng.integers(n_names)]
            adj = bool(rng.random() < 0.5) and not names[lab]
            sc = float(rng.uniform(0.5, 1.5))
            entries[i][j] = BlockRef(lab, adj, sc)
            entries[j][i] = BlockRef(lab, False if names[lab] else not adj, sc)
    return BlockGrid(tuple(tuple(row) for row in entries), names)


# ---------------------------------------------------------------------------
# Grid validation
# ---------------------------------------------------------------------------


def _check_names(grid: BlockGrid, where: str):
    for i, row in enumerate(grid.entries):
        for j, ref in enumerate(row):
            if ref is not None and ref.name not in grid.names:
                raise SpecError(f"{where} entry ({i + 1},{j + 1}) references "
                                f"undeclared block {ref.name!r}")
    seen = set()
    for a, b, rho in grid.correlations:
        for lab in (a, b):
            if lab not in grid.names:
                raise SpecError(f"correlation references undeclared block {lab!r}")
            if lab in seen:
                raise SpecError(f"block {lab!r} appears in more than one correlation")
            seen.add(lab)
        if grid.names[a] != grid.names[b]:
            raise SpecError(f"correlated blocks {a!r}, {b!r} differ in self-adjointness")
        if not (-1 < rho < 1):
            raise SpecError(f"correlation {a!r}~{b!r} must lie in (-1, 1), got {rho}")


def check_selfadjoint_grid(grid: BlockGrid):
    d = grid.d
    if any(len(row) != d for row in grid.entries):
        raise SpecError(f"grid must be {d}x{d}")
    _check_names(grid, "grid")
    E = grid.entries
    for i in range(d):
        ref = E[i][i]
        if ref is not None and (not grid.names[ref.name] or ref.adjoint):
            raise SpecError(f"diagonal entry ({i + 1},{i + 1}) must reference a "
                            f"self-adjoint block without adjoint")
        for j in range(i + 1, d):
            a, b = E[i][j], E[j][i]
            if (a is None) != (b is None):
                raise SpecError(f"entry ({j + 1},{i + 1}) must be the adjoint of "
                                f"entry ({i + 1},{j + 1})")
            if a is None:
                continue
            sa = grid.names[a.name]
            ok = (a.name == b.name and a.scale == b.scale
                  and (sa or a.adjoint != b.adjoint))
            if not ok:
                raise SpecError(f"entry ({j + 1},{i + 1}) must be the adjoint of "
                                f"entry ({i + 1},{j + 1})")


def _block_shapes(grid: BlockGrid, rows, cols, where: str) -> dict:
    """Shape of each named block, checking consistency across uses."""
    shapes = {}
    for i, row in enumerate(grid.entries):
        for j, ref in enumerate(row):
            if ref is None:
                continue
            shp = (cols[j], rows[i]) if ref.adjoint else (rows[i], cols[j])
            prev = shapes.setdefault(ref.name, shp)
            if prev != shp and not (grid.names[ref.name] and prev == shp[::-1]):
                raise SpecError(f"{where} entry ({i + 1},{j + 1}): block {ref.name!r} "
                                f"has size {shp}, previously {prev}")
    for lab, shp in shapes.items():
        if grid.names[lab] and shp[0] != shp[1]:
            raise SpecError(f"self-adjoint block {lab!r} must be square, got {shp}")
    for a, b, _ in grid.correlations:
        if a in shapes and b in shapes and shapes[a] != shapes[b]:
            raise SpecError(f"correlated blocks {a!r}, {b!r} differ in size")
    return shapes


def model_from_grid(grid: BlockGrid, dims: DimensionProfile, name: str = "") -> ModelSpec:
    check_selfadjoint_grid(grid)
    if dims.d != grid.d:
        raise SpecError(f"grid has d={grid.d} but {dims.d} block sizes given")
    if dims.sizes is not None:
        _block_shapes(grid, dims.sizes, dims.sizes, "grid")
    cov = derive_sigma(grid)
    bad = validate_sigma(cov, dims)
    if bad:
        kind, idx = bad[0]
        raise SpecError(f"{kind} violation at sigma{idx}")
    return ModelSpec(cov, dims, grid, name)


def build_wishart_embedding(w: WishartSpec) -> ModelSpec:
    """Self-adjoint ``(r+s)``-block model of ``[[0, H], [H*, 0]]``."""
    r, s = w.r, w.s
    d = r + s
    entries = [[None] * d for _ in range(d)]
    for i in range(r):
        for j in range(s):
            ref = w.grid.entries[i][j]
            if ref is None:
                continue
            entries[i][r + j] = ref
            entries[r + j][i] = _adjoint_ref(ref, w.grid.names)
    grid = BlockGrid(tuple(tuple(row) for row in entries), dict(w.grid.names),
                     w.grid.correlations)
    dims = DimensionProfile.from_sizes(tuple(w.row_sizes) + tuple(w.col_sizes))
    return model_from_grid(grid, dims, name=w.name)


def check_wishart(w: WishartSpec):
    g = w.grid
    if len(g.entries) != w.r or any(len(row) != w.s for row in g.entries):
        raise SpecError(f"H grid must be {w.r}x{w.s}")
    _check_names(g, "H grid")
    _block_shapes(g, w.row_sizes, w.col_sizes, "H grid")
    if any(x <= 0 for x in tuple(w.row_sizes) + tuple(w.col_sizes)):
        raise SpecError("block sizes must be positive")


# ---------------------------------------------------------------------------
# JSON ingestion
# ---------------------------------------------------------------------------


def _parse_ref(obj, names, where):
    if obj is None:
        return None
    if isinstance(obj, str):
        adj = obj.endswith("*")
        obj = {"name": obj.rstrip("*"), "adjoint": adj}
    if not isinstance(obj, dict) or "name" not in obj:
        raise SpecError(f"{where}: expected null, a label or an object with 'name'")
    scale = obj.get("scale", 1.0)
    if isinstance(scale, (list, dict)) or isinstance(scale, complex):
        raise SpecError(f"{where}: scale must be a real number")
    try:
        scale = float(scale)
    except (TypeError, ValueError):
        raise SpecError(f"{where}: scale must be a real number") from None
    ref = BlockRef(str(obj["name"]), bool(obj.get("adjoint", False)), scale)
    if ref.name not in names:
        raise SpecError(f"{where}: undeclared block {ref.name!r}")
    return ref


def _parse_grid(doc, rows, cols, where="grid") -> BlockGrid:
    names = doc.get("block_names")
    if not isinstance(names, dict) or not names:
        raise SpecError("'block_names' must be a non-empty object")
    names = {str(k): bool(v.get("selfadjoint", False)) if isinstance(v, dict)
             else bool(v) for k, v in names.items()}
    raw = doc.get("grid")
    if not isinstance(raw, list) or len(raw) != rows:
        raise SpecError(f"'{where}' must be a list of {rows} rows")
    entries = []
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != cols:
            raise SpecError(f"'{where}' row {i + 1} must have {cols} entries")
        entries.append(tuple(_parse_ref(x, names, f"{where} entry ({i + 1},{j + 1})")
                             for j, x in enumerate(row)))
    corr = []
    for c in doc.get("correlations", []):
        try:
            a, b = c["names"]
            corr.append((str(a), str(b), float(c["rho"])))
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"malformed correlation {c!r}") from None
    return BlockGrid(tuple(entries), names, tuple(corr))


def _positive_int(doc, key):
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise SpecError(f"'{key}' must be a positive integer")
    return v


def _parse_dims(doc, d) -> DimensionProfile:
    kind = doc["kind"]
    if kind == "square":
        N = doc.get("N")
        if N is not None and (not isinstance(N, int) or N <= 0):
            raise SpecError("'N' must be a positive integer")
        return DimensionProfile.square(d, N)
    if "sizes" in doc:
        sizes = doc["sizes"]
        if (not isinstance(sizes, list) or len(sizes) != d
                or not all(isinstance(x, int) and x > 0 for x in sizes)):
            raise SpecError(f"'sizes' must list {d} positive integers")
        return DimensionProfile.from_sizes(sizes)
    if "alpha" in doc:
        al = doc["alpha"]
        if not isinstance(al, list) or len(al) != d:
            raise SpecError(f"'alpha' must list {d} rationals")
        try:
            alpha = tuple(Fraction(str(a)) for a in al)
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"'alpha' entries must be rationals like '1/3': {al}") from None
        return DimensionProfile(alpha, mode="rectangular")
    raise SpecError("rectangular spec needs 'sizes' or 'alpha'")


def _parse_sigma(doc, d) -> CovarianceTensor:
    sigma = np.zeros((d, d, d, d), dtype=complex)
    for e in doc["sigma"]:
        try:
            idx = tuple(int(e[key]) - 1 for key in "ijkl")
            val = complex(float(e.get("re", 0.0)), float(e.get("im", 0.0)))
        except (KeyError, TypeError, ValueError):
            raise SpecError(f"malformed sigma entry {e!r}") from None
        if any(not 0 <= x < d for x in idx):
            raise SpecError(f"sigma entry {e!r} has index out of range 1..{d}")
        sigma[idx] = val
    return CovarianceTensor(sigma)


def spec_from_dict(doc: dict) -> Spec:
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    kind = doc.get("kind")
    if kind not in ("square", "rectangular", "wishart"):
        raise SpecError("'kind' must be one of square, rectangular, wishart")
    name = str(doc.get("name", ""))
    if kind == "wishart":
        r, s = _positive_int(doc, "r"), _positive_int(doc, "s")
        if "sizes" in doc:
            sizes = doc["sizes"]
            if (not isinstance(sizes, list) or len(sizes) != r + s
                    or not all(isinstance(x, int) and x > 0 for x in sizes)):
                raise SpecError(f"'sizes' must list {r + s} positive integers")
            rows, cols = tuple(sizes[:r]), tuple(sizes[r:])
        else:
            rows, cols = (1,) * r, (1,) * s
        grid = _parse_grid(doc, r, s)
        w = WishartSpec(grid, rows, cols, doc.get("normalize", "n"), name)
        check_wishart(w)
        build_wishart_embedding(w)
        return w
    d = _positive_int(doc, "d")
    dims = _parse_dims(doc, d)
    if "sigma" in doc:
        cov = _parse_sigma(doc, d)
        bad = validate_sigma(cov, dims)
        if bad:
            kind_, idx = bad[0]
            raise SpecError(f"{kind_} violation at sigma{idx}")
        return ModelSpec(cov, dims, None, name)
    if "grid" not in doc:
        raise SpecError("spec needs either 'grid' or 'sigma'")
    grid = _parse_grid(doc, d, d)
    return model_from_grid(grid, dims, name)


def parse_spec(text: str) -> Spec:
    """Parse and validate a JSON model description."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from None
    return spec_from_dict(doc)


def load_spec(path) -> Spec:
    with open(path) as fh:
        return parse_spec(fh.read())
