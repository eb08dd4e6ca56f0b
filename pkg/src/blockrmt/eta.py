"""Covariance mappings on ``d x d`` matrices and the pattern of their solutions.

With weights ``w_k`` the mapping is ``[eta(D)]_ij = sum_kl sigma(i,k;l,j) w_k d_kl``;
``w_k = 1/d`` gives the square-block mapping and ``w_k = alpha_k`` the
rectangular one.  Both are realised through the same ``d^2 x d^2`` operator
matrix so that equal weights give bit-identical results.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import CovarianceTensor, DimensionProfile, ModelSpec

SAFETY = 1.01


def eta_operator(cov: CovarianceTensor, weights) -> np.ndarray:
    """Row-major ``vec(eta(D)) = L @ vec(D)``."""
    d = cov.d
    w = np.asarray(weights, dtype=float)
    L = np.einsum("iklj,k->ijkl", cov.sigma, w)
    return np.ascontiguousarray(L.reshape(d * d, d * d))


def _as_matrix(D, d):
    D = np.asarray(D, dtype=complex)
    if D.shape != (d, d):
        raise ValueError(f"expected a {d}x{d} matrix, got shape {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ValueError("matrix has non-finite entries")
    return D


def eta_apply(cov: CovarianceTensor, D) -> np.ndarray:
    d = cov.d
    D = _as_matrix(D, d)
    return (eta_operator(cov, np.full(d, 1.0 / d)) @ D.ravel()).reshape(d, d)


def square_pattern(alpha) -> np.ndarray:
    """Boolean mask of entries allowed in M_alpha (blocks of equal size)."""
    a = list(alpha)
    return np.array([[x == y for y in a] for x in a])


def eta_alpha_apply(cov: CovarianceTensor, dims: DimensionProfile, D) -> np.ndarray:
    d = cov.d
    D = _as_matrix(D, d)
    if dims.d != d:
        raise ValueError(f"alpha has {dims.d} entries, sigma has d={d}")
    outside = ~square_pattern(dims.alpha) & (D != 0)
    if outside.any():
        i, j = np.argwhere(outside)[0]
        raise ValueError(f"D has a nonzero entry at ({i + 1},{j + 1}) outside M_alpha")
    return (eta_operator(cov, dims.weights) @ D.ravel()).reshape(d, d)


def _power_norm(L: np.ndarray, iters: int = 500, tol: float = 1e-13) -> float:
    """Largest singular value of ``L`` by power iteration on ``L^H L``."""
    n = L.shape[0]
    if not np.any(L):
        return 0.0
    v = np.random.default_rng(0).standard_normal(n) + 0j
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        u = L.conj().T @ (L @ v)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        new = np.sqrt(nu)
        if abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return float(est)


def eta_norm(cov: CovarianceTensor, dims: DimensionProfile | None = None,
             safety: float = SAFETY) -> float:
    """Upper bound on the norm of eta as a map on (M_d, spectral norm).

    For a covariance mapping (completely positive) the norm equals
    ``||eta(I)||``; the power-iteration estimate of the induced operator
    norm is folded in with a max so the bound stays conservative.
    """
    d = cov.d
    w = np.full(d, 1.0 / d) if dims is None else dims.weights
    L = eta_operator(cov, w)
    at_identity = (L @ np.eye(d).ravel()).reshape(d, d)
    raw = max(np.linalg.norm(at_identity, 2), _power_norm(L))
    return safety * float(raw)


# ---------------------------------------------------------------------------
# Pattern of the matrix-valued Cauchy transform
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PatternMask:
    """Entries forced to zero and classes of entries that coincide.

    Index pairs are 0-based.  ``zero_set`` and the classes partition
    ``{0..d-1}^2``.
    """

    d: int
    zero_set: frozenset
    classes: tuple

    def __post_init__(self):
        seen = set(self.zero_set)
        for cls in self.classes:
            for ij in cls:
                if ij in seen:
                    raise ValueError(f"index {ij} appears twice in the pattern")
                seen.add(ij)
        if len(seen) != self.d * self.d:
            raise ValueError("pattern does not cover all entries")

    @classmethod
    def trivial(cls, d: int) -> "PatternMask":
        return cls(d, frozenset(), tuple(((i, j),) for i in range(d) for j in range(d)))

    @property
    def basis(self) -> np.ndarray:
        """``d^2 x c`` 0/1 matrix mapping class values to the flattened matrix."""
        B = np.zeros((self.d * self.d, len(self.classes)))
        for c, cls in enumerate(self.classes):
            for i, j in cls:
                B[i * self.d + j, c] = 1.0
        return B

    def reduce(self, G) -> np.ndarray:
        """Class values of ``G`` (mean over each class)."""
        G = np.asarray(G)
        return np.array([np.mean([G[i, j] for i, j in cls]) for cls in self.classes])

    def expand(self, u) -> np.ndarray:
        return (self.basis @ np.asarray(u)).reshape(self.d, self.d)

    def violation(self, G) -> float:
        """Largest deviation of ``G`` from the pattern, relative to ``max|G|``."""
        G = np.asarray(G)
        scale = max(np.max(np.abs(G)), 1e-300)
        worst = max((abs(G[i, j]) for i, j in self.zero_set), default=0.0)
        for cls in self.classes:
            vals = np.array([G[i, j] for i, j in cls])
            worst = max(worst, np.max(np.abs(vals - vals[0])))
        return float(worst / scale)

    def one_based(self) -> dict:
        return {"zeros": sorted((i + 1, j + 1) for i, j in self.zero_set),
                "classes": [sorted((i + 1, j + 1) for i, j in c) for c in self.classes]}


def structural_support(L: np.ndarray, d: int) -> np.ndarray:
    """Entries reachable by ``D -> I + eta(D) D`` from the identity.

    Runs the iteration on absolute values so no accidental cancellation
    can create a spurious zero.
    """
    A = np.abs(L) > 0
    S = np.eye(d, dtype=bool)
    while True:
        E = (A.astype(float) @ S.ravel().astype(float)).reshape(d, d) > 0
        new = np.eye(d, dtype=bool) | ((E.astype(float) @ S.astype(float)) > 0)
        if np.array_equal(new, S):
            return S
        S = new


ZERO_TOL = 1e-12
EQUAL_TOL = 1e-9


@lru_cache(maxsize=128)
def detect_pattern(spec: ModelSpec, probes: int = 3, seed: int = 12345) -> PatternMask:
    """Zero set and equality classes of the solution of ``zG = I + eta(G) G``.

    Zeros come from the structural support of the fixed-point iteration;
    equalities are read off full-unknown solutions at ``probes`` random
    points of the upper half-plane near the spectrum.
    """
    from .solver import _solve_with_pattern  # circular at import time

    d = spec.d
    L = eta_operator(spec.cov, spec.dims.weights)
    support = structural_support(L, d)
    zeros = frozenset((i, j) for i in range(d) for j in range(d) if not support[i, j])
    live = [(i, j) for i in range(d) for j in range(d) if support[i, j]]
    base = PatternMask(d, zeros, tuple((ij,) for ij in live))
    if len(live) == 1:
        return base

    rng = np.random.default_rng(seed)
    radius = max(2.0 * np.sqrt(eta_norm(spec.cov, spec.dims, safety=1.0)), 1e-3)
    samples = []
    for _ in range(probes):
        z = radius * complex(rng.uniform(-1.0, 1.0), rng.uniform(0.3, 0.7))
        G = _solve_with_pattern(spec, z, base)
        samples.append(G)
    sig = np.array([[G[i, j] for G in samples] for i, j in live])
    for k, ij in enumerate(live):
        if np.all(np.abs(sig[k]) <= ZERO_TOL):
            zeros = zeros | {ij}
    classes = []
    rep = []
    for k, ij in enumerate(live):
        if ij in zeros:
            continue
        for c, r in enumerate(rep):
            a, b = sig[k], sig[r]
            if np.all(np.abs(a - b) <= EQUAL_TOL * np.maximum(np.abs(a), np.abs(b))):
                classes[c].append(ij)
                break
        else:
            rep.append(k)
            classes.append([ij])
    return PatternMask(d, frozenset(zeros), tuple(tuple(c) for c in classes))
