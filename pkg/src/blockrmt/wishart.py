"""Spectrum of ``H H*`` through the self-adjoint embedding ``[[0, H], [H*, 0]]``.

The operator-valued transform ``Hc(w)`` of ``X^2`` solves
``w Hc = I + w eta(Hc) Hc``; the Gram-matrix transform follows either from
the weighted trace with the spurious-zero pole removed, or from the
row-block diagonal of ``Hc`` directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .eta import PatternMask, detect_pattern, eta_operator
from .model import SpecError, WishartSpec, build_wishart_embedding
from .solver import GSolution, SolverError, _problem, _solve, _sweep


@dataclass(frozen=True)
class WishartSolution:
    """``Hc(z)`` with its blocks; ``theta``/``theta0`` recover ``G_{HH*}``."""

    z: complex
    H_matrix: np.ndarray
    G1: np.ndarray
    G2: np.ndarray
    theta: float
    theta0: float
    alpha: np.ndarray
    residual: float
    iterations: int

    @property
    def G3(self) -> np.ndarray:
        r = self.G1.shape[0]
        return self.H_matrix[:r, r:]


@lru_cache(maxsize=64)
def embedded(w: WishartSpec):
    """Oriented spec (``M <= N``), its embedding, and whether H was flipped."""
    ow, flipped = w.oriented()
    return ow, build_wishart_embedding(ow), flipped


def theta_coefficients(alpha, r: int) -> tuple:
    a_rows = float(sum(alpha[:r]))
    a_cols = float(sum(alpha[r:]))
    return 1.0 / (2.0 * a_rows), (a_cols - a_rows) / (2.0 * a_rows)


def _wrap(ow: WishartSpec, spec, sol: GSolution) -> WishartSolution:
    r = ow.r
    alpha = spec.dims.weights
    theta, theta0 = theta_coefficients(spec.dims.alpha, r)
    H = sol.G
    return WishartSolution(sol.z, H, H[:r, :r], H[r:, r:], theta, theta0,
                           alpha, sol.residual, sol.iterations)


def solve_wishart_point(w: WishartSpec, z: complex, init=None) -> WishartSolution:
    """Solve for ``Hc(z)`` of the oriented ``H`` (``M <= N``).

    ``z`` is the spectral variable of ``H H*`` with entry variance ``1/(M+N)``.
    """
    ow, spec, _ = embedded(w)
    H0 = None if init is None else getattr(init, "H_matrix", init)
    return _wrap(ow, spec, _solve(_problem(spec, True), z, H0))


def solve_wishart_grid(w: WishartSpec, x_grid, epsilon: float = 1e-6) -> tuple:
    """Continuation sweep along ``x + i epsilon``; returns (solutions, failures)."""
    ow, spec, _ = embedded(w)
    res = _sweep(_problem(spec, True), np.asarray(x_grid, float), epsilon)
    return [_wrap(ow, spec, p) for p in res.points], res.failures


def recover_GHH(sol: WishartSolution) -> complex:
    """``theta tr_alpha Hc(z) - theta0 / z``."""
    tr = complex(np.dot(sol.alpha, np.diag(sol.H_matrix)))
    return sol.theta * tr - sol.theta0 / sol.z


def recover_GHH_rows(sol: WishartSolution) -> complex:
    """Row-block weighted trace of ``G1``; ``tr_r G1`` for equal block sizes."""
    r = sol.G1.shape[0]
    a = sol.alpha[:r]
    return complex(np.dot(a, np.diag(sol.G1)) / a.sum())


def gram_scale(w: WishartSpec) -> float:
    """Factor ``c`` with reported matrix ``c * H H*`` (variance ``1/n`` base)."""
    return (w.M + w.N) / w.M if w.normalize == "rows" else 1.0


def gram_atom(w: WishartSpec) -> float:
    """Mass of the deterministic zero eigenvalues of ``H H*`` when ``M > N``."""
    return max(w.M - w.N, 0) / w.M


def gram_cauchy(w: WishartSpec, z: complex, init=None) -> tuple:
    """Cauchy transform of the reported Gram matrix at ``z``.

    Returns ``(G, continuous_part, solution)``; the continuous part omits
    the ``atom/z`` term of deterministic zeros.
    """
    c = gram_scale(w)
    sol = solve_wishart_point(w, z / c, init)
    cont = _continuous(w, sol, c)
    return cont + gram_atom(w) / z, cont, sol


def _continuous(w: WishartSpec, sol: WishartSolution, c: float) -> complex:
    g = recover_GHH(sol) / c
    if w.M > w.N:
        g *= w.N / w.M
    return g


def gram_grid(w: WishartSpec, x_grid, epsilon: float = 1e-6) -> tuple:
    """Continuous part of the reported Gram transform along ``x + i eps``.

    Returns ``(xs, values, solutions, failures)`` for the points that converged.
    """
    c = gram_scale(w)
    xs = np.asarray(x_grid, float)
    sols, failures = solve_wishart_grid(w, xs / c, epsilon / c)
    ok = np.array([s.z.real * c for s in sols])
    vals = np.array([_continuous(w, s, c) for s in sols])
    return ok, vals, sols, [(z * c, why) for z, why in failures]


# ---------------------------------------------------------------------------
# Reduced equation for G1 when all blocks are square and non-self-adjoint
# ---------------------------------------------------------------------------


class _Reduced:
    def __init__(self, w: WishartSpec):
        ow, spec, _ = embedded(w)
        g = ow.grid
        sizes = set(ow.row_sizes) | set(ow.col_sizes)
        if len(sizes) != 1:
            raise SpecError("reduced equation needs equal square block sizes")
        if any(g.names[ref.name] for row in g.entries for ref in row if ref is not None):
            raise SpecError("reduced equation needs non-self-adjoint blocks")
        self.r, self.s = ow.r, ow.s
        d = self.r + self.s
        self.d = d
        L = eta_operator(spec.cov, spec.dims.weights).reshape(d, d, d, d)
        r = self.r
        # eta1: M_r -> M_s and eta2: M_s -> M_r, restrictions of eta
        self.L1 = L[r:, r:, :r, :r].reshape(self.s ** 2, r * r)
        self.L2 = L[:r, :r, r:, r:].reshape(r * r, self.s ** 2)
        full = detect_pattern(spec)
        zeros = frozenset(ij for ij in full.zero_set if ij[0] < r and ij[1] < r)
        classes = tuple(c2 for c2 in (tuple(ij for ij in c if ij[0] < r and ij[1] < r)
                                      for c in full.classes) if c2)
        self.pattern = PatternMask(r, zeros, classes)
        self.B = self.pattern.basis
        self.E_basis = self.B.T.reshape(-1, r, r)
        self.eye_r, self.eye_s = np.eye(r), np.eye(self.s)
        self.norm = float(np.linalg.norm(L.reshape(d * d, d * d), 2))

    def eta1(self, D):
        return (self.L1 @ D.ravel()).reshape(self.s, self.s)

    def eta2(self, D):
        return (self.L2 @ D.ravel()).reshape(self.r, self.r)

    def _P(self, G):
        return np.linalg.inv(self.eye_s - self.eta1(G))

    def residual(self, G, z):
        return self.eta2(self._P(G)) @ G - z * G + self.eye_r

    def jacobian(self, G, z):
        P = self._P(G)
        E2 = self.eta2(P)
        cols = []
        for Ec in self.E_basis:
            dP = P @ self.eta1(Ec) @ P
            cols.append((self.eta2(dP) @ G + E2 @ Ec - z * Ec).ravel())
        return np.array(cols).T

    def fixed_point(self, G, z):
        return np.linalg.inv(z * self.eye_r - self.eta2(self._P(G)))

    @property
    def eye(self):
        return self.eye_r

    def top_height(self) -> float:
        return 4.0 * max(self.norm, 1e-3) + 1.0


@lru_cache(maxsize=32)
def _reduced(w: WishartSpec) -> _Reduced:
    return _Reduced(w)


def solve_reduced_G1(w: WishartSpec, z: complex, init=None) -> np.ndarray:
    """Solve ``z G1 = I_r + eta2((I_s - eta1(G1))^-1) G1`` for the oriented H."""
    prob = _reduced(w)
    try:
        return _solve(prob, z, init).G
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular I - eta1(G1) at z={z}: {exc}") from None
