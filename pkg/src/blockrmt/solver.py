"""Newton solver for ``z G = I + eta(G) G`` on the upper half-plane.

Two forms share the machinery: the plain equation for the block matrix
itself, and the "squared" form ``w H = I + w eta(H) H`` used for Gram
matrices, where ``w`` is the spectral variable of ``X^2``.  The physical
branch is picked by homotopy: start high in the upper half-plane where the
fixed-point map contracts and continue towards the real axis, backing off
whenever a diagonal entry leaves the lower half-plane.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .eta import PatternMask, detect_pattern, eta_norm, eta_operator
from .model import DimensionProfile, ModelSpec

NEWTON_TOL = 1e-12
STEP_TOL = 1e-13
MAX_NEWTON = 200
WARMUP = 50
ACCEPT_TOL = 1e-9
DESCENT_LEVELS = 20


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class PositivityViolation(SolverError):
    """A diagonal entry has nonnegative imaginary part: wrong root."""


@dataclass(frozen=True)
class GSolution:
    z: complex
    G: np.ndarray
    residual: float
    iterations: int


@dataclass
class GridSolveResult:
    points: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def zs(self) -> np.ndarray:
        return np.array([p.z for p in self.points])


class _Problem:
    """Precomputed operator, pattern and scale for one model."""

    def __init__(self, spec: ModelSpec, pattern: PatternMask, squared: bool):
        self.d = spec.d
        self.L = eta_operator(spec.cov, spec.dims.weights)
        self.pattern = pattern
        self.B = pattern.basis
        # eta(E_c) for every class c, as a (c, d, d) stack
        self.eta_basis = (self.L @ self.B).T.reshape(-1, self.d, self.d)
        self.E_basis = self.B.T.reshape(-1, self.d, self.d)
        self.squared = squared
        self.norm = eta_norm(spec.cov, spec.dims, safety=1.0)
        self.eye = np.eye(self.d)

    def eta(self, G):
        return (self.L @ G.ravel()).reshape(self.d, self.d)

    def residual(self, G, z):
        c = z if self.squared else 1.0
        return c * self.eta(G) @ G - z * G + self.eye

    def jacobian(self, G, z):
        c = z if self.squared else 1.0
        EG = self.eta(G)
        J = c * (self.eta_basis @ G + EG @ self.E_basis) - z * self.E_basis
        return J.reshape(len(self.E_basis), -1).T

    def fixed_point(self, G, z):
        if self.squared:
            return np.linalg.inv(z * (self.eye - self.eta(G)))
        return np.linalg.inv(z * self.eye - self.eta(G))

    def top_height(self) -> float:
        """Height above which the fixed-point map is a contraction."""
        if self.squared:
            return 4.0 * max(self.norm, 1e-3) + 1.0
        return 2.0 * np.sqrt(self.norm) + 1.0


@lru_cache(maxsize=128)
def _problem(spec: ModelSpec, squared: bool, pattern: PatternMask | None = None) -> _Problem:
    return _Problem(spec, pattern if pattern is not None else detect_pattern(spec), squared)


def _check_herglotz(G):
    im = np.diag(G).imag
    if np.any(im >= 0):
        k = int(np.argmax(im))
        raise PositivityViolation(f"Im G[{k + 1},{k + 1}] = {im[k]:.3e} >= 0")


def _newton(prob: _Problem, z: complex, G0) -> GSolution:
    u = prob.pattern.reduce(G0).astype(complex)
    G = prob.pattern.expand(u)
    F = prob.residual(G, z)
    res = np.max(np.abs(F))
    for it in range(1, MAX_NEWTON + 1):
        if res <= NEWTON_TOL:
            return GSolution(z, G, float(res), it - 1)
        J = prob.jacobian(G, z)
        try:
            step, *_ , sv = np.linalg.lstsq(J, -F.ravel(), rcond=None)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from None
        if sv.size == 0 or sv[-1] <= 1e-14 * max(sv[0], 1e-300):
            raise SingularJacobian(f"Jacobian rank deficient at z={z}")
        t = 1.0
        while True:
            u_new = u + t * step
            G_new = prob.pattern.expand(u_new)
            F_new = prob.residual(G_new, z)
            res_new = np.max(np.abs(F_new))
            if res_new < res or t < 1e-4 or res_new <= NEWTON_TOL:
                break
            t *= 0.5
        small_step = np.max(np.abs(t * step)) <= STEP_TOL * max(1.0, np.max(np.abs(u)))
        u, G, F, res = u_new, G_new, F_new, res_new
        if small_step:
            break
    if res > ACCEPT_TOL or not np.isfinite(res):
        raise NonConvergence(f"residual {res:.3e} after {it} Newton steps at z={z}")
    return GSolution(z, G, float(res), it)


def _solve_from(prob: _Problem, z: complex, G0) -> GSolution:
    sol = _newton(prob, z, G0)
    _check_herglotz(sol.G)
    return sol


def _warm_start(prob: _Problem, z: complex) -> np.ndarray:
    G = prob.eye / z
    for _ in range(WARMUP):
        try:
            G = prob.fixed_point(G, z)
        except np.linalg.LinAlgError:
            break
    return G


def _follow(prob: _Problem, zs, seed: GSolution, depth: int = 8) -> GSolution:
    """Continue ``seed`` along the points ``zs``, bisecting failed steps."""
    sol = seed
    for z in zs:
        try:
            sol = _solve_from(prob, z, sol.G)
        except SolverError:
            if depth == 0:
                raise
            mid = 0.5 * (sol.z + z)
            sol = _follow(prob, [mid, z], sol, depth - 1)
    return sol


def _descend(prob: _Problem, z: complex, levels: int = DESCENT_LEVELS) -> GSolution:
    """Reach ``z`` from far up the vertical line ``Re = Re z``."""
    x, y = z.real, z.imag
    top = max(prob.top_height(), y)
    k = max(levels, int(np.ceil(np.log2(top / y))))
    heights = [y * 2.0 ** j for j in range(k, -1, -1)]
    z_top = complex(x, heights[0])
    sol = _solve_from(prob, z_top, _warm_start(prob, z_top))
    return _follow(prob, [complex(x, h) for h in heights[1:]], sol)


def _solve(prob: _Problem, z: complex, init=None) -> GSolution:
    z = complex(z)
    if not z.imag > 0:
        raise ValueError(f"z must lie in the upper half-plane, got {z}")
    seed = init if init is not None else _warm_start(prob, z)
    try:
        return _solve_from(prob, z, seed)
    except SolverError:
        return _descend(prob, z)


def _solve_with_pattern(spec: ModelSpec, z: complex, pattern: PatternMask,
                        squared: bool = False) -> np.ndarray:
    return _solve(_Problem(spec, pattern, squared), z).G


def solve_point(spec: ModelSpec, z: complex, init=None, *, squared: bool = False) -> GSolution:
    """Solve the matrix equation at one point ``z`` with ``Im z > 0``.

    ``init`` seeds Newton's method; without it the seed comes from warm-up
    fixed-point iterations, and a wrong root triggers a descent from higher
    up the vertical line through ``z``.
    """
    return _solve(_problem(spec, squared), z, init)


def _sweep(prob: _Problem, xs, eps: float) -> GridSolveResult:
    out = GridSolveResult()
    sol = None
    for x in xs:
        z = complex(x, eps)
        try:
            if sol is None:
                sol = _descend(prob, z)
            else:
                try:
                    sol = _follow(prob, [z], sol, depth=6)
                except SolverError:
                    sol = _descend(prob, z)
            out.points.append(sol)
        except SolverError as exc:
            out.failures.append((z, str(exc)))
    return out


def solve_grid(spec: ModelSpec, x_grid, epsilon: float = 1e-6, *,
               squared: bool = False, threads: int = 1) -> GridSolveResult:
    """Solve along ``x + i epsilon`` for sorted ``x_grid`` by continuation.

    With ``threads > 1`` the grid is cut into contiguous chunks that each
    start with their own vertical descent.
    """
    xs = np.asarray(x_grid, dtype=float)
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if np.any(np.diff(xs) < 0):
        raise ValueError("x_grid must be sorted")
    prob = _problem(spec, squared)
    if threads <= 1 or len(xs) < 4 * threads:
        return _sweep(prob, xs, epsilon)
    chunks = np.array_split(xs, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: _sweep(prob, c, epsilon), chunks))
    out = GridSolveResult()
    for p in parts:
        out.points.extend(p.points)
        out.failures.extend(p.failures)
    return out


def trace_G(sol: GSolution, dims: DimensionProfile) -> complex:
    """Weighted trace ``sum_i alpha_i G_ii`` (``1/d`` weights in square mode)."""
    return complex(np.dot(dims.weights, np.diag(sol.G)))


def cauchy_transform(spec: ModelSpec, z: complex, init=None) -> complex:
    return trace_G(solve_point(spec, z, init), spec.dims)
