"""Pairing combinatorics: exact limiting and finite-size moments.

Everything here is independent of the fixed-point solver; it serves as the
reference the solver is checked against.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .eta import eta_operator
from .model import ModelSpec, WishartSpec

MAX_ENUMERATE = 16
MAX_RECURSIVE = 32


@dataclass(frozen=True)
class Pairing:
    """Fixed-point-free involution on ``0..m-1`` stored as a partner tuple."""

    partner: tuple

    def __post_init__(self):
        m = len(self.partner)
        if m % 2 or any(not 0 <= q < m or q == p or self.partner[q] != p
                        for p, q in enumerate(self.partner)):
            raise ValueError(f"not a pairing: {self.partner}")

    @property
    def m(self) -> int:
        return len(self.partner)

    @classmethod
    def from_pairs(cls, pairs, one_based: bool = True) -> "Pairing":
        off = 1 if one_based else 0
        m = 2 * len(pairs)
        partner = [None] * m
        for a, b in pairs:
            partner[a - off], partner[b - off] = b - off, a - off
        return cls(tuple(partner))

    def pairs(self) -> list:
        return [(p, q) for p, q in enumerate(self.partner) if p < q]


@dataclass(frozen=True)
class GenusWeight:
    cycles: int
    exponent: int


def _all_pairings(elems: tuple) -> Iterator[list]:
    if not elems:
        yield []
        return
    a = elems[0]
    for k in range(1, len(elems)):
        rest = elems[1:k] + elems[k + 1:]
        for sub in _all_pairings(rest):
            yield [(a, elems[k])] + sub


def _nc_pairings(lo: int, hi: int) -> Iterator[list]:
    """Non-crossing pairings of the interval ``lo..hi-1``."""
    if lo >= hi:
        yield []
        return
    for k in range(lo + 1, hi, 2):
        for inner in _nc_pairings(lo + 1, k):
            for outer in _nc_pairings(k + 1, hi):
                yield [(lo, k)] + inner + outer


def _to_partner(m: int, pairs) -> tuple:
    partner = [0] * m
    for a, b in pairs:
        partner[a], partner[b] = b, a
    return tuple(partner)


def iter_pairings(m: int, noncrossing_only: bool = False) -> Iterator[Pairing]:
    if m % 2 or m < 0:
        return
    gen = _nc_pairings(0, m) if noncrossing_only else _all_pairings(tuple(range(m)))
    for pairs in gen:
        yield Pairing(_to_partner(m, pairs))


def enumerate_pairings(m: int, noncrossing_only: bool = False) -> list:
    """All pairings of ``m`` points (or the non-crossing ones); odd ``m`` gives []."""
    if m > MAX_ENUMERATE:
        raise ValueError(f"enumeration is capped at m={MAX_ENUMERATE}")
    out = list(iter_pairings(m, noncrossing_only))
    if noncrossing_only:
        assert all(is_noncrossing(p) for p in out)
    return out


def _removal_order(pi: Pairing, rightmost: bool = False):
    """Sequence of adjacent pairs removed until nothing is left, or None."""
    alive = list(range(pi.m))
    order = []
    while alive:
        n = len(alive)
        idx = range(n - 2, -1, -1) if rightmost else range(n - 1)
        for k in idx:
            if pi.partner[alive[k]] == alive[k + 1]:
                order.append((alive[k], alive[k + 1]))
                del alive[k:k + 2]
                break
        else:
            return None
    return order


def is_noncrossing(pi: Pairing) -> bool:
    """True iff adjacent pairs can be peeled off until nothing remains."""
    return _removal_order(pi) is not None


def gamma_pi_cycles(pi: Pairing) -> list:
    """Cycles of ``gamma o pi`` (apply ``pi`` first, then ``p -> p+1 mod m``)."""
    m = pi.m
    seen = [False] * m
    cycles = []
    for s in range(m):
        if seen[s]:
            continue
        cyc = []
        p = s
        while not seen[p]:
            seen[p] = True
            cyc.append(p)
            p = (pi.partner[p] + 1) % m
        cycles.append(cyc)
    return cycles


def genus_weight(pi: Pairing) -> GenusWeight:
    c = len(gamma_pi_cycles(pi))
    return GenusWeight(c, c - pi.m // 2 - 1)


# ---------------------------------------------------------------------------
# kappa_pi and limiting moments
# ---------------------------------------------------------------------------


def _spec_of(spec):
    if isinstance(spec, WishartSpec):
        from .wishart import embedded
        return embedded(spec)[1]
    return spec


def _eta_fn(spec: ModelSpec):
    d = spec.d
    L = eta_operator(spec.cov, spec.dims.weights)
    return lambda D: (L @ D.ravel()).reshape(d, d)


def kappa_pi(spec, pi: Pairing, rightmost: bool = False) -> np.ndarray:
    """Nested-eta value of a non-crossing pairing.

    The word ``X ... X`` is kept as gap matrices ``W_0 .. W_t`` between the
    surviving letters; removing an adjacent pair ``(k, k+1)`` merges
    ``W_k, W_{k+1}, W_{k+2}`` into ``W_k eta(W_{k+1}) W_{k+2}``.
    """
    spec = _spec_of(spec)
    order = _removal_order(pi, rightmost)
    if order is None:
        raise ValueError(f"pairing {pi.partner} is crossing")
    eta = _eta_fn(spec)
    eye = np.eye(spec.d, dtype=complex)
    letters = list(range(pi.m))
    gaps = [eye] * (pi.m + 1)
    for a, _ in order:
        k = letters.index(a)
        merged = gaps[k] @ eta(gaps[k + 1]) @ gaps[k + 2]
        gaps[k:k + 3] = [merged]
        del letters[k:k + 2]
    return gaps[0]


def _trace(spec: ModelSpec, A) -> complex:
    return complex(np.dot(spec.dims.weights, np.diag(A)))


def limiting_moment(spec, m: int) -> float:
    """``tr sum_{pi in NC2(m)} kappa_pi`` for the self-adjoint model."""
    spec = _spec_of(spec)
    if m % 2:
        return 0.0
    if m == 0:
        return 1.0
    total = sum(kappa_pi(spec, pi) for pi in iter_pairings(m, noncrossing_only=True))
    return _trace(spec, total).real


def limiting_moment_recursive(spec, max_m: int) -> list:
    """Matrix moments ``E[X^m]`` for ``m = 0..max_m`` by the nested recurrence."""
    if max_m > MAX_RECURSIVE:
        raise ValueError(f"recurrence is capped at m={MAX_RECURSIVE}")
    spec = _spec_of(spec)
    eta = _eta_fn(spec)
    d = spec.d
    mom = [np.eye(d, dtype=complex)]
    etas = [eta(mom[0])]
    for m in range(1, max_m + 1):
        acc = np.zeros((d, d), dtype=complex)
        for k in range(0, m - 1):
            acc += etas[k] @ mom[m - k - 2]
        mom.append(acc)
        etas.append(eta(acc))
    return mom


def limiting_moments(spec, max_m: int) -> np.ndarray:
    """Scalar moments ``tr E[X^m]`` from the recurrence."""
    s = _spec_of(spec)
    return np.array([_trace(s, M).real for M in limiting_moment_recursive(s, max_m)])


def gram_moments(w: WishartSpec, max_k: int, method: str = "recursive") -> np.ndarray:
    """Moments of the reported Gram matrix from those of its embedding.

    ``tr_n X^{2k} = (2M/n) m_k(HH*)`` for ``k >= 1``, with ``M`` the row count
    of the unflipped H, then rescaled to the reported normalization.
    """
    from .wishart import embedded, gram_scale
    emb = embedded(w)[1]
    if method == "recursive":
        xm = limiting_moments(emb, 2 * max_k)
    else:
        xm = np.array([limiting_moment(emb, j) for j in range(2 * max_k + 1)])
    n, M = w.M + w.N, w.M
    c = gram_scale(w)
    out = [1.0] + [n / (2.0 * M) * xm[2 * k] * c ** k for k in range(1, max_k + 1)]
    return np.array(out)


def spec_moments(spec, max_m: int, method: str = "recursive") -> np.ndarray:
    """Reported-scale moments ``0..max_m`` for either kind of spec."""
    if isinstance(spec, WishartSpec):
        return gram_moments(spec, max_m, method)
    if method == "recursive":
        return limiting_moments(spec, max_m)
    return np.array([limiting_moment(spec, m) for m in range(max_m + 1)])


# ---------------------------------------------------------------------------
# finite size
# ---------------------------------------------------------------------------

_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


@lru_cache(maxsize=None)
def _all_pairings_cached(m: int) -> tuple:
    return tuple(iter_pairings(m))


def _pairing_weight(sigma, alpha, pi: Pairing) -> complex:
    m = pi.m
    idx = _LETTERS[:m]
    ops, subs = [], []
    for p, q in pi.pairs():
        ops.append(sigma)
        subs.append(idx[p] + idx[(p + 1) % m] + idx[q] + idx[(q + 1) % m])
    for cyc in gamma_pi_cycles(pi):
        ops.append(alpha)
        subs.append(idx[min(cyc)])
    return complex(np.einsum(",".join(subs) + "->", *ops, optimize="greedy"))


def finite_n_moment(spec, m: int, n_total: int) -> float:
    """Exact ``E tr_n X^m`` at total size ``n`` by the genus expansion.

    Each pairing contributes ``n^(#cycles - m/2 - 1)`` times the covariance
    product summed over block labels, with one ``alpha`` weight per cycle of
    ``gamma o pi`` (the block size fraction of the shared row index).
    """
    spec = _spec_of(spec)
    if m % 2:
        return 0.0
    if m == 0:
        return 1.0
    if m > 12:
        raise ValueError("finite-size expansion is capped at m=12")
    alpha = np.asarray(spec.dims.weights, float)
    total = 0.0
    for pi in _all_pairings_cached(m):
        e = genus_weight(pi).exponent
        total += float(n_total) ** e * _pairing_weight(spec.cov.sigma, alpha, pi)
    return total.real if isinstance(total, complex) else float(total)


# ---------------------------------------------------------------------------
# moments read off the solver by a contour integral
# ---------------------------------------------------------------------------


def contour_moments(spec, max_m: int, nodes: int = 128, radius: float | None = None) -> np.ndarray:
    """Laurent coefficients of the reported Cauchy transform at infinity.

    Uses ``m_k = (1/2 pi i) \\oint z^k G(z) dz`` on a circle of radius ``R``
    (default: twice the support bracket radius), with ``nodes`` points on
    the upper half and conjugate symmetry for the lower half.
    """
    from .density import support_bracket
    from .solver import solve_point
    from .wishart import gram_cauchy

    lo, hi = support_bracket(spec)
    R = radius if radius is not None else 2.0 * max(abs(lo), abs(hi), 1e-3)
    th = np.pi * (np.arange(nodes) + 0.5) / nodes
    zs = R * np.exp(1j * th)
    G = np.empty(nodes, complex)
    prev = None
    for j, z in enumerate(zs):
        if isinstance(spec, WishartSpec):
            G[j], _, prev = gram_cauchy(spec, z, prev)
        else:
            sol = solve_point(spec, z, None if prev is None else prev.G)
            prev = sol
            G[j] = complex(np.dot(spec.dims.weights, np.diag(sol.G)))
    # full circle: G(conj z) = conj G(z)
    zf = np.concatenate([zs, zs.conj()])
    Gf = np.concatenate([G, G.conj()])
    out = []
    for k in range(max_m + 1):
        out.append(np.mean(zf ** (k + 1) * Gf).real)
    return np.array(out)
