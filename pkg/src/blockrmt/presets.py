"""Named example models: block Toeplitz, Marchenko-Pastur, MIMO channels."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Union

from .model import (BlockGrid, BlockRef, DimensionProfile, ModelSpec, SpecError,
                    WishartSpec, check_selfadjoint_grid, check_wishart,
                    model_from_grid)

PRESET_NAMES = ("semicircle", "toeplitz3", "toeplitz4", "toeplitz5",
                "mp:<lambda>", "mimo:<K>,<L>,<ratio>", "mimo-rect:<K>,<L>,<ratio>")


@dataclass(frozen=True)
class Preset:
    name: str
    spec: Union[ModelSpec, WishartSpec]


def semicircle() -> ModelSpec:
    grid = BlockGrid(((BlockRef("A"),),), {"A": True})
    return model_from_grid(grid, DimensionProfile.square(1), name="semicircle")


def toeplitz(d: int) -> ModelSpec:
    """Symmetric block Toeplitz matrix; block ``(i, j)`` is name ``|i - j|``."""
    if d < 1:
        raise SpecError("Toeplitz size must be positive")
    labels = [f"T{k}" for k in range(d)]
    entries = tuple(tuple(BlockRef(labels[abs(i - j)]) for j in range(d)) for i in range(d))
    grid = BlockGrid(entries, {lab: True for lab in labels})
    check_selfadjoint_grid(grid)
    return model_from_grid(grid, DimensionProfile.square(d), name=f"toeplitz{d}")


def marchenko_pastur(lam) -> WishartSpec:
    """Single ``M x N`` block with ``N/M = lam``; reports the law of ``H H*/M``."""
    frac = Fraction(str(lam)) if not isinstance(lam, Fraction) else lam
    if frac <= 0:
        raise SpecError("lambda must be positive")
    frac = frac.limit_denominator(1000)
    grid = BlockGrid(((BlockRef("H"),),), {"H": False})
    w = WishartSpec(grid, (frac.denominator,), (frac.numerator,),
                    normalize="rows", name=f"mp:{lam}")
    check_wishart(w)
    return w


def _tap_names(L: int, ratio: int) -> list:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if L * ratio > len(letters):
        return [[f"H{t}_{u}" for u in range(ratio)] for t in range(L)]
    return [[letters[u * L + t] for u in range(ratio)] for t in range(L)]


def mimo(K: int, L: int, ratio: int = 1) -> WishartSpec:
    """Banded channel matrix with ``K`` block rows and ``L`` unit taps.

    Block row ``i`` holds tap ``t`` in block column ``i + t``.  With
    ``ratio = 2`` each receive block row splits into two square block rows
    driven by independent taps, giving ``2K x (K+L-1)`` square blocks.
    """
    if K < 1 or L < 1 or ratio not in (1, 2):
        raise SpecError("mimo needs K, L >= 1 and ratio in {1, 2}")
    names = _tap_names(L, ratio)
    s = K + L - 1
    rows = []
    for i in range(K):
        for u in range(ratio):
            row = [None] * s
            for t in range(L):
                row[i + t] = BlockRef(names[t][u])
            rows.append(tuple(row))
    labels = {n: False for tap in names for n in tap}
    grid = BlockGrid(tuple(rows), labels)
    w = WishartSpec(grid, (1,) * len(rows), (1,) * s, name=f"mimo:{K},{L},{ratio}")
    check_wishart(w)
    return w


def mimo_rect(K: int, L: int, ratio: int = 1) -> WishartSpec:
    """Same channel with rectangular ``ratio*N x N`` taps (no row splitting)."""
    if K < 1 or L < 1 or ratio < 1:
        raise SpecError("mimo-rect needs K, L, ratio >= 1")
    s = K + L - 1
    letters = _tap_names(L, 1)
    rows = []
    for i in range(K):
        row = [None] * s
        for t in range(L):
            row[i + t] = BlockRef(letters[t][0])
        rows.append(tuple(row))
    grid = BlockGrid(tuple(rows), {tap[0]: False for tap in letters})
    w = WishartSpec(grid, (ratio,) * K, (1,) * s, name=f"mimo-rect:{K},{L},{ratio}")
    check_wishart(w)
    return w


def _ints(text: str, n: int, what: str) -> list:
    parts = text.split(",")
    if len(parts) != n:
        raise SpecError(f"{what} expects {n} comma-separated integers, got {text!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise SpecError(f"{what}: not an integer in {text!r}") from None


@lru_cache(maxsize=None)
def get_preset(name: str) -> Preset:
    """Resolve a preset name such as ``toeplitz3``, ``mp:2`` or ``mimo:4,4,1``."""
    key, _, arg = name.partition(":")
    if key == "semicircle" and not arg:
        return Preset(name, semicircle())
    if key.startswith("toeplitz") and key[8:].isdigit() and not arg:
        return Preset(name, toeplitz(int(key[8:])))
    if key == "mp" and arg:
        try:
            lam = Fraction(arg)
        except ValueError:
            raise SpecError(f"mp: bad lambda {arg!r}") from None
        return Preset(name, marchenko_pastur(lam))
    if key == "mimo" and arg:
        return Preset(name, mimo(*_ints(arg, 3, "mimo")))
    if key == "mimo-rect" and arg:
        return Preset(name, mimo_rect(*_ints(arg, 3, "mimo-rect")))
    raise SpecError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")


# the models exercised by cross-validation suites
STANDARD_PRESETS = ("semicircle", "toeplitz3", "toeplitz4", "toeplitz5", "mp:1",
                    "mp:2", "mimo:4,4,1", "mimo:2,2,2", "mimo-rect:2,2,2")
