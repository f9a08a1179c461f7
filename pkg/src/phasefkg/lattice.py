"""Finite spin configurations as a product lattice.

States are vectors over the alphabet ``{0, ..., a-1}`` with the coordinatewise
partial order.  This module owns the order-theoretic vocabulary used by the
samplers and the FKG diagnostics: meet/join, Hamming and intrinsic (in-region)
distances, monotone test functions, and enumeration of up-sets, which are the
extreme points over which covariance defects are maximised.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

INFINITE = math.inf


@dataclass(frozen=True)
class SpinConfig:
    """Immutable configuration in ``{0..alphabet_size-1}^dimension``."""

    values: tuple
    alphabet_size: int = 2

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if not all(0 <= v < self.alphabet_size for v in self.values):
            raise ValueError("coordinate outside alphabet")

    @property
    def dimension(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.int64)

    @property
    def packed(self) -> int:
        """Bit-packed form; binary alphabet only."""
        if self.alphabet_size != 2:
            raise ValueError("packed form defined for binary alphabet only")
        mask = 0
        for i, v in enumerate(self.values):
            if v:
                mask |= 1 << i
        return mask

    def with_value(self, i: int, v: int) -> "SpinConfig":
        vals = list(self.values)
        vals[i] = v
        return SpinConfig(tuple(vals), self.alphabet_size)

    @staticmethod
    def from_packed(mask: int, dimension: int) -> "SpinConfig":
        return SpinConfig(tuple((mask >> i) & 1 for i in range(dimension)), 2)


def _check_pair(x: SpinConfig, y: SpinConfig):
    if x.dimension != y.dimension or x.alphabet_size != y.alphabet_size:
        raise ValueError("configurations live on different lattices")


def meet(x: SpinConfig, y: SpinConfig) -> SpinConfig:
    _check_pair(x, y)
    return SpinConfig(tuple(min(a, b) for a, b in zip(x.values, y.values)), x.alphabet_size)


def join(x: SpinConfig, y: SpinConfig) -> SpinConfig:
    _check_pair(x, y)
    return SpinConfig(tuple(max(a, b) for a, b in zip(x.values, y.values)), x.alphabet_size)


def leq(x: SpinConfig, y: SpinConfig) -> bool:
    _check_pair(x, y)
    return all(a <= b for a, b in zip(x.values, y.values))


def hamming(x: SpinConfig, y: SpinConfig) -> int:
    _check_pair(x, y)
    return sum(a != b for a, b in zip(x.values, y.values))


@dataclass(frozen=True)
class Region:
    """Subset of configuration space, given by a membership predicate.

    ``enumeration`` (optional) lists every member for small instances, which
    unlocks exact distances and diameters.  ``certified_diameter`` lets a
    model module supply an analytic diameter bound when enumeration is out of
    reach; consumers treat it as an upper bound on the intrinsic diameter.
    """

    membership: Callable[[SpinConfig], bool]
    label: str = ""
    enumeration: Optional[tuple] = None
    certified_diameter: Optional[float] = None

    def contains(self, x: SpinConfig) -> bool:
        return bool(self.membership(x))

    def validate_enumeration(self):
        """Check the explicit member list against the predicate."""
        if self.enumeration is None:
            raise ValueError("region has no enumeration")
        for x in self.enumeration:
            if not self.contains(x):
                raise ValueError(f"enumerated state fails membership in region {self.label!r}")


def _neighbors(x: SpinConfig) -> Iterable[SpinConfig]:
    for i in range(x.dimension):
        for v in range(x.alphabet_size):
            if v != x.values[i]:
                yield x.with_value(i, v)


def intrinsic_distance(region: Region, x: SpinConfig, y: SpinConfig) -> float:
    """Length of the shortest single-coordinate-step path inside the region.

    Returns ``INFINITE`` when x and y lie in different components.  BFS over
    the region; both endpoints must belong to it.
    """
    if not (region.contains(x) and region.contains(y)):
        raise ValueError("intrinsic distance requires both endpoints in the region")
    if x == y:
        return 0.0
    seen = {x}
    frontier = deque([(x, 0)])
    while frontier:
        z, d = frontier.popleft()
        for w in _neighbors(z):
            if w == y:
                return float(d + 1)
            if w not in seen and region.contains(w):
                seen.add(w)
                frontier.append((w, d + 1))
    return INFINITE


def intrinsic_diameter(region: Region) -> float:
    """Max intrinsic distance over the region.

    Uses the explicit enumeration when present, otherwise falls back to the
    certified bound supplied by the model module.
    """
    if region.enumeration is not None:
        states = list(region.enumeration)
        if not states:
            raise ValueError("empty region")
        worst = 0.0
        # BFS from every state; diameter is the max eccentricity.
        index = {s: k for k, s in enumerate(states)}
        member = set(states)
        for s in states:
            dist = {s: 0}
            frontier = deque([s])
            while frontier:
                z = frontier.popleft()
                for w in _neighbors(z):
                    if w in member and w not in dist:
                        dist[w] = dist[z] + 1
                        frontier.append(w)
            if len(dist) < len(states):
                return INFINITE
            worst = max(worst, float(max(dist.values())))
        del index
        return worst
    if region.certified_diameter is not None:
        return float(region.certified_diameter)
    raise ValueError("region is not enumerable and carries no certified diameter")


@dataclass(frozen=True)
class IncreasingFunction:
    """Test function declared monotone w.r.t. the coordinatewise order.

    ``sup_norm_bound`` must dominate ``max |f|`` on the domain; several
    bounds in this package scale with it.  ``level_values`` is an optional
    fast path: when the function depends on a configuration only through its
    coordinate sum, it holds the value at each level.
    """

    evaluator: Callable[[SpinConfig], float]
    sup_norm_bound: float
    label: str = ""
    lipschitz: Optional[tuple] = None
    level_values: Optional[tuple] = None

    def __call__(self, x: SpinConfig) -> float:
        return float(self.evaluator(x))

    def check_monotone(self, dimension: int, alphabet_size: int = 2,
                       rng=None, samples: int = 2000) -> bool:
        """Verify monotonicity on comparable neighbor pairs.

        Exhaustive for binary alphabets up to 16 coordinates, sampled
        otherwise.  Also checks ``sup_norm_bound`` on the visited states.
        """
        if alphabet_size == 2 and dimension <= 16:
            pairs = _all_binary_cover_pairs(dimension)
        else:
            if rng is None:
                raise ValueError("sampled monotonicity check needs an rng")
            pairs = _sampled_cover_pairs(dimension, alphabet_size, rng, samples)
        for lo, hi in pairs:
            flo, fhi = self(lo), self(hi)
            if flo > fhi + 1e-12:
                return False
            if max(abs(flo), abs(fhi)) > self.sup_norm_bound + 1e-12:
                raise ValueError("sup_norm_bound violated")
        return True


def _all_binary_cover_pairs(n):
    for mask in range(1 << n):
        x = SpinConfig.from_packed(mask, n)
        for i in range(n):
            if not (mask >> i) & 1:
                yield x, x.with_value(i, 1)


def _sampled_cover_pairs(n, a, rng, samples):
    for _ in range(samples):
        vals = rng.integers(0, a, size=n)
        i = int(rng.integers(0, n))
        lo = list(vals)
        hi = list(vals)
        v = int(vals[i])
        if v == a - 1:
            lo[i] = v - 1
        else:
            hi[i] = v + 1
        yield SpinConfig(tuple(lo), a), SpinConfig(tuple(hi), a)


@dataclass(frozen=True)
class UpSet:
    """Upward-closed subset of the binary cube on ``dimension`` coordinates.

    ``member_mask`` has bit ``s`` set when state ``s`` (bit-packed) belongs.
    Up-sets are the extreme points of the monotone ``[-1, 1]``-valued test
    functions, so defect scans range over pairs of them.
    """

    dimension: int
    member_mask: int

    def contains_state(self, state_bits: int) -> bool:
        return bool((self.member_mask >> state_bits) & 1)

    def indicator(self) -> np.ndarray:
        n_states = 1 << self.dimension
        out = np.zeros(n_states, dtype=np.float64)
        m = self.member_mask
        for s in range(n_states):
            if (m >> s) & 1:
                out[s] = 1.0
        return out

    def is_up_closed(self) -> bool:
        n = self.dimension
        m = self.member_mask
        for s in range(1 << n):
            if (m >> s) & 1:
                for i in range(n):
                    if not (s >> i) & 1:
                        if not (m >> (s | (1 << i))) & 1:
                            return False
        return True


def enumerate_upsets(dimension: int) -> list:
    """All up-sets of the binary cube; feasible for ``dimension <= 5``.

    Depth-first over states in decreasing coordinate-sum order: a state may
    be included only when all states covering it are already in, which is
    exactly upward closure.
    """
    if not 1 <= dimension <= 5:
        raise ValueError("up-set enumeration supported for 1 <= dimension <= 5")
    n_states = 1 << dimension
    order = sorted(range(n_states), key=lambda s: -(s.bit_count()))
    results = []

    def rec(pos, member_mask):
        if pos == len(order):
            results.append(UpSet(dimension, member_mask))
            return
        s = order[pos]
        # exclusion is always allowed
        rec(pos + 1, member_mask)
        for i in range(dimension):
            if not (s >> i) & 1:
                if not (member_mask >> (s | (1 << i))) & 1:
                    return
        rec(pos + 1, member_mask | (1 << s))

    rec(0, 0)
    return results
