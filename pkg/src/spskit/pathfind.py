"""Greedy depth-limited descent to the smallest basis state of a subspace.

``chi(maps, b, mu)`` repeatedly replaces ``b`` with the minimum of its
``mu``-step neighbourhood until no smaller state is found. Two states whose
descents end at the same state certainly share a subspace; different
endpoints are only presumed to mean different subspaces.
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import binomtest

from .editmap import EditMapSet
from .sps import enumerate_sps, subspace_labels


@dataclass(frozen=True)
class SearchResult:
    start: int
    minimum: int
    depth: int
    nodes_expanded: int
    mu: int


class SearchCache:
    """Memo of finished descents, keyed by edit-map fingerprint, ``mu`` and state.

    Only states on an actual descent path are stored, so a hit always equals
    what a fresh search from that state would return.
    """

    def __init__(self):
        self._data: dict[tuple[str, int, int], tuple[int, int]] = {}
        self._lock = threading.Lock()
        self.hits = 0

    def get(self, key):
        v = self._data.get(key)
        if v is not None:
            self.hits += 1
        return v

    def put_path(self, fp: str, mu: int, path: Sequence[int], minimum: int, depth: int) -> None:
        # path[i] is i greedy steps into a descent of total length depth
        with self._lock:
            for i, b in enumerate(path):
                self._data[(fp, mu, b)] = (minimum, depth - i)

    def __len__(self) -> int:
        return len(self._data)

    def clear(self) -> None:
        self._data.clear()


def _ball(maps: EditMapSet, b: int, mu: int) -> tuple[set[int], int]:
    seen = {b}
    queue = deque([(b, 0)])
    expanded = 0
    nb = maps.neighbors
    while queue:
        c, eta = queue.popleft()
        if eta == mu:
            break  # FIFO order: everything left is at depth mu
        expanded += 1
        for d in nb(c):
            if d not in seen:
                seen.add(d)
                queue.append((d, eta + 1))
    return seen, expanded


def mu_ball(maps: EditMapSet, b: int, mu: int) -> set[int]:
    """States reachable from ``b`` with at most ``mu`` edit-map applications."""
    if mu < 1:
        raise ValueError("mu must be >= 1")
    return _ball(maps, int(b), mu)[0]


def chi(maps: EditMapSet, b0: int, mu: int, cache: SearchCache | None = None) -> SearchResult:
    if mu < 1:
        raise ValueError("mu must be >= 1")
    b0 = int(b0)
    fp = maps.fingerprint if cache is not None else ""
    path = [b0]
    curr = b0
    expanded = 0
    while True:
        if cache is not None:
            hit = cache.get((fp, mu, curr))
            if hit is not None:
                minimum, tail = hit
                break
        ball, e = _ball(maps, curr, mu)
        expanded += e
        nxt = min(ball)
        if nxt == curr:
            minimum, tail = curr, 0
            break
        curr = nxt
        path.append(curr)
    depth = len(path) - 1 + tail
    if cache is not None:
        cache.put_path(fp, mu, path, minimum, depth)
    return SearchResult(b0, minimum, depth, expanded, mu)


def verdict(maps: EditMapSet, psi0: int, bf: int, mu: int, cache: SearchCache | None = None) -> bool:
    """True ("assumed no error") when both descents end at the same state."""
    if psi0 == bf:
        return True
    return chi(maps, psi0, mu, cache).minimum == chi(maps, bf, mu, cache).minimum


@dataclass(frozen=True)
class FailureRate:
    n: int
    mu: int
    failures: int
    total: int
    ci_low: float
    ci_high: float
    seed: int | None = None

    @property
    def rate(self) -> float:
        return self.failures / self.total if self.total else 0.0

    def __float__(self) -> float:
        return self.rate


def failure_rate(
    maps: EditMapSet,
    mu: int,
    sample: int | None = None,
    seed: int = 0,
    cache: SearchCache | None = None,
) -> FailureRate:
    """Fraction of states whose descent misses the true subspace minimum.

    Exhaustive over ``2**n`` states unless ``sample`` is given, in which case
    that many states are drawn uniformly with ``seed``.
    """
    cache = SearchCache() if cache is None else cache
    n = maps.n
    if sample is None:
        labels = subspace_labels(maps)
        states: Iterable[int] = range(1 << n)
        truth = labels.__getitem__
    else:
        rng = np.random.default_rng(seed)
        states = [int(x) for x in rng.integers(0, 1 << n, size=sample, dtype=np.uint64)]
        known: dict[int, int] = {}

        def truth(b):
            if b not in known:
                G = enumerate_sps(maps, b)
                m = G.min_element
                for c in G.members:
                    known[c] = m
            return known[b]

    fails = total = 0
    for b in states:
        total += 1
        if chi(maps, b, mu, cache).minimum != truth(b):
            fails += 1
    ci = binomtest(fails, total).proportion_ci(method="wilson") if total else None
    return FailureRate(n, mu, fails, total, ci.low if ci else 0.0, ci.high if ci else 0.0,
                       None if sample is None else seed)


def max_depth(maps: EditMapSet, mu: int, states: Iterable[int] | None = None,
              cache: SearchCache | None = None) -> tuple[int, int]:
    """Longest greedy descent as ``(depth, start_state)``."""
    cache = SearchCache() if cache is None else cache
    states = range(1 << maps.n) if states is None else states
    best, arg = -1, 0
    for b in states:
        d = chi(maps, b, mu, cache).depth
        if d > best:
            best, arg = d, b
    return best, arg
