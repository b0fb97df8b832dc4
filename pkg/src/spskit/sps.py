"""Symmetry-protected subspace enumeration by breadth-first transitive closure."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .basis import format_ket, parse_ket
from .editmap import EditMapSet

DEFAULT_CAP = 1 << 28


class SubspaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Subspace:
    members: frozenset[int]
    n: int
    seed: int

    @property
    def min_element(self) -> int:
        return min(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, code: int) -> bool:
        return code in self.members

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self.members))

    def __eq__(self, other) -> bool:
        return isinstance(other, Subspace) and self.n == other.n and self.members == other.members

    def __hash__(self) -> int:
        return hash((self.n, self.members))

    def kets(self) -> list[str]:
        return [format_ket(b, self.n) for b in self]

    def dumps(self) -> str:
        """Newline-delimited kets behind a ``#`` header line."""
        head = f"# n={self.n} seed={format_ket(self.seed, self.n)} size={len(self)}"
        return "\n".join([head, *self.kets()]) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Subspace":
        header, *lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        fields = dict(tok.split("=", 1) for tok in header.lstrip("#").split())
        n = int(fields["n"])
        members = frozenset(parse_ket(ln, n) for ln in lines)
        seed = parse_ket(fields["seed"], n)
        if int(fields["size"]) != len(members):
            raise ValueError("size field disagrees with member count")
        return cls(members, n, seed)


def _bfs(maps: EditMapSet, seeds: Iterable[int], cap: int) -> set[int]:
    seen = set(seeds)
    queue = deque(seen)
    nb = maps.neighbors
    while queue:
        b = queue.popleft()
        for c in nb(b):
            if c not in seen:
                seen.add(c)
                if len(seen) > cap:
                    raise SubspaceTooLarge(f"subspace exceeds cap of {cap} states")
                queue.append(c)
    return seen


def enumerate_sps(maps: EditMapSet, psi0: int | Iterable[int], cap: int = DEFAULT_CAP) -> Subspace:
    """All basis states reachable from ``psi0`` through the edit maps.

    ``psi0`` may be a code or an iterable of codes (a superposition's support);
    the result is then the union of their subspaces.
    """
    seeds = [psi0] if isinstance(psi0, (int, np.integer)) else list(psi0)
    seeds = [int(s) for s in seeds]
    limit = 1 << maps.n
    for s in seeds:
        if not 0 <= s < limit:
            raise ValueError(f"state {s} out of range for n={maps.n}")
    members = _bfs(maps, seeds, cap)
    return Subspace(frozenset(members), maps.n, seeds[0])


def partition_hilbert(maps: EditMapSet, cap: int = DEFAULT_CAP) -> list[Subspace]:
    """Disjoint subspaces covering all ``2**n`` states, ordered by minimum element."""
    n = maps.n
    if n > 26:
        raise SubspaceTooLarge(f"refusing to sweep 2**{n} states")
    visited = bytearray(1 << n)
    out = []
    for code in range(1 << n):
        if visited[code]:
            continue
        members = _bfs(maps, [code], cap)
        for b in members:
            visited[b] = 1
        out.append(Subspace(frozenset(members), n, code))
    return out


def subspace_labels(maps: EditMapSet) -> np.ndarray:
    """Array mapping every code to the minimum element of its subspace."""
    n = maps.n
    labels = np.full(1 << n, -1, dtype=np.int64)
    for code in range(1 << n):
        if labels[code] >= 0:
            continue
        # ascending sweep: the first unvisited code is its subspace minimum
        labels[list(_bfs(maps, [code], DEFAULT_CAP))] = code
    return labels


def contains(G: Subspace, code: int) -> bool:
    return code in G.members
