"""Basis string edit maps built from k-local unitaries.

An edit map records, for one local gate, which local bit patterns can be
turned into which others. It is computed once by bitizing the gate matrix,
symmetrising it and taking the boolean transitive closure; afterwards every
application is a table lookup.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .basis import Window, check_n, check_window, extract_local, scatter_local

DEFAULT_TOL = 1e-12
UNITARITY_TOL = 1e-9


class NearThresholdWarning(UserWarning):
    """A matrix entry is so close to the bitize threshold that the edit map may depend on the angle."""


@dataclass(frozen=True, eq=False)
class LocalUnitary:
    """Dense ``2**k x 2**k`` matrix acting on ``window``.

    ``matrix[r, c] = <r|U|c>`` where bit ``j`` of a pattern is qubit ``window[j]``.
    """

    matrix: np.ndarray
    window: Window
    label: str = ""

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        w = check_window(self.window)
        dim = 1 << len(w)
        if m.shape != (dim, dim):
            raise ValueError(f"{self.label or 'unitary'}: shape {m.shape} does not match window of size {len(w)}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "window", w)

    @property
    def k(self) -> int:
        return len(self.window)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(self.dim))))

    def check_unitary(self, tol: float = UNITARITY_TOL) -> "LocalUnitary":
        res = self.unitarity_residual()
        if res >= tol:
            raise ValueError(f"{self.label or 'matrix'} is not unitary: residual {res:.3g} >= {tol:g}")
        return self

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "window": list(self.window),
            "dim": self.dim,
            "entries": [[float(z.real), float(z.imag)] for z in self.matrix.ravel()],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LocalUnitary":
        dim = int(obj["dim"])
        entries = np.asarray(obj["entries"], dtype=float)
        if entries.ndim == 3:  # nested rows of [re, im]
            entries = entries.reshape(-1, 2)
        if entries.shape != (dim * dim, 2):
            raise ValueError(f"expected {dim * dim} [re, im] entries, got shape {entries.shape}")
        m = (entries[:, 0] + 1j * entries[:, 1]).reshape(dim, dim)
        return cls(m, tuple(obj["window"]), obj.get("label", ""))


def bitize(U: LocalUnitary | np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Symmetrised, reflexive boolean adjacency of a local unitary.

    Warns with :class:`NearThresholdWarning` when a nonzero entry is within
    ``10 * tol``, since the resulting map is then fragile under the gate angle.
    """
    m = U.matrix if isinstance(U, LocalUnitary) else np.asarray(U)
    mag = np.abs(m)
    fragile = (mag > 0) & (mag <= 10 * tol)
    if fragile.any():
        label = getattr(U, "label", "") or "matrix"
        warnings.warn(
            f"{label}: {int(fragile.sum())} entries lie within 10x tol={tol:g} of zero; "
            "consider bitizing at a second angle and merging the maps",
            NearThresholdWarning,
            stacklevel=2,
        )
    a = mag > tol
    a = a | a.T
    np.fill_diagonal(a, True)
    return a


def boolean_closure(A: np.ndarray) -> np.ndarray:
    """Repeat ``A <- bit[A @ A]`` until nothing changes."""
    a = np.asarray(A, dtype=bool)
    while True:
        a2 = (a.astype(np.int64) @ a.astype(np.int64)) > 0
        if np.array_equal(a2, a):
            return a2
        a = a2


def _classes_from_closure(c: np.ndarray) -> tuple[tuple[int, ...], ...]:
    seen = np.zeros(c.shape[0], dtype=bool)
    out = []
    for p in range(c.shape[0]):
        if not seen[p]:
            members = np.flatnonzero(c[p])
            seen[members] = True
            out.append(tuple(int(x) for x in members))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class EditMap:
    """Equivalence classes of local patterns on one window.

    Patterns missing from ``classes`` are treated as fixed points.
    """

    window: Window
    classes: tuple[tuple[int, ...], ...]
    label: str = ""
    _deltas: dict = field(init=False, repr=False, compare=False)
    _shift: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = check_window(self.window)
        dim = 1 << len(w)
        seen: set[int] = set()
        cls = []
        for c in self.classes:
            c = tuple(sorted(int(p) for p in c))
            for p in c:
                if not 0 <= p < dim:
                    raise ValueError(f"pattern {p} out of range for window {w}")
                if p in seen:
                    raise ValueError(f"pattern {p} appears in two classes")
                seen.add(p)
            cls.append(c)
        cls.extend((p,) for p in range(dim) if p not in seen)
        cls.sort()
        object.__setattr__(self, "window", w)
        object.__setattr__(self, "classes", tuple(cls))
        # pattern -> global XOR offsets to the other members of its class
        deltas = {}
        for c in cls:
            if len(c) > 1:
                for p in c:
                    deltas[p] = tuple(scatter_local(p ^ q, w) for q in c if q != p)
        object.__setattr__(self, "_deltas", deltas)
        contiguous = w == tuple(range(w[0], w[0] + len(w)))
        object.__setattr__(self, "_shift", w[0] if contiguous else -1)

    @property
    def k(self) -> int:
        return len(self.window)

    def class_of(self, pattern: int) -> tuple[int, ...]:
        for c in self.classes:
            if pattern in c:
                return c
        raise ValueError(f"pattern {pattern} out of range")

    def is_identity(self) -> bool:
        return not self._deltas

    def pattern(self, code: int) -> int:
        if self._shift >= 0:
            return (code >> self._shift) & ((1 << len(self.window)) - 1)
        return extract_local(code, self.window)

    def moves(self, code: int) -> tuple[int, ...]:
        """XOR offsets taking ``code`` to each of its non-trivial images."""
        return self._deltas.get(self.pattern(code), ())

    def __call__(self, code: int) -> set[int]:
        return {code, *(code ^ d for d in self.moves(code))}

    def merge(self, other: "EditMap") -> "EditMap":
        """Join of two partitions on the same window (union over gate angles)."""
        if other.window != self.window:
            raise ValueError("can only merge edit maps on the same window")
        dim = 1 << self.k
        a = np.eye(dim, dtype=bool)
        for c in (*self.classes, *other.classes):
            for p in c:
                a[p, list(c)] = True
        return EditMap(self.window, _classes_from_closure(boolean_closure(a)), self.label or other.label)

    def restrict(self, frozen: dict[int, int], label: str = "") -> "EditMap":
        """Reduced map on the window minus ``frozen`` positions (window index -> fixed bit)."""
        keep = [j for j in range(self.k) if j not in frozen]
        sub = []
        for c in self.classes:
            members = [p for p in c if all(((p >> j) & 1) == b for j, b in frozen.items())]
            if members:
                sub.append(tuple(extract_local(p, keep) for p in members))
        return EditMap(tuple(self.window[j] for j in keep), tuple(sub), label or self.label)

    def same_action(self, other: "EditMap") -> bool:
        return self.window == other.window and self.classes == other.classes

    def to_json(self) -> dict:
        k = self.k
        fmt = lambda p: format(p, f"0{k}b")[::-1]  # noqa: E731
        return {
            "label": self.label,
            "window": list(self.window),
            "classes": [[fmt(p) for p in c] for c in self.classes],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EditMap":
        def pat(x):
            return int(x[::-1], 2) if isinstance(x, str) else int(x)

        return cls(tuple(obj["window"]), tuple(tuple(pat(p) for p in c) for c in obj["classes"]), obj.get("label", ""))


def build_edit_map(U: LocalUnitary, tol: float = DEFAULT_TOL, check: bool = True) -> EditMap:
    if check:
        U.check_unitary()
    return EditMap(U.window, _classes_from_closure(boolean_closure(bitize(U, tol))), U.label)


def apply_map(m: EditMap, code: int) -> set[int]:
    return m(code)


class EditMapSet(Sequence[EditMap]):
    """Ordered collection of edit maps on an ``n``-qubit register."""

    def __init__(self, maps: Iterable[EditMap], n: int):
        self.n = check_n(n)
        self.maps = tuple(maps)
        for m in self.maps:
            if max(m.window) >= self.n:
                raise IndexError(f"window {m.window} out of range for n={self.n}")
        # drop identity maps from the hot loop; they never add neighbours
        self._active = tuple(m for m in self.maps if not m.is_identity())

    def __len__(self) -> int:
        return len(self.maps)

    def __getitem__(self, i):
        return self.maps[i]

    def __repr__(self) -> str:
        return f"EditMapSet(n={self.n}, maps={len(self.maps)})"

    def covered_qubits(self) -> set[int]:
        return {q for m in self.maps for q in m.window}

    def neighbors(self, code: int) -> Iterator[int]:
        """Images of ``code`` under single maps, excluding ``code`` itself (may repeat)."""
        for m in self._active:
            for d in m.moves(code):
                yield code ^ d

    def __call__(self, code: int) -> set[int]:
        return {code, *self.neighbors(code)}

    @property
    def fingerprint(self) -> str:
        h = hashlib.sha256(str(self.n).encode())
        for m in self.maps:
            h.update(repr((m.window, m.classes)).encode())
        return h.hexdigest()[:16]

    def to_json(self) -> dict:
        return {"n": self.n, "maps": [m.to_json() for m in self.maps]}

    @classmethod
    def from_json(cls, obj: dict) -> "EditMapSet":
        return cls([EditMap.from_json(m) for m in obj["maps"]], obj["n"])

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def apply_map_set(maps: EditMapSet, code: int) -> set[int]:
    return maps(code)
