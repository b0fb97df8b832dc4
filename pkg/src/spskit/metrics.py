"""Measurement distributions, KL-based fidelity and post-selection curves."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .basis import check_n, format_ket
from .editmap import EditMapSet
from .pathfind import SearchCache, verdict
from .sim import MeasurementRecord
from .sps import Subspace, enumerate_sps

NORM_TOL = 1e-9


class EmptyPostselection(RuntimeError):
    """Every shot was rejected, so no distribution can be formed."""


@dataclass(frozen=True, eq=False)
class Distribution:
    """Sparse probability distribution over basis states.

    ``states`` is sorted and unique; ``probs`` are the matching weights.
    """

    states: np.ndarray
    probs: np.ndarray
    n: int

    def __post_init__(self):
        check_n(self.n)
        s = np.asarray(self.states, dtype=np.int64)
        p = np.asarray(self.probs, dtype=float)
        if s.shape != p.shape or s.ndim != 1:
            raise ValueError("states and probs must be 1-D arrays of equal length")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if s.size and (np.any(np.diff(s) <= 0) or s[0] < 0 or (self.n < 63 and s[-1] >= 1 << self.n)):
            raise ValueError("states must be sorted, unique and in range")
        total = p.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        s.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "states", s)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_weights(cls, weights: Mapping[int, float], n: int) -> "Distribution":
        items = sorted((int(b), float(w)) for b, w in weights.items() if w > 0)
        s = np.array([b for b, _ in items], dtype=np.int64)
        w = np.array([x for _, x in items], dtype=float)
        if w.sum() <= 0:
            raise ValueError("weights are all zero")
        return cls(s, w / w.sum(), n)

    @classmethod
    def from_probabilities(cls, probs: np.ndarray, n: int, tol: float = 0.0) -> "Distribution":
        """From a dense length-``2**n`` vector; entries ``<= tol`` are dropped."""
        probs = np.asarray(probs, dtype=float)
        if probs.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} probabilities, got shape {probs.shape}")
        keep = np.flatnonzero(probs > tol)
        w = probs[keep]
        return cls(keep.astype(np.int64), w / w.sum(), n)

    @classmethod
    def from_shots(cls, shots: Iterable[int], n: int) -> "Distribution":
        vals, cnt = np.unique(np.asarray(list(shots) if not isinstance(shots, np.ndarray) else shots,
                                         dtype=np.int64), return_counts=True)
        if vals.size == 0:
            raise ValueError("no shots")
        return cls(vals, cnt / cnt.sum(), n)

    @property
    def weights(self) -> dict[int, float]:
        return dict(zip(self.states.tolist(), self.probs.tolist()))

    def __getitem__(self, b: int) -> float:
        i = np.searchsorted(self.states, b)
        if i < self.states.size and self.states[i] == b:
            return float(self.probs[i])
        return 0.0

    def __len__(self) -> int:
        return int(self.states.size)

    def support(self) -> set[int]:
        return set(self.states.tolist())

    def lookup(self, states: np.ndarray) -> np.ndarray:
        """Probabilities of ``states`` (zero where absent)."""
        states = np.asarray(states, dtype=np.int64)
        i = np.searchsorted(self.states, states)
        i = np.minimum(i, max(self.states.size - 1, 0))
        hit = self.states.size > 0
        out = np.zeros(states.shape, dtype=float)
        if hit:
            found = self.states[i] == states
            out[found] = self.probs[i[found]]
        return out

    def dense(self) -> np.ndarray:
        out = np.zeros(1 << self.n)
        out[self.states] = self.probs
        return out

    def mix(self, other: "Distribution", w: float) -> "Distribution":
        """``(1 - w) * self + w * other``."""
        _same_n(self, other)
        merged: dict[int, float] = {}
        for b, p in zip(self.states.tolist(), self.probs.tolist()):
            merged[b] = (1 - w) * p
        for b, p in zip(other.states.tolist(), other.probs.tolist()):
            merged[b] = merged.get(b, 0.0) + w * p
        return Distribution.from_weights(merged, self.n)

    def to_text(self) -> str:
        return "".join(f"{format_ket(b, self.n)} {p:.12g}\n" for b, p in zip(self.states, self.probs))


def _same_n(P: Distribution, Q: Distribution) -> None:
    if P.n != Q.n:
        raise ValueError(f"distributions on different registers: n={P.n} vs n={Q.n}")


def kl_divergence(P: Distribution, Q: Distribution, floor: float) -> float:
    """``sum_b P(b) ln(P(b) / max(Q(b), floor))`` over the support of ``P``."""
    _same_n(P, Q)
    if not floor > 0:
        raise ValueError(f"floor must be > 0, got {floor}")
    q = np.maximum(Q.lookup(P.states), floor)
    p = P.probs
    return float(np.sum(p * (np.log(p) - np.log(q))))


def p_irn(n: int) -> Distribution:
    n = check_n(n)
    d = 1 << n
    return Distribution(np.arange(d, dtype=np.int64), np.full(d, 1.0 / d), n)


def p_isps(G: Subspace) -> Distribution:
    members = np.array(sorted(G.members), dtype=np.int64)
    return Distribution(members, np.full(members.size, 1.0 / members.size), G.n)


def default_floor(M: int) -> float:
    return 1.0 / (10 * M)


def fidelity(P_sim: Distribution, P_ideal: Distribution, floor: float,
             reference: Distribution | None = None) -> float:
    """``1 - D(P_sim, P_ideal) / D(P_IRN, P_ideal)``.

    1 for the ideal distribution itself, 0 for uniform noise. ``reference``
    may pass a precomputed uniform distribution.
    """
    _same_n(P_sim, P_ideal)
    ref = p_irn(P_ideal.n) if reference is None else reference
    denom = kl_divergence(ref, P_ideal, floor)
    if denom <= 1e-12:
        raise ValueError("degenerate fidelity: the ideal distribution is (numerically) uniform")
    return 1.0 - kl_divergence(P_sim, P_ideal, floor) / denom


@dataclass(frozen=True)
class Postselected:
    distribution: Distribution | None
    kept: int
    total: int

    @property
    def empty(self) -> bool:
        return self.kept == 0


def postselect(rec: MeasurementRecord, accept: Callable[[int], bool]) -> Postselected:
    """Keep the shots ``accept`` approves and renormalise; rejected shots are not replaced."""
    if len(rec) == 0:
        raise ValueError("empty measurement record")
    verdicts: dict[int, bool] = {}
    keep = np.empty(len(rec), dtype=bool)
    for i, b in enumerate(rec.shots.tolist()):
        v = verdicts.get(b)
        if v is None:
            v = verdicts[b] = bool(accept(b))
        keep[i] = v
    kept = int(keep.sum())
    dist = Distribution.from_shots(rec.shots[keep], rec.n) if kept else None
    return Postselected(dist, kept, len(rec))


def greedy_acceptor(maps: EditMapSet, psi0: int, mu: int, cache: SearchCache | None = None):
    cache = SearchCache() if cache is None else cache
    return lambda b: verdict(maps, psi0, b, mu, cache)


def exact_acceptor(maps: EditMapSet, psi0: int):
    G = enumerate_sps(maps, psi0)
    return G.__contains__


@dataclass
class CurveRow:
    p: int
    F_raw: float
    F_ps: dict[str, float]
    F_isps: float
    M_kept: dict[str, int]
    M: int


@dataclass
class FidelityCurve:
    rows: list[CurveRow]
    selectors: list[str]
    floor: float
    meta: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        single = len(self.selectors) == 1
        kept = ["M_kept"] if single else [f"M_kept_{s}" for s in self.selectors]
        return ["p", "F_raw", *[f"F_ps_{s}" for s in self.selectors], "F_isps", *kept, "M"]

    def table(self) -> list[list]:
        return [[r.p, r.F_raw, *[r.F_ps[s] for s in self.selectors], r.F_isps,
                 *[r.M_kept[s] for s in self.selectors], r.M] for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        i = self.columns().index(name)
        return np.array([row[i] for row in self.table()], dtype=float)

    def csv_text(self) -> str:
        """Comment lines with ``meta`` and the floor, then the table."""
        buf = io.StringIO()
        for k, v in {**self.meta, "floor": self.floor}.items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for row in self.table():
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def write_gnuplot(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("# " + " ".join(self.columns()) + "\n")
            for row in self.table():
                fh.write(" ".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6f}"
    return str(x)


def selector_name(mu: int | str) -> str:
    return "exact" if mu == "exact" else f"mu{int(mu)}"


def fidelity_curve(
    records: Sequence[MeasurementRecord],
    ideal: Sequence[Distribution],
    maps: EditMapSet,
    psi0: int,
    mus: Sequence[int | str] = (1,),
    floor: float | None = None,
    meta: dict | None = None,
) -> FidelityCurve:
    """Raw, post-selected and subspace-noise fidelities for each record.

    ``ideal[i]`` is the noiseless distribution at ``records[i].p``. Entries
    of ``mus`` are search depths, or ``"exact"`` for true subspace membership.
    A post-selection that rejects every shot yields ``nan``.
    """
    if len(records) != len(ideal):
        raise ValueError("need one ideal distribution per record")
    if not records:
        raise ValueError("no records")
    M = max(len(r) for r in records)
    floor = default_floor(M) if floor is None else float(floor)
    n = maps.n
    ref = p_irn(n)
    isps = p_isps(enumerate_sps(maps, psi0))
    cache = SearchCache()
    acceptors = {}
    for mu in mus:
        name = selector_name(mu)
        acceptors[name] = exact_acceptor(maps, psi0) if name == "exact" else greedy_acceptor(maps, psi0, int(mu), cache)
    rows = []
    for rec, P_ideal in zip(records, ideal):
        denom = kl_divergence(ref, P_ideal, floor)
        if denom <= 1e-12:
            raise ValueError(f"degenerate fidelity at p={rec.p}: ideal distribution is uniform")

        def F(P):
            return 1.0 - kl_divergence(P, P_ideal, floor) / denom

        F_ps, kept = {}, {}
        for name, acc in acceptors.items():
            ps = postselect(rec, acc)
            kept[name] = ps.kept
            F_ps[name] = float("nan") if ps.empty else F(ps.distribution)
        rows.append(CurveRow(rec.p, F(Distribution.from_shots(rec.shots, n)), F_ps, F(isps), kept, len(rec)))
    return FidelityCurve(rows, list(acceptors), floor, dict(meta or {}))
