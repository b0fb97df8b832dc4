"""Dense brute-force ground truth for small registers.

Everything here builds full ``2**n x 2**n`` matrices, so it is capped at a
small ``n`` and only used to cross-check the edit-map machinery.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .editmap import DEFAULT_TOL, UNITARITY_TOL, LocalUnitary, bitize
from .models import Circuit
from .sps import Subspace, enumerate_sps

MAX_ORACLE_QUBITS = 12


class OracleTooLarge(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class DenseUnitary:
    matrix: np.ndarray
    n: int

    def __post_init__(self):
        if self.matrix.shape != (1 << self.n, 1 << self.n):
            raise ValueError("matrix shape does not match n")

    def residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))

    def power(self, p: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, p)


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise OracleTooLarge(f"dense oracle refuses n={n} > {cap}")


def embed(g: LocalUnitary, n: int) -> np.ndarray:
    """Full-register matrix of a local gate."""
    N = 1 << n
    codes = np.arange(N)
    pats = np.zeros(N, dtype=np.int64)
    mask = 0
    for j, q in enumerate(g.window):
        pats |= ((codes >> q) & 1) << j
        mask |= 1 << q
    rest = codes & ~mask
    # out[r, c] = g[pat(r), pat(c)] when r and c agree off the window
    same = rest[:, None] == rest[None, :]
    return np.where(same, g.matrix[pats[:, None], pats[None, :]], 0)


def compose_step(c: Circuit, j: int = 1, cap: int = MAX_ORACLE_QUBITS) -> DenseUnitary:
    """Dense matrix of step ``j``: layer gates embedded and multiplied in application order."""
    _check_cap(c.n, cap)
    U = np.eye(1 << c.n, dtype=complex)
    for layer in c.step(j):
        for g in layer:
            U = embed(g, c.n) @ U
    out = DenseUnitary(U, c.n)
    if out.residual() >= UNITARITY_TOL:
        raise ValueError(f"composed step is not unitary (residual {out.residual():.3g})")
    return out


def compose_period(c: Circuit, cap: int = MAX_ORACLE_QUBITS) -> DenseUnitary:
    """Product of one step of every template, i.e. ``len(templates)`` consecutive steps."""
    U = np.eye(1 << c.n, dtype=complex)
    for j in range(1, len(c.templates) + 1):
        U = compose_step(c, j, cap).matrix @ U
    return DenseUnitary(U, c.n)


def oracle_partition(U: DenseUnitary | Iterable[DenseUnitary], tol: float = DEFAULT_TOL) -> list[Subspace]:
    """Connected components of the bitized state interaction graph, ordered by minimum.

    Several unitaries (e.g. the distinct steps of a circuit) are combined by
    taking the union of their graphs.
    """
    mats = [U] if isinstance(U, DenseUnitary) else list(U)
    n = mats[0].n
    adj = np.zeros((1 << n, 1 << n), dtype=bool)
    for m in mats:
        adj |= bitize(m.matrix, tol)
    k, labels = connected_components(csr_matrix(adj), directed=False)
    groups: dict[int, list[int]] = {}
    for b, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(b)
    comps = [Subspace(frozenset(g), n, min(g)) for g in groups.values()]
    return sorted(comps, key=lambda s: s.min_element)


@dataclass(frozen=True)
class Theorem1Report:
    max_violation: float
    trials: int
    worst: tuple[int, int] | None  # (psi0, p)

    def passed(self, tol: float = 1e-10) -> bool:
        return self.max_violation < tol


def verify_theorem1(c: Circuit, psi0: int | None = None, trials: int = 20, p_max: int = 8,
                    seed: int = 0, tol: float = DEFAULT_TOL, cap: int = 10) -> Theorem1Report:
    """Largest ``|<b|U^p|psi0>|`` over ``b`` outside the subspace of ``psi0``.

    Each trial draws ``p`` in ``0..p_max`` and, unless ``psi0`` is fixed, a
    random initial state.
    """
    _check_cap(c.n, cap)
    maps = c.edit_maps(tol)
    rng = np.random.default_rng(seed)
    steps = [compose_step(c, j, cap).matrix for j in range(1, len(c.templates) + 1)]
    worst, where = 0.0, None
    for _ in range(trials):
        b0 = int(rng.integers(0, 1 << c.n)) if psi0 is None else int(psi0)
        p = int(rng.integers(0, p_max + 1))
        psi = np.zeros(1 << c.n, dtype=complex)
        psi[b0] = 1.0
        for j in range(1, p + 1):
            psi = steps[j % len(steps)] @ psi
        outside = np.ones(1 << c.n, dtype=bool)
        outside[list(enumerate_sps(maps, b0).members)] = False
        v = float(np.max(np.abs(psi[outside]), initial=0.0))
        if where is None or v > worst:
            worst, where = v, (b0, p)
    return Theorem1Report(worst, trials, where)


def projector(G: Subspace | Iterable[int], n: int) -> np.ndarray:
    members = G.members if isinstance(G, Subspace) else set(G)
    d = np.zeros(1 << n)
    d[list(members)] = 1.0
    return d


def verify_projector_commutation(U: DenseUnitary, G: Subspace | Iterable[int] | Iterable[Subspace]) -> float:
    """``max |P_G U - U P_G|`` for a subspace, a set of codes, or a union of subspaces."""
    if isinstance(G, Subspace):
        members = set(G.members)
    else:
        items = list(G)
        members = set().union(*(s.members for s in items)) if items and isinstance(items[0], Subspace) else set(items)
    P = projector(members, U.n)
    m = U.matrix
    # P diagonal: (P U - U P)[r, c] = (P_r - P_c) U[r, c]
    return float(np.max(np.abs((P[:, None] - P[None, :]) * m)))
