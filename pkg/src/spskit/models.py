"""The exemplar systems: hopping chain, Heisenberg-XXX, and the T6 / F4 Goldilocks QCAs.

Each builder returns a :class:`Circuit` (the gate schedule used for emulation)
and the :class:`~spskit.editmap.EditMapSet` derived from its local gates.
QCA gates are centred only where their whole window fits in the chain, so the
end qubits act purely as controls; ``boundary="frozen"`` instead centres a gate
on every qubit and reduces windows that overhang the chain to their in-range
qubits, treating the missing neighbours as fixed ``|0>``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import check_n, parse_ket, popcount
from .editmap import DEFAULT_TOL, EditMap, EditMapSet, LocalUnitary, build_edit_map

Layer = tuple[LocalUnitary, ...]

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


class DegenerateParameterWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Circuit:
    """Layered k-local gate schedule.

    ``templates`` holds one or more step templates (each a sequence of
    parallel layers); step ``j`` (1-based) uses ``templates[j % len(templates)]``.
    Layers are listed in application order.
    """

    n: int
    templates: tuple[tuple[Layer, ...], ...]
    name: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_n(self.n)
        for layers in self.templates:
            for layer in layers:
                for g in layer:
                    if max(g.window) >= self.n:
                        raise IndexError(f"gate {g.label} window {g.window} out of range for n={self.n}")

    def step(self, j: int) -> tuple[Layer, ...]:
        return self.templates[j % len(self.templates)]

    def gates(self) -> list[LocalUnitary]:
        """Distinct local gates in first-appearance order."""
        seen, out = set(), []
        for layers in self.templates:
            for layer in layers:
                for g in layer:
                    key = (g.window, g.label)
                    if key not in seen:
                        seen.add(key)
                        out.append(g)
        return out

    def edit_maps(self, tol: float = DEFAULT_TOL) -> EditMapSet:
        return EditMapSet([build_edit_map(g, tol) for g in self.gates()], self.n)


# -- local gate matrices, in local-pattern encoding (bit j <-> window[j]) -----


def iswap(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [[1, 0, 0, 0], [0, c, 1j * s, 0], [0, 1j * s, c, 0], [0, 0, 0, 1]],
        dtype=complex,
    )


def zz(theta: float) -> np.ndarray:
    """``exp(i theta Z Z / 2)``."""
    a, b = np.exp(0.5j * theta), np.exp(-0.5j * theta)
    return np.diag([a, b, b, a]).astype(complex)


def heisenberg_gate(theta: float) -> np.ndarray:
    return iswap(theta) @ zz(theta)


def activated_hadamard(k: int, center: int, active: int) -> np.ndarray:
    """Hadamard on position ``center`` when exactly ``active`` other qubits of the window are 1."""
    dim = 1 << k
    u = np.zeros((dim, dim), dtype=complex)
    cbit = 1 << center
    for c in range(dim):
        if popcount(c & ~cbit) == active:
            v = (c >> center) & 1
            base = c & ~cbit
            u[base, c] = HADAMARD[0, v]
            u[base | cbit, c] = HADAMARD[1, v]
        else:
            u[c, c] = 1.0
    return u


def restrict_matrix(u: np.ndarray, k: int, frozen: Sequence[int]) -> np.ndarray:
    """Block of ``u`` where window positions ``frozen`` hold 0."""
    mask = 0
    for j in frozen:
        mask |= 1 << j
    idx = [p for p in range(1 << k) if not p & mask]
    return u[np.ix_(idx, idx)]


def _windowed(u: np.ndarray, n: int, center: int, radius: int, label: str) -> LocalUnitary:
    k = 2 * radius + 1
    positions = [center + d for d in range(-radius, radius + 1)]
    frozen = [j for j, q in enumerate(positions) if not 0 <= q < n]
    window = tuple(q for q in positions if 0 <= q < n)
    m = restrict_matrix(u, k, frozen) if frozen else u
    return LocalUnitary(m, window, f"{label}_{center}")


# -- model builders ---------------------------------------------------------


def _check_theta(theta: float) -> None:
    if abs(math.sin(2 * theta)) < 1e-9:
        warnings.warn(
            f"theta={theta} is a degenerate angle: iSWAP entries vanish and the edit map changes",
            DegenerateParameterWarning,
            stacklevel=3,
        )


def build_hopping(n: int = 4, theta: float = 0.1, tol: float = DEFAULT_TOL):
    """Sequential iSWAP chain ``iSWAP_{01} iSWAP_{12} ... iSWAP_{n-2,n-1}``; the last bond acts first."""
    n = check_n(n)
    if n < 2:
        raise ValueError("hopping chain needs n >= 2")
    _check_theta(theta)
    gates = [LocalUnitary(iswap(theta), (i, i + 1), f"iswap_{i}") for i in range(n - 1)]
    layers = tuple((g,) for g in reversed(gates))
    c = Circuit(n, (layers,), "hop", {"theta": theta})
    return c, c.edit_maps(tol)


def build_heisenberg(n: int, theta: float = 0.1, tol: float = DEFAULT_TOL):
    """Even bonds then odd bonds of ``iSWAP(theta) ZZ(theta)``."""
    n = check_n(n)
    if n < 2:
        raise ValueError("Heisenberg chain needs n >= 2")
    _check_theta(theta)
    u = heisenberg_gate(theta)
    even = tuple(LocalUnitary(u, (i, i + 1), f"heis_{i}") for i in range(0, n - 1, 2))
    odd = tuple(LocalUnitary(u, (i, i + 1), f"heis_{i}") for i in range(1, n - 1, 2))
    layers = tuple(layer for layer in (even, odd) if layer)
    c = Circuit(n, (layers,), "heis", {"theta": theta})
    return c, c.edit_maps(tol)


def t6_gate() -> np.ndarray:
    return activated_hadamard(3, 1, 1)


def _centres(n: int, radius: int, boundary: str) -> range:
    if boundary == "controls":
        return range(radius, n - radius)
    if boundary == "frozen":
        return range(n)
    raise ValueError(f"boundary must be 'controls' or 'frozen', got {boundary!r}")


def build_t6(n: int, tol: float = DEFAULT_TOL, boundary: str = "controls"):
    """T6 QCA; one step is the centres 1, 3, 5, ... then 2, 4, 6, ... (0-based).

    With ``boundary="controls"`` the end qubits only act as controls. With
    ``"frozen"`` they are centres too, seeing a virtual ``|0>`` neighbour.
    """
    n = check_n(n)
    if n < 3:
        raise ValueError("T6 needs n >= 3")
    u = t6_gate()
    gates = {i: _windowed(u, n, i, 1, "t6") for i in _centres(n, 1, boundary)}
    first = tuple(g for i, g in gates.items() if i % 2 == 1)
    second = tuple(g for i, g in gates.items() if i % 2 == 0)
    c = Circuit(n, ((first, second),), "t6", {"boundary": boundary})
    return c, c.edit_maps(tol)


def f4_gate() -> np.ndarray:
    return activated_hadamard(5, 2, 2)


def build_f4(n: int, tol: float = DEFAULT_TOL, boundary: str = "controls"):
    """F4 QCA with centres grouped by residue mod 3.

    Even steps apply the classes {4,7,..}, {3,6,..}, {2,5,..} in that order;
    odd steps apply {4,7,..}, {2,5,..}, {3,6,..}. ``boundary`` is as in
    :func:`build_t6`; under ``"frozen"`` centres 0 and 1 join the classes of
    3 and 4.
    """
    n = check_n(n)
    if n < 5:
        raise ValueError("F4 needs n >= 5")
    u = f4_gate()
    gates = {i: _windowed(u, n, i, 2, "f4") for i in _centres(n, 2, boundary)}
    r0, r1, r2 = (tuple(g for i, g in gates.items() if i % 3 == r) for r in range(3))
    even = tuple(layer for layer in (r1, r0, r2) if layer)
    odd = tuple(layer for layer in (r1, r2, r0) if layer)
    # step index j uses templates[j % 2]
    c = Circuit(n, (even, odd), "f4", {"boundary": boundary})
    return c, c.edit_maps(tol)


MODELS: dict[str, Callable] = {
    "hop": build_hopping,
    "heis": build_heisenberg,
    "t6": build_t6,
    "f4": build_f4,
}


def build_model(name: str, n: int, theta: float = 0.1, tol: float = DEFAULT_TOL,
                boundary: str = "controls"):
    if name not in MODELS:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}")
    if name in ("hop", "heis"):
        return MODELS[name](n, theta=theta, tol=tol)
    return MODELS[name](n, tol=tol, boundary=boundary)


def default_initial_state(name: str, n: int) -> int:
    """Initial conditions used for the exemplar runs."""
    if name in ("heis", "hop"):
        return parse_ket("".join("10"[i % 2] for i in range(n)))
    if name == "t6":
        return 1 << (n // 2)
    if name == "f4":
        c = n // 2
        return (1 << (c - 1)) | (1 << (c + 1))
    raise ValueError(f"unknown model {name!r}")


# -- tabulated edit maps (local ket strings, window order) --------------------

SWAP_TABLE = [["00"], ["01", "10"], ["11"]]
T6_TABLE = [["000"], ["001", "011"], ["010"], ["100", "110"], ["101"], ["111"]]
F4_TABLE = [
    ["00011", "00111"],
    ["01001", "01101"],
    ["01010", "01110"],
    ["11000", "11100"],
    ["10010", "10110"],
    ["10001", "10101"],
]


def table_edit_map(table: list[list[str]], window: Sequence[int], label: str = "") -> EditMap:
    return EditMap(tuple(window), tuple(tuple(parse_ket(s) for s in c) for c in table), label)


ROCKY_F4_KETS = [
    "001000011111111", "011100000001000", "011110101011111", "011110000010001",
    "011101000001000", "011000000101010", "001000011111111", "011100000001000",
    "011110101011111", "011110000010001", "011101000001000", "011000000101010",
    "111111101111100", "110111111110101", "111111101010111", "111100010111110",
    "110111111010001", "110101000000100",
]


def rocky_initial_states() -> list[int]:
    """Distinct F4 (n=15) initial states drawn from subspaces with false minima, in listed order."""
    return [parse_ket(k, 15) for k in dict.fromkeys(ROCKY_F4_KETS)]
