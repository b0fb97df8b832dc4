"""Bit-level helpers for computational basis states.

A basis state is a plain ``int``. Qubit ``i`` is the bit of weight ``2**i``, so
the leftmost character of a ket string is the least significant bit.
"""
from __future__ import annotations

from typing import Sequence, Tuple

MAX_QUBITS = 64

Window = Tuple[int, ...]


def check_n(n: int) -> int:
    n = int(n)
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [1, {MAX_QUBITS}], got {n}")
    return n


def parse_ket(text: str, n: int | None = None) -> int:
    """Parse a left-to-right ket string such as ``"1100"`` into its integer code.

    Surrounding ``|`` and ``>`` characters are tolerated.
    """
    s = text.strip()
    if s.startswith("|"):
        s = s[1:]
    if s.endswith(">") or s.endswith("⟩"):
        s = s[:-1]
    if n is None:
        n = len(s)
    check_n(n)
    if len(s) != n:
        raise ValueError(f"ket {text!r} has {len(s)} characters, expected {n}")
    if s.strip("01"):
        raise ValueError(f"ket {text!r} contains non-binary characters")
    # reversed string is the usual MSB-first binary literal
    return int(s[::-1], 2) if s else 0


def format_ket(code: int, n: int) -> str:
    check_n(n)
    if not 0 <= code < (1 << n):
        raise ValueError(f"code {code} out of range for n={n}")
    return format(code, f"0{n}b")[::-1]


def check_window(window: Sequence[int], n: int | None = None) -> Window:
    w = tuple(int(i) for i in window)
    if not w:
        raise ValueError("window must contain at least one qubit")
    if len(set(w)) != len(w):
        raise ValueError(f"window {w} has repeated qubits")
    if min(w) < 0:
        raise ValueError(f"window {w} has negative qubit index")
    if n is not None and max(w) >= n:
        raise IndexError(f"window {w} out of range for n={n}")
    return w


def extract_local(code: int, window: Sequence[int]) -> int:
    """Local pattern of ``code`` on ``window``: bit j of the result is qubit ``window[j]``."""
    pat = 0
    for j, q in enumerate(window):
        if q < 0:
            raise IndexError(f"qubit index {q} out of range")
        pat |= ((code >> q) & 1) << j
    return pat


def scatter_local(pattern: int, window: Sequence[int]) -> int:
    """Place the bits of a local pattern at the window's global positions."""
    out = 0
    for j, q in enumerate(window):
        out |= ((pattern >> j) & 1) << q
    return out


def window_mask(window: Sequence[int]) -> int:
    m = 0
    for q in window:
        m |= 1 << q
    return m


def replace_local(code: int, window: Sequence[int], pattern: int) -> int:
    k = len(window)
    if not 0 <= pattern < (1 << k):
        raise ValueError(f"pattern {pattern} does not fit a {k}-qubit window")
    return (code & ~window_mask(window)) | scatter_local(pattern, window)


def popcount(code: int) -> int:
    return bin(code).count("1")


def domain_walls(code: int, n: int) -> int:
    """Number of unequal neighbouring pairs in the chain padded with a 0 at both ends."""
    padded = code << 1  # virtual zero qubit at position 0, another above bit n
    return popcount((padded ^ (padded >> 1)) & ((1 << (n + 1)) - 1))
