"""Input coercion shared by the estimator layer and the command line."""
from __future__ import annotations

import numbers

import numpy as np

from .basis import check_n, parse_ket


def check_states(X, n: int) -> np.ndarray:
    """Coerce kets, codes, or an ``(m,)`` / ``(m, 1)`` array to int64 codes in range."""
    n = check_n(n)
    if isinstance(X, (str, numbers.Integral)):
        X = [X]
    items = X.ravel().tolist() if isinstance(X, np.ndarray) else list(X)
    if isinstance(X, np.ndarray) and X.ndim == 2 and X.shape[1] != 1:
        raise ValueError(f"expected a single column of states, got shape {X.shape}")
    out = np.empty(len(items), dtype=np.int64)
    for i, x in enumerate(items):
        if isinstance(x, str):
            out[i] = parse_ket(x, n)
        elif isinstance(x, numbers.Integral) or (isinstance(x, float) and float(x).is_integer()):
            v = int(x)
            if not 0 <= v < 1 << n:
                raise ValueError(f"state {v} out of range for n={n}")
            out[i] = v
        else:
            raise TypeError(f"cannot interpret {x!r} as a basis state")
    return out


def check_positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_probability(value, name: str) -> float:
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return v
