"""scikit-learn style wrappers around subspace labelling and shot filtering.

Samples are basis states, given as kets (``"0110"``), integer codes, or a
single-column array of either.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_positive_int, check_states
from .basis import parse_ket
from .editmap import DEFAULT_TOL, EditMapSet
from .models import build_model
from .pathfind import SearchCache, chi
from .sps import enumerate_sps


def _resolve_maps(est) -> EditMapSet:
    if est.maps is not None:
        if not isinstance(est.maps, EditMapSet):
            raise TypeError("maps must be an EditMapSet")
        return est.maps
    return build_model(est.model, est.n, theta=est.theta, tol=est.tol, boundary=est.boundary)[1]


class SubspacePartitioner(ClusterMixin, BaseEstimator):
    """Label basis states by the smallest state of their subspace.

    With ``mu=None`` labels are exact (full enumeration). With an integer
    ``mu`` they come from greedy descent, which may split a subspace.

    Attributes set by ``fit``: ``maps_``, ``n_``, ``labels_`` for the
    training states and ``subspaces_``, the distinct subspaces they touch.
    """

    def __init__(self, maps=None, model="heis", n=4, theta=0.1, boundary="controls",
                 tol=DEFAULT_TOL, mu=None):
        self.maps = maps
        self.model = model
        self.n = n
        self.theta = theta
        self.boundary = boundary
        self.tol = tol
        self.mu = mu

    def fit(self, X, y=None):
        self.maps_ = _resolve_maps(self)
        self.n_ = self.maps_.n
        if self.mu is not None:
            check_positive_int(self.mu, "mu")
        self._memo: dict[int, int] = {}
        self._cache = SearchCache()
        self.subspaces_ = []
        states = check_states(X, self.n_)
        self.labels_ = self._label(states, record=True)
        return self

    def _label(self, states: np.ndarray, record: bool = False) -> np.ndarray:
        out = np.empty(states.size, dtype=np.int64)
        for i, b in enumerate(states.tolist()):
            if self.mu is not None:
                out[i] = chi(self.maps_, b, self.mu, self._cache).minimum
                continue
            lab = self._memo.get(b)
            if lab is None:
                G = enumerate_sps(self.maps_, b)
                lab = G.min_element
                for c in G.members:
                    self._memo[c] = lab
                if record:
                    self.subspaces_.append(G)
            out[i] = lab
        return out

    def predict(self, X):
        check_is_fitted(self, "maps_")
        return self._label(check_states(X, self.n_))


class SymmetryPostSelector(TransformerMixin, BaseEstimator):
    """Keep measured states that share the initial state's subspace.

    ``method="greedy"`` accepts when depth-``mu`` descents from the shot and
    from ``psi0`` end at the same state; ``"exact"`` tests true membership.
    ``predict`` returns the accept mask, ``transform`` the kept states.
    """

    def __init__(self, psi0=0, maps=None, model="heis", n=4, theta=0.1, boundary="controls",
                 tol=DEFAULT_TOL, mu=1, method="greedy"):
        self.psi0 = psi0
        self.maps = maps
        self.model = model
        self.n = n
        self.theta = theta
        self.boundary = boundary
        self.tol = tol
        self.mu = mu
        self.method = method

    def fit(self, X=None, y=None):
        if self.method not in ("greedy", "exact"):
            raise ValueError(f"method must be 'greedy' or 'exact', got {self.method!r}")
        self.maps_ = _resolve_maps(self)
        self.n_ = self.maps_.n
        psi0 = parse_ket(self.psi0, self.n_) if isinstance(self.psi0, str) else int(self.psi0)
        self.psi0_ = int(check_states([psi0], self.n_)[0])
        self._cache = SearchCache()
        if self.method == "exact":
            self.subspace_ = enumerate_sps(self.maps_, self.psi0_)
        else:
            mu = check_positive_int(self.mu, "mu")
            self.target_ = chi(self.maps_, self.psi0_, mu, self._cache).minimum
        return self

    def _accept(self, b: int) -> bool:
        if self.method == "exact":
            return b in self.subspace_
        return b == self.psi0_ or chi(self.maps_, b, self.mu, self._cache).minimum == self.target_

    def predict(self, X):
        check_is_fitted(self, "maps_")
        states = check_states(X, self.n_)
        verdicts: dict[int, bool] = {}
        mask = np.empty(states.size, dtype=bool)
        for i, b in enumerate(states.tolist()):
            if b not in verdicts:
                verdicts[b] = self._accept(b)
            mask[i] = verdicts[b]
        return mask

    def transform(self, X):
        states = check_states(X, getattr(self, "n_", self.n))
        return states[self.predict(states)]

    def score(self, X, y=None):
        """Fraction of shots kept."""
        mask = self.predict(X)
        return float(mask.mean()) if mask.size else 0.0
