import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from spskit import SubspacePartitioner, SymmetryPostSelector
from spskit.basis import parse_ket, popcount
from spskit.models import build_model


def test_partitioner_labels():
    est = SubspacePartitioner(model="heis", n=5).fit(np.arange(32))
    for b, lab in enumerate(est.labels_):
        assert popcount(lab) == popcount(b)
        assert lab == min(c for c in range(32) if popcount(c) == popcount(b))
    assert len(est.subspaces_) == 6
    assert est.fit_predict(["11000", "00011"]).tolist() == [3, 3]


def test_partitioner_greedy_and_params():
    est = SubspacePartitioner(model="f4", n=10, mu=1)
    assert est.get_params()["mu"] == 1
    exact = SubspacePartitioner(model="f4", n=10).fit(np.arange(1024)).labels_
    greedy = est.fit(np.arange(1024)).labels_
    assert np.all(greedy >= exact) and np.any(greedy != exact)
    assert clone(est).get_params() == est.get_params()


def test_postselector():
    _, maps = build_model("heis", 4)
    sel = SymmetryPostSelector(psi0="1100", maps=maps).fit()
    X = ["1100", "1010", "1110", "0011"]
    assert sel.predict(X).tolist() == [True, True, False, True]
    assert sel.transform(X).tolist() == [parse_ket(k) for k in ("1100", "1010", "0011")]
    assert sel.score(X) == 0.75
    exact = SymmetryPostSelector(psi0="1100", maps=maps, method="exact").fit()
    assert exact.predict(X).tolist() == [True, True, False, True]


def test_input_validation():
    with pytest.raises(NotFittedError):
        SymmetryPostSelector().predict([0])
    sel = SymmetryPostSelector(n=4).fit()
    with pytest.raises(ValueError):
        sel.predict(["111"])
    with pytest.raises(ValueError):
        sel.predict([16])
    with pytest.raises(ValueError):
        SymmetryPostSelector(method="bogus").fit()
    with pytest.raises(ValueError):
        SubspacePartitioner(mu=0).fit([0])
