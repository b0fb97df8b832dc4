import numpy as np
import pytest

from spskit.basis import parse_ket
from spskit.models import build_model
from spskit.oracle import (OracleTooLarge, compose_period, compose_step, oracle_partition,
                           verify_projector_commutation, verify_theorem1)
from spskit.sps import partition_hilbert


def test_hopping_oracle_fig1():
    c, _ = build_model("hop", 4)
    parts = oracle_partition(compose_step(c))
    assert [len(G) for G in parts] == [1, 4, 6, 4, 1]


@pytest.mark.parametrize("name,n", [("heis", 6), ("t6", 8), ("f4", 8)])
def test_theorem1_and_commutation(name, n):
    c, maps = build_model(name, n)
    assert verify_theorem1(c, trials=10, p_max=6).passed()
    U = compose_period(c)
    parts = partition_hilbert(maps)
    for G in parts[:10]:
        assert verify_projector_commutation(U, G) < 1e-12
    assert verify_projector_commutation(U, parts[1:3]) < 1e-12


def test_commutation_detects_a_wrong_subspace():
    c, maps = build_model("heis", 4)
    U = compose_step(c)
    assert verify_projector_commutation(U, {parse_ket("1100")}) > 0.01


def test_caps():
    c, _ = build_model("heis", 13)
    with pytest.raises(OracleTooLarge):
        compose_step(c)
    c, _ = build_model("heis", 11)
    with pytest.raises(OracleTooLarge):
        verify_theorem1(c)


def test_period_is_product_of_steps():
    c, _ = build_model("f4", 7)
    U = compose_period(c).matrix
    assert np.allclose(U, compose_step(c, 2).matrix @ compose_step(c, 1).matrix)
