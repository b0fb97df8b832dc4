import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from spskit.basis import parse_ket
from spskit.editmap import (EditMap, EditMapSet, LocalUnitary, NearThresholdWarning, apply_map,
                            apply_map_set, bitize, boolean_closure, build_edit_map)
from spskit.models import HADAMARD, activated_hadamard, build_hopping, heisenberg_gate, iswap


def kets(codes, n):
    from spskit.basis import format_ket
    return {format_ket(c, n) for c in codes}


def test_bitize_iswap():
    A = bitize(LocalUnitary(iswap(0.3), (0, 1)))
    expected = np.eye(4, dtype=bool)
    expected[1, 2] = expected[2, 1] = True
    assert np.array_equal(A, expected)


def test_bitize_identity_and_hadamard():
    assert np.array_equal(bitize(np.eye(4)), np.eye(4, dtype=bool))
    assert bitize(HADAMARD).all()


def test_bitize_warns_near_threshold():
    m = np.eye(2, dtype=complex)
    m[0, 1] = 5e-12
    with pytest.warns(NearThresholdWarning):
        bitize(m, 1e-12)


def test_boolean_closure():
    chain = np.eye(3, dtype=bool)
    chain[0, 1] = chain[1, 0] = chain[1, 2] = chain[2, 1] = True
    closed = boolean_closure(chain)
    assert closed[0, 2] and closed[2, 0]
    assert np.array_equal(boolean_closure(closed), closed)
    A = bitize(iswap(0.1))
    assert np.array_equal(boolean_closure(A), A)


def test_build_edit_map_classes():
    assert build_edit_map(LocalUnitary(iswap(0.3), (0, 1))).classes == ((0,), (1, 2), (3,))
    assert build_edit_map(LocalUnitary(heisenberg_gate(0.1), (0, 1))).classes == ((0,), (1, 2), (3,))
    t6 = build_edit_map(LocalUnitary(activated_hadamard(3, 1, 1), (0, 1, 2)))
    expect = [["000"], ["001", "011"], ["010"], ["100", "110"], ["101"], ["111"]]
    assert sorted(t6.classes) == sorted(tuple(sorted(parse_ket(k) for k in c)) for c in expect)


def test_non_unitary_rejected():
    with pytest.raises(ValueError, match="not unitary"):
        build_edit_map(LocalUnitary(np.ones((2, 2)), (0,)))
    with pytest.raises(ValueError):
        LocalUnitary(np.eye(4), (0,))


def test_apply_map_examples():
    m = build_edit_map(LocalUnitary(iswap(0.3), (1, 2)))
    assert kets(apply_map(m, parse_ket("0100")), 4) == {"0100", "0010"}
    assert apply_map(m, parse_ket("0000")) == {0}
    f4 = build_edit_map(LocalUnitary(activated_hadamard(5, 2, 2), (0, 1, 2, 3, 4)))
    assert kets(apply_map(f4, parse_ket("00011")), 5) == {"00011", "00111"}


def test_apply_map_set_hopping():
    _, maps = build_hopping(4)
    assert kets(apply_map_set(maps, parse_ket("1100")), 4) == {"1100", "1010"}
    assert kets(apply_map_set(maps, parse_ket("0110")), 4) == {"0110", "1010", "0101"}
    assert apply_map_set(maps, 0) == {0}
    assert apply_map_set(maps, 15) == {15}


def test_merge_is_partition_join():
    a = EditMap((0, 1), ((1, 2),))
    b = EditMap((0, 1), ((2, 3),))
    assert a.merge(b).classes == ((0,), (1, 2, 3))
    with pytest.raises(ValueError):
        a.merge(EditMap((1, 2), ()))


def test_restrict_freezes_positions():
    f4 = build_edit_map(LocalUnitary(activated_hadamard(5, 2, 2), (0, 1, 2, 3, 4)))
    r = f4.restrict({0: 0, 1: 0})
    assert r.window == (2, 3, 4)
    # left neighbours frozen to 00: the centre flips only when both right neighbours are set
    assert r.class_of(parse_ket("011")) == (parse_ket("011"), parse_ket("111"))
    assert r.class_of(parse_ket("010")) == (parse_ket("010"),)


def test_json_round_trips():
    U = LocalUnitary(heisenberg_gate(0.2), (3, 1), "g")
    V = LocalUnitary.from_json(json.loads(json.dumps(U.to_json())))
    assert np.allclose(U.matrix, V.matrix) and V.window == (3, 1)
    m = build_edit_map(U)
    assert EditMap.from_json(m.to_json()).same_action(m)
    _, maps = build_hopping(5)
    again = EditMapSet.from_json(json.loads(maps.dumps()))
    assert again.fingerprint == maps.fingerprint


@given(st.floats(0.01, math.pi / 2 - 0.01))
def test_edit_map_independent_of_generic_angle(theta):
    ref = build_edit_map(LocalUnitary(heisenberg_gate(0.1), (0, 1)))
    assert build_edit_map(LocalUnitary(heisenberg_gate(theta), (0, 1))).same_action(ref)


def _random_sparse_unitary(draw, k):
    """Block-diagonal unitary with random blocks on a random pattern partition."""
    dim = 1 << k
    labels = draw(st.lists(st.integers(0, dim - 1), min_size=dim, max_size=dim))
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    perm = rng.permutation(dim)
    u = np.zeros((dim, dim), dtype=complex)
    for lab in set(labels):
        idx = perm[[i for i, l in enumerate(labels) if l == lab]]
        a = rng.normal(size=(len(idx), len(idx))) + 1j * rng.normal(size=(len(idx), len(idx)))
        q, _ = np.linalg.qr(a)
        u[np.ix_(idx, idx)] = q
    return u


@given(st.integers(1, 3), st.data())
def test_classes_match_union_find(k, data):
    u = _random_sparse_unitary(data.draw, k)
    m = build_edit_map(LocalUnitary(u, tuple(range(k))))
    _, lab = connected_components(csr_matrix(np.abs(u) > 1e-12), directed=False)
    groups = {}
    for p, l in enumerate(lab):
        groups.setdefault(l, []).append(p)
    assert sorted(m.classes) == sorted(tuple(g) for g in groups.values())
