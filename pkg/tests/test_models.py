import math

import numpy as np
import pytest

from spskit.basis import domain_walls, format_ket, parse_ket, popcount
from spskit.editmap import LocalUnitary, build_edit_map
from spskit.models import (F4_TABLE, ROCKY_F4_KETS, SWAP_TABLE, T6_TABLE, DegenerateParameterWarning,
                           build_f4, build_heisenberg, build_hopping, build_model, build_t6,
                           default_initial_state, f4_gate, heisenberg_gate, rocky_initial_states,
                           t6_gate, table_edit_map)
from spskit.oracle import compose_step, embed


def test_tables_match_built_maps():
    assert build_edit_map(LocalUnitary(heisenberg_gate(0.1), (0, 1))).same_action(table_edit_map(SWAP_TABLE, (0, 1)))
    assert build_edit_map(LocalUnitary(t6_gate(), (0, 1, 2))).same_action(table_edit_map(T6_TABLE, (0, 1, 2)))
    assert build_edit_map(LocalUnitary(f4_gate(), tuple(range(5)))).same_action(table_edit_map(F4_TABLE, tuple(range(5))))


def test_t6_and_f4_examples():
    t6 = table_edit_map(T6_TABLE, (0, 1, 2))
    assert {format_ket(c, 3) for c in t6(parse_ket("011"))} == {"001", "011"}
    f4 = table_edit_map(F4_TABLE, tuple(range(5)))
    assert {format_ket(c, 5) for c in f4(parse_ket("01010"))} == {"01010", "01110"}
    assert f4(0) == {0}


def test_heisenberg_bond_classes():
    _, maps = build_heisenberg(4)
    assert all(m.classes == ((0,), (1, 2), (3,)) for m in maps)


def test_degenerate_angle_warns():
    with pytest.warns(DegenerateParameterWarning):
        build_heisenberg(2, theta=0.0)


@pytest.mark.parametrize("name", ["hop", "heis", "t6", "f4"])
def test_step_is_unitary(name):
    c, _ = build_model(name, 7)
    for j in (1, 2):
        assert compose_step(c, j).residual() < 1e-9


def test_conserved_quantities_under_maps():
    _, heis = build_heisenberg(8)
    _, t6 = build_t6(8)
    for b in range(1 << 8):
        assert all(popcount(c) == popcount(b) for c in heis(b))
        assert all(domain_walls(c, 8) == domain_walls(b, 8) for c in t6(b))
        assert t6(0) == {0}


def test_steps_commute_with_conserved_operators():
    n = 6
    codes = np.arange(1 << n)
    total_z = np.diag([n - 2 * popcount(int(b)) for b in codes]).astype(complex)
    walls = np.diag([domain_walls(int(b), n) for b in codes]).astype(complex)
    U = compose_step(build_heisenberg(n)[0]).matrix
    assert np.max(np.abs(U @ total_z - total_z @ U)) < 1e-9
    U = compose_step(build_t6(n)[0]).matrix
    assert np.max(np.abs(U @ walls - walls @ U)) < 1e-9


def test_heisenberg_gate_hand_matrix():
    th = 0.37
    u = heisenberg_gate(th)
    c, s = math.cos(th), math.sin(th)
    a, b = np.exp(0.5j * th), np.exp(-0.5j * th)
    hand = np.array([[a, 0, 0, 0], [0, b * c, 1j * b * s, 0], [0, 1j * b * s, b * c, 0], [0, 0, 0, a]])
    assert np.allclose(u, hand)


def test_hopping_applies_last_bond_first():
    c, _ = build_hopping(4)
    labels = [g.label for layer in c.step(1) for g in layer]
    assert labels == ["iswap_2", "iswap_1", "iswap_0"]


def test_boundary_conventions():
    c, _ = build_t6(6)
    centres = sorted(int(g.label.split("_")[1]) for g in c.gates())
    assert centres == [1, 2, 3, 4]
    c, maps = build_t6(6, boundary="frozen")
    assert len(c.gates()) == 6 and c.gates()[0].k in (2, 3)
    c, _ = build_f4(9)
    assert sorted(int(g.label.split("_")[1]) for g in c.gates()) == [2, 3, 4, 5, 6]
    with pytest.raises(ValueError):
        build_t6(5, boundary="padded")


def test_f4_step_alternation():
    c, _ = build_f4(9)
    even = [[int(g.label.split("_")[1]) % 3 for g in layer][0] for layer in c.step(2)]
    odd = [[int(g.label.split("_")[1]) % 3 for g in layer][0] for layer in c.step(1)]
    assert even == [1, 0, 2] and odd == [1, 2, 0]


def test_default_initial_states():
    assert format_ket(default_initial_state("heis", 5), 5) == "10101"
    assert format_ket(default_initial_state("t6", 5), 5) == "00100"
    assert format_ket(default_initial_state("f4", 7), 7) == "0010100"


def test_rocky_states():
    rocky = rocky_initial_states()
    assert parse_ket("001000011111111") in rocky
    assert parse_ket("110101000000100") in rocky
    assert all(len(k) == 15 for k in ROCKY_F4_KETS)
    assert len(rocky) == len(set(rocky)) == 12


def test_embed_matches_kron():
    g = LocalUnitary(heisenberg_gate(0.3), (1, 2))
    # C-order kron: leftmost factor is the highest qubit
    k = np.kron(np.eye(2), np.kron(_to_kron(heisenberg_gate(0.3)), np.eye(2)))
    assert np.allclose(embed(g, 4), k)


def _to_kron(u):
    # pattern bit j <-> window[j]; kron order wants window[-1] as the high bit
    perm = [int(format(p, "02b")[::-1], 2) for p in range(4)]
    return u[np.ix_(perm, perm)]
