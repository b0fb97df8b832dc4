import pytest
from hypothesis import given, strategies as st

from spskit.basis import format_ket, parse_ket
from spskit.models import build_f4, build_heisenberg, build_hopping, build_t6
from spskit.pathfind import SearchCache, chi, failure_rate, max_depth, mu_ball, verdict
from spskit.sps import enumerate_sps, subspace_labels


def naive_chi(maps, b, mu):
    """Plain re-implementation: grow the ball layer by layer, step to its minimum."""
    steps = 0
    while True:
        ball, frontier = {b}, {b}
        for _ in range(mu):
            frontier = {c for x in frontier for c in maps(x)} - ball
            ball |= frontier
        nxt = min(ball)
        if nxt == b:
            return b, steps
        b, steps = nxt, steps + 1


def test_chi_hopping_examples():
    _, maps = build_hopping(4)
    r = chi(maps, parse_ket("0011"), 1)
    assert format_ket(r.minimum, 4) == "1100" and r.depth == 4
    assert chi(maps, parse_ket("1100"), 1).depth == 0


def test_mu_ball():
    _, maps = build_hopping(4)
    assert {format_ket(c, 4) for c in mu_ball(maps, parse_ket("0011"), 1)} == {"0011", "0101"}
    with pytest.raises(ValueError):
        mu_ball(maps, 0, 0)


def test_path_min_example_heisenberg():
    _, maps = build_heisenberg(8)
    r = chi(maps, parse_ket("00001111"), 1)
    assert format_ket(r.minimum, 8) == "11110000" and r.depth == 16


def test_verdict():
    _, maps = build_heisenberg(6)
    psi0 = parse_ket("101010")
    assert verdict(maps, psi0, parse_ket("010101"), 1)
    assert not verdict(maps, psi0, parse_ket("111010"), 1)
    assert verdict(maps, psi0, psi0, 1)


@pytest.mark.parametrize("build,n,mu", [(build_t6, 8, 1), (build_t6, 8, 2), (build_f4, 9, 1), (build_f4, 9, 3)])
def test_chi_matches_naive(build, n, mu):
    _, maps = build(n)
    cache = SearchCache()
    for b in range(0, 1 << n, 3):
        r = chi(maps, b, mu, cache)
        assert (r.minimum, r.depth) == naive_chi(maps, b, mu)


def test_failure_rate_exhaustive_matches_direct_count():
    _, maps = build_f4(9)
    labels = subspace_labels(maps)
    direct = sum(naive_chi(maps, b, 1)[0] != labels[b] for b in range(1 << 9))
    fr = failure_rate(maps, 1)
    assert fr.failures == direct and fr.total == 512
    assert fr.ci_low <= fr.rate <= fr.ci_high


def test_failure_rate_sampled_is_seeded():
    _, maps = build_f4(10)
    a = failure_rate(maps, 1, sample=300, seed=5)
    b = failure_rate(maps, 1, sample=300, seed=5)
    assert a == b and a.total == 300


def test_max_depth_heisenberg():
    _, maps = build_heisenberg(6)
    depth, start = max_depth(maps, 1)
    assert depth == 9 and format_ket(start, 6) == "000111"


@given(st.integers(3, 9).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, (1 << n) - 1))),
       st.integers(1, 3))
def test_chi_invariants(args, mu):
    n, b = args
    _, maps = build_t6(n)
    r = chi(maps, b, mu)
    G = enumerate_sps(maps, b)
    assert r.minimum in G and r.minimum <= b
    # endpoint is a fixed point and the cache never changes an answer
    assert chi(maps, r.minimum, mu).minimum == r.minimum
    cache = SearchCache()
    chi(maps, r.minimum, mu, cache)
    assert chi(maps, b, mu, cache) .minimum == r.minimum
    # deeper searches never do worse on the heisenberg chain
    _, heis = build_heisenberg(n)
    assert chi(heis, b, mu).minimum == min(enumerate_sps(heis, b))
