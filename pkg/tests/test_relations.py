import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hubspoke.geometry import (
    GridPoint,
    InvalidArgument,
    LinearFunctional,
    enumerate_simplex,
    parse_constraint,
    restrict,
)
from hubspoke.optimize import ReimplMap, identity_map
from hubspoke.relations import (
    build_relation,
    compose_vertical,
    dagger,
    diagonal,
    empty_relation,
    explicit_relation,
    fiber,
    full_relation,
    graph_of,
    intersect,
    two_cell_exists,
)

FEE = LinearFunctional((10, 5, 0), units="bps")


def random_explicit(rng, K1, K3, p=0.3):
    pairs = [(x, z) for x in K1.points for z in K3.points if rng.random() < p]
    return explicit_relation(K1, K3, pairs)


def brute_compose(S, R):
    """Triple-loop oracle for relational composition."""
    out = set()
    for x, y in R.pairs:
        for y2, z in S.pairs:
            if y == y2:
                out.add((x, z))
    return out


class TestBuild:
    def test_track_menu_size_published(self):
        amb = enumerate_simplex(2, 100)
        hub = restrict(amb, [parse_constraint("x1<=0.6", 3)])
        track = build_relation(hub, amb, "track", epsilon=0.05)
        hit = track.menu_mask(np.ones(len(hub), dtype=bool))
        assert int(hit.sum()) == 4485

    def test_fee_cap_is_diagonal(self):
        amb = enumerate_simplex(2, 10)
        cap = build_relation(amb, amb, "fee_cap", tau=6, functional=FEE)
        for x, y in cap.pairs:
            assert x == y
            assert 10 * x.coords[0] + 5 * x.coords[1] <= 60

    def test_turnover_zero_is_diagonal(self):
        amb = enumerate_simplex(2, 6)
        t0 = build_relation(amb, amb, "turnover", kappa=0.0)
        diag = diagonal(amb)
        assert set(t0.pairs) == set(diag.pairs)

    def test_negative_tolerance_rejected(self):
        amb = enumerate_simplex(2, 5)
        with pytest.raises(InvalidArgument):
            build_relation(amb, amb, "track", epsilon=-0.1)
        with pytest.raises(InvalidArgument):
            build_relation(amb, amb, "turnover", kappa=-1)

    def test_resolution_mismatch_rejected(self):
        a, b = enumerate_simplex(1, 5), enumerate_simplex(1, 10)
        with pytest.raises(InvalidArgument):
            build_relation(a, b, "track", epsilon=0.1)

    def test_liquidity_and_caps_screens(self):
        amb = enumerate_simplex(2, 10)
        liq = build_relation(amb, amb, "liquidity_cap", alpha=0.3, illiquid=(2,))
        assert all(y.coords[2] <= 3 for _, y in liq.pairs)
        caps = build_relation(amb, amb, "position_caps", caps=(1.0, 0.5, 1.0))
        assert all(y.coords[1] <= 5 for _, y in caps.pairs)
        maint = build_relation(amb, amb, "maintenance", kappa=4.0, costs=(10, 2, 0))
        assert all(10 * y.coords[0] + 2 * y.coords[1] <= 40 for _, y in maint.pairs)


class TestComposition:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        K = enumerate_simplex(1, 4)
        R = random_explicit(rng, K, K)
        S = random_explicit(rng, K, K)
        assert set(compose_vertical(S, R).pairs) == brute_compose(S, R)

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_associativity(self, seed):
        rng = np.random.default_rng(seed)
        K = enumerate_simplex(1, 4)
        R = random_explicit(rng, K, K)
        S = random_explicit(rng, K, K)
        T = random_explicit(rng, K, K)
        left = compose_vertical(T, compose_vertical(S, R))
        right = compose_vertical(compose_vertical(T, S), R)
        assert set(left.pairs) == set(right.pairs)

    def test_diagonal_is_unit(self):
        K = enumerate_simplex(1, 5)
        rng = np.random.default_rng(3)
        S = random_explicit(rng, K, K)
        assert set(compose_vertical(S, diagonal(K)).pairs) == set(S.pairs)
        assert set(compose_vertical(diagonal(K), S).pairs) == set(S.pairs)

    def test_track_then_turnover_against_oracle(self):
        amb = enumerate_simplex(1, 10)
        track = build_relation(amb, amb, "track", epsilon=0.10)
        turn = build_relation(amb, amb, "turnover", kappa=0.3)
        composed = compose_vertical(turn, track)
        assert set(composed.pairs) == brute_compose(turn, track)

    def test_projector_idempotent(self):
        amb = enumerate_simplex(2, 8)
        cap = build_relation(amb, amb, "fee_cap", tau=6, functional=FEE)
        assert set(compose_vertical(cap, cap).pairs) == set(cap.pairs)

    def test_space_mismatch(self):
        a = enumerate_simplex(1, 5)
        b = enumerate_simplex(2, 5)
        R = full_relation(a, a)
        S = full_relation(b, b)
        with pytest.raises(InvalidArgument):
            compose_vertical(S, R)


class TestDagger:
    def test_involution_and_diagonal(self):
        K = enumerate_simplex(1, 6)
        rng = np.random.default_rng(9)
        R = random_explicit(rng, K, K)
        assert set(dagger(dagger(R)).pairs) == set(R.pairs)
        assert set(dagger(diagonal(K)).pairs) == set(diagonal(K).pairs)

    def test_swaps_graph_pairs(self):
        K = enumerate_simplex(1, 5)
        g = graph_of(identity_map(K))
        swapped = dagger(g)
        assert set(swapped.pairs) == {(y, x) for x, y in g.pairs}

    def test_antihomomorphism(self):
        # (S . R)+ == R+ . S+
        K = enumerate_simplex(1, 4)
        rng = np.random.default_rng(4)
        R = random_explicit(rng, K, K)
        S = random_explicit(rng, K, K)
        lhs = dagger(compose_vertical(S, R))
        rhs = compose_vertical(dagger(R), dagger(S))
        assert set(lhs.pairs) == set(rhs.pairs)


class TestIntersect:
    def test_idempotent_and_top(self):
        K = enumerate_simplex(1, 6)
        rng = np.random.default_rng(1)
        R = random_explicit(rng, K, K)
        assert set(intersect(R, R).pairs) == set(R.pairs)
        assert set(intersect(R, full_relation(K, K)).pairs) == set(R.pairs)

    def test_mismatch(self):
        K1, K2 = enumerate_simplex(1, 5), enumerate_simplex(2, 5)
        with pytest.raises(InvalidArgument):
            intersect(full_relation(K1, K1), full_relation(K2, K2))


class TestFiber:
    def test_diagonal_singleton(self):
        K = enumerate_simplex(1, 5)
        p = K.points[2]
        assert fiber(diagonal(K), p) == (p,)

    def test_turnover_is_l1_ball(self):
        K = enumerate_simplex(2, 10)
        kappa = 2 / 10
        R = build_relation(K, K, "turnover", kappa=kappa)
        x = GridPoint((3, 3, 4), 10)
        got = set(fiber(R, x))
        oracle = {y for y in K.points
                  if sum(abs(a - b) for a, b in zip(x.coords, y.coords)) <= 2}
        assert got == oracle

    def test_empty_relation(self):
        K = enumerate_simplex(1, 5)
        assert fiber(empty_relation(K, K), K.points[0]) == ()

    def test_outside_domain(self):
        K = restrict(enumerate_simplex(1, 5), [parse_constraint("x1<=0.4", 2)])
        R = diagonal(K)
        with pytest.raises(InvalidArgument):
            fiber(R, GridPoint((5, 0), 5))


class TestGraph:
    def test_identity_graph_is_diagonal(self):
        K = enumerate_simplex(1, 6)
        assert set(graph_of(identity_map(K)).pairs) == set(diagonal(K).pairs)

    def test_aggregation_graph_published_count(self):
        hub = enumerate_simplex(2, 10)
        spoke = enumerate_simplex(1, 10)
        f = ReimplMap(hub, spoke, "affine",
                      matrix=np.array([[1, 1, 0], [0, 0, 1]], float), name="agg")
        g = graph_of(f)
        assert len(g.pairs) == 66
        firsts = [x for x, _ in g.pairs]
        assert len(set(firsts)) == 66  # one pair per hub point

    def test_constant_map_shares_second_component(self):
        K = enumerate_simplex(2, 6)
        bary = ReimplMap(K, K, "affine", matrix=np.zeros((3, 3)),
                         offset=np.full(3, 1 / 3), name="const")
        g = graph_of(bary)
        seconds = {tuple(np.round(img, 9)) for _, img in g.graph_pairs}
        assert len(seconds) == 1

    def test_map_not_into_codomain(self):
        K = enumerate_simplex(1, 4)
        sub = restrict(K, [parse_constraint("x1<=0.5", 2)])
        with pytest.raises(InvalidArgument):
            graph_of(identity_map_into(K, sub))


def identity_map_into(domain, codomain):
    return ReimplMap(domain, codomain, "affine", matrix=np.eye(domain.n + 1),
                     name="bad", check_into=False)


class TestTwoCell:
    def test_identity_square_reduces_to_inclusion(self):
        K = enumerate_simplex(1, 5)
        rng = np.random.default_rng(7)
        R = random_explicit(rng, K, K, p=0.4)
        idm = identity_map(K)
        assert two_cell_exists(idm, idm, R, R)
        assert two_cell_exists(idm, idm, R, full_relation(K, K))

    def test_witness_when_not_included(self):
        K = enumerate_simplex(1, 5)
        R = full_relation(K, K)
        S = empty_relation(K, K)
        idm = identity_map(K)
        assert not two_cell_exists(idm, idm, R, S)

    def test_monotone_in_s_antitone_in_r(self):
        K = enumerate_simplex(1, 6)
        idm = identity_map(K)
        R_small = build_relation(K, K, "turnover", kappa=0.2)
        R_big = build_relation(K, K, "turnover", kappa=0.5)
        S = build_relation(K, K, "turnover", kappa=0.5)
        S_big = build_relation(K, K, "turnover", kappa=0.9)
        assert two_cell_exists(idm, idm, R_small, S)
        assert two_cell_exists(idm, idm, R_small, S_big)   # enlarging S keeps truth
        if two_cell_exists(idm, idm, R_big, S):
            assert two_cell_exists(idm, idm, R_small, S)   # shrinking R keeps truth

    def test_fund_etf_square_with_loose_factor_tolerance(self):
        # funds -> ETFs and benchmarks -> factors are both shrink maps; the
        # square has a 2-cell when the downstream factor tolerance is looser
        # than the upstream tracking tolerance, and loses it when tightened
        K = enumerate_simplex(2, 10)
        f = ReimplMap(K, K, "affine", matrix=0.9 * np.eye(3),
                      offset=np.full(3, 0.1 / 3), name="etf")
        g = ReimplMap(K, K, "affine", matrix=0.8 * np.eye(3),
                      offset=np.full(3, 0.2 / 3), name="factor")
        R = build_relation(K, K, "track", epsilon=0.15)
        S_loose = build_relation(K, K, "track", epsilon=0.50)
        S_tight = build_relation(K, K, "track", epsilon=0.02)
        assert two_cell_exists(f, g, R, S_loose)
        assert not two_cell_exists(f, g, R, S_tight)
