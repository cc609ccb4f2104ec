import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hubspoke.geometry import (
    GridPoint,
    InvalidArgument,
    LatticeSpace,
    LinearConstraint,
    LinearFunctional,
    contains,
    enumerate_simplex,
    eval_functional,
    grid_point_from_vector,
    parse_constraint,
    parse_step,
    restrict,
    snap_to_lattice,
)


def c(text, n=3):
    return parse_constraint(text, n)


class TestEnumerate:
    def test_published_counts(self):
        assert len(enumerate_simplex(2, 100)) == 5151
        assert len(enumerate_simplex(2, 20)) == 231
        assert len(enumerate_simplex(0, 10)) == 1

    def test_zero_resolution_rejected(self):
        with pytest.raises(InvalidArgument):
            enumerate_simplex(2, 0)

    def test_cap_enforced(self):
        with pytest.raises(InvalidArgument):
            enumerate_simplex(7, 4)
        with pytest.raises(InvalidArgument):
            enumerate_simplex(1, 401)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(0, 4), N=st.integers(1, 30))
    def test_binomial_oracle(self, n, N):
        assert len(enumerate_simplex(n, N)) == math.comb(N + n, n)

    def test_lexicographic_order_and_dedup(self):
        pts = enumerate_simplex(2, 5).points
        assert list(pts) == sorted(set(pts))

    def test_all_points_sum_to_resolution(self):
        for p in enumerate_simplex(3, 7):
            assert sum(p.coords) == 7


class TestRestrict:
    def test_published_counts(self):
        amb = enumerate_simplex(2, 100)
        assert len(restrict(amb, [c("x1<=0.6")])) == 4331
        amb50 = enumerate_simplex(2, 50)
        assert len(restrict(amb50, [c("x1<=0.4")])) == 861

    def test_vacuous_constraint_is_identity(self):
        amb = enumerate_simplex(2, 10)
        vac = LinearConstraint((0, 0, 0), 1, "<=")
        assert restrict(amb, [vac]).points == amb.points

    def test_boundary_points_kept(self):
        # closedness: <=-boundaries are included
        amb = enumerate_simplex(2, 10)
        sub = restrict(amb, [c("x1<=0.5")])
        assert GridPoint((5, 5, 0), 10) in sub.points

    def test_dimension_mismatch(self):
        amb = enumerate_simplex(2, 10)
        with pytest.raises(InvalidArgument):
            restrict(amb, [parse_constraint("x1<=0.5", 2)])

    @settings(max_examples=25, deadline=None)
    @given(N=st.integers(2, 15),
           b1=st.sampled_from([0.2, 0.4, 0.5, 0.7]),
           b2=st.sampled_from([0.3, 0.6, 0.8]))
    def test_monotone_idempotent_commutative(self, N, b1, b2):
        amb = enumerate_simplex(2, N)
        c1, c2 = c(f"x1<={b1}"), c(f"x2<={b2}")
        once = restrict(amb, [c1])
        assert len(once) <= len(amb)
        assert restrict(once, [c1]).points == once.points
        ab = restrict(restrict(amb, [c1]), [c2])
        ba = restrict(restrict(amb, [c2]), [c1])
        both = restrict(amb, [c1, c2])
        assert ab.points == ba.points == both.points

    def test_every_point_satisfies_stored_constraints(self):
        amb = enumerate_simplex(2, 30)
        sub = restrict(amb, [c("x1<=0.35"), c("x3>=0.1")])
        for p in sub.points:
            assert all(k.satisfied_by(p) for k in sub.constraints)


class TestContains:
    def test_boundary_inclusion(self):
        # a <=-constraint keeps its boundary (closedness)
        hub = restrict(enumerate_simplex(2, 100), [c("x1<=0.6")])
        assert contains(hub, GridPoint((60, 40, 0), 100))

    def test_violation_by_one_step(self):
        hub = restrict(enumerate_simplex(2, 100), [c("x1<=0.6")])
        assert not contains(hub, GridPoint((61, 30, 9), 100))

    def test_ambient_contains_everything(self):
        amb = enumerate_simplex(2, 10)
        for p in amb.points:
            assert contains(amb, p)

    def test_resolution_mismatch(self):
        amb = enumerate_simplex(2, 10)
        with pytest.raises(InvalidArgument):
            contains(amb, GridPoint((5, 5, 10), 20))


class TestFunctional:
    def test_fee_at_pure_assets(self):
        fee = LinearFunctional((10, 5, 0), units="bps")
        assert eval_functional(fee, GridPoint((0, 100, 0), 100)) == 5
        assert eval_functional(fee, GridPoint((100, 0, 0), 100)) == 10
        assert eval_functional(fee, GridPoint((0, 0, 100), 100)) == 0

    def test_exact_rational(self):
        fee = LinearFunctional((Fraction(1, 3), Fraction(1, 7), 0))
        v = eval_functional(fee, GridPoint((1, 1, 1), 3))
        assert v == Fraction(1, 9) + Fraction(1, 21)

    def test_dimension_mismatch(self):
        fee = LinearFunctional((1, 2))
        with pytest.raises(InvalidArgument):
            eval_functional(fee, GridPoint((1, 1, 1), 3))


class TestParsing:
    def test_step(self):
        assert parse_step("1/100") == 100
        assert parse_step("0.01") == 100
        with pytest.raises(InvalidArgument):
            parse_step("0.3")

    def test_sugar_names_first_coordinate(self):
        k = parse_constraint("x1<=0.6", 3)
        assert k.coeffs == (Fraction(1), Fraction(0), Fraction(0))

    def test_coefficient_form(self):
        k = parse_constraint("1,0,-2>=0", 3)
        assert k.sense == ">=" and k.coeffs[2] == Fraction(-2)

    def test_roundtrip_dict(self):
        k = parse_constraint("x2<=3/7", 3)
        assert LinearConstraint.from_dict(k.to_dict()) == k


class TestPointsAndSnap:
    def test_grid_point_invariants(self):
        with pytest.raises(InvalidArgument):
            GridPoint((1, 2), 4)
        with pytest.raises(InvalidArgument):
            GridPoint((-1, 5), 4)

    def test_from_vector(self):
        p = grid_point_from_vector([0.25, 0.75], 4)
        assert p.coords == (1, 3)
        with pytest.raises(InvalidArgument):
            grid_point_from_vector([0.3, 0.7], 4)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 20), st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3))
    def test_snap_lands_on_lattice(self, N, raw):
        total = sum(raw)
        v = [x / total for x in raw]
        p = snap_to_lattice(v, N)
        assert sum(p.coords) == N

    def test_snap_exact_point_is_fixed(self):
        p = GridPoint((3, 7, 10), 20)
        assert snap_to_lattice(p.to_array(), 20) == p

    def test_explicit_space_round_trip(self):
        amb = enumerate_simplex(1, 5)
        sub = LatticeSpace.from_points(1, 5, amb.points[:3])
        d = sub.to_dict()
        back = LatticeSpace.from_dict(d)
        assert back.points == sub.points
