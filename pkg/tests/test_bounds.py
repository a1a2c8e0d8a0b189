"""Tests for needle polynomials, Christoffel bounds, and degree certificates."""

import math

import numpy as np
import pytest

from cdapprox.basis import BasisSpec
from cdapprox.bounds import (
    DegreeCertificate,
    NeedleSpec,
    SeparationInputs,
    delta3,
    delta_max_estimate,
    lower_bound_on_graph,
    needle_eval,
    remark_degree_quantities,
    separating_degree,
    separating_degree_from_delta3,
    separation_constant,
    upper_bound_off_graph,
)
from cdapprox.christoffel import Pseudoinverse, build_evaluator, lambda_value
from cdapprox.measures import BoxDomain, GraphMeasure, MomentMatrix, graph_moment_matrix

ERF_ONE = 0.8427007929497149


def sign_graph_matrix(d, quad=None):
    spec = BasisSpec(nvars=2, degree=d, family="legendre")
    q = quad or 2 * (d + 1)
    left = graph_moment_matrix(
        GraphMeasure(lambda x: -1.0, BoxDomain((-1.0,), (0.0,)), q), spec
    )
    right = graph_moment_matrix(
        GraphMeasure(lambda x: 1.0, BoxDomain((0.0,), (1.0,)), q), spec
    )
    return MomentMatrix(
        left.entries + right.entries,
        spec,
        "quadrature",
        "lebesgue",
        None,
        BoxDomain((-1.0,), (1.0,)),
    )


class TestNeedle:
    def test_center_is_one(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            dim = rng.integers(1, 4)
            spec = NeedleSpec(
                center=tuple(rng.uniform(-1, 1, size=dim)),
                delta=float(rng.uniform(0.1, 0.9)),
                degree=int(rng.integers(1, 31)),
            )
            assert needle_eval(spec, spec.center) == 1.0

    def test_bounded_on_unit_ball(self):
        rng = np.random.default_rng(2)
        spec = NeedleSpec(center=(0.2, -0.1), delta=0.4, degree=12)
        for _ in range(10_000):
            direction = rng.normal(size=2)
            direction /= np.linalg.norm(direction)
            z = np.array(spec.center) + rng.uniform(0, 1) * direction
            assert abs(needle_eval(spec, z)) <= 1.0 + 1e-12

    def test_decay_example(self):
        spec = NeedleSpec(center=(0.0,), delta=0.5, degree=8)
        val = needle_eval(spec, (0.7,))
        assert abs(val) <= 2.0 ** (1 - 0.5 * 8)

    def test_decay_bound_random(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            dim = int(rng.integers(1, 4))
            delta = float(rng.uniform(0.1, 0.9))
            d = int(rng.integers(1, 31))
            center = rng.uniform(-0.5, 0.5, size=dim)
            spec = NeedleSpec(tuple(center), delta, d)
            bound = 2.0 ** (1 - delta * d)
            for _ in range(40):
                direction = rng.normal(size=dim)
                direction /= np.linalg.norm(direction)
                r = rng.uniform(delta, 1.0)
                val = needle_eval(spec, center + r * direction)
                assert abs(val) <= bound + 1e-12

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            NeedleSpec((0.0,), delta=0.0, degree=3)
        with pytest.raises(ValueError):
            NeedleSpec((0.0,), delta=1.5, degree=3)
        with pytest.raises(ValueError):
            NeedleSpec((0.0,), delta=0.5, degree=0)

    def test_dimension_mismatch(self):
        spec = NeedleSpec((0.0, 0.0), 0.5, 4)
        with pytest.raises(ValueError):
            needle_eval(spec, (0.1,))


class TestClosedFormBounds:
    def test_upper_examples(self):
        assert upper_bound_off_graph(1.0, 2) == 1.0
        assert upper_bound_off_graph(0.3, 0) == 4.0
        assert upper_bound_off_graph(0.7, 0) == 4.0
        assert upper_bound_off_graph(0.5, 8) == 0.25

    def test_lower_examples(self):
        assert lower_bound_on_graph(2.0, 0, 1) == pytest.approx(0.69663, abs=1e-5)
        assert lower_bound_on_graph(2.0, 1, 1) == pytest.approx(
            lower_bound_on_graph(2.0, 0, 1) / 4.0, rel=1e-15
        )

    def test_lower_strictly_decreasing_in_degree(self):
        vals = [lower_bound_on_graph(3.0, d, 2) for d in range(12)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_erf_constant(self):
        assert abs(math.erf(1.0) - ERF_ONE) <= 1e-15

    def test_delta3_examples(self):
        assert delta3(1.0, 1.0) == 0.5
        assert delta3(1e-12, 1.0) == pytest.approx(0.0, abs=1e-11)
        assert delta3(0.25, 4.0) == pytest.approx(1.0 / 17.0, rel=1e-15)
        with pytest.raises(ValueError):
            delta3(0.0, 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            upper_bound_off_graph(0.0, 3)
        with pytest.raises(ValueError):
            lower_bound_on_graph(-1.0, 3, 1)


class TestDeltaMax:
    def test_two_points(self):
        assert delta_max_estimate([[0.0, 0.0], [1.0, 0.0]]) == 2.0

    def test_single_point(self):
        assert delta_max_estimate([[0.3, 0.4]]) == 0.0

    def test_unit_square_corners(self):
        pts = [[0, 0], [0, 1], [1, 0], [1, 1]]
        assert delta_max_estimate(pts) == pytest.approx(2 * math.sqrt(2), rel=1e-15)

    def test_bounding_box_fallback_is_conservative(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(2500, 3))
        from scipy.spatial.distance import pdist

        exact = 2.0 * float(np.max(pdist(pts)))
        assert delta_max_estimate(pts) >= exact

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            delta_max_estimate(np.empty((0, 2)))


class TestSeparatingDegree:
    def test_reference_example(self):
        cert = separating_degree_from_delta3(2.0, 1.0, 1, 64)
        assert cert.d_star_sep == 10
        assert cert.constant_c == pytest.approx(0.17416, abs=1e-5)
        rows = {d: (lhs, sep) for d, lhs, _, sep in cert.per_degree}
        assert rows[9][0] == pytest.approx(100.0 / 256.0, rel=1e-12)
        assert not rows[9][1]
        assert rows[10][0] == pytest.approx(121.0 / 1024.0, rel=1e-12)
        assert rows[10][1]

    def test_geometric_inputs_path(self):
        inp = SeparationInputs(vol_x=2.0, delta1=0.5, delta_max=0.5, n=1, d_max=128)
        cert = separating_degree(inp)
        direct = separating_degree_from_delta3(2.0, 0.5, 1, 128)
        assert cert == direct

    def test_monotone_in_delta3(self):
        stars = []
        for d3 in np.arange(0.1, 0.95, 0.1):
            cert = separating_degree_from_delta3(2.0, float(d3), 1, 256)
            assert cert.d_star_sep is not None
            stars.append(cert.d_star_sep)
        assert all(a >= b for a, b in zip(stars, stars[1:]))

    def test_not_found(self):
        cert = separating_degree_from_delta3(2.0, 0.5, 1, 1)
        assert cert.d_star_sep is None
        assert len(cert.per_degree) == 1

    def test_tail_stability_guard(self):
        # with small delta3 the floor makes lhs rise after odd degrees; the
        # certificate must not stop at a spuriously early separated degree
        cert = separating_degree_from_delta3(2.0, 0.15, 1, 512)
        d_star = cert.d_star_sep
        assert d_star is not None
        for d, _, _, sep in cert.per_degree:
            if d >= d_star:
                assert sep

    def test_consistency_with_bound_comparison(self):
        # lower > upper at degree d if and only if the table marks d separated
        for d3 in (0.2, 0.5, 0.8, 1.0):
            for vol in (0.5, 2.0):
                cert = separating_degree_from_delta3(vol, d3, 1, 40)
                for d, _, _, sep in cert.per_degree:
                    lower = lower_bound_on_graph(vol, d, 1)
                    upper = upper_bound_off_graph(d3, d)
                    assert (lower > upper) == sep

    def test_inputs_validation(self):
        with pytest.raises(ValueError):
            SeparationInputs(vol_x=-1.0, delta1=0.1, delta_max=1.0, n=1, d_max=8)
        with pytest.raises(ValueError, match="exceeds"):
            SeparationInputs(vol_x=1.0, delta1=2.0, delta_max=1.0, n=1, d_max=8)

    def test_json_shape(self):
        cert = separating_degree_from_delta3(2.0, 1.0, 1, 12)
        obj = cert.to_json_obj()
        assert set(obj) == {"constant_c", "d_star_sep", "table"}
        assert len(obj["table"]) == 12
        assert set(obj["table"][0]) == {"d", "lhs", "rhs", "separated"}


class TestRemarkQuantities:
    def test_reference_d0(self):
        c = separation_constant(2.0)
        rq = remark_degree_quantities(c, 1.0, 1)
        assert rq.d0 == 0
        assert 0.0 < rq.epsilon_gap <= 1.0

    def test_sufficient_d_cross_validation(self):
        # scan a parameter range; whenever the formula is declared valid its
        # ceiling must satisfy the degree inequality per the scan table
        for vol in (0.5, 1.0, 2.0, 10.0):
            c = separation_constant(vol)
            for d3 in (0.25, 0.5, 0.75, 1.0):
                rq = remark_degree_quantities(c, d3, 1)
                if rq.sufficient_d is None:
                    assert rq.invalid_reason
                    continue
                d = max(1, int(math.ceil(rq.sufficient_d)))
                cert = separating_degree_from_delta3(vol, d3, 1, d)
                assert cert.per_degree[d - 1][3]

    def test_invalid_flagged_not_raised(self):
        # epsilon <= 1 forces a nonpositive denominator in typical regimes
        rq = remark_degree_quantities(separation_constant(2.0), 0.5, 1)
        if rq.sufficient_d is None:
            assert "not positive" in rq.invalid_reason


class TestBoundsAgainstReality:
    def test_upper_bound_dominates_off_graph_values(self):
        # off-graph variety points (x, -sign(x)) with |x| >= delta1
        delta1 = 0.25
        variety = [[x, s] for x in np.linspace(-1, 1, 21) for s in (-1.0, 1.0)]
        dmax = delta_max_estimate(variety)
        d3 = delta3(delta1, dmax)
        for d in range(1, 17):
            M = sign_graph_matrix(d)
            ev = build_evaluator(M, Pseudoinverse())
            bound = upper_bound_off_graph(d3, d) * M.mass
            xs = np.linspace(-1, 1, 41)
            for x in xs[np.abs(xs) >= delta1]:
                off = lambda_value(ev, [x, -1.0 if x >= 0 else 1.0])
                assert off <= bound

    def test_lower_bound_dominated_by_on_graph_values(self):
        delta1 = 0.25
        interior = np.concatenate(
            [np.linspace(-0.75, -0.25, 11), np.linspace(0.25, 0.75, 11)]
        )
        for d in range(1, 13):
            M = sign_graph_matrix(d)
            ev = build_evaluator(M, Pseudoinverse())
            bound = lower_bound_on_graph(2.0, d, 1)
            for x in interior:
                on = lambda_value(ev, [x, 1.0 if x >= 0 else -1.0])
                assert on >= bound
