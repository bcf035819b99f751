import math

import numpy as np
import pytest

from raymoments.fields import GaussPolyField, random_field
from raymoments.ray import (
    Line,
    MomentData,
    PhasePoint,
    QuadratureRule,
    batch_transform,
    direction_grid,
    extend_J,
    householder_frame,
    interpolating_moment_callables,
    make_extend_J,
    moment_numeric,
    moment_oracle,
    oracle_moment_callables,
    random_line,
    restricted_transform,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


class TestGeometry:
    def test_line_invariants(self):
        with pytest.raises(ValueError):
            Line(np.zeros(2), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            Line(np.array([1.0, 0.1]), np.array([1.0, 0.0]))

    def test_phase_point_projection(self):
        p = PhasePoint(np.array([1.0, 2.0]), np.array([2.0, 0.0]))
        x0, u = p.project()
        assert abs(x0 @ u) < 1e-14
        assert np.linalg.norm(u) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            PhasePoint(np.zeros(2), np.zeros(2))

    def test_householder_frame_orthonormal(self):
        rng = np.random.default_rng(0)
        for n in (2, 3):
            for _ in range(10):
                xi = unit(rng.normal(size=n))
                E = householder_frame(xi)
                np.testing.assert_allclose(E.T @ E, np.eye(n - 1), atol=1e-13)
                np.testing.assert_allclose(E.T @ xi, 0.0, atol=1e-13)

    def test_direction_grid_antipodal(self):
        for n in (2, 3):
            dirs, frames = direction_grid(n, 16)
            half = 8
            np.testing.assert_allclose(dirs[half:], -dirs[:half])
            np.testing.assert_array_equal(frames[half:], frames[:half])
        with pytest.raises(ValueError):
            direction_grid(2, 15)

    def test_quadrature_validation(self):
        with pytest.raises(ValueError):
            QuadratureRule(count=4)
        with pytest.raises(ValueError):
            QuadratureRule(radius=-1.0)
        with pytest.raises(ValueError):
            QuadratureRule(scheme="simpson")


class TestMomentNumeric:
    def test_gaussian_zeroth_moment(self):
        f = GaussPolyField.scalar(2)
        rule = QuadratureRule.for_field(f)
        ln = random_line(2, np.random.default_rng(1))
        want = math.sqrt(math.pi) * math.exp(-(ln.x @ ln.x))
        assert moment_numeric(f, ln, 0, rule) == pytest.approx(want, rel=1e-12)

    def test_odd_moment_vanishes(self):
        f = GaussPolyField.scalar(2)
        rule = QuadratureRule.for_field(f)
        ln = random_line(2, np.random.default_rng(2))
        assert abs(moment_numeric(f, ln, 1, rule)) < 1e-12

    def test_second_moment(self):
        f = GaussPolyField.scalar(3)
        rule = QuadratureRule.for_field(f)
        ln = random_line(3, np.random.default_rng(3))
        want = 0.5 * math.sqrt(math.pi) * math.exp(-(ln.x @ ln.x))
        assert moment_numeric(f, ln, 2, rule) == pytest.approx(want, rel=1e-12)

    def test_truncation_warning(self):
        f = GaussPolyField.scalar(2, a=0.05)
        ln = Line(np.zeros(2), np.array([1.0, 0.0]))
        with pytest.warns(RuntimeWarning):
            moment_numeric(f, ln, 0, QuadratureRule(radius=2.0))

    def test_grid_field_path(self):
        from raymoments.fields import GridSpec
        f = GaussPolyField.scalar(2)
        g = f.sample(GridSpec(2, 128, 8.0))
        ln = Line(np.array([0.0, 0.3]), np.array([1.0, 0.0]))
        rule = QuadratureRule(radius=6.0)
        want = math.sqrt(math.pi) * math.exp(-0.09)
        assert moment_numeric(g, ln, 0, rule) == pytest.approx(want, rel=1e-5)


class TestMomentOracle:
    def test_agrees_with_quadrature(self):
        rng = np.random.default_rng(4)
        for n in (2, 3):
            for m in range(3):
                f = random_field(n, m, rng)
                rule = QuadratureRule.for_field(f)
                for _ in range(20):
                    ln = random_line(n, rng)
                    for q in range(m + 1):
                        num = moment_numeric(f, ln, q, rule)
                        exact = moment_oracle(f, ln.x, ln.xi, q)
                        assert num == pytest.approx(exact, rel=1e-8, abs=1e-12)

    def test_homogeneity(self):
        rng = np.random.default_rng(5)
        f = random_field(3, 2, rng)
        x = rng.normal(size=3)
        xi = rng.normal(size=3)
        for q in range(3):
            a = moment_oracle(f, x, 2.0 * xi, q)
            b = 2.0 ** (f.m - q - 1) * moment_oracle(f, x, xi, q)
            assert a == pytest.approx(b, rel=1e-12)

    def test_potential_annihilated(self):
        rng = np.random.default_rng(6)
        u = random_field(2, 0, rng, degree=1)
        f = u.inner_derivative()
        for _ in range(20):
            ln = random_line(2, rng)
            assert abs(moment_oracle(f, ln.x, ln.xi, 0)) < 1e-12

    def test_zero_direction_rejected(self):
        f = GaussPolyField.scalar(2)
        with pytest.raises(ValueError):
            moment_oracle(f, np.zeros(2), np.zeros(2), 0)


class TestExtendJ:
    def test_identity_on_line_space(self):
        rng = np.random.default_rng(7)
        f = random_field(2, 2, rng)
        moments = oracle_moment_callables(f, 2)
        ln = random_line(2, rng)
        for q in range(3):
            got = extend_J(moments, f.m, ln.x, ln.xi, q)
            assert got == pytest.approx(moments[q](ln.x, ln.xi), rel=1e-12)

    def test_scalar_scaling(self):
        f = GaussPolyField.scalar(2)
        moments = oracle_moment_callables(f, 0)
        ln = random_line(2, np.random.default_rng(8))
        got = extend_J(moments, 0, ln.x, 2.0 * ln.xi, 0)
        assert got == pytest.approx(0.5 * moments[0](ln.x, ln.xi), rel=1e-12)

    def test_matches_oracle_at_phase_points(self):
        rng = np.random.default_rng(9)
        for n, m in [(2, 1), (2, 2), (3, 2)]:
            f = random_field(n, m, rng)
            moments = oracle_moment_callables(f, m)
            for _ in range(20):
                x = rng.uniform(-2, 2, size=n)
                xi = rng.normal(size=n)
                for q in range(m + 1):
                    got = extend_J(moments, m, x, xi, q)
                    want = moment_oracle(f, x, xi, q)
                    assert got == pytest.approx(want, rel=1e-10, abs=1e-12)

    def test_missing_moment_rejected(self):
        f = GaussPolyField.scalar(2)
        moments = oracle_moment_callables(f, 0)
        with pytest.raises(ValueError):
            extend_J(moments, 0, np.zeros(2), np.array([1.0, 0.0]), 1)


class TestLadder:
    def test_integration_by_parts(self):
        # I^l(d v) = -l I^{l-1} v, and I^0(d v) = 0
        rng = np.random.default_rng(10)
        for n in (2, 3):
            v = random_field(n, 1, rng, degree=1)
            dv = v.inner_derivative()
            for _ in range(10):
                ln = random_line(n, rng)
                assert abs(moment_oracle(dv, ln.x, ln.xi, 0)) < 1e-10
                for ell in (1, 2):
                    lhs = moment_oracle(dv, ln.x, ln.xi, ell)
                    rhs = -ell * moment_oracle(v, ln.x, ln.xi, ell - 1)
                    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-10)


class TestBatchTransform:
    def test_scalar_sinogram(self):
        f = GaussPolyField.scalar(2)
        data = batch_transform(f, 0, ndirs=8, noffsets=16)
        want = math.sqrt(math.pi) * np.exp(-data.offsets ** 2)
        for d in range(8):
            np.testing.assert_allclose(data.values[0, d], want, rtol=1e-10)

    def test_parity(self):
        rng = np.random.default_rng(11)
        for n in (2, 3):
            f = random_field(n, 2, rng)
            data = batch_transform(f, 2, ndirs=8, noffsets=4)
            half = data.ndirs // 2
            for ell in range(3):
                sign = (-1.0) ** (f.m - ell)
                np.testing.assert_allclose(
                    data.values[ell, half:], sign * data.values[ell, :half],
                    atol=1e-13 * max(1.0, np.abs(data.values[ell]).max()))

    def test_linearity(self):
        rng = np.random.default_rng(12)
        f1 = random_field(2, 1, rng)
        f2 = random_field(2, 1, rng)
        rule = QuadratureRule(radius=8.0)
        kw = dict(ndirs=4, noffsets=4, extent=4.0, rule=rule)
        a = batch_transform(f1, 1, **kw)
        b = batch_transform(f2, 1, **kw)
        c = batch_transform(f1 + f2, 1, **kw)
        np.testing.assert_allclose(c.values, a.values + b.values, atol=1e-12)

    def test_json_round_trip(self):
        f = GaussPolyField.scalar(2)
        data = batch_transform(f, 0, ndirs=4, noffsets=4)
        back = MomentData.from_json(data.to_json())
        np.testing.assert_allclose(back.values, data.values)
        np.testing.assert_allclose(back.directions, data.directions)
        assert back.quadrature == data.quadrature

    def test_line_accessor(self):
        f = GaussPolyField.scalar(2)
        data = batch_transform(f, 0, ndirs=4, noffsets=4)
        ln = data.line(1, 2)
        assert abs(ln.x @ ln.xi) < 1e-12

    def test_interpolating_callables(self):
        rng = np.random.default_rng(13)
        f = random_field(2, 1, rng)
        data = batch_transform(f, 1, ndirs=64, noffsets=64)
        calls = interpolating_moment_callables(data)
        ln = random_line(2, rng, radius=1.5)
        for ell in range(2):
            want = moment_oracle(f, ln.x, ln.xi, ell)
            assert calls[ell](ln.x, ln.xi) == pytest.approx(want, abs=2e-3)


class TestRestrictedTransform:
    def test_r_zero_is_J0(self):
        rng = np.random.default_rng(14)
        f = random_field(2, 2, rng)
        moments = oracle_moment_callables(f, 0)
        J = [lambda x, xi: extend_J(moments, f.m, x, xi, 0)]
        ln = random_line(2, rng)
        got = restricted_transform(J, (), ln.x, ln.xi, m=f.m)
        assert got == pytest.approx(moment_oracle(f, ln.x, ln.xi, 0), rel=1e-12)

    def test_rank_one_component(self):
        # m=1, r=1: (d/dxi^i) J^0 f - (d/dx^i) J^1 f = J^0 of the component f_i
        rng = np.random.default_rng(15)
        f = random_field(2, 1, rng, degree=1)
        moments = oracle_moment_callables(f, 1)
        J = make_extend_J(moments, f.m)
        Js = [lambda x, xi, q=q: J(x, xi, q) for q in range(2)]
        ln = random_line(2, rng)
        for i in range(2):
            got = restricted_transform(Js, (i,), ln.x, ln.xi, h=1e-3, m=1)
            comp = f.component_field((i,))
            want = moment_oracle(comp, ln.x, ln.xi, 0)
            assert got == pytest.approx(want, rel=1e-4, abs=1e-8)

    def test_potential_input_consistency(self):
        # f = d w: restricted data consistent with the ladder-generated J data
        rng = np.random.default_rng(16)
        w = random_field(2, 1, rng, degree=1)
        f = w.inner_derivative()
        Js = [lambda x, xi, q=q: moment_oracle(f, x, xi, q) for q in range(2)]
        ln = random_line(2, rng)
        for i in range(2):
            got = restricted_transform(Js, (i,), ln.x, ln.xi, h=1e-3, m=2)
            comp = f.component_field((i,))
            want = moment_oracle(comp, ln.x, ln.xi, 0)
            assert got == pytest.approx(want, rel=1e-4, abs=1e-8)

    def test_second_order_convergence(self):
        rng = np.random.default_rng(17)
        f = random_field(2, 2, rng, degree=1)
        Js = [lambda x, xi, q=q: moment_oracle(f, x, xi, q) for q in range(3)]
        ln = random_line(2, rng)
        comp = f.component_field((0, 1))
        want = moment_oracle(comp, ln.x, ln.xi, 0)
        errs = []
        for h in (2e-3, 1e-3):
            got = restricted_transform(Js, (0, 1), ln.x, ln.xi, h=h, m=2)
            errs.append(abs(got - want))
        ratio = errs[0] / errs[1]
        assert 3.5 < ratio < 4.5

    def test_validation(self):
        f = GaussPolyField.scalar(2)
        Js = [lambda x, xi: moment_oracle(f, x, xi, 0)]
        with pytest.raises(ValueError):
            restricted_transform(Js, (0,), np.zeros(2), np.ones(2), m=None)
        with pytest.raises(ValueError):
            restricted_transform(Js, (0, 0), np.zeros(2), np.ones(2), m=1)
        with pytest.raises(ValueError):
            restricted_transform(Js, (0,), np.zeros(2), np.ones(2), h=0.0, m=1)
