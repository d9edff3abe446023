import numpy as np
import pytest

from ratbary.barycentric import BarycentricModel, SampleGrid, node_polynomial_max
from ratbary.errors import PoleHitError


def make_model(supports, weights, snapshots, indices=None):
    supports = np.asarray(supports, dtype=complex)
    weights = np.asarray(weights, dtype=complex)
    snapshots = np.asarray(snapshots, dtype=complex)
    if indices is None:
        indices = np.arange(len(supports))
    return BarycentricModel(supports, weights, snapshots, np.asarray(indices))


class TestSampleGrid:
    def test_basic(self):
        g = SampleGrid(np.array([0.0, 1.0, 2.0]))
        assert len(g) == 3
        assert g.chart is None

    def test_duplicate_points_rejected(self):
        with pytest.raises(ValueError):
            SampleGrid(np.array([1.0, 1.0, 2.0]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            SampleGrid(np.array([]))

    def test_real_chart_maps_endpoints(self):
        g = SampleGrid.equispaced(-3.0, 5.0, 9, axis="real")
        assert g.chart == (-3.0, 5.0, "real")
        np.testing.assert_allclose(g.mapped[0], -1.0, atol=1e-15)
        np.testing.assert_allclose(g.mapped[-1], 1.0, atol=1e-15)
        assert np.all(np.diff(g.mapped) > 0)

    def test_imag_chart(self):
        g = SampleGrid.equispaced(200.0, 30000.0, 11, axis="imag")
        assert np.allclose(g.points.real, 0.0)
        assert g.points[0] == 200j
        np.testing.assert_allclose(g.mapped[0], -1.0, atol=1e-15)
        np.testing.assert_allclose(g.mapped[-1], 1.0, atol=1e-15)

    def test_point_outside_chart_rejected(self):
        with pytest.raises(ValueError):
            SampleGrid(np.array([0.0, 2.5]), chart=(0.0, 2.0, "real"))

    def test_mapped_requires_chart(self):
        g = SampleGrid(np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            g.mapped

    def test_subgrid_keeps_chart(self):
        g = SampleGrid.equispaced(0.0, 1.0, 10)
        sub = g.subgrid(np.array([0, 4, 9]))
        assert len(sub) == 3
        assert sub.chart == g.chart
        assert sub.points[1] == g.points[4]


class TestEvaluation:
    def test_support_rows_are_bit_exact(self):
        rng = np.random.default_rng(0)
        snap = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        m = make_model([0.1, 0.5, 0.9], np.array([1, 2, 2]) / 3.0, snap)
        for i, s in enumerate(m.supports):
            out = m.evaluate(s)
            assert np.array_equal(out, snap[i])

    def test_matches_direct_formula(self):
        snap = np.array([[1.0 + 0j, 2.0], [3.0, -1.0]])
        w = np.array([0.6, 0.8])
        m = make_model([0.0, 1.0], w, snap)
        z = 0.25
        c = w / (z - m.supports)
        expected = (c @ snap) / c.sum()
        np.testing.assert_allclose(m.evaluate(z), expected, rtol=1e-15)

    def test_constant_reproduced_exactly(self):
        snap = np.full((4, 2), 3.5 + 1j)
        w = np.array([0.3, -0.5, 0.4, 0.2])
        m = make_model([0.0, 0.3, 0.7, 1.0], w / np.linalg.norm(w), snap)
        out = m.evaluate(0.12345)
        np.testing.assert_allclose(out, 3.5 + 1j, rtol=1e-14)

    def test_linear_function_with_antisymmetric_weights(self):
        # degree-1 interpolation of f(z) = z needs w0 = -w1
        s = np.array([0.0, 1.0])
        m = make_model(s, np.array([1.0, -1.0]) / np.sqrt(2), s.reshape(2, 1))
        for z in [0.5, -2.0, 3.3 + 1j]:
            np.testing.assert_allclose(m.evaluate(z)[0], z, rtol=1e-14)

    def test_pole_hit_raises_with_location(self):
        m = make_model([1.0, -1.0], np.array([1.0, 1.0]) / np.sqrt(2), np.ones((2, 1)))
        with pytest.raises(PoleHitError) as exc:
            m.evaluate(0.0)
        assert exc.value.point == 0.0

    def test_evaluate_grid_matches_pointwise(self):
        rng = np.random.default_rng(1)
        snap = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        w /= np.linalg.norm(w)
        m = make_model([0.2, 0.5, 0.8], w, snap)
        g = SampleGrid.equispaced(0.0, 1.0, 21)
        out = m.evaluate_grid(g)
        assert out.shape == (21, 4)
        for i, z in enumerate(g.points):
            np.testing.assert_allclose(out[i], m.evaluate(z), rtol=1e-13, atol=1e-15)

    def test_evaluate_grid_support_rows_exact(self):
        rng = np.random.default_rng(2)
        g = SampleGrid.equispaced(-1.0, 1.0, 11)
        snap = rng.standard_normal((2, 3)) + 0j
        m = make_model(g.points[[2, 7]], np.array([0.6, 0.8]), snap, indices=[2, 7])
        out = m.evaluate_grid(g)
        assert np.array_equal(out[2], snap[0])
        assert np.array_equal(out[7], snap[1])

    def test_degree_property(self):
        m = make_model([0.0, 1.0, 2.0], np.ones(3) / np.sqrt(3), np.ones((3, 1)))
        assert m.degree == 2

    def test_duplicate_supports_rejected(self):
        with pytest.raises(ValueError):
            make_model([0.0, 0.0], np.ones(2) / np.sqrt(2), np.ones((2, 1)))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            make_model([0.0, 1.0], np.ones(2) / np.sqrt(2), np.ones((3, 1)))


class TestNodePolynomial:
    def test_single_support(self):
        val = node_polynomial_max(np.array([0.0]), np.array([-1.0, 0.0, 1.0]))
        assert val == 1.0

    def test_two_supports(self):
        # |(z-1)(z+1)| over {0, 2}: max is |4-1| = 3
        val = node_polynomial_max(np.array([1.0, -1.0]), np.array([0.0, 2.0]))
        assert val == pytest.approx(3.0, rel=1e-15)

    def test_chebyshev_roots_attain_classic_bound(self):
        # the monic polynomial with Chebyshev roots has sup 2^(1-k) on [-1,1]
        k = 8
        roots = np.cos((2 * np.arange(k) + 1) * np.pi / (2 * k))
        grid = np.linspace(-1.0, 1.0, 4001)
        val = node_polynomial_max(roots, grid)
        bound = 2.0 ** (1 - k)
        assert val <= bound * (1 + 1e-6)
        assert val >= bound * (1 - 1e-3)

    def test_accepts_sample_grid(self):
        g = SampleGrid.equispaced(-1.0, 1.0, 101)
        v1 = node_polynomial_max(np.array([0.3]), g)
        v2 = node_polynomial_max(np.array([0.3]), g.points)
        assert v1 == v2
