import numpy as np
import pytest

from ratbary.aaa import AaaConfig, sv_aaa
from ratbary.barycentric import SampleGrid
from ratbary.errors import DegenerateInputError
from ratbary.linalg import norm_p_inf, rrqr
from ratbary.qr_aaa import (
    ColumnScaling,
    QrAaaModel,
    qr_aaa,
    reconstruct,
    scale_columns,
)


def split_form_samples(grid, n_cols, seed, kind="smooth"):
    """Exact low-rank sample matrix F(z_i, j) = sum_l g_l(z_i) a_l(j).

    Rank is bounded by the term count by construction, which makes the
    QR truncation error machine-small and gives the tests a ground truth
    independent of the code under test.
    """
    z = grid.points
    if kind == "smooth":
        terms = [np.ones_like(z), np.exp(0.7 * z), 1.0 / (z - 2.3)]
    else:
        terms = [np.exp(1j * z), 1.0 / (z - 1.9), 1.0 / (z + 2.4), z]
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal((len(terms), n_cols)) + 1j * rng.standard_normal(
        (len(terms), n_cols)
    )
    return np.column_stack(terms) @ coeffs


class TestScaleColumns:
    def test_frozen_single_column(self):
        g, scaling = scale_columns(np.array([[2j], [-4.0]]))
        np.testing.assert_array_equal(g, np.array([[0.5j], [-1.0]]))
        assert scaling.d[0] == 4.0
        assert scaling.zero_columns.size == 0

    def test_zero_column_dropped_and_recorded(self):
        f = np.array([[1.0, 0.0, 2.0], [3.0, 0.0, -1.0]])
        g, scaling = scale_columns(f)
        assert g.shape == (2, 2)
        np.testing.assert_array_equal(scaling.zero_columns, [1])
        np.testing.assert_array_equal(scaling.kept_columns, [0, 2])
        np.testing.assert_array_equal(scaling.d, [3.0, 0.0, 2.0])

    @pytest.mark.parametrize("seed", range(10))
    def test_scaled_columns_hit_unit_max_norm(self, seed):
        rng = np.random.default_rng(seed)
        f = rng.standard_normal((40, 7)) + 1j * rng.standard_normal((40, 7))
        f *= 10.0 ** rng.integers(-6, 6, size=7)
        g, scaling = scale_columns(f)
        np.testing.assert_allclose(np.abs(g).max(axis=0), 1.0, atol=1e-14)
        np.testing.assert_array_equal(scaling.d, np.abs(f).max(axis=0))

    def test_all_zero_is_degenerate(self):
        with pytest.raises(DegenerateInputError):
            scale_columns(np.zeros((5, 3)))

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            scale_columns(np.zeros((0, 0)))
        bad = np.ones((4, 2))
        bad[1, 0] = np.inf
        with pytest.raises(ValueError):
            scale_columns(bad)


class TestQrAaa:
    def test_split_form_theory_mode_meets_per_column_error(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 500)
        F = split_form_samples(grid, 200, seed=11)
        tol = 1e-8
        result = qr_aaa(F, grid, tol, tol_mode="theory", p_norm=np.inf)
        assert result.converged
        approx = result.model.evaluate_grid(grid)
        col_err = np.abs(F - approx).max(axis=0)
        assert np.all(col_err < tol * result.scaling.d)

    def test_single_column_matches_direct_run(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 300)
        f = (np.exp(grid.points) + 0.3 / (grid.points - 1.6))[:, None]
        g = f / np.abs(f).max()
        tol = 1e-9
        via_qr = qr_aaa(f, grid, tol)
        direct = sv_aaa(g, grid, AaaConfig(tol=tol))
        assert via_qr.rank == 1
        assert list(via_qr.support_indices) == list(direct.support_indices)

    def test_gamma_is_nonincreasing_and_matches_r_diagonal(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 200)
        F = split_form_samples(grid, 50, seed=3, kind="wild")
        result = qr_aaa(F, grid, 1e-8)
        assert np.all(np.diff(result.gamma) <= 1e-14)
        np.testing.assert_array_equal(
            result.gamma, np.abs(result.r.diagonal()[: result.rank])
        )

    def test_zero_columns_come_back_as_exact_zeros(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 150)
        F = split_form_samples(grid, 8, seed=5)
        F = np.insert(F, [2, 5], 0.0, axis=1)
        result = qr_aaa(F, grid, 1e-9)
        approx = result.model.evaluate_grid(grid)
        assert np.all(approx[:, [2, 6]] == 0.0)
        np.testing.assert_array_equal(result.scaling.zero_columns, [2, 6])

    def test_snapshots_are_original_rows(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 120)
        F = split_form_samples(grid, 9, seed=7)
        result = qr_aaa(F, grid, 1e-8)
        sup = result.support_indices
        np.testing.assert_array_equal(result.model.snapshots, F[sup, :])
        approx = result.model.evaluate_grid(grid)
        np.testing.assert_array_equal(approx[sup, :], F[sup, :])

    def test_duplicating_columns_leaves_supports_unchanged(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 250)
        F = split_form_samples(grid, 30, seed=2)
        base = qr_aaa(F, grid, 1e-8)
        doubled = qr_aaa(np.hstack([F, F]), grid, 1e-8)
        assert base.rank == doubled.rank
        assert list(base.support_indices) == list(doubled.support_indices)
        np.testing.assert_allclose(
            base.model.weights, doubled.model.weights, atol=1e-13
        )

    def test_validation(self):
        grid = SampleGrid.equispaced(-1.0, 1.0, 20)
        F = np.ones((20, 2), dtype=complex)
        with pytest.raises(ValueError):
            qr_aaa(F, grid, 0.0)
        with pytest.raises(ValueError):
            qr_aaa(F, grid, 1e-8, tol_mode="strict")
        with pytest.raises(ValueError):
            qr_aaa(np.ones((7, 2)), grid, 1e-8)
        with pytest.raises(DegenerateInputError):
            qr_aaa(np.zeros((20, 2)), grid, 1e-8)


class TestReconstruct:
    def setup_model(self, seed=13, n_cols=12):
        grid = SampleGrid.equispaced(-1.0, 1.0, 180)
        F = split_form_samples(grid, n_cols, seed=seed)
        g, scaling = scale_columns(F)
        fac = rrqr(g, 1e-10)
        gamma = np.abs(fac.r.diagonal()[: fac.rank])
        inner = sv_aaa(
            fac.q,
            grid,
            AaaConfig(tol=1e-10, column_weights=gamma),
        )
        return grid, F, fac, scaling, inner

    def test_supports_interpolate_exactly(self):
        grid, F, fac, scaling, inner = self.setup_model()
        model = reconstruct(
            inner, fac.r, scaling, inner.support_indices, F[inner.support_indices]
        )
        for idx in inner.support_indices:
            np.testing.assert_array_equal(model(grid.points[idx]), F[idx])

    def test_agrees_with_explicit_basis_path(self):
        grid, F, fac, scaling, inner = self.setup_model()
        model = reconstruct(
            inner, fac.r, scaling, inner.support_indices, F[inner.support_indices]
        )
        direct = model.evaluate_grid(grid)
        # the discarded-factor path: evaluate the basis-stage model, multiply
        # the coefficient factor back in, undo permutation and scaling
        q_hat = inner.evaluate_grid(grid)
        g_hat = np.empty((len(grid), fac.perm_all.size), dtype=complex)
        g_hat[:, fac.perm_all] = q_hat @ fac.r
        via_factors = np.zeros_like(F)
        kept = scaling.kept_columns
        via_factors[:, kept] = g_hat * scaling.d[kept]
        assert (
            np.abs(direct - via_factors).max()
            <= 1e-12 * np.linalg.norm(F)
        )

    def test_shape_mismatches_rejected(self):
        grid, F, fac, scaling, inner = self.setup_model()
        sup = inner.support_indices
        with pytest.raises(ValueError):
            reconstruct(inner, fac.r, scaling, sup, F[sup][:-1])
        with pytest.raises(ValueError):
            reconstruct(inner, fac.r, scaling, sup, F[sup][:, :-1])
        with pytest.raises(ValueError):
            reconstruct(inner, fac.r[:-1], scaling, sup, F[sup])


class TestTheoremProperties:
    @pytest.mark.parametrize("seed", range(20))
    def test_theory_mode_inner_bound_transfers_to_columns(self, seed):
        grid = SampleGrid.equispaced(-1.0, 1.0, 160)
        F = split_form_samples(grid, 25, seed=seed, kind="wild")
        tol = 1e-7
        result = qr_aaa(F, grid, tol, tol_mode="theory", p_norm=np.inf)
        assert result.converged
        # the basis stage must come in under tol/rank in the weighted norm
        q_hat = result.inner.evaluate_grid(grid)
        g, scaling = scale_columns(F)
        fac = rrqr(g, tol)
        weighted_gap = norm_p_inf((fac.q - q_hat) * result.gamma, np.inf)
        assert weighted_gap < tol / result.rank
        approx = result.model.evaluate_grid(grid)
        col_err = np.abs(F - approx).max(axis=0)
        keep = result.scaling.d > 0
        assert np.all(col_err[keep] < tol * result.scaling.d[keep])

    @pytest.mark.parametrize("seed", range(20))
    def test_composed_error_stays_under_twice_tol(self, seed):
        grid = SampleGrid.equispaced(-1.0, 1.0, 140)
        F = split_form_samples(grid, 18, seed=100 + seed)
        tol = 1e-6
        result = qr_aaa(F, grid, tol, tol_mode="theory", p_norm=np.inf)
        assert result.converged
        approx = result.model.evaluate_grid(grid)
        col_err = np.abs(F - approx).max(axis=0)
        assert np.all(col_err < 2 * tol * result.scaling.d)

    @pytest.mark.parametrize("seed", range(5))
    def test_two_norm_transfer(self, seed):
        # running the greedy loop at eps/sqrt(|Z|) in the (2, inf) sense
        # pushes the dense 2-norm and Frobenius relative errors under eps
        grid = SampleGrid.equispaced(-1.0, 1.0, 90)
        F = split_form_samples(grid, 6, seed=200 + seed)
        eps = 1e-6
        cfg = AaaConfig(tol=eps / np.sqrt(len(grid)) * np.linalg.norm(F, 2), p_norm=2)
        model = sv_aaa(F, grid, cfg)
        assert model.converged
        gap = F - model.evaluate_grid(grid)
        assert np.linalg.norm(gap, 2) / np.linalg.norm(F, 2) < eps
        assert np.linalg.norm(gap, "fro") / np.linalg.norm(F, "fro") < eps
