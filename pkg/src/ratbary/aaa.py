"""Greedy set-valued rational approximation on a shared sample grid.

sv_aaa drives the usual adaptive loop: pick the worst grid point, promote it
to a support, re-solve for the common barycentric weights as the smallest
right singular vector of the divided-difference (Loewner) matrix over the
remaining points, stop when the worst weighted row norm of the error drops
below tol. All sampled columns share supports and weights, so the pole set
is common too.

Two interchangeable weight solvers exist. The reference path assembles the
full Loewner matrix every iteration and takes a dense SVD; LoewnerState is
the fast path, maintaining a compressed factorization across iterations so
each weight solve costs slim matrix-vector work instead of a tall SVD. Both
must agree (same supports, weights to 1e-10); the test suite enforces that.
"""

from dataclasses import dataclass

import numpy as np

from .barycentric import BarycentricModel, SampleGrid, node_polynomial_max
from .errors import DegenerateInputError, ExhaustionError
from .linalg import min_right_singular_vector, row_p_norms

_EPS = np.finfo(float).eps


@dataclass
class AaaConfig:
    """Knobs for one sv_aaa run.

    Attributes:
        tol: convergence threshold on the weighted row p-norm residual.
        p_norm: 2 or inf; the row norm used for residuals and greedy picks.
        max_degree: stop (flagged, not raised) once the model reaches this
            degree without converging.
        column_weights: optional positive per-column factors; the residual,
            the greedy pick and the weight solve all see column j scaled by
            column_weights[j], while snapshots stay unscaled.
        monitor_node_polynomial: multiply the residual by the node-polynomial
            max over the grid (in chart coordinates when the grid has one)
            inside the stopping test.
    """

    tol: float
    p_norm: object = np.inf
    max_degree: int = 150
    column_weights: object = None
    monitor_node_polynomial: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.p_norm not in (2, np.inf, "inf"):
            raise ValueError("p_norm must be 2 or inf")
        if self.p_norm == "inf":
            self.p_norm = np.inf
        if int(self.max_degree) < 1:
            raise ValueError("max_degree must be >= 1")
        self.max_degree = int(self.max_degree)
        if self.column_weights is not None:
            cw = np.asarray(self.column_weights, dtype=float).ravel()
            if cw.size == 0 or not np.all(np.isfinite(cw)) or np.any(cw <= 0):
                raise ValueError("column_weights must be finite and positive")
            self.column_weights = cw


def _validate_samples(f, grid):
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2:
        raise ValueError(f"samples must be 2-d, got shape {f.shape}")
    if f.shape[0] != len(grid):
        raise ValueError(
            f"samples have {f.shape[0]} rows for a grid of {len(grid)} points"
        )
    if f.size and not np.all(np.isfinite(f)):
        raise ValueError("samples contain non-finite entries")
    return f


def loewner_assemble(f, grid, support_indices):
    """Explicit divided-difference matrix over the non-support grid points.

    Entry ((j, i), nu) holds (f[i, j] - f[s_nu, j]) / (z_i - z_nu) where i
    runs over grid points outside the supports. Row blocks are ordered by
    sampled column j first, candidate point i second.

    Args:
        f: (len(grid), N) samples.
        grid: SampleGrid (or bare point array).
        support_indices: grid positions of the current supports, in order.

    Returns:
        Complex matrix of shape (N * (len(grid) - m), m).
    """
    points = grid.points if isinstance(grid, SampleGrid) else np.asarray(grid)
    f = np.asarray(f, dtype=np.complex128)
    sup = np.asarray(support_indices, dtype=np.intp)
    if sup.size == 0:
        raise ValueError("need at least one support")
    mask = np.ones(points.size, dtype=bool)
    mask[sup] = False
    cand = np.flatnonzero(mask)
    cauchy = 1.0 / (points[cand, None] - points[sup][None, :])
    # (N, nc, m) tensor, then stack the per-column blocks
    diff = f[cand, :].T[:, :, None] - f[sup, :].T[:, None, :]
    return (diff * cauchy[None, :, :]).reshape(-1, sup.size)


class LoewnerState:
    """Incrementally maintained compression of the active Loewner matrix.

    Stores a tall basis B (one block of rows per grid point, rows of retired
    grid points zeroed), an upper-triangular coefficient matrix S with
    L_active = B_active @ S, and the exact Gram W = B_active* B_active.
    Since W = U* U with U upper triangular, the m x m product U @ S shares
    its singular values and right singular vectors with the active Loewner
    matrix; that product is the reduced factor the weight solve uses.

    Appending a support costs one column build plus two slim products with
    B, so an iteration is O(N |Z| m) instead of the reference path's tall
    SVD. When row retirement erodes W (smallest eigenvalue under 0.25) the
    state rebuilds itself exactly from a fresh QR of the assembled active
    matrix; rebuilds are rare and keep the fast path numerically equivalent
    to the oracle.
    """

    _REBUILD_FLOOR = 0.25

    def __init__(self, f, grid):
        points = grid.points if isinstance(grid, SampleGrid) else np.asarray(grid)
        self.f = np.asarray(f, dtype=np.complex128)
        self.points = np.asarray(points, dtype=np.complex128)
        n_points, n_cols = self.f.shape
        self.n_points = n_points
        self.n_cols = n_cols
        self.active = np.ones(n_points, dtype=bool)
        self.support_indices = []
        self.basis = np.zeros((n_points * n_cols, 0), dtype=np.complex128)
        self.coeff = np.zeros((0, 0), dtype=np.complex128)
        self.gram = np.zeros((0, 0), dtype=np.complex128)
        self.rebuilds = 0
        self._chol = None

    @property
    def order(self):
        return len(self.support_indices)

    @property
    def reduced_factor(self):
        """m x m upper-triangular factor with the active matrix's spectrum."""
        if self.order == 0:
            raise DegenerateInputError("no supports added yet")
        u = self._upper_chol()
        return u @ self.coeff

    def add_support(self, index):
        """Retire grid point `index` from the rows, append its column."""
        index = int(index)
        if not self.active[index]:
            raise ValueError(f"grid point {index} is already a support")
        m = self.order
        if m:
            sl = slice(index * self.n_cols, (index + 1) * self.n_cols)
            removed = self.basis[sl, :]
            self.gram = self.gram - removed.conj().T @ removed
            self.basis[sl, :] = 0.0
            self._chol = None
        self.active[index] = False
        self.support_indices.append(index)

        col = self._new_column(index)
        if m == 0:
            rho = np.linalg.norm(col)
            if rho == 0.0:
                raise DegenerateInputError("first Loewner column is zero")
            self.basis = (col / rho)[:, None]
            self.coeff = np.array([[rho]], dtype=np.complex128)
            self.gram = np.array([[1.0]], dtype=np.complex128)
            self._chol = None
            return

        # a rebuild at any point below reassembles the full factorization
        # from support_indices, which already contains the new index, so the
        # incremental append must not run after one
        if self._needs_rebuild():
            self._rebuild()
            return
        pre_rebuilds = self.rebuilds
        self._upper_chol()
        if self.rebuilds != pre_rebuilds:
            return
        proj = self.basis.conj().T @ col
        x = self._gram_solve(proj)
        resid = col - self.basis @ x
        rho = np.linalg.norm(resid)
        if rho * rho <= _EPS * np.real(np.vdot(col, col)):
            # new direction almost fully inside the span; the oblique
            # projection cannot resolve it, so reorthonormalize exactly
            self._rebuild()
            return
        qnew = resid / rho
        cross = self.basis.conj().T @ qnew
        nn = np.real(np.vdot(qnew, qnew))
        k, mcur = self.coeff.shape
        gram = np.empty((k + 1, k + 1), dtype=np.complex128)
        gram[:k, :k] = self.gram
        gram[:k, k] = cross
        gram[k, :k] = cross.conj()
        gram[k, k] = nn
        self.gram = gram
        coeff = np.zeros((k + 1, mcur + 1), dtype=np.complex128)
        coeff[:k, :mcur] = self.coeff
        coeff[:k, mcur] = x
        coeff[k, mcur] = rho
        self.coeff = coeff
        self.basis = np.hstack([self.basis, qnew[:, None]])
        self._chol = None

    def weights(self):
        """Current barycentric weights: unit, phase-canonical."""
        return min_right_singular_vector(self.reduced_factor)

    def _new_column(self, index):
        cvec = np.zeros(self.n_points, dtype=np.complex128)
        act = self.active
        cvec[act] = 1.0 / (self.points[act] - self.points[index])
        col = (self.f - self.f[index, :][None, :]) * cvec[:, None]
        return col.reshape(-1)

    def _needs_rebuild(self):
        if self.order == 0:
            return False
        lam = np.linalg.eigvalsh(self.gram)[0]
        return lam < self._REBUILD_FLOOR

    def _rebuild(self):
        self.rebuilds += 1
        act = np.flatnonzero(self.active)
        sup = np.asarray(self.support_indices, dtype=np.intp)
        cauchy = 1.0 / (self.points[act, None] - self.points[sup][None, :])
        diff = self.f[act, :][:, :, None] - self.f[sup, :].T[None, :, :]
        compact = (diff * cauchy[:, None, :]).reshape(-1, sup.size)
        q, r = np.linalg.qr(compact)
        # near pool exhaustion the compact matrix is wide; the reduced QR
        # then has fewer basis columns than supports and r stays wide
        k = q.shape[1]
        basis = np.zeros((self.n_points * self.n_cols, k), np.complex128)
        view = basis.reshape(self.n_points, self.n_cols, k)
        view[act] = q.reshape(act.size, self.n_cols, k)
        self.basis = basis
        self.coeff = r
        self.gram = q.conj().T @ q
        self._chol = None

    def _upper_chol(self):
        if self._chol is None:
            try:
                self._chol = np.linalg.cholesky(self.gram, upper=True)
            except np.linalg.LinAlgError:
                self._rebuild()
                self._chol = np.linalg.cholesky(self.gram, upper=True)
        return self._chol

    def _gram_solve(self, rhs):
        u = self._upper_chol()
        y = np.linalg.solve(u.conj().T, rhs)
        return np.linalg.solve(u, y)


def residual_argmax(f, model, grid, cfg, excluded=()):
    """Worst remaining grid point under the weighted row p-norm error.

    Args:
        f: (len(grid), N) samples.
        model: current BarycentricModel.
        grid: SampleGrid.
        cfg: AaaConfig (p_norm and column_weights are read).
        excluded: grid indices left out of the scan (the supports, usually).

    Returns:
        (index, value) of the maximizer; ties break to the lowest index.

    Raises:
        ExhaustionError: every grid point is excluded.
    """
    f = _validate_samples(f, grid)
    rnorms = _weighted_row_norms(f, model, grid, cfg)
    excluded = np.asarray(list(excluded), dtype=np.intp)
    if excluded.size >= len(grid):
        raise ExhaustionError("no grid points left to scan")
    if excluded.size:
        rnorms[excluded] = -np.inf
    idx = int(np.argmax(rnorms))
    return idx, float(rnorms[idx])


def _weighted_row_norms(f, model, grid, cfg):
    points = grid.points if isinstance(grid, SampleGrid) else np.asarray(grid)
    approx, bad = model._evaluate_points(points)
    err = f - approx
    if cfg.column_weights is not None:
        err = err * cfg.column_weights[None, :]
    rnorms = row_p_norms(err, cfg.p_norm)
    if bad.size:
        rnorms[bad] = np.inf
    return rnorms


def _monitor_factor(support_points, grid, enabled):
    if not enabled:
        return 1.0
    if isinstance(grid, SampleGrid) and grid.chart is not None:
        return node_polynomial_max(grid.map_values(support_points), grid.mapped)
    pts = grid.points if isinstance(grid, SampleGrid) else np.asarray(grid)
    return node_polynomial_max(support_points, pts)


def sv_aaa(f, grid, cfg, weight_solver="fast"):
    """Adaptive shared-support rational approximation of sampled columns.

    Starts from the column-wise mean, then alternates greedy support
    insertion (worst weighted row p-norm) with a joint weight solve until
    the residual drops below cfg.tol, the degree budget runs out, or the
    candidate pool empties. Snapshots are rows of f as passed, so the model
    interpolates the data exactly at its supports even when column_weights
    skew the fit.

    Args:
        f: (len(grid), N) complex samples, one column per function.
        grid: SampleGrid with len >= 2.
        cfg: AaaConfig.
        weight_solver: "fast" (incremental LoewnerState) or "explicit"
            (assemble + dense SVD every iteration; the oracle).

    Returns:
        BarycentricModel with history of (m, res_m, argmax index) triples.
        Non-convergence is flagged on the model, never raised.
    """
    if weight_solver not in ("fast", "explicit"):
        raise ValueError(f"unknown weight_solver {weight_solver!r}")
    f = _validate_samples(f, grid)
    points = grid.points
    n_points, n_cols = f.shape
    if n_points < 2:
        raise DegenerateInputError("need at least two grid points")
    cw = cfg.column_weights
    if cw is not None and cw.size != n_cols:
        raise ValueError("column_weights length does not match column count")
    weighted = f * cw[None, :] if cw is not None else f

    mean_err = f - f.mean(axis=0)[None, :]
    if cw is not None:
        mean_err = mean_err * cw[None, :]
    first = int(np.argmax(row_p_norms(mean_err, cfg.p_norm)))

    state = LoewnerState(weighted, grid) if weight_solver == "fast" else None
    support_indices = []
    history = []
    model = None
    converged = False
    failure = None
    next_index = first
    while True:
        support_indices.append(next_index)
        if state is not None:
            state.add_support(next_index)
            w = state.weights()
        else:
            w = min_right_singular_vector(
                loewner_assemble(weighted, grid, support_indices)
            )
        sup = np.asarray(support_indices, dtype=np.intp)
        model = BarycentricModel(
            points[sup], w, f[sup, :], support_indices=sup, history=history
        )
        rnorms = _weighted_row_norms(f, model, grid, cfg)
        rnorms[sup] = -np.inf
        arg = int(np.argmax(rnorms))
        res = float(rnorms[arg])
        m = len(support_indices)
        history.append((m, res, arg))
        factor = _monitor_factor(model.supports, grid, cfg.monitor_node_polynomial)
        if res * factor < cfg.tol:
            converged = True
            break
        if m - 1 >= cfg.max_degree:
            failure = "max-degree"
            break
        if m + 1 >= n_points:
            # adding the worst point would leave no candidate rows at all
            failure = "pool-exhausted"
            break
        next_index = arg

    model.history = history
    model.converged = converged
    model.failure = failure
    return model
