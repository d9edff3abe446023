"""Rational approximation of a sample matrix through an orthonormal basis.

Running the greedy set-valued loop directly on a wide sample matrix wastes
work: the loop's cost grows with the column count, yet the columns of any
interesting sample matrix are highly collinear. The pipeline here exploits
that. Columns are scaled to unit max-norm, a truncated pivoted QR extracts
an orthonormal basis of the numerical column space, and the greedy loop runs
on the basis alone with per-direction importance weights taken from the
triangular factor's diagonal. The resulting supports and weights are valid
for the original matrix, so the last step swaps the basis snapshots for the
original sample rows and discards the factorization.
"""

import numpy as np

from .aaa import AaaConfig, _validate_samples, sv_aaa
from .barycentric import BarycentricModel
from .errors import DegenerateInputError
from .linalg import rrqr


class ColumnScaling:
    """Record of the per-column normalization applied before factorization.

    Attributes:
        d: max-norm of every original column (length = original column count).
        zero_columns: sorted indices of all-zero columns, which are dropped
            before factorization and reattached as exact zeros afterwards.
    """

    def __init__(self, d, zero_columns):
        self.d = np.asarray(d, dtype=np.float64).ravel()
        self.zero_columns = np.asarray(zero_columns, dtype=np.intp).ravel()

    @property
    def n_columns(self):
        return self.d.size

    @property
    def kept_columns(self):
        return np.flatnonzero(self.d > 0.0)


def scale_columns(f):
    """Normalize every column of ``f`` to unit max-norm.

    Returns the scaled matrix (zero columns removed) together with the
    ColumnScaling needed to undo the operation. Raises DegenerateInputError
    when no column survives.
    """
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2 or f.size == 0:
        raise ValueError(f"need a nonempty 2-d sample matrix, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("samples contain non-finite entries")
    d = np.abs(f).max(axis=0)
    kept = np.flatnonzero(d > 0.0)
    if kept.size == 0:
        raise DegenerateInputError("every column is identically zero")
    scaling = ColumnScaling(d, np.flatnonzero(d == 0.0))
    return f[:, kept] / d[kept], scaling


class QrAaaModel:
    """A barycentric model of the full sample matrix plus its provenance.

    Attributes:
        model: BarycentricModel over the original columns; its snapshots are
            rows of the input matrix, so it interpolates exactly.
        scaling: the column normalization record.
        rank: number of basis columns the factorization kept.
        gamma: importance weight of each basis direction, nonincreasing.
        tol_mode: "practical" (basis stage run at tol) or "theory" (tol/rank).
        inner: the model the greedy loop produced over the basis columns.
        r: triangular coefficient factor, columns in pivot order.
        perm_all: column permutation of ``r`` relative to the scaled matrix.
    """

    def __init__(self, model, scaling, rank, gamma, tol_mode, inner, r, perm_all):
        self.model = model
        self.scaling = scaling
        self.rank = rank
        self.gamma = gamma
        self.tol_mode = tol_mode
        self.inner = inner
        self.r = r
        self.perm_all = perm_all

    @property
    def support_indices(self):
        return self.model.support_indices

    @property
    def degree(self):
        return self.model.degree

    @property
    def converged(self):
        return self.model.converged

    @property
    def history(self):
        return self.model.history

    def __repr__(self):
        return (
            f"QrAaaModel(degree={self.degree}, rank={self.rank}, "
            f"columns={self.scaling.n_columns}, converged={self.converged})"
        )


def reconstruct(model_q, r, scaling, support_indices, f_rows):
    """Re-express a basis-stage model as a model of the original matrix.

    The supports and weights carry over unchanged; only the snapshots are
    replaced by ``f_rows``, the rows of the original sample matrix at the
    selected supports. After this call the factors q and r can be dropped.
    """
    f_rows = np.atleast_2d(np.asarray(f_rows, dtype=np.complex128))
    support_indices = np.asarray(support_indices, dtype=np.intp).ravel()
    r = np.asarray(r, dtype=np.complex128)
    if f_rows.shape[0] != support_indices.size:
        raise ValueError(
            f"{f_rows.shape[0]} sample rows for {support_indices.size} supports"
        )
    if f_rows.shape[1] != scaling.n_columns:
        raise ValueError(
            f"sample rows have {f_rows.shape[1]} columns, "
            f"scaling records {scaling.n_columns}"
        )
    if r.shape[0] != model_q.n_columns:
        raise ValueError(
            f"coefficient factor has {r.shape[0]} rows for a "
            f"{model_q.n_columns}-column basis model"
        )
    return BarycentricModel(
        model_q.supports,
        model_q.weights,
        f_rows,
        support_indices=support_indices,
        history=list(model_q.history),
        converged=model_q.converged,
        failure=model_q.failure,
    )


def qr_aaa(
    f,
    grid,
    tol,
    tol_mode="practical",
    p_norm=np.inf,
    max_degree=150,
    weight_solver="fast",
    monitor_node_polynomial=False,
    rrqr_tol=None,
    aaa_tol=None,
):
    """Approximate all columns of ``f`` at once through a QR-compressed basis.

    Args:
        f: (|grid|, N) complex sample matrix, one column per function.
        grid: SampleGrid the rows were sampled on.
        tol: target accuracy, relative to each column's max-norm.
        tol_mode: "practical" runs the basis-stage greedy loop at tol itself;
            "theory" tightens it to tol/rank, the level at which the
            per-column error bound of the reconstructed model is provable.
        p_norm: row norm for the greedy loop, 2 or inf.
        max_degree: degree budget for the greedy loop (flagged, not raised).
        weight_solver: "fast" or "explicit", forwarded to the greedy loop.
        monitor_node_polynomial: forwarded to the greedy loop.
        rrqr_tol, aaa_tol: advanced overrides; by default both stages share
            ``tol``.

    Returns:
        QrAaaModel whose ``model`` interpolates rows of ``f`` exactly at the
        selected supports and reproduces zero columns as exact zeros.
    """
    f = _validate_samples(f, grid)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if tol_mode not in ("practical", "theory"):
        raise ValueError(f"unknown tol_mode {tol_mode!r}")

    g, scaling = scale_columns(f)
    fac = rrqr(g, tol if rrqr_tol is None else rrqr_tol)
    if fac.degenerate or fac.rank == 0:
        raise DegenerateInputError("factorization kept no basis columns")
    gamma = np.abs(fac.r.diagonal()[: fac.rank])

    if aaa_tol is not None:
        inner_tol = aaa_tol
    elif tol_mode == "theory":
        inner_tol = tol / fac.rank
    else:
        inner_tol = tol
    cfg = AaaConfig(
        tol=inner_tol,
        p_norm=p_norm,
        max_degree=max_degree,
        column_weights=gamma,
        monitor_node_polynomial=monitor_node_polynomial,
    )
    inner = sv_aaa(fac.q, grid, cfg, weight_solver=weight_solver)

    outer = reconstruct(
        inner, fac.r, scaling, inner.support_indices, f[inner.support_indices, :]
    )
    return QrAaaModel(
        model=outer,
        scaling=scaling,
        rank=fac.rank,
        gamma=gamma,
        tol_mode=tol_mode,
        inner=inner,
        r=fac.r,
        perm_all=fac.perm_all,
    )
