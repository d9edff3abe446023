"""Sample grids and barycentric rational models shared across the package.

A model built on supports z_nu with weights w_nu and per-support snapshot
rows f(z_nu) evaluates as

    r(z) = sum_nu [w_nu f(z_nu) / (z - z_nu)] / sum_nu [w_nu / (z - z_nu)]

with the limit value f(z_nu) taken verbatim at the supports themselves:
support hits are detected by exact equality and return the stored snapshot
row bit for bit, so interpolation never depends on floating-point division.
"""

import numpy as np

from .errors import PoleHitError

_CHART_AXES = ("real", "imag")


class SampleGrid:
    """Finite set of pairwise-distinct sample points, optionally charted.

    A chart (a, b, axis) declares that the points live on one straight
    segment: the real interval [a, b] (axis "real") or the imaginary segment
    i*[a, b] (axis "imag"). The affine map onto [-1, 1] is exposed as
    `mapped`; extension-set geometry and node-polynomial monitoring work in
    those coordinates.
    """

    def __init__(self, points, chart=None):
        points = np.asarray(points, dtype=np.complex128).ravel()
        if points.size == 0:
            raise ValueError("a grid needs at least one point")
        if not np.all(np.isfinite(points)):
            raise ValueError("grid points must be finite")
        if np.unique(points).size != points.size:
            raise ValueError("grid points must be pairwise distinct")
        if chart is not None:
            a, b, axis = chart
            a, b = float(a), float(b)
            if axis not in _CHART_AXES:
                raise ValueError(f"chart axis must be one of {_CHART_AXES}")
            if not b > a:
                raise ValueError("chart needs b > a")
            chart = (a, b, axis)
            x = _chart_map(points, chart)
            if np.any(np.abs(x) > 1 + 1e-12):
                raise ValueError("grid points fall outside the chart segment")
        self.points = points
        self.chart = chart

    @classmethod
    def equispaced(cls, a, b, count, axis="real"):
        """Equispaced grid on [a, b] (or i*[a, b]) carrying its chart."""
        if count < 1:
            raise ValueError("count must be >= 1")
        t = np.linspace(float(a), float(b), count)
        points = 1j * t if axis == "imag" else t + 0j
        return cls(points, chart=(float(a), float(b), axis))

    @property
    def mapped(self):
        """Chart coordinates in [-1, 1]; raises when the grid has no chart."""
        if self.chart is None:
            raise ValueError("grid has no chart")
        return _chart_map(self.points, self.chart)

    def map_values(self, values):
        """Send arbitrary points through this grid's chart."""
        if self.chart is None:
            raise ValueError("grid has no chart")
        return _chart_map(np.asarray(values, dtype=np.complex128), self.chart)

    def subgrid(self, indices):
        return SampleGrid(self.points[np.asarray(indices)], chart=self.chart)

    def __len__(self):
        return self.points.size


def _chart_map(points, chart):
    a, b, axis = chart
    t = points.imag if axis == "imag" else points.real
    return (2.0 * t - (a + b)) / (b - a)


class BarycentricModel:
    """Set-valued barycentric rational interpolant.

    Attributes:
        supports: the m interpolation points.
        weights: the m barycentric weights, unit 2-norm.
        snapshots: (m, N) rows of sampled function values at the supports.
        support_indices: positions of the supports in the originating grid.
        history: list of (m, residual, argmax index) triples from the greedy
            loop that produced this model (empty for hand-built models).
        converged: False when a greedy run stopped on a budget instead of
            reaching its tolerance.
        failure: short reason string when converged is False, else None.
    """

    def __init__(
        self,
        supports,
        weights,
        snapshots,
        support_indices=None,
        history=None,
        converged=True,
        failure=None,
    ):
        supports = np.asarray(supports, dtype=np.complex128).ravel()
        weights = np.asarray(weights, dtype=np.complex128).ravel()
        snapshots = np.atleast_2d(np.asarray(snapshots, dtype=np.complex128))
        m = supports.size
        if m == 0:
            raise ValueError("a model needs at least one support")
        if np.unique(supports).size != m:
            raise ValueError("supports must be pairwise distinct")
        if weights.size != m:
            raise ValueError("weights and supports disagree in length")
        if snapshots.shape[0] != m:
            raise ValueError(
                f"snapshots have {snapshots.shape[0]} rows for {m} supports"
            )
        wnorm = np.linalg.norm(weights)
        if not np.isfinite(wnorm) or abs(wnorm - 1.0) > 1e-8:
            raise ValueError("weights must have unit 2-norm")
        self.supports = supports
        self.weights = weights
        self.snapshots = snapshots
        if support_indices is None:
            support_indices = np.full(m, -1, dtype=np.intp)
        self.support_indices = np.asarray(support_indices, dtype=np.intp)
        self.history = list(history) if history else []
        self.converged = converged
        self.failure = failure

    @property
    def degree(self):
        return self.supports.size - 1

    @property
    def n_columns(self):
        return self.snapshots.shape[1]

    def evaluate(self, z):
        """Value of the model at one point, as a length-N row.

        Raises PoleHitError when z is off-support and the denominator
        vanishes there.
        """
        z = complex(z)
        hit = np.flatnonzero(self.supports == z)
        if hit.size:
            return self.snapshots[hit[0]].copy()
        c = self.weights / (z - self.supports)
        denom = c.sum()
        if denom == 0:
            raise PoleHitError(z)
        return (c @ self.snapshots) / denom

    __call__ = evaluate

    def evaluate_grid(self, grid):
        """Values on a whole grid, (len(grid), N). Support rows are exact."""
        values, bad = self._evaluate_points(_grid_points(grid))
        if bad.size:
            raise PoleHitError(_grid_points(grid)[bad[0]])
        return values

    def _evaluate_points(self, points):
        # vectorized core shared with the greedy loop, which treats pole
        # hits as infinite error instead of raising
        diff = points[:, None] - self.supports[None, :]
        support_rows, support_cols = np.nonzero(diff == 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.weights[None, :] / diff
        if support_rows.size:
            c[support_rows, :] = 0.0
        denom = c.sum(axis=1)
        off_support = np.ones(points.size, dtype=bool)
        off_support[support_rows] = False
        bad = np.flatnonzero(off_support & (denom == 0))
        denom[denom == 0] = 1.0
        values = (c @ self.snapshots) / denom[:, None]
        if support_rows.size:
            values[support_rows, :] = self.snapshots[support_cols, :]
        if bad.size:
            values[bad, :] = np.inf
        return values, bad


def _grid_points(grid):
    return grid.points if isinstance(grid, SampleGrid) else np.asarray(
        grid, dtype=np.complex128
    ).ravel()


def node_polynomial_max(supports, grid):
    """Max over the grid of |prod_nu (z - z_nu)|.

    One pass over a (len(grid), m) difference table, so O(len(grid) * m)
    time. Coordinates are taken as given; callers wanting the [-1, 1]
    normalization map both arguments through a chart first.
    """
    supports = np.asarray(supports, dtype=np.complex128).ravel()
    points = _grid_points(grid)
    if supports.size == 0:
        return 1.0
    mag = np.abs(points[:, None] - supports[None, :])
    return float(np.prod(mag, axis=1).max())
