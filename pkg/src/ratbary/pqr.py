"""Partitioned rational approximation with a communication-light merge.

The sample matrix is split into column blocks, each block is compressed and
approximated independently (one worker per block), and the local models are
glued into one global model. The glue step never revisits the full grid:
local models are evaluated only on the union of all local supports plus a
small extension set, and one last greedy run over that point set produces
the global supports and weights.

The extension set is the delicate part. Interpolation data on the support
union alone can hide exponentially large errors between the points, so the
merged point set must keep the relevant node polynomials tame. On grids
with an affine chart to [-1, 1] we pick near-Chebyshev points, which give a
provable bound through the gap measure ``zeta``; otherwise we fall back to
uniform random draws, which work well in practice.
"""

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .aaa import AaaConfig, _monitor_factor, _validate_samples, sv_aaa
from .barycentric import BarycentricModel
from .errors import DegenerateInputError, ExhaustionError, RatbaryError
from .qr_aaa import qr_aaa


def _worker_cap():
    raw = os.environ.get("RATBARY_WORKERS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"RATBARY_WORKERS must be an integer, got {raw!r}")
        if cap >= 1:
            return cap
    return os.cpu_count() or 1


class PartitionPlan:
    """Assignment of sample-matrix columns to partitions.

    Attributes:
        p: partition count.
        assignment: integer array, one entry per column, values in [0, p).
        seed: seed forwarded to the extension-set sampler.
    """

    def __init__(self, p, assignment, seed=0):
        self.p = int(p)
        self.assignment = np.asarray(assignment, dtype=np.intp).ravel()
        self.seed = seed
        if self.p < 1:
            raise ValueError(f"need at least one partition, got {p}")
        if self.assignment.size == 0:
            raise ValueError("assignment covers no columns")
        if self.assignment.min() < 0 or self.assignment.max() >= self.p:
            raise ValueError("assignment entries must lie in [0, p)")
        counts = np.bincount(self.assignment, minlength=self.p)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0)
            raise ValueError(f"partitions {empty.tolist()} received no columns")

    @classmethod
    def contiguous(cls, n_columns, p, seed=0):
        """Split columns into p contiguous blocks of near-equal size."""
        if n_columns < p:
            raise ValueError(f"cannot split {n_columns} columns into {p} blocks")
        assignment = np.empty(n_columns, dtype=np.intp)
        for mu, block in enumerate(np.array_split(np.arange(n_columns), p)):
            assignment[block] = mu
        return cls(p, assignment, seed=seed)

    def columns_of(self, mu):
        return np.flatnonzero(self.assignment == mu)

    @property
    def n_columns(self):
        return self.assignment.size


class PartitionResult:
    """Outcome of one partition's local compression and approximation."""

    def __init__(self, mu, columns, qr_model, wall_time):
        self.mu = mu
        self.columns = columns
        self.qr_model = qr_model  # None when the block was identically zero
        self.wall_time = wall_time

    @property
    def rank(self):
        return 0 if self.qr_model is None else self.qr_model.rank

    @property
    def support_indices(self):
        if self.qr_model is None:
            return np.empty(0, dtype=np.intp)
        return np.asarray(self.qr_model.support_indices, dtype=np.intp)

    @property
    def converged(self):
        return True if self.qr_model is None else self.qr_model.converged


class ExtensionSet:
    """Extra evaluation points appended to the union of local supports.

    Attributes:
        points: grid indices of the extension points.
        strategy: "mock-chebyshev" or "random-uniform".
        zeta: largest arccos gap of the extension points in chart
            coordinates (nan when the grid has no chart).
        m_plus: degree budget the extension must control.
        gamma: m_plus * zeta, the conditioning figure of merit.
    """

    def __init__(self, points, strategy, zeta, m_plus):
        self.points = np.asarray(points, dtype=np.intp).ravel()
        self.strategy = strategy
        self.zeta = float(zeta)
        self.m_plus = int(m_plus)
        self.gamma = self.m_plus * self.zeta if np.isfinite(zeta) else float("nan")


def zeta(points):
    """Largest arccos gap of a sorted point set in [-1, 1].

    The gaps from -1 to the first point and from the last point to +1 count
    too; without them a set crammed into half the interval would look far
    better conditioned than it is. An empty set scores the full pi.
    """
    pts = np.asarray(points, dtype=np.float64).ravel()
    if pts.size == 0:
        return np.pi
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain non-finite entries")
    if np.any(np.diff(pts) < 0):
        raise ValueError("points must be sorted ascending")
    if pts[0] < -1.0 - 1e-12 or pts[-1] > 1.0 + 1e-12:
        raise ValueError("points must lie within [-1, 1]")
    theta = np.arccos(np.clip(pts, -1.0, 1.0))
    # arccos reverses order: ascending points give descending angles
    gaps = np.empty(pts.size + 1)
    gaps[0] = np.pi - theta[0]
    gaps[1:-1] = theta[:-1] - theta[1:]
    gaps[-1] = theta[-1]
    return float(gaps.max())


def mock_chebyshev(grid, m_count):
    """Pick the m_count grid points nearest the Chebyshev extrema.

    Works in the grid's chart coordinates. Each extremum claims its nearest
    unused grid point; a taken point falls through to the next nearest, with
    distance ties resolved toward the lower grid index. Returns the chosen
    indices in extremum order (from +1 toward -1).
    """
    if grid.chart is None:
        raise ValueError("mock-Chebyshev selection needs a grid with a chart")
    m_count = int(m_count)
    if m_count < 1:
        raise ValueError(f"need at least one point, got {m_count}")
    if len(grid) < m_count:
        raise ValueError(f"grid has {len(grid)} points, {m_count} requested")
    if m_count == 1:
        targets = np.array([0.0])
    else:
        targets = np.cos(np.arange(m_count) * np.pi / (m_count - 1))
    mapped = grid.mapped
    order = np.argsort(mapped, kind="stable")
    vals = mapped[order]
    used = np.zeros(len(grid), dtype=bool)
    chosen = np.empty(m_count, dtype=np.intp)
    for j, t in enumerate(targets):
        pos = int(np.searchsorted(vals, t))
        lo, hi = pos - 1, pos
        pick = -1
        while lo >= 0 or hi < vals.size:
            dl = t - vals[lo] if lo >= 0 and not used[lo] else np.inf
            dh = vals[hi] - t if hi < vals.size and not used[hi] else np.inf
            if dl < dh:
                pick = lo
                break
            if dh < dl:
                pick = hi
                break
            if np.isinf(dl):
                # both sides used (or exhausted): widen the window
                lo -= 1
                hi += 1
                continue
            pick = lo if order[lo] < order[hi] else hi
            break
        used[pick] = True
        chosen[j] = order[pick]
    return chosen


def extension_set(grid, union_supports, strategy, seed=0, target_m_plus=None):
    """Build the extension point set for a merged approximation of m_plus.

    The budget defaults to m_plus = 2 * |union| - 2, twice the largest
    conceivable merged numerator/denominator degree. Both strategies draw
    ceil(3 * pi * m_plus) points: near-Chebyshev selection in chart
    coordinates, or a seeded uniform sample disjoint from the union.
    """
    union = np.unique(np.asarray(union_supports, dtype=np.intp))
    if union.size == 0:
        raise ValueError("union of local supports is empty")
    if union.min() < 0 or union.max() >= len(grid):
        raise ValueError("support indices fall outside the grid")
    m_plus = 2 * union.size - 2 if target_m_plus is None else int(target_m_plus)
    if m_plus < 0:
        raise ValueError(f"degree budget must be nonnegative, got {m_plus}")
    count = int(np.ceil(3 * np.pi * m_plus))

    if strategy == "mock-chebyshev":
        if count > len(grid):
            raise ExhaustionError(
                f"need {count} extension points, grid has {len(grid)}"
            )
        points = mock_chebyshev(grid, count) if count else np.empty(0, np.intp)
    elif strategy == "random-uniform":
        pool = np.setdiff1d(np.arange(len(grid)), union)
        if pool.size < count:
            raise ExhaustionError(
                f"need {count} extension points, grid offers {pool.size} "
                "outside the union"
            )
        rng = np.random.default_rng(seed)
        points = np.sort(rng.choice(pool, size=count, replace=False))
    else:
        raise ValueError(f"unknown extension strategy {strategy!r}")

    if grid.chart is not None:
        z = float(zeta(np.sort(grid.mapped[points]))) if points.size else np.pi
    else:
        z = float("nan")
    ext = ExtensionSet(points, strategy, z, m_plus)
    if strategy == "mock-chebyshev" and m_plus > 0 and not ext.gamma < 1.0:
        warnings.warn(
            f"extension set has gamma = {ext.gamma:.3g} >= 1; the grid is "
            "too coarse for the requested degree budget",
            RuntimeWarning,
            stacklevel=2,
        )
    return ext


def linearized_error_bound(q_norm, node_poly_max, b_bound, eps):
    """Reporting-only product bound on the linearized merge error."""
    for name, val in (
        ("q_norm", q_norm),
        ("node_poly_max", node_poly_max),
        ("b_bound", b_bound),
        ("eps", eps),
    ):
        if val < 0:
            raise ValueError(f"{name} must be nonnegative, got {val}")
    if b_bound < 1:
        raise ValueError(f"b_bound must be at least 1, got {b_bound}")
    return q_norm * node_poly_max * b_bound * eps


class AccumulationResult:
    """Global model assembled from per-partition approximations.

    Attributes:
        final_model: BarycentricModel over all original columns.
        per_partition: list of PartitionResult in partition order.
        union_supports: sorted union of the local support indices.
        extension: the ExtensionSet used.
        z_plus: sorted grid indices of the merged evaluation set.
        merge: "flat" or "pairwise-tree".
        merge_stages: list of (label, BarycentricModel) for every glue-stage
            greedy run, in execution order; the last one is the final stage.
        comm_values: complex values moved to accumulators, total.
        comm_per_level: per-level breakdown (single entry for flat merge).
        converged: every partition and every glue stage reached its tolerance.
        failure: short reason string when converged is False.
        validation_ok: full-grid per-column relative error within the
            validation envelope.
        diagnostics: dict of residuals, conditioning figures and timings.
    """

    def __init__(self, **kw):
        for key, val in kw.items():
            setattr(self, key, val)

    def __repr__(self):
        return (
            f"AccumulationResult(degree={self.final_model.degree}, "
            f"p={len(self.per_partition)}, merge={self.merge!r}, "
            f"converged={self.converged}, validation_ok={self.validation_ok})"
        )


def _run_partitions(f, grid, tol, plan, tol_mode, p_norm, max_degree, weight_solver):
    def run_one(mu):
        cols = plan.columns_of(mu)
        tic = time.perf_counter()
        try:
            qm = qr_aaa(
                f[:, cols],
                grid,
                tol,
                tol_mode=tol_mode,
                p_norm=p_norm,
                max_degree=max_degree,
                weight_solver=weight_solver,
            )
        except DegenerateInputError:
            qm = None  # an all-zero block approximates itself exactly
        return PartitionResult(mu, cols, qm, time.perf_counter() - tic)

    workers = min(plan.p, _worker_cap())
    if workers == 1:
        return [run_one(mu) for mu in range(plan.p)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_one, mu) for mu in range(plan.p)]
        return [fut.result() for fut in futures]


def _local_block(part, subgrid, weighted):
    """Evaluate one partition's basis model on the merged point set."""
    vals = part.qr_model.inner.evaluate_grid(subgrid)
    if weighted:
        vals = vals * part.qr_model.gamma
    return vals


def pqr_aaa(
    f,
    grid,
    tol,
    plan,
    strategy="auto",
    merge="flat",
    tol_mode="practical",
    p_norm=np.inf,
    max_degree=150,
    weight_solver="fast",
    weighted_merge=True,
    validate_factor=10.0,
    strict=True,
):
    """Approximate a wide sample matrix by partitioned compression and merge.

    Args:
        f: (|grid|, N) complex sample matrix.
        grid: SampleGrid the rows live on.
        tol: per-column relative accuracy target.
        plan: PartitionPlan, or an int for contiguous blocks.
        strategy: extension strategy; "auto" picks near-Chebyshev points on
            charted grids and uniform random draws otherwise.
        merge: "flat" concatenates every local block at the accumulator and
            runs one glue stage; "pairwise-tree" combines blocks two at a
            time, re-approximating at every level.
        tol_mode, p_norm, max_degree, weight_solver: forwarded to the
            per-partition pipeline.
        weighted_merge: scale each local basis by its importance weights
            before gluing (recommended); False reproduces the plain variant.
        validate_factor: envelope for the full-grid check, in units of tol.
        strict: raise when the glue converged but the full-grid validation
            failed anyway; convergence failures are always flagged instead.

    Returns:
        AccumulationResult. Its final_model interpolates rows of ``f``
        exactly at the chosen supports.
    """
    f = _validate_samples(f, grid)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if merge not in ("flat", "pairwise-tree"):
        raise ValueError(f"unknown merge mode {merge!r}")
    if strategy not in ("auto", "mock-chebyshev", "random-uniform"):
        raise ValueError(f"unknown extension strategy {strategy!r}")
    if isinstance(plan, (int, np.integer)):
        plan = PartitionPlan.contiguous(f.shape[1], int(plan))
    if plan.n_columns != f.shape[1]:
        raise ValueError(
            f"plan covers {plan.n_columns} columns, matrix has {f.shape[1]}"
        )

    t_start = time.perf_counter()
    parts = _run_partitions(
        f, grid, tol, plan, tol_mode, p_norm, max_degree, weight_solver
    )
    t_partitions = time.perf_counter() - t_start

    union = np.unique(np.concatenate([p.support_indices for p in parts]))
    if union.size == 0:
        raise DegenerateInputError("every partition was identically zero")
    ext = None
    if strategy == "auto":
        # near-Chebyshev points only pay off when the grid is fine enough
        # for the conditioning bound to hold; otherwise go random
        if grid.chart is not None:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    probe = extension_set(grid, union, "mock-chebyshev")
            except ExhaustionError:
                probe = None
            if probe is not None and probe.gamma < 1.0:
                ext = probe
        if ext is None:
            ext = extension_set(grid, union, "random-uniform", seed=plan.seed)
    else:
        ext = extension_set(grid, union, strategy, seed=plan.seed)
    z_plus = np.union1d(union, ext.points)
    subgrid = grid.subgrid(z_plus)
    # positions of the union points inside z_plus, for support containment
    merge_cfg = AaaConfig(
        tol=tol,
        p_norm=p_norm,
        max_degree=max(1, union.size - 1),
        monitor_node_polynomial=True,
    )

    t_merge_start = time.perf_counter()
    merge_stages = []
    comm_per_level = []
    flagged = [p.mu for p in parts if not p.converged]
    if plan.p == 1:
        # degenerate partition: the local model already is the global one
        final = parts[0].qr_model.model
        comm_per_level = [0]
    else:
        blocks = [
            (_local_block(p, subgrid, weighted_merge), p.rank)
            for p in parts
            if p.rank > 0
        ]
        if merge == "flat" or len(blocks) == 1:
            comm_per_level = [sum(cols for _, cols in blocks) * len(subgrid)]
            merged = np.hstack([vals for vals, _ in blocks])
            stage = sv_aaa(merged, subgrid, merge_cfg, weight_solver=weight_solver)
            merge_stages.append(("final", stage))
            if not stage.converged:
                flagged.append("final")
        else:
            while len(blocks) > 1:
                moved = 0
                nxt = []
                for i in range(0, len(blocks) - 1, 2):
                    left, right = blocks[i], blocks[i + 1]
                    moved += right[1] * len(subgrid)
                    cat = np.hstack([left[0], right[0]])
                    stage = sv_aaa(
                        cat, subgrid, merge_cfg, weight_solver=weight_solver
                    )
                    label = f"merge{len(merge_stages)}"
                    merge_stages.append((label, stage))
                    if not stage.converged:
                        flagged.append(label)
                    nxt.append((stage.evaluate_grid(subgrid), left[1] + right[1]))
                if len(blocks) % 2:
                    nxt.append(blocks[-1])
                blocks = nxt
                comm_per_level.append(moved)
            stage = merge_stages[-1][1]
            merge_stages[-1] = ("final", stage)
        global_sup = z_plus[np.asarray(stage.support_indices, dtype=np.intp)]
        final = BarycentricModel(
            stage.supports,
            stage.weights,
            f[global_sup, :],
            support_indices=global_sup,
            history=list(stage.history),
            converged=stage.converged,
            failure=stage.failure,
        )
    t_merge = time.perf_counter() - t_merge_start

    converged = not flagged
    failure = None if converged else f"non-converged stages: {flagged}"

    t_val_start = time.perf_counter()
    approx = final.evaluate_grid(grid)
    d = np.abs(f).max(axis=0)
    col_err = np.abs(f - approx).max(axis=0)
    rel_err = np.divide(col_err, d, out=np.zeros_like(col_err), where=d > 0)
    validation_ok = bool(np.all(rel_err <= validate_factor * tol))
    t_validate = time.perf_counter() - t_val_start

    diagnostics = {
        "full_grid_rel_err_max": float(rel_err.max()),
        "full_grid_rel_err": rel_err,
        "node_polynomial_max": float(
            _monitor_factor(np.asarray(final.supports), grid, True)
        ),
        "zeta": ext.zeta,
        "gamma": ext.gamma,
        "m_plus": ext.m_plus,
        "b_bound": (1.0 / (1.0 - ext.gamma)) if ext.gamma < 1.0 else float("inf"),
        "t_partitions": t_partitions,
        "t_partition_each": [p.wall_time for p in parts],
        "t_merge": t_merge,
        "t_validate": t_validate,
    }

    result = AccumulationResult(
        final_model=final,
        per_partition=parts,
        union_supports=union,
        extension=ext,
        z_plus=z_plus,
        merge=merge,
        merge_stages=merge_stages,
        comm_values=int(sum(comm_per_level)),
        comm_per_level=[int(c) for c in comm_per_level],
        converged=converged,
        failure=failure,
        validation_ok=validation_ok,
        diagnostics=diagnostics,
        tol=tol,
    )
    if strict and converged and not validation_ok:
        raise RatbaryError(
            "merged model converged on the reduced point set but misses the "
            f"target on the full grid (relative error {rel_err.max():.3e}, "
            f"allowed {validate_factor * tol:.3e})"
        )
    return result
