"""Dense kernels: row-wise matrix norms, truncated pivoted QR, singular vectors.

Everything here works on plain ndarrays; complex128 is the working precision
throughout the package.
"""

import numpy as np

from .errors import DegenerateInputError

_EPS = np.finfo(float).eps


def _as_finite_matrix(a, name="matrix"):
    a = np.ascontiguousarray(a)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def norm_p_inf(a, p):
    """Largest row p-norm of a matrix.

    Args:
        a: real or complex matrix, rows indexed by sample point.
        p: 2 or inf. With p=inf this is the plain max-modulus norm.

    Returns:
        A nonnegative float.
    """
    a = _as_finite_matrix(a)
    if a.size == 0:
        return 0.0
    mag = np.abs(a)
    if p == 2:
        return float(np.sqrt((mag * mag).sum(axis=1)).max())
    if p == np.inf or p == "inf":
        return float(mag.max())
    raise ValueError(f"unsupported p-norm: {p!r} (use 2 or inf)")


def row_p_norms(a, p):
    """Per-row p-norms (the vector whose max norm_p_inf takes)."""
    mag = np.abs(a)
    if p == 2:
        return np.sqrt((mag * mag).sum(axis=1))
    if p == np.inf or p == "inf":
        if a.shape[1] == 0:
            return np.zeros(a.shape[0])
        return mag.max(axis=1)
    raise ValueError(f"unsupported p-norm: {p!r} (use 2 or inf)")


class RrqrFactorization:
    """Result of a truncated column-pivoted QR.

    Attributes:
        q: (rows, rank) matrix with orthonormal columns.
        r: (rank, cols) coefficients, upper triangular in permuted order.
        perm: the rank selected column indices, in pivot order.
        perm_all: full column permutation (pivots first, leftovers after).
        rank: number of columns kept.
        degenerate: True when the input carried no columns above the threshold.
    """

    def __init__(self, q, r, perm, perm_all, rank, degenerate):
        self.q = q
        self.r = r
        self.perm = perm
        self.perm_all = perm_all
        self.rank = rank
        self.degenerate = degenerate

    @property
    def column_norm_bounds(self):
        """Moduli of the R diagonal (nonincreasing by pivoting)."""
        k = self.rank
        return np.abs(np.diagonal(self.r[:, :k]))


def _householder(x):
    # returns (v, beta) with (I - beta v v*) x = -phase(x0) ||x|| e0
    norm_x = np.linalg.norm(x)
    if norm_x == 0.0:
        return x.copy(), 0.0
    v = x.copy()
    x0 = x[0]
    phase = x0 / abs(x0) if x0 != 0 else 1.0
    v[0] += phase * norm_x
    vn2 = np.real(v @ v.conj())
    if vn2 == 0.0:
        return v, 0.0
    return v, 2.0 / vn2


def rrqr(f, tol):
    """Greedy truncated QR with column pivoting.

    Pivots on the largest remaining squared column norm and stops once every
    remaining residual column has 2-norm below tol. Column norms are tracked
    by downdating, with an exact recompute whenever a tracked value has
    shrunk below sqrt(machine eps) times its starting value.

    Args:
        f: (rows, cols) matrix to compress.
        tol: positive 2-norm threshold on residual columns.

    Returns:
        RrqrFactorization. f[:, perm_all] ~= q @ r, kept columns to roundoff
        and discarded columns below tol.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    f = _as_finite_matrix(f, "f")
    rows, cols = f.shape
    work = f.astype(np.complex128, copy=True)
    perm_all = np.arange(cols)
    norms2 = np.real(np.einsum("ij,ij->j", work.conj(), work))
    norms2_start = norms2.copy()
    reflectors = []
    kmax = min(rows, cols)
    guard = np.sqrt(_EPS)
    k = 0
    for j in range(kmax):
        pivot = j + int(np.argmax(norms2[j:]))
        if norms2[pivot] < tol * tol:
            break
        if pivot != j:
            work[:, [j, pivot]] = work[:, [pivot, j]]
            norms2[[j, pivot]] = norms2[[pivot, j]]
            norms2_start[[j, pivot]] = norms2_start[[pivot, j]]
            perm_all[[j, pivot]] = perm_all[[pivot, j]]
        v, beta = _householder(work[j:, j])
        if beta != 0.0:
            proj = v.conj() @ work[j:, j:]
            work[j:, j:] -= beta * np.outer(v, proj)
        work[j + 1 :, j] = 0.0
        reflectors.append((j, v, beta))
        k = j + 1
        if j + 1 < cols:
            tail = work[j, j + 1 :]
            norms2[j + 1 :] -= np.real(tail * tail.conj())
            np.maximum(norms2[j + 1 :], 0.0, out=norms2[j + 1 :])
            stale = norms2[j + 1 :] < guard * norms2_start[j + 1 :]
            if np.any(stale) and j + 1 < rows:
                idx = j + 1 + np.flatnonzero(stale)
                block = work[j + 1 :, idx]
                norms2[idx] = np.real(np.einsum("ij,ij->j", block.conj(), block))
                norms2_start[idx] = norms2[idx]
        norms2[j] = 0.0

    q = np.zeros((rows, k), dtype=np.complex128)
    q[np.arange(k), np.arange(k)] = 1.0
    for j, v, beta in reversed(reflectors):
        if beta != 0.0:
            proj = v.conj() @ q[j:, :]
            q[j:, :] -= beta * np.outer(v, proj)
    r = work[:k, :]
    return RrqrFactorization(
        q=q,
        r=r,
        perm=perm_all[:k].copy(),
        perm_all=perm_all,
        rank=k,
        degenerate=(k == 0),
    )


def min_right_singular_vector(l):
    """Right singular vector for the smallest singular value of l.

    The vector has unit 2-norm and a canonical phase: its largest-modulus
    entry (lowest index on ties) is rotated onto the positive real axis, so
    repeated calls and different solvers are directly comparable.

    Args:
        l: (rows, cols) matrix with rows >= 1, cols >= 1.

    Returns:
        Complex vector of length cols.
    """
    l = _as_finite_matrix(l, "l")
    if l.shape[0] == 0 or l.shape[1] == 0:
        raise DegenerateInputError("cannot take a singular vector of an empty matrix")
    if l.shape[0] < l.shape[1]:
        # fewer rows than columns: the nullspace is nontrivial and the
        # economy SVD would not expose it, so use the full one
        _, _, vh = np.linalg.svd(l, full_matrices=True)
    else:
        _, _, vh = np.linalg.svd(l, full_matrices=False)
    v = vh[-1].conj()
    return canonical_phase(v / np.linalg.norm(v))


def canonical_phase(v):
    """Rotate a vector so its largest-modulus entry is real positive."""
    i = int(np.argmax(np.abs(v)))
    pivot = v[i]
    if pivot == 0:
        return v
    return v * (abs(pivot) / pivot)
