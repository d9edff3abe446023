"""Benchmark problem generators.

Four matrix-valued function families, each in split form

    F(z) = sum_l  g_l(z) * A_l

with closed-form scalar factors g_l and constant coefficient matrices A_l,
plus a few scalar baselines. The scalar factors carry all the approximation
difficulty and follow the published formulas for their application areas;
the coefficient matrices are seeded random stand-ins with the right
structure (banded symmetric, rank-2 sparse, dense with prescribed norms),
since the original FEM data cannot ship with the code.

The split form makes two things exactly testable: every sampled entry is a
short explicit sum, and the sample matrix has exact rank at most the term
count no matter how many columns are requested.
"""

import numpy as np

from .barycentric import SampleGrid

_BEAM_EXPONENT = 0.675
_BEAM_G0 = 350.4e3
_BEAM_GINF = 3.062e6
_BEAM_TAU = 8.230e-9

_SCHRODINGER_MASS = 0.2
_SCHRODINGER_TERMS = 81

_DELAY_TERMS = 20


class SplitFormProblem:
    """A sampled matrix-valued function in split form.

    Attributes:
        name: generator name.
        scalar_factors: list of vectorized callables g_l(z).
        coefficient_vectors: list of flattened (column-major) coefficient
            matrices, each of length dims*dims; sampling uses the first n
            entries of each.
        n: number of columns a sample() call produces.
        dims: side length of the underlying square coefficient matrices.
        grid_spec: (start, stop, count, axis) the default grid was built from.
        grid: the default SampleGrid.
        tol_default: tolerance the problem is normally run at.
        seed: seed every random draw derived from.
        params: dict of drawn or fixed model parameters, for provenance.
    """

    def __init__(
        self,
        name,
        scalar_factors,
        coefficient_vectors,
        n,
        dims,
        grid_spec,
        tol_default,
        seed,
        params=None,
    ):
        self.name = name
        self.scalar_factors = list(scalar_factors)
        self.coefficient_vectors = [
            np.asarray(v, dtype=np.complex128).ravel() for v in coefficient_vectors
        ]
        self.n = int(n)
        self.dims = int(dims)
        self.grid_spec = grid_spec
        self.tol_default = float(tol_default)
        self.seed = seed
        self.params = dict(params or {})
        if len(self.scalar_factors) != len(self.coefficient_vectors):
            raise ValueError("one coefficient vector per scalar factor")
        for v in self.coefficient_vectors:
            if v.size != self.dims * self.dims:
                raise ValueError(
                    f"coefficient vector of length {v.size}, "
                    f"expected {self.dims * self.dims}"
                )
        if not 1 <= self.n <= self.dims * self.dims:
            raise ValueError(
                f"n = {self.n} outside [1, {self.dims * self.dims}]"
            )
        start, stop, count, axis = grid_spec
        self.grid = SampleGrid.equispaced(start, stop, count, axis=axis)

    @property
    def term_count(self):
        return len(self.scalar_factors)

    def sample(self, grid=None):
        """Evaluate the first n split-form entries on every grid point."""
        grid = self.grid if grid is None else grid
        z = grid.points
        g = np.column_stack([factor(z) for factor in self.scalar_factors])
        a = np.vstack([v[: self.n] for v in self.coefficient_vectors])
        return g @ a

    def entry(self, z, j):
        """Single split-form entry at one point, by direct summation."""
        if not 0 <= j < self.n:
            raise IndexError(f"column {j} outside [0, {self.n})")
        total = 0.0 + 0.0j
        for factor, vec in zip(self.scalar_factors, self.coefficient_vectors):
            total += complex(factor(np.asarray(z, dtype=np.complex128))) * vec[j]
        return total

    def __repr__(self):
        return (
            f"SplitFormProblem({self.name!r}, terms={self.term_count}, "
            f"n={self.n}, dims={self.dims}, |grid|={len(self.grid)})"
        )


def _square_dims(n):
    if n < 1:
        raise ValueError(f"need at least one column, got {n}")
    return int(np.ceil(np.sqrt(n)))


def _banded_symmetric(rng, d, scale=1.0):
    """FEM-flavored matrix: symmetric, banded, diagonally dominant."""
    main = 2.0 + rng.uniform(0.0, 1.0, d)
    a = np.diag(main)
    if d > 1:
        off = -1.0 + 0.2 * rng.uniform(-1.0, 1.0, d - 1)
        a += np.diag(off, 1) + np.diag(off, -1)
    return scale * a


def _vec(a):
    return a.flatten(order="F")


def gen_beam(n, seed=0):
    """Damped beam model: stiffness + frequency-dependent shear + inertia.

    The shear modulus interpolates between its static and instantaneous
    values through a fractional power law in s.
    """
    if n < 2:
        raise ValueError(f"beam problem needs n >= 2, got {n}")
    d = _square_dims(n)
    rng = np.random.default_rng(seed)
    stiffness = _banded_symmetric(rng, d)
    damping = _banded_symmetric(rng, d)
    mass = _banded_symmetric(rng, d)

    def shear(s):
        st = (np.asarray(s, dtype=np.complex128) * _BEAM_TAU) ** _BEAM_EXPONENT
        return (_BEAM_G0 + st * _BEAM_GINF) / (1.0 + st)

    return SplitFormProblem(
        "beam",
        [lambda s: np.ones_like(np.asarray(s, dtype=np.complex128)), shear,
         lambda s: np.asarray(s, dtype=np.complex128) ** 2],
        [_vec(stiffness), _vec(damping), _vec(mass)],
        n=n,
        dims=d,
        grid_spec=(200.0, 30000.0, 1000, "imag"),
        tol_default=1e-8,
        seed=seed,
        params={
            "exponent": _BEAM_EXPONENT,
            "g_static": _BEAM_G0,
            "g_instant": _BEAM_GINF,
            "relaxation_time": _BEAM_TAU,
        },
    )


def gen_photonic(n, seed=0, max_redraws=100):
    """Photonic crystal model with rational frequency-dependent permittivity.

    The permittivity's partial fractions become separate split-form terms,
    all sharing the same coefficient matrix, so the term count is 2 + L.
    Drawn pole pairs keep a real-part margin from the sampling segment; a
    draw that gets too close is rejected and retried.
    """
    if n < 2:
        raise ValueError(f"photonic problem needs n >= 2, got {n}")
    d = _square_dims(n)
    rng = np.random.default_rng(seed)
    base = _banded_symmetric(rng, d)
    m0 = _banded_symmetric(rng, d)
    m1 = _banded_symmetric(rng, d)
    eps0 = rng.uniform(1.0, 5.0)
    c = rng.uniform(1.0, 3.0)

    n_terms = 2
    margin = 0.05
    pairs = []
    for _ in range(max_redraws):
        gamma = rng.uniform(0.1, 1.0)
        lam_p = rng.uniform(1.0, 10.0, size=n_terms)
        lam_0 = rng.uniform(1.0, 10.0, size=n_terms)
        # poles of s^2 + gamma*s + lam0^2 sit at -gamma/2 +- i*...,
        # so their distance to the imaginary axis is gamma/2
        if gamma / 2.0 >= margin:
            pairs = list(zip(lam_p, lam_0))
            break
    if not pairs:
        raise RuntimeError("could not draw permittivity poles clear of the grid")

    def power_term(s):
        return np.asarray(s, dtype=np.complex128) ** 2

    def fraction(lam_p, lam_0):
        def termfn(s):
            s = np.asarray(s, dtype=np.complex128)
            return lam_p**2 * s**2 / (s**2 + gamma * s + lam_0**2)

        return termfn

    factors = [
        lambda s: np.ones_like(np.asarray(s, dtype=np.complex128)),
        power_term,
    ]
    vectors = [_vec(base), _vec(eps0 * m0 + c * m1)]
    for lam_p, lam_0 in pairs:
        factors.append(fraction(lam_p, lam_0))
        vectors.append(_vec(m1))

    return SplitFormProblem(
        "photonic",
        factors,
        vectors,
        n=n,
        dims=d,
        grid_spec=(0.0, 10.0, 1000, "imag"),
        tol_default=1e-8,
        seed=seed,
        params={
            "eps0": eps0,
            "c": c,
            "gamma": gamma,
            "lam_p": [p for p, _ in pairs],
            "lam_0": [l0 for _, l0 in pairs],
        },
    )


def _sparse_rank2(rng, d):
    def spvec():
        v = np.zeros(d)
        k = min(3, d)
        pos = rng.choice(d, size=k, replace=False)
        v[pos] = rng.standard_normal(k)
        return v

    return np.outer(spvec(), spvec()) + np.outer(spvec(), spvec())


def gen_schrodinger(n, seed=0):
    """Particle in a potential well with open boundary conditions.

    Every boundary channel contributes a branch-point term whose scalar
    factor decays below its branch point and oscillates above it. The
    branch points sit below the sampled energy window, most of them well
    below, ten crowded against its left edge where they hurt the most.
    """
    if n < 2:
        raise ValueError(f"schrodinger problem needs n >= 2, got {n}")
    d = _square_dims(n)
    rng = np.random.default_rng(seed)
    hamiltonian = _banded_symmetric(rng, d, scale=5.0)
    p1, p2 = 0.0, 10.0
    far = np.linspace(p1 - 20.0, p1 - 1.0, _SCHRODINGER_TERMS - 10)
    near = np.linspace(p1 - 1.0, p1 - 0.05, 12)[1:-1]
    branch_points = np.concatenate([far, near])

    def channel(a):
        def termfn(lam):
            lam = np.asarray(lam, dtype=np.complex128)
            return -np.exp(1j * np.sqrt(_SCHRODINGER_MASS * (lam - a)))

        return termfn

    factors = [
        lambda lam: np.ones_like(np.asarray(lam, dtype=np.complex128)),
        lambda lam: -np.asarray(lam, dtype=np.complex128),
    ]
    vectors = [_vec(hamiltonian), _vec(np.eye(d))]
    for a in branch_points:
        factors.append(channel(a))
        vectors.append(_vec(_sparse_rank2(rng, d)))

    return SplitFormProblem(
        "schrodinger",
        factors,
        vectors,
        n=n,
        dims=d,
        grid_spec=(p1, p2, 1000, "real"),
        tol_default=1e-8,
        seed=seed,
        params={
            "mass": _SCHRODINGER_MASS,
            "branch_points": branch_points.tolist(),
            "window": (p1, p2),
        },
    )


def gen_delay(n, seed=0):
    """Delay system with twenty exponentially staggered feedback terms.

    Term l carries delay l and coefficient norm 10^(l/2), so the later
    terms dominate by ten orders of magnitude and force column scaling
    to earn its keep.
    """
    if n < 2:
        raise ValueError(f"delay problem needs n >= 2, got {n}")
    d = _square_dims(n)
    rng = np.random.default_rng(seed)

    def delayed(ell):
        def termfn(s):
            return -np.exp(-np.asarray(s, dtype=np.complex128) * ell)

        return termfn

    factors = [lambda s: np.asarray(s, dtype=np.complex128)]
    vectors = [_vec(np.eye(d))]
    for ell in range(1, _DELAY_TERMS + 1):
        a = rng.standard_normal((d, d))
        a *= 10.0 ** (ell / 2.0) / np.abs(a).sum(axis=1).max()
        factors.append(delayed(ell))
        vectors.append(_vec(a))

    return SplitFormProblem(
        "delay",
        factors,
        vectors,
        n=n,
        dims=d,
        grid_spec=(-10.0, 10.0, 1000, "imag"),
        tol_default=1e-4,
        seed=seed,
        params={"delays": list(range(1, _DELAY_TERMS + 1))},
    )


def _planted_rational(rng):
    supports = rng.uniform(-1.0, 1.0, size=4)
    weights = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    weights /= np.linalg.norm(weights)
    values = rng.standard_normal(4) + 1j * rng.standard_normal(4)

    def ratfn(z):
        z = np.asarray(z, dtype=np.complex128)
        cauchy = 1.0 / (z[..., None] - supports)
        return (cauchy @ (weights * values)) / (cauchy @ weights)

    return ratfn, supports, weights, values


def gen_scalar(name, grid_spec=None, seed=0):
    """Scalar baselines: exp, the classic runge bump, or a planted rational."""
    if grid_spec is None:
        grid_spec = (-1.0, 1.0, 1000, "real")
    params = {}
    if name == "exp":
        factor = lambda z: np.exp(np.asarray(z, dtype=np.complex128))  # noqa: E731
        tol = 1e-13
    elif name == "runge":
        factor = lambda z: 1.0 / (  # noqa: E731
            1.0 + 25.0 * np.asarray(z, dtype=np.complex128) ** 2
        )
        tol = 1e-10
    elif name == "planted-rational":
        rng = np.random.default_rng(seed)
        factor, supports, weights, values = _planted_rational(rng)
        tol = 1e-11
        params = {
            "supports": supports.tolist(),
            "weights": weights.tolist(),
            "values": values.tolist(),
        }
    else:
        raise ValueError(f"unknown scalar problem {name!r}")
    return SplitFormProblem(
        name,
        [factor],
        [np.ones(1)],
        n=1,
        dims=1,
        grid_spec=grid_spec,
        tol_default=tol,
        seed=seed,
        params=params,
    )


_GENERATORS = {
    "beam": gen_beam,
    "photonic": gen_photonic,
    "schrodinger": gen_schrodinger,
    "delay": gen_delay,
}

_SCALARS = ("exp", "runge", "planted-rational")

PROBLEM_NAMES = tuple(_GENERATORS) + _SCALARS


def get_problem(name, n=100, seed=0, grid_spec=None):
    """Build any shipped problem by name.

    Matrix families take the column count n; scalar baselines ignore it
    and accept an optional grid_spec override.
    """
    if name in _GENERATORS:
        return _GENERATORS[name](n, seed=seed)
    if name in _SCALARS:
        return gen_scalar(name, grid_spec=grid_spec, seed=seed)
    raise ValueError(
        f"unknown problem {name!r}; pick one of {', '.join(PROBLEM_NAMES)}"
    )
