"""Linear Gaussian structural equation models and synthetic benchmarks.

A model on p variables is parameterized either by a weighted adjacency
matrix ``B`` (entry ``b[j, k]`` is the coefficient of edge ``k -> j``)
with diagonal noise variances, or, after permuting the variables into a
topological order, by the lower-triangular factor ``L`` of the inverse
covariance ``Sigma^{-1} = L^t L``.  The two parameterizations share the
same sparsity pattern, which is what makes the Cholesky factor a carrier
of DAG structure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


def _as_float_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square 2-d array, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


@dataclass(frozen=True)
class Permutation:
    """A variable ordering pi, stored as a 0-based index array.

    The induced matrix ``P`` has ``P[i, pi[i]] = 1``, so ``P @ x``
    reorders ``x`` as ``x[pi]``.
    """

    pi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=int)
        p = pi.shape[0]
        if pi.ndim != 1 or p < 1:
            raise ValueError("pi must be a non-empty 1-d index array")
        if not np.array_equal(np.sort(pi), np.arange(p)):
            raise ValueError("pi must be a bijection on 0..p-1")
        object.__setattr__(self, "pi", pi)

    @property
    def p(self) -> int:
        return self.pi.shape[0]

    def matrix(self) -> np.ndarray:
        m = np.zeros((self.p, self.p))
        m[np.arange(self.p), self.pi] = 1.0
        return m

    def inverse(self) -> "Permutation":
        inv = np.empty(self.p, dtype=int)
        inv[self.pi] = np.arange(self.p)
        return Permutation(inv)

    @staticmethod
    def identity(p: int) -> "Permutation":
        return Permutation(np.arange(p))

    def apply_to_matrix(self, a: np.ndarray) -> np.ndarray:
        """Conjugate a p x p matrix into the permuted frame: P A P^t."""
        return a[np.ix_(self.pi, self.pi)]


@dataclass(frozen=True)
class WeightedAdjacency:
    """Weighted adjacency matrix B with b[j, k] the weight of edge k -> j."""

    b: np.ndarray

    def __post_init__(self):
        b = _as_float_matrix(self.b, "b")
        if np.abs(np.diag(b)).max(initial=0.0) != 0.0:
            raise ValueError("adjacency matrix must have a zero diagonal")
        object.__setattr__(self, "b", b)

    @property
    def p(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class NoiseVariances:
    """Diagonal of the noise variance matrix Omega."""

    omega2: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega2, dtype=float)
        if w.ndim != 1 or w.shape[0] < 1:
            raise ValueError("omega2 must be a non-empty 1-d array")
        if not (np.isfinite(w).all() and (w > 0).all()):
            raise ValueError("noise variances must be finite and strictly positive")
        object.__setattr__(self, "omega2", w)

    @property
    def p(self) -> int:
        return self.omega2.shape[0]


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with positive diagonal, Sigma^{-1} = L^t L.

    The strict lower triangle carries the DAG edges; the diagonal carries
    the noise scales (L_ii = 1/omega_i).
    """

    l: np.ndarray

    def __post_init__(self):
        l = _as_float_matrix(self.l, "l")
        if np.abs(l[np.triu_indices_from(l, 1)]).max(initial=0.0) != 0.0:
            raise ValueError("entries above the diagonal must be exactly zero")
        if not (np.diag(l) > 0).all():
            raise ValueError("diagonal entries must be strictly positive")
        object.__setattr__(self, "l", l)

    @property
    def p(self) -> int:
        return self.l.shape[0]

    def support_size(self) -> int:
        """Number of nonzeros in the strict lower triangle."""
        tl = np.tril_indices(self.p, -1)
        return int(np.count_nonzero(self.l[tl]))


@dataclass(frozen=True)
class SemInstance:
    """Ground-truth SEM: adjacency, noise, and a topological ordering.

    ``ordering`` is the permutation under which the adjacency becomes
    strictly lower triangular, i.e. ``P B P^t`` has zeros on and above
    the diagonal.
    """

    adjacency: WeightedAdjacency
    noise: NoiseVariances
    ordering: Permutation
    expected_edges: int = 0

    def __post_init__(self):
        p = self.adjacency.p
        if self.noise.p != p or self.ordering.p != p:
            raise ValueError("adjacency, noise and ordering dimensions disagree")
        b_perm = self.ordering.apply_to_matrix(self.adjacency.b)
        if np.abs(np.triu(b_perm)).max(initial=0.0) != 0.0:
            raise ValueError("adjacency is not strictly lower triangular under ordering")

    @property
    def p(self) -> int:
        return self.adjacency.p


@dataclass(frozen=True)
class DataMatrix:
    """n x p data matrix, one observation per row."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError(f"x must be a non-empty 2-d array, got shape {x.shape}")
        if not np.isfinite(x).all():
            raise ValueError("data matrix contains non-finite entries")
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SampleCovariance:
    """Symmetric PSD sample covariance with strictly positive diagonal."""

    s: np.ndarray

    def __post_init__(self):
        s = _as_float_matrix(self.s, "s")
        if np.abs(s - s.T).max(initial=0.0) > 1e-12:
            raise ValueError("sample covariance must be symmetric within 1e-12")
        if not (np.diag(s) > 0).all():
            raise ValueError(
                "sample covariance has a non-positive diagonal entry "
                "(zero-variance column); the row solver requires S_ii > 0"
            )
        w = np.linalg.eigvalsh(s)
        if w[0] < -1e-10 * max(w[-1], 1.0):
            raise ValueError("sample covariance is not positive semi-definite")
        object.__setattr__(self, "s", s)

    @property
    def p(self) -> int:
        return self.s.shape[0]


def generate_dag(p: int, s: int, rng: np.random.Generator) -> SemInstance:
    """Draw a random sparse DAG with expected edge count s.

    Each of the p(p-1)/2 lower-triangular slots (in generation order) is
    filled independently with probability q = 2s/(p(p-1)); nonzero
    weights are uniform on [-1, -0.1] u [0.1, 1].  Noise variances are
    all one.  Variable labels are then scrambled by a uniformly random
    permutation, which is stored as the ground-truth ordering.

    Parameters
    ----------
    p : number of variables, at least 2.
    s : expected number of edges, between 0 and p(p-1)/2.
    rng : numpy random generator.
    """
    if p < 2:
        raise ValueError(f"p must be at least 2, got {p}")
    max_edges = p * (p - 1) // 2
    if not 0 <= s <= max_edges:
        raise ValueError(f"s must lie in [0, {max_edges}], got {s}")

    q = 2.0 * s / (p * (p - 1))
    tl = np.tril_indices(p, -1)
    n_slots = tl[0].shape[0]
    present = rng.random(n_slots) < q
    magnitude = rng.uniform(0.1, 1.0, size=n_slots)
    sign = np.where(rng.random(n_slots) < 0.5, -1.0, 1.0)

    b_gen = np.zeros((p, p))
    b_gen[tl] = np.where(present, sign * magnitude, 0.0)

    order = Permutation(rng.permutation(p))
    # scramble labels: the stored B satisfies P B P^t = b_gen
    inv = order.inverse()
    b = inv.apply_to_matrix(b_gen)
    return SemInstance(
        adjacency=WeightedAdjacency(b),
        noise=NoiseVariances(np.ones(p)),
        ordering=order,
        expected_edges=s,
    )


def adjacency_to_cholesky(inst: SemInstance) -> CholeskyFactor:
    """Map (B, Omega, pi) to the permuted-frame factor L = Omega_pi^{-1/2} (I - B_pi)."""
    b_perm = inst.ordering.apply_to_matrix(inst.adjacency.b)
    omega_perm = inst.noise.omega2[inst.ordering.pi]
    l = (np.eye(inst.p) - b_perm) / np.sqrt(omega_perm)[:, None]
    return CholeskyFactor(l)


def cholesky_to_adjacency(l: CholeskyFactor) -> tuple[WeightedAdjacency, NoiseVariances]:
    """Invert the row-scaling map, staying in the permuted frame.

    Returns (B, Omega) with omega2_i = 1/L_ii^2 and B_ij = -L_ij / L_ii
    for i > j; the zero pattern of L is preserved exactly.
    """
    d = np.diag(l.l)
    b = -(l.l / d[:, None])
    np.fill_diagonal(b, 0.0)
    return WeightedAdjacency(b), NoiseVariances(1.0 / d**2)


def sample_data(inst: SemInstance, n: int, rng: np.random.Generator) -> DataMatrix:
    """Draw n i.i.d. rows from N(0, Sigma) with Sigma^{-1} = L^t L.

    Sampling solves the triangular system L x = z for z ~ N(0, I) in the
    permuted frame, then maps columns back to the original labels.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    l = adjacency_to_cholesky(inst).l
    z = rng.standard_normal((n, inst.p))
    x_perm = solve_triangular(l, z.T, lower=True).T
    # column i of the permuted frame is original variable pi[i]
    x = x_perm @ inst.ordering.matrix()
    return DataMatrix(x)


def sample_covariance(x: DataMatrix) -> SampleCovariance:
    """S = X^t X / n, symmetrized to remove round-off asymmetry."""
    s = x.x.T @ x.x / x.n
    s = 0.5 * (s + s.T)
    if (np.diag(s) <= 0).any():
        raise ValueError("degenerate data: a column has zero variance")
    return SampleCovariance(s)
