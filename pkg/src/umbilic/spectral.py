"""Cotangent Laplace-Beltrami operator and its first nonzero eigenvalue.

The stiffness matrix uses the classical cotangent weights (positive
semidefinite, constants in the kernel), the mass matrix is barycentric
lumping.  lambda1 runs block shift-invert subspace iteration with the
constant vector deflated explicitly; inner systems are solved by
conjugate gradients with diagonal preconditioning.  The returned pair is
certified by its generalized eigenvalue residual.

Also provides the closed-form spectral bounds the pinching pipeline needs:
the mean-curvature/scalar-curvature upper bounds and the Ricci-deficit
lower bound with its configurable constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import eigh
from scipy.sparse.linalg import cg

from .mesh import Mesh

_SEED = 0x1C05FEE


class ConvergenceError(RuntimeError):
    """Eigensolver ran out of iterations; carries the best pair found."""

    def __init__(self, message, best_lambda1, best_residual, iterations):
        super().__init__(message)
        self.best_lambda1 = best_lambda1
        self.best_residual = best_residual
        self.iterations = iterations


@dataclass(frozen=True)
class LaplaceSystem:
    """Sparse stiffness/mass pair of the P1 Laplace-Beltrami discretization."""

    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix

    @property
    def mass_diagonal(self) -> np.ndarray:
        return np.asarray(self.mass.diagonal())

    @property
    def n(self) -> int:
        return self.stiffness.shape[0]


@dataclass(frozen=True)
class SpectralResult:
    """First nonzero eigenpair with its certificate and gap diagnostics."""

    lambda1: float
    eigenfunction: np.ndarray
    residual: float
    iterations: int
    ritz_values: tuple
    gap_warning: bool


def build_laplace(mesh: Mesh) -> LaplaceSystem:
    """Assemble cotangent stiffness and lumped mass for a validated mesh."""
    f = mesh.faces
    c = mesh.face_corners
    V = mesh.n_vertices

    rows, cols, vals = [], [], []
    for corner, (ja, jb) in enumerate([(1, 2), (2, 0), (0, 1)]):
        e1 = c[:, ja] - c[:, corner]
        e2 = c[:, jb] - c[:, corner]
        cross = np.linalg.norm(np.cross(e1, e2), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = np.einsum("ij,ij->i", e1, e2) / cross
        if not np.all(np.isfinite(cot)):
            raise ValueError("non-finite cotangent weight (degenerate face)")
        # edge (ja, jb) opposite this corner gets weight cot/2
        rows.append(f[:, ja])
        cols.append(f[:, jb])
        vals.append(-0.5 * cot)
        rows.append(f[:, jb])
        cols.append(f[:, ja])
        vals.append(-0.5 * cot)
    off = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(V, V),
    )
    diag = -np.asarray(off.sum(axis=1)).ravel()
    stiffness = (off + sparse.diags(diag)).tocsr()
    mass = sparse.diags(mesh.vertex_areas).tocsr()
    return LaplaceSystem(stiffness=stiffness, mass=mass)


def lambda1(
    system: LaplaceSystem,
    tol: float = 1e-8,
    max_iter: int = 500,
    block_size: int = 4,
) -> SpectralResult:
    """Smallest nonzero generalized eigenvalue of (stiffness, mass).

    Shift-invert subspace iteration on the mass-orthogonal complement of
    the constants; each inverse application solves the (consistent,
    singular) stiffness system by Jacobi-preconditioned CG.  Stops once the
    relative residual ||S u - lambda M u|| / ||M u|| drops below tol.

    A multiple second/third Ritz value only sets gap_warning (spheres have
    a three-dimensional first eigenspace; that is expected, not an error).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    S = system.stiffness
    M = system.mass
    m = system.mass_diagonal
    V = system.n
    if V < 3:
        raise ValueError("need at least 3 vertices")
    b = int(min(block_size, V - 1))

    d = S.diagonal()
    d = np.where(d > 0, d, 1.0)
    precond = sparse.diags(1.0 / d).tocsr()
    m_total = m.sum()

    def deflate(x):
        # mass-orthogonal projection against the constant vector
        if x.ndim == 1:
            return x - (m @ x) / m_total
        return x - np.outer(np.ones(V), m @ x / m_total).reshape(V, -1)

    def m_orthonormalize(X):
        g = X.T @ (m[:, None] * X)
        try:
            L = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise ConvergenceError(
                "search block became rank-deficient", None, None, 0
            ) from None
        return np.linalg.solve(L, X.T).T

    rng = np.random.default_rng(_SEED)
    X = deflate(rng.standard_normal((V, b)))
    X = m_orthonormalize(X)

    best = (np.inf, None, np.inf)
    inner_rtol = 1e-2
    for it in range(1, max_iter + 1):
        Z = np.empty_like(X)
        for j in range(b):
            rhs = m * X[:, j]
            z, _ = cg(S, rhs, x0=X[:, j], rtol=inner_rtol, atol=0.0, M=precond)
            Z[:, j] = z
        Z = deflate(Z)
        Z = m_orthonormalize(Z)
        T = Z.T @ (S @ Z)
        G = Z.T @ (m[:, None] * Z)
        theta, W = eigh(T, G)
        X = Z @ W
        u = X[:, 0]
        lam = float(theta[0])
        r = S @ u - lam * (m * u)
        residual = float(np.linalg.norm(r) / np.linalg.norm(m * u))
        if residual < best[2]:
            best = (lam, u, residual)
        if residual <= tol:
            mu = u / np.sqrt(m @ (u * u))
            ritz = tuple(float(t) for t in theta)
            gap = (
                len(ritz) >= 3
                and abs(ritz[2] - ritz[1]) <= tol * max(1.0, abs(ritz[2]))
            )
            return SpectralResult(
                lambda1=lam,
                eigenfunction=mu,
                residual=residual,
                iterations=it,
                ritz_values=ritz,
                gap_warning=bool(gap),
            )
        inner_rtol = float(np.clip(0.05 * residual / max(lam, 1e-300),
                                   0.1 * tol, 1e-2))
    raise ConvergenceError(
        f"lambda1 did not reach tol={tol:g} in {max_iter} iterations "
        f"(best residual {best[2]:.3e})",
        best_lambda1=best[0],
        best_residual=best[2],
        iterations=max_iter,
    )


@dataclass(frozen=True)
class Lambda1UpperBounds:
    """lambda1 <= by_scalar_curvature <= by_mean_curvature (closed surfaces)."""

    by_mean_curvature: float      # n * sup|H|^2
    by_scalar_curvature: float    # sup|R| / (n-1)


def lambda1_upper_bound(geometries, n: int = 2) -> Lambda1UpperBounds:
    """Mean-curvature and scalar-curvature upper bounds for lambda1."""
    h_inf = float(np.abs(geometries.H).max())
    r_inf = float(np.abs(geometries.scalar_curv).max())
    return Lambda1UpperBounds(
        by_mean_curvature=n * h_inf**2,
        by_scalar_curvature=r_inf / (n - 1),
    )


def aubry_lower_bound(
    deficit_integral: float,
    volume: float,
    p: float,
    C_np: float,
    n: int = 2,
) -> float | None:
    """Ricci-deficit lower bound n*(1 - C*(deficit/volume)^(1/p)) for lambda1.

    Returns None when the smallness hypothesis deficit < volume/C fails
    ("hypothesis violated"); the bound is vacuous there.  The constant
    C(n, p) is not quantified by the theory and must be supplied; results
    are conditional on it.
    """
    if p <= n / 2:
        raise ValueError(f"need p > n/2, got p={p}")
    if C_np <= 0:
        raise ValueError("C_np must be positive")
    if volume <= 0:
        raise ValueError("volume must be positive")
    if deficit_integral < 0:
        raise ValueError("deficit integral cannot be negative")
    if deficit_integral >= volume / C_np:
        return None
    return n * (1.0 - C_np * (deficit_integral / volume) ** (1.0 / p))


def dump_system(system: LaplaceSystem, stiffness_path, mass_path) -> None:
    """Write both matrices as text "row col value" triplets (0-based)."""
    for mat, path in [(system.stiffness, stiffness_path), (system.mass, mass_path)]:
        coo = mat.tocoo()
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{i} {j} {float(v)!r}\n")
