"""Per-vertex shape operator estimation and derived curvature quantities.

The estimator fits a local graph z = p*x + q*y + (a*x^2 + 2*b*xy + c*y^2)/2
+ higher terms over the ring-depth neighborhood in a tangent frame, then
reads the Weingarten map off the fitted jet.  The higher terms are tiered
by neighborhood size: cubics absorb the odd third-order variation, and an
isotropic quartic (x^2 + y^2)^2 absorbs the dominant even fourth-order term
of near-umbilical graphs, which otherwise aliases into the curvatures.
Signs follow the outward-normal convention: round spheres get positive
principal curvatures.

Ricci quantities come from the Gauss formula of a hypersurface in flat
space; in the principal frame the Ricci eigenvalues are n*H*kappa_i -
kappa_i^2.  The dimension n is an explicit parameter so the formulas can be
exercised against general-n sphere closed forms, even though the mesh
pipeline fixes n = 2.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dc_fields

import numpy as np
from scipy import sparse

from .mesh import Mesh

# Basis tiers by neighborhood size: each fit keeps at least one residual
# degree of freedom.
MIN_NEIGHBORS = 6
CUBIC_MIN_NEIGHBORS = 10
QUARTIC_MIN_NEIGHBORS = 12


@dataclass(frozen=True)
class SurfaceGeometry:
    """Curvature record for every vertex of a mesh (arrays over vertices).

    Indexing gives a per-vertex view; all fields use the normalized mean
    curvature convention H = (kappa1 + kappa2)/2.
    """

    normal: np.ndarray           # (V, 3) unit outward normals
    shape_operator: np.ndarray   # (V, 2, 2) symmetric, orthonormal tangent frame
    kappa: np.ndarray            # (V, 2) principal curvatures, kappa1 <= kappa2
    H: np.ndarray                # (V,) normalized mean curvature
    A_traceless_norm: np.ndarray  # (V,) ||A - H g|| = |k1 - k2|/sqrt(2)
    H2: np.ndarray               # (V,) second symmetric function k1*k2
    ricci_min: np.ndarray        # (V,) smallest Ricci eigenvalue
    scalar_curv: np.ndarray      # (V,) scalar curvature (= 2K for n = 2)

    def __len__(self) -> int:
        return len(self.H)

    def __getitem__(self, i):
        return VertexGeometry(
            **{f.name: getattr(self, f.name)[i] for f in dc_fields(self)}
        )

    def rescaled(self, factor: float) -> "SurfaceGeometry":
        """Exact curvature record of the mesh scaled by `factor`.

        Curvatures scale by 1/factor, Ricci and scalar curvature by
        1/factor^2; normals are unchanged.
        """
        s = 1.0 / factor
        return SurfaceGeometry(
            normal=self.normal,
            shape_operator=self.shape_operator * s,
            kappa=self.kappa * s,
            H=self.H * s,
            A_traceless_norm=self.A_traceless_norm * s,
            H2=self.H2 * s**2,
            ricci_min=self.ricci_min * s**2,
            scalar_curv=self.scalar_curv * s**2,
        )


@dataclass(frozen=True)
class VertexGeometry:
    """Single-vertex view of a SurfaceGeometry."""

    normal: np.ndarray
    shape_operator: np.ndarray
    kappa: np.ndarray
    H: float
    A_traceless_norm: float
    H2: float
    ricci_min: float
    scalar_curv: float


@dataclass(frozen=True)
class ConvexityStatus:
    mean_convex: bool       # min H > 0
    strictly_convex: bool   # min kappa1 > 0
    min_kappa1: float
    min_H: float


def vertex_normals(mesh: Mesh) -> np.ndarray:
    """Area-weighted average of incident face normals, unit length."""
    acc = np.zeros((mesh.n_vertices, 3))
    fc = mesh.face_cross  # already area-weighted (2*A*n)
    for k in range(3):
        np.add.at(acc, mesh.faces[:, k], fc)
    norms = np.linalg.norm(acc, axis=1)
    # acc accumulates 2*area-weighted normals, so the area sets its scale
    bad = norms <= 1e-12 * mesh.face_areas.mean()
    if np.any(bad):
        raise ValueError(
            f"rank-deficient normal at vertices {np.flatnonzero(bad)[:5]}"
        )
    return acc / norms[:, None]


def neighborhoods(mesh: Mesh, ring_depth: int) -> sparse.csr_matrix:
    """0/1 csr matrix whose row i holds the <=ring_depth neighbors of i."""
    if ring_depth < 1:
        raise ValueError("ring_depth must be >= 1")
    # int64: path counts in the matrix powers overflow small dtypes
    adj = mesh.one_ring_matrix.astype(np.int64)
    acc = adj.copy()
    for _ in range(ring_depth - 1):
        acc = acc + acc @ adj
        acc.data[:] = 1
    acc = acc.tocsr()
    acc.setdiag(0)
    acc.eliminate_zeros()
    return acc


def estimate_geometry(mesh: Mesh, ring_depth: int = 2) -> SurfaceGeometry:
    """Estimate the shape operator and derived curvatures at every vertex.

    Requires every ring_depth-neighborhood to contain at least 6 vertices;
    per-vertex fits are deterministic and independent, so results do not
    depend on evaluation order.
    """
    V = mesh.n_vertices
    normals = vertex_normals(mesh)
    nbr = neighborhoods(mesh, ring_depth)
    counts = np.diff(nbr.indptr)
    if counts.min() < MIN_NEIGHBORS:
        bad = int(np.argmin(counts))
        raise ValueError(
            f"underdetermined fit: vertex {bad} has only {counts[bad]} "
            f"neighbors at ring_depth={ring_depth} (need >= {MIN_NEIGHBORS})"
        )

    # tangent frames: t1 orthogonal to n, t2 = n x t1
    n = normals
    ref = np.where(
        np.abs(n[:, 0:1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]]
    )
    t1 = ref - n * np.einsum("ij,ij->i", ref, n)[:, None]
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(n, t1)

    # padded neighbor table; padding rows are zeroed and drop out of the
    # normal equations
    m = int(counts.max())
    pad = np.zeros((V, m), dtype=np.int64)
    mask = np.zeros((V, m), dtype=bool)
    cols = np.arange(m)
    mask[:] = cols[None, :] < counts[:, None]
    pad[mask] = nbr.indices
    d = mesh.vertices[pad] - mesh.vertices[:, None, :]
    d[~mask] = 0.0

    u = np.einsum("vmk,vk->vm", d, t1)
    w = np.einsum("vmk,vk->vm", d, t2)
    z = np.einsum("vmk,vk->vm", d, n)
    scale = np.sqrt(np.einsum("vmk,vmk->vm", d, d).sum(axis=1) / counts)
    u = u / scale[:, None]
    w = w / scale[:, None]
    z = z / scale[:, None]

    terms = [u, w, u * u, u * w, w * w,
             u**3, u * u * w, u * w * w, w**3,
             (u * u + w * w) ** 2]
    A = np.stack(terms, axis=-1)
    A[~mask] = 0.0
    z = np.where(mask, z, 0.0)

    n_terms = np.full(V, 5)
    n_terms[counts >= CUBIC_MIN_NEIGHBORS] = 9
    n_terms[counts >= QUARTIC_MIN_NEIGHBORS] = 10
    coef = np.zeros((V, 5))
    for nt in np.unique(n_terms):
        sel = n_terms == nt
        Asub = A[sel][:, :, :nt]
        G = np.einsum("vmi,vmj->vij", Asub, Asub)
        b = np.einsum("vmi,vm->vi", Asub, z[sel])
        try:
            coef[sel] = np.linalg.solve(G, b[..., None])[:, :5, 0]
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "singular jet fit (degenerate vertex neighborhood)"
            ) from exc

    p = coef[:, 0]
    q = coef[:, 1]
    fxx = 2.0 * coef[:, 2] / scale
    fxy = coef[:, 3] / scale
    fyy = 2.0 * coef[:, 4] / scale

    # first/second fundamental forms of the graph in the fit frame
    E = 1.0 + p * p
    F = p * q
    Gm = 1.0 + q * q
    wn = np.sqrt(1.0 + p * p + q * q)
    e = fxx / wn
    f = fxy / wn
    g = fyy / wn

    # symmetric Weingarten matrix in the metric-orthonormal frame,
    # negated so outward-normal spheres are positively curved
    det = E * Gm - F * F
    sE = np.sqrt(E)
    l21 = F / sE
    l22 = np.sqrt(det) / sE
    s11 = e / E
    s12 = (f - l21 * s11 * sE) / (sE * l22)
    s22 = (g - 2.0 * l21 * s12 * l22 - l21 * l21 * s11) / (l22 * l22)
    shape_op = -np.stack(
        [np.stack([s11, s12], axis=-1), np.stack([s12, s22], axis=-1)], axis=-2
    )

    mean = 0.5 * (shape_op[:, 0, 0] + shape_op[:, 1, 1])
    disc = np.sqrt(
        0.25 * (shape_op[:, 0, 0] - shape_op[:, 1, 1]) ** 2
        + shape_op[:, 0, 1] ** 2
    )
    kappa = np.stack([mean - disc, mean + disc], axis=1)

    H = mean
    a_norm = np.sqrt(2.0) * disc
    # H*H - disc*disc keeps the AM-GM bound H2 <= H^2 exact in floating point
    h2 = H * H - disc * disc
    ricci_min, scalar = ricci_from_gauss(kappa, n=2)
    return SurfaceGeometry(
        normal=normals,
        shape_operator=shape_op,
        kappa=kappa,
        H=H,
        A_traceless_norm=a_norm,
        H2=h2,
        ricci_min=ricci_min,
        scalar_curv=scalar,
    )


def ricci_from_gauss(kappa: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Ricci eigenvalue minimum and scalar curvature from principal curvatures.

    In the principal frame Ric_ii = n*H*kappa_i - kappa_i^2 and
    R = n^2 H^2 - sum kappa_i^2; the trailing axis of `kappa` must hold all
    n principal curvatures.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    if kappa.shape[-1] != n:
        raise ValueError(
            f"expected {n} principal curvatures, got {kappa.shape[-1]}"
        )
    H = kappa.mean(axis=-1)
    ric = n * H[..., None] * kappa - kappa**2
    scalar = n**2 * H**2 - (kappa**2).sum(axis=-1)
    return ric.min(axis=-1), scalar


def ricci_deficit(ricci_min, reference: float, n: int):
    """Negative part of (Ric_min/mu^2 - (n-1)) after rescaling by mu.

    `ricci_min` may be a scalar, an array, or anything with a ricci_min
    attribute (VertexGeometry / SurfaceGeometry).
    """
    if reference <= 0:
        raise ValueError("reference scale mu must be positive")
    r = getattr(ricci_min, "ricci_min", ricci_min)
    r = np.asarray(r, dtype=np.float64)
    return np.maximum(0.0, (n - 1) - r / reference**2)


def convexity_status(geometries: SurfaceGeometry) -> ConvexityStatus:
    """Pointwise minima of kappa1 and H with the convexity booleans."""
    min_k1 = float(geometries.kappa[:, 0].min())
    min_h = float(geometries.H.min())
    return ConvexityStatus(
        mean_convex=bool(min_h > 0.0),
        strictly_convex=bool(min_k1 > 0.0),
        min_kappa1=min_k1,
        min_H=min_h,
    )
