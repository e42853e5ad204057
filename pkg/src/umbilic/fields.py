"""Area-weighted vertex fields: L^p norms, integrals, rescaling, sublevels.

Fields pair per-vertex values with barycentric vertex areas, so integrals
are vertex-lumped quadrature against the surface measure.  Large exponents
(the pipeline uses p up to 6*(n+1)/alpha) are evaluated in log space to
avoid overflow.  All reductions use numpy's pairwise summation over the
fixed vertex order, so results are independent of any caller-side
parallel schedule.

The rescaling calculus tracks how quantities transform under X -> c*X:
area by c^n, curvature by 1/c, the Laplace spectrum and Ricci bounds by
1/c^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .mesh import Mesh


@dataclass(frozen=True)
class ScalarField:
    """Per-vertex values with positive area weights summing to the mesh area."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if v.shape != w.shape or v.ndim != 1:
            raise ValueError("values and weights must be equal-length 1-D arrays")
        if not np.all(w > 0.0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "weights", w)

    @classmethod
    def on_mesh(cls, mesh: Mesh, values) -> "ScalarField":
        values = np.broadcast_to(
            np.asarray(values, dtype=np.float64), (mesh.n_vertices,)
        ).copy()
        return cls(values=values, weights=mesh.vertex_areas)

    @property
    def total_area(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return len(self.values)


def _select(field: ScalarField, region):
    if region is None:
        return field.values, field.weights
    v = field.values[region]
    w = field.weights[region]
    if v.size == 0:
        raise ValueError("empty region")
    return v, w


def lp_norm(field: ScalarField, p, region=None) -> float:
    """(integral over the region of |f|^p)^(1/p); sup norm for p = inf.

    Powers are accumulated in log space, so non-integer and very large p
    (e.g. kp = 18/alpha) stay finite.
    """
    v, w = _select(field, region)
    if np.isinf(p):
        return float(np.abs(v).max())
    if p < 1:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    absv = np.abs(v)
    nz = absv > 0.0
    if not np.any(nz):
        return 0.0
    logs = np.log(w[nz]) + p * np.log(absv[nz])
    return float(np.exp(logsumexp(logs) / p))


def lp_norm_log_pth_power(field: ScalarField, p, region=None) -> float:
    """log of the integral of |f|^p (i.e. log of the p-th power of lp_norm).

    -inf for an identically zero field.  Used for Chebyshev-type bounds
    whose plain values can overflow.
    """
    v, w = _select(field, region)
    absv = np.abs(v)
    nz = absv > 0.0
    if not np.any(nz):
        return float("-inf")
    return float(logsumexp(np.log(w[nz]) + p * np.log(absv[nz])))


def integrate(field: ScalarField, region=None) -> float:
    """Integral of f against the surface measure (vertex-lumped)."""
    v, w = _select(field, region)
    return float(np.sum(w * v))


def sublevel_measure(field: ScalarField, threshold: float) -> tuple[float, float]:
    """(measure of {f < t}, measure of {f >= t}); the two sum to the area."""
    below = field.values < threshold
    m_below = float(np.sum(field.weights[below]))
    m_above = float(np.sum(field.weights[~below]))
    return m_below, m_above


def normalize_mesh(mesh: Mesh, n: int = 2) -> tuple[Mesh, float]:
    """Rescaled copy with unit area and the factor c = area^(-1/n) used.

    The discrete pipeline is n = 2 (surface measure scales by c^2).
    """
    if n != 2:
        raise ValueError("mesh normalization is defined for n = 2 surfaces")
    area = float(np.sum(mesh.face_areas))
    if area <= 0:
        raise ValueError("mesh has non-positive area")
    c = area ** (-1.0 / n)
    return mesh.scaled(c), c


_BASE_EXPONENTS = {
    "position": 1,
    "length": 1,
    "curvature": -1,
    "traceless_norm": -1,
    "h2": -2,
    "lambda1": -2,
    "ricci": -2,
    "scalar_curvature": -2,
}


@dataclass(frozen=True)
class RescalingLaw:
    """Powers of the scale factor for each geometric quantity under X -> c*X."""

    factor: float
    n: int = 2
    exponents: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.factor <= 0:
            raise ValueError("scale factor must be positive")
        table = dict(_BASE_EXPONENTS)
        table["area"] = self.n
        table["volume"] = self.n + 1
        table.update(self.exponents)
        object.__setattr__(self, "exponents", table)

    @classmethod
    def identity(cls, n: int = 2) -> "RescalingLaw":
        return cls(factor=1.0, n=n)

    def exponent(self, quantity: str) -> int:
        try:
            return self.exponents[quantity]
        except KeyError:
            raise KeyError(
                f"unknown quantity {quantity!r}; known: {sorted(self.exponents)}"
            ) from None

    def apply(self, quantity: str, value):
        """Value of `quantity` on the rescaled surface, given its value on X."""
        return value * self.factor ** self.exponent(quantity)

    def compose(self, other: "RescalingLaw") -> "RescalingLaw":
        if self.n != other.n:
            raise ValueError("cannot compose laws of different dimension")
        return RescalingLaw(factor=self.factor * other.factor, n=self.n)
