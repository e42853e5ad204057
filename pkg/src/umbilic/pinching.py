"""Pinching-theorem pipeline for almost-umbilical closed surfaces.

Checks the pointwise hypothesis ||A - H g|| <= H |M|^(-(2+a)/n) eps^(2+a),
the admissibility threshold on eps, strict convexity, the spectral
condition lambda1 (int H)^2 - n ||H2||_{2p}^2 > -C_eps on the unit-area
rescaling, and the annulus conclusion that the surface lies between the
spheres of radius sqrt(n/lambda1) -/+ eps about its barycenter.

The proof trace reproduces the intermediate objects of the containment
argument: the best-fit umbilical factor mu0, the rescaled surface
comparison sets {||A - mu0 g|| < gamma} with their Chebyshev measure
bounds, the Ricci-deficit integral, and the resulting spectral lower
bound.  Analytic constants the theory leaves unquantified (L, c_n, the
Ricci-deficit constant) are configuration inputs, echoed in every report;
all conclusions are conditional on them.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from . import spectral, surfgen
from .diffgeo import (
    ConvexityStatus,
    SurfaceGeometry,
    convexity_status,
    estimate_geometry,
    ricci_deficit,
)
from .fields import (
    RescalingLaw,
    ScalarField,
    lp_norm,
    lp_norm_log_pth_power,
    sublevel_measure,
)
from .mesh import Mesh, measures, validate_mesh


@dataclass(frozen=True)
class PinchingConstants:
    """Run configuration: exponents, eps, and the free analytic constants.

    alpha is the pinching order (the hypothesis uses eps^(2+alpha)); L and
    c_n parametrize C_eps; C_np_aubry is the Ricci-deficit constant.  All
    three default to 1 and are stamped into every report.
    """

    alpha: float
    epsilon: float
    n: int = 2
    p_roth: float | None = None
    L: float = 1.0
    c_n: float = 1.0
    C_np_aubry: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        if self.p_roth is None:
            object.__setattr__(self, "p_roth", float(self.n + 1))
        if self.p_roth < 2:
            raise ValueError("p_roth must be >= 2")
        if min(self.L, self.c_n, self.C_np_aubry) <= 0:
            raise ValueError("L, c_n and C_np_aubry must be positive")

    @property
    def c_threshold(self) -> float:
        """Admissibility coefficient: eps < c_threshold * |M|^(1/n).

        The quantified convexity requirement (1/sqrt(n(n-1)))^(1/(2+alpha));
        the remaining smallness conditions surface as trace warnings.
        """
        return (1.0 / math.sqrt(self.n * (self.n - 1))) ** (1.0 / (2.0 + self.alpha))

    @property
    def k_exponent(self) -> float:
        return 6.0 / self.alpha

    @property
    def kp(self) -> float:
        """Large integrability exponent k*p with p = n+1."""
        return self.k_exponent * (self.n + 1)

    def rescaled(self, factor: float) -> "PinchingConstants":
        """Constants for the mesh scaled by `factor` (eps is a length)."""
        return replace(self, epsilon=self.epsilon * factor)


@dataclass(frozen=True)
class HypothesisResult:
    """Pointwise pinching margins H*rhs_scale - ||A - H g|| over vertices."""

    holds: bool
    margins: np.ndarray
    worst_margin: float
    worst_vertex: int
    epsilon_admissible: bool
    rhs_scale: float


@dataclass(frozen=True)
class RothResult:
    """Spectral pinching condition on the unit-area surface."""

    lhs: float                 # lambda1*(int H)^2 - n*||H2||_{2p}^2
    c_eps: float
    threshold: float           # -c_eps; the condition is lhs > threshold
    holds: bool
    integral_H: float
    h2_norm_2p: float
    constituents: dict         # the four terms whose min/2 gives c_eps


@dataclass(frozen=True)
class AnnulusResult:
    """Distance range to the barycenter against the conclusion annulus."""

    center: np.ndarray
    r_lambda: float            # sqrt(n / lambda1)
    inner: float               # r_lambda - eps
    outer: float               # r_lambda + eps
    min_dist: float
    max_dist: float
    contained: bool
    oscillation: float         # max_dist - min_dist


@dataclass(frozen=True)
class MuFit:
    mu_star: float
    attained_norm: float       # ||A - mu* g||_p
    mean_H: float              # area-weighted mean of H (p = 2 minimizer)


@dataclass(frozen=True)
class ProofTrace:
    """Intermediate quantities of the containment argument (unit-area scale)."""

    kp: float
    eps_tilde: float
    gamma: float
    mu0: float
    mu0_bracket: tuple
    mean_H_normalized: float
    mu0_mean_gap: float
    dev_norm_kp: float                 # ||A~ - mu0 g~||_kp
    bad_set_P_measure: float           # |{||A^ - g^|| >= 1}| on mu0-rescaled surface
    bad_set_P_bound: float
    bad_set_Pgamma_measure: float      # |{||A~ - mu0 g~|| >= gamma}|
    chebyshev_bound_Pgamma: float      # (||A~ - mu0 g~||_kp / gamma)^kp
    eps_rate_bound_Pgamma: float       # (eps~^(2+alpha)/gamma)^kp, constant-free rate
    ricci_deficit_integral: float
    aubry_bound: float | None                # lower bound for the mu0-rescaled surface
    aubry_bound_normalized: float | None     # times mu0^2: bound for the unit-area surface
    lambda1_normalized: float
    eta_eps: float
    gamma_ok: bool
    warnings: tuple


@dataclass(frozen=True)
class PinchingReport:
    """Full hypothesis/conclusion ledger of one verify run.

    Stages after a failed precondition stay None (serialized as null); the
    failure message names the stage that stopped the pipeline.
    """

    constants: PinchingConstants
    area: float
    hypothesis: HypothesisResult | None
    strictly_convex: bool | None
    convexity: ConvexityStatus | None
    lambda1: float | None
    lambda1_normalized: float | None
    lambda1_residual: float | None
    roth: RothResult | None
    annulus: AnnulusResult | None
    oscillation: float | None
    phi_sup: float | None
    trace: ProofTrace | None
    failure: str | None


# -- hypothesis --------------------------------------------------------------


def check_hypothesis(
    mesh: Mesh, geometries: SurfaceGeometry, constants: PinchingConstants
) -> HypothesisResult:
    """Pointwise pinching margins; requires mean-convexity (H > 0 everywhere)."""
    H = geometries.H
    if np.any(H <= 0.0):
        bad = int(np.argmin(H))
        raise ValueError(
            f"mean-convexity violated: H({bad}) = {H[bad]:g} <= 0"
        )
    area = float(np.sum(mesh.face_areas))
    n, alpha, eps = constants.n, constants.alpha, constants.epsilon
    rhs_scale = area ** (-(2.0 + alpha) / n) * eps ** (2.0 + alpha)
    margins = H * rhs_scale - geometries.A_traceless_norm
    worst = int(np.argmin(margins))
    return HypothesisResult(
        holds=bool(margins[worst] >= 0.0),
        margins=margins,
        worst_margin=float(margins[worst]),
        worst_vertex=worst,
        epsilon_admissible=bool(eps < constants.c_threshold * area ** (1.0 / n)),
        rhs_scale=rhs_scale,
    )


# -- spectral pinching condition ----------------------------------------------


def roth_condition(
    mesh: Mesh,
    geometries: SurfaceGeometry,
    lam1: float,
    constants: PinchingConstants,
) -> RothResult:
    """Evaluate lambda1*(int H)^2 - n*||H2||_{2p}^2 > -C_eps on |M| = 1.

    `mesh`, `geometries`, `lam1` and constants.epsilon must all refer to
    the unit-area rescaling; H2 > 0 everywhere and eps < 2/(3 sup H) are
    hypotheses, violated ones raise.
    """
    area = float(np.sum(mesh.face_areas))
    if abs(area - 1.0) > 1e-6:
        raise ValueError(f"spectral condition needs a unit-area mesh, |M| = {area:g}")
    if np.any(geometries.H2 <= 0.0):
        bad = int(np.argmin(geometries.H2))
        raise ValueError(f"H2({bad}) = {geometries.H2[bad]:g} <= 0")
    n = constants.n
    eps = constants.epsilon
    h_inf = float(np.abs(geometries.H).max())
    if eps >= 2.0 / (3.0 * h_inf):
        raise ValueError(
            f"eps = {eps:g} >= 2/(3 sup H) = {2.0 / (3.0 * h_inf):g}"
        )
    weights = mesh.vertex_areas
    integral_h = float(np.sum(weights * geometries.H))
    h2_norm = lp_norm(
        ScalarField(values=geometries.H2, weights=weights), 2.0 * constants.p_roth
    )
    lhs = lam1 * integral_h**2 - n * h2_norm**2
    constituents = {
        "L_sqrt_term": constants.L * math.sqrt(n / lam1) * eps**2,
        "L": constants.L,
        "c_n": constants.c_n,
        "half_n_h2_norm_sq": 0.5 * n * h2_norm**2,
    }
    c_eps = 0.5 * min(constituents.values())
    return RothResult(
        lhs=lhs,
        c_eps=c_eps,
        threshold=-c_eps,
        holds=bool(lhs > -c_eps),
        integral_H=integral_h,
        h2_norm_2p=h2_norm,
        constituents=constituents,
    )


# -- conclusion geometry -------------------------------------------------------


def annulus_check(
    mesh: Mesh, lam1: float, epsilon: float, n: int = 2
) -> AnnulusResult:
    """Containment of the surface in the annulus of width 2*eps about x0."""
    if lam1 <= 0:
        raise ValueError("lambda1 must be positive")
    r_lam = math.sqrt(n / lam1)
    if epsilon >= r_lam:
        raise ValueError(
            f"inner radius not positive: eps = {epsilon:g} >= sqrt(n/lambda1) = {r_lam:g}"
        )
    center = measures(mesh).barycenter
    dist = np.linalg.norm(mesh.vertices - center, axis=1)
    dmin, dmax = float(dist.min()), float(dist.max())
    inner, outer = r_lam - epsilon, r_lam + epsilon
    return AnnulusResult(
        center=center,
        r_lambda=r_lam,
        inner=inner,
        outer=outer,
        min_dist=dmin,
        max_dist=dmax,
        contained=bool(inner <= dmin and dmax <= outer),
        oscillation=dmax - dmin,
    )


def phi_sup(mesh: Mesh, lam1: float, n: int = 2) -> float:
    """sup over vertices of |X - x0| (|X - x0| - sqrt(n/lambda1))^2."""
    if lam1 <= 0:
        raise ValueError("lambda1 must be positive")
    r_lam = math.sqrt(n / lam1)
    center = measures(mesh).barycenter
    dist = np.linalg.norm(mesh.vertices - center, axis=1)
    return float((dist * (dist - r_lam) ** 2).max())


def eta_of_epsilon(lam1: float, h_inf: float, epsilon: float, n: int = 2) -> float:
    """min((sqrt(n/lambda1) - eps) eps^2, 1/(27 sup|H|^3))."""
    r_lam = math.sqrt(n / lam1)
    return min((r_lam - epsilon) * epsilon**2, 1.0 / (27.0 * h_inf**3))


# -- best-fit umbilical factor --------------------------------------------------


def _mu_derivative_sign(k1, k2, logw, p):
    """Sign of d/dmu of sum_i w_i ((k1_i-mu)^2 + (k2_i-mu)^2)^(p/2).

    The derivative is -p * sum w sq^(p/2-1) ((k1-mu) + (k2-mu)); terms are
    combined with a signed log-sum so large p stays stable.
    """

    def sign_at(mu: float) -> float:
        sq = (k1 - mu) ** 2 + (k2 - mu) ** 2
        lin = (k1 - mu) + (k2 - mu)
        nz = (sq > 0.0) & (lin != 0.0)
        if not np.any(nz):
            return 0.0
        logs = (
            logw[nz]
            + (0.5 * p - 1.0) * np.log(sq[nz])
            + np.log(np.abs(lin[nz]))
        )
        total, sign = logsumexp(logs, b=np.sign(lin[nz]), return_sign=True)
        if not np.isfinite(total):
            return 0.0
        return -float(sign)

    return sign_at


def fit_umbilical_mu(
    geometries: SurfaceGeometry, weights: np.ndarray, p: float
) -> MuFit:
    """Minimize ||A - mu g||_p over mu on the bracket [min k1, max k2].

    The p-th power objective is convex in mu, so the minimizer is located
    by bisecting the sign of its derivative; a value-based search would
    stall at a sqrt(machine-eps) plateau around the minimum.  For p = 2
    the result is the weighted mean of H to round-off.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    weights = np.asarray(weights, dtype=np.float64)
    k1 = geometries.kappa[:, 0]
    k2 = geometries.kappa[:, 1]
    lo = float(k1.min())
    hi = float(k2.max())
    mean_h = float(np.sum(weights * geometries.H) / np.sum(weights))
    sign_at = _mu_derivative_sign(k1, k2, np.log(weights), p)
    a, b = lo, hi
    width_tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    for _ in range(200):
        if b - a <= width_tol:
            break
        mid = 0.5 * (a + b)
        s = sign_at(mid)
        if s < 0.0:
            a = mid
        elif s > 0.0:
            b = mid
        else:
            a = b = mid
    mu = 0.5 * (a + b)
    dev = np.sqrt((k1 - mu) ** 2 + (k2 - mu) ** 2)
    attained = lp_norm(ScalarField(values=dev, weights=weights), p)
    return MuFit(mu_star=float(mu), attained_norm=attained, mean_H=mean_h)


# -- proof trace ----------------------------------------------------------------


def proof_trace(
    mesh: Mesh,
    geometries: SurfaceGeometry,
    constants: PinchingConstants,
    lam1: float | None = None,
) -> ProofTrace:
    """Trace the containment argument on the unit-area rescaling.

    `geometries` and `lam1` refer to the input mesh; both are rescaled
    exactly.  Requires strict convexity.  When lam1 is None the eigenvalue
    is solved here.
    """
    if constants.n != 2:
        raise ValueError("the mesh pipeline is two-dimensional (n = 2)")
    if np.any(geometries.kappa[:, 0] <= 0.0):
        bad = int(np.argmin(geometries.kappa[:, 0]))
        raise ValueError(
            f"strict convexity violated: kappa1({bad}) = "
            f"{geometries.kappa[bad, 0]:g} <= 0"
        )
    n = constants.n
    alpha = constants.alpha
    kp = constants.kp
    area = float(np.sum(mesh.face_areas))
    law = RescalingLaw(factor=area ** (-1.0 / n), n=n)
    c = law.factor
    eps_t = law.apply("length", constants.epsilon)
    geo_t = geometries.rescaled(c)
    w_t = mesh.vertex_areas * c**n

    if lam1 is None:
        lam1 = spectral.lambda1(spectral.build_laplace(mesh)).lambda1
    lam1_t = law.apply("lambda1", lam1)

    fit = fit_umbilical_mu(geo_t, w_t, kp)
    mu0 = fit.mu_star
    bracket = (float(geo_t.kappa[:, 0].min()), float(geo_t.kappa[:, 1].max()))
    gamma = eps_t ** (2.0 + 0.5 * alpha)

    k1, k2 = geo_t.kappa[:, 0], geo_t.kappa[:, 1]
    dev = np.sqrt((k1 - mu0) ** 2 + (k2 - mu0) ** 2)
    dev_field = ScalarField(values=dev, weights=w_t)
    log_dev_kp = lp_norm_log_pth_power(dev_field, kp)   # log int ||A~-mu0 g~||^kp

    _, pgamma_bad = sublevel_measure(dev_field, gamma)
    log_cheb_pgamma = log_dev_kp - kp * math.log(gamma)
    cheb_pgamma = math.exp(log_cheb_pgamma) if log_cheb_pgamma < 700 else math.inf
    eps_rate = eps_t ** (0.5 * alpha * kp)

    # mu0-rescaled surface: curvature kappa/mu0, measure mu0^n * measure
    hat_field = ScalarField(values=dev / mu0, weights=w_t * mu0**n)
    _, p_bad = sublevel_measure(hat_field, 1.0)
    log_p_bound = (n - kp) * math.log(mu0) + log_dev_kp
    p_bound = math.exp(log_p_bound) if log_p_bound < 700 else math.inf

    deficit = ricci_deficit(geo_t.ricci_min, mu0, n)
    nz = deficit > 0.0
    if np.any(nz):
        log_def = logsumexp(
            np.log(w_t[nz] * mu0**n) + kp * np.log(deficit[nz])
        )
        deficit_integral = math.exp(log_def) if log_def < 700 else math.inf
    else:
        deficit_integral = 0.0
    aubry = spectral.aubry_lower_bound(
        deficit_integral, volume=mu0**n, p=kp, C_np=constants.C_np_aubry, n=n
    )

    h_inf_t = float(np.abs(geo_t.H).max())
    eta = eta_of_epsilon(lam1_t, h_inf_t, eps_t, n)

    warnings = []
    gamma_ok = gamma < min(1.0, mu0**2)
    if not gamma_ok:
        warnings.append(
            f"gamma = {gamma:g} violates gamma < min(1, mu0^2) = "
            f"{min(1.0, mu0**2):g}; eps too large for the trace constants"
        )
    if eps_t >= 2.0 / (3.0 * h_inf_t):
        warnings.append(
            f"normalized eps = {eps_t:g} >= 2/(3 sup H) = "
            f"{2.0 / (3.0 * h_inf_t):g}"
        )
    if aubry is None:
        warnings.append(
            "Ricci-deficit integral exceeds volume/C(n,p): spectral lower "
            "bound hypothesis violated for the configured constant"
        )

    return ProofTrace(
        kp=kp,
        eps_tilde=eps_t,
        gamma=gamma,
        mu0=mu0,
        mu0_bracket=bracket,
        mean_H_normalized=fit.mean_H,
        mu0_mean_gap=abs(mu0 - fit.mean_H),
        dev_norm_kp=math.exp(log_dev_kp / kp) if log_dev_kp > -math.inf else 0.0,
        bad_set_P_measure=p_bad,
        bad_set_P_bound=p_bound,
        bad_set_Pgamma_measure=pgamma_bad,
        chebyshev_bound_Pgamma=cheb_pgamma,
        eps_rate_bound_Pgamma=eps_rate,
        ricci_deficit_integral=deficit_integral,
        aubry_bound=aubry,
        aubry_bound_normalized=None if aubry is None else mu0**2 * aubry,
        lambda1_normalized=lam1_t,
        eta_eps=eta,
        gamma_ok=bool(gamma_ok),
        warnings=tuple(warnings),
    )


# -- end-to-end -----------------------------------------------------------------


def verify_theorem(
    mesh: Mesh,
    constants: PinchingConstants,
    ring_depth: int = 2,
    tol: float = 1e-8,
    geometries: SurfaceGeometry | None = None,
    with_trace: bool = True,
) -> PinchingReport:
    """Run the full pipeline and assemble the report.

    Structural mesh defects raise; every analytic failure downstream is
    recorded in the report and later stages stay None.  `geometries` may
    inject precomputed (e.g. closed-form) curvature fields.
    """
    if constants.n != 2:
        raise ValueError("the mesh pipeline is two-dimensional (n = 2)")
    report = validate_mesh(mesh)
    if not report.all_passed:
        raise ValueError(f"mesh validation failed: {report}")
    area = float(np.sum(mesh.face_areas))
    if geometries is None:
        geometries = estimate_geometry(mesh, ring_depth=ring_depth)
    convexity = convexity_status(geometries)

    hypothesis = None
    lam1 = lam1_t = lam1_res = None
    roth = annulus = trace = None
    oscillation = phi = None
    failure = None

    try:
        hypothesis = check_hypothesis(mesh, geometries, constants)
    except ValueError as exc:
        failure = f"hypothesis: {exc}"

    if failure is None:
        law = RescalingLaw(factor=area ** (-1.0 / constants.n), n=constants.n)
        c = law.factor
        mesh_t = mesh.scaled(c)
        geo_t = geometries.rescaled(c)
        consts_t = constants.rescaled(c)
        try:
            res = spectral.lambda1(spectral.build_laplace(mesh), tol=tol)
            lam1 = res.lambda1
            lam1_res = res.residual
            lam1_t = law.apply("lambda1", lam1)
        except spectral.ConvergenceError as exc:
            failure = f"lambda1: {exc}"

        if lam1 is not None:
            try:
                roth = roth_condition(mesh_t, geo_t, lam1_t, consts_t)
            except ValueError as exc:
                failure = f"spectral condition: {exc}"
            try:
                annulus = annulus_check(
                    mesh, lam1, constants.epsilon, constants.n
                )
                oscillation = annulus.oscillation
            except ValueError as exc:
                failure = failure or f"annulus: {exc}"
            phi = phi_sup(mesh, lam1, constants.n)
            if with_trace and convexity.strictly_convex:
                try:
                    trace = proof_trace(mesh, geometries, constants, lam1=lam1)
                except ValueError as exc:
                    failure = failure or f"proof trace: {exc}"

    return PinchingReport(
        constants=constants,
        area=area,
        hypothesis=hypothesis,
        strictly_convex=convexity.strictly_convex,
        convexity=convexity,
        lambda1=lam1,
        lambda1_normalized=lam1_t,
        lambda1_residual=lam1_res,
        roth=roth,
        annulus=annulus,
        oscillation=oscillation,
        phi_sup=phi,
        trace=trace,
        failure=failure,
    )


# -- sharpness sweep --------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    delta: float
    achieved_ratio: float      # max ||A-Hg||/H * |M|^((2+alpha)/n) on the oracle
    hypothesis_holds: bool | None
    contained: bool | None
    oscillation: float | None


@dataclass(frozen=True)
class SweepResult:
    """Rows in grid order plus the log-log oscillation-vs-eps fit."""

    rows: tuple
    fit_slope: float
    fit_intercept: float


def pinch_ratio(surface: surfgen.AnalyticSurface, mesh: Mesh, constants) -> float:
    """Worst pinching ratio max(||A - Hg|| / H) * |M|^((2+alpha)/n).

    Computed from the analytic curvature oracle at the mesh vertices; the
    hypothesis holds (on the oracle field) iff this is <= eps^(2+alpha).
    +inf when the oracle loses mean-convexity.
    """
    o = surfgen.oracle_curvatures_at_vertices(surface, mesh)
    if np.any(o.H <= 0.0):
        return math.inf
    area = float(np.sum(mesh.face_areas))
    ratio = float((o.traceless_norm / o.H).max())
    return ratio * area ** ((2.0 + constants.alpha) / constants.n)


def amplitude_for_ratio(
    radius: float,
    degree: int,
    order: int,
    alpha: float,
    epsilon: float,
    subdivision: int,
    slack: float = 1.0,
    n: int = 2,
    steps: int = 40,
) -> tuple[float, float]:
    """Bisection for the harmonic amplitude realizing the pinching ratio.

    Finds delta with pinch_ratio = slack * eps^(2+alpha) within 1%; the
    ratio response is monotone in delta at these amplitudes.  Raises when
    the radial positivity limit is reached before the target.
    """
    target = slack * epsilon ** (2.0 + alpha)
    consts = PinchingConstants(alpha=alpha, epsilon=epsilon, n=n)
    delta_max = 0.9 * radius / surfgen.harmonic_sup(degree, order)

    def ratio_at(delta: float) -> float:
        surf = surfgen.PerturbedSphere(radius, delta, degree, order)
        return pinch_ratio(surf, surfgen.generate(surf, subdivision), consts)

    if ratio_at(delta_max) < target:
        raise ValueError(
            f"amplitude search failed: ratio at the positivity limit "
            f"delta = {delta_max:g} is below the target {target:g}"
        )
    lo, hi = 0.0, delta_max
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if ratio_at(mid) < target:
            lo = mid
        else:
            hi = mid
    delta = 0.5 * (lo + hi)
    achieved = ratio_at(delta)
    if abs(achieved - target) > 0.01 * target:
        raise ValueError(
            f"amplitude search failed: achieved ratio {achieved:g} not "
            f"within 1% of target {target:g} (oracle noise floor?)"
        )
    return delta, achieved


def sharpness_sweep(
    radius: float,
    degree: int,
    order: int,
    alpha: float,
    eps_grid,
    subdivision: int = 4,
    slack: float = 1.0,
    n: int = 2,
    ring_depth: int = 2,
) -> SweepResult:
    """For each eps, tune the amplitude to the pinching target and verify.

    Rows keep the grid order; eps values run in parallel when
    UMBILIC_THREADS > 1 (runs are independent and deterministic).  The fit
    is least squares of log(oscillation) against log(eps) over rows with
    positive oscillation.
    """
    eps_grid = [float(e) for e in eps_grid]
    if any(e <= 0 for e in eps_grid):
        raise ValueError("eps grid must be positive")

    def run_one(eps: float) -> SweepRow:
        delta, achieved = amplitude_for_ratio(
            radius, degree, order, alpha, eps, subdivision, slack=slack, n=n
        )
        surf = surfgen.PerturbedSphere(radius, delta, degree, order)
        msh = surfgen.generate(surf, subdivision)
        report = verify_theorem(
            msh,
            PinchingConstants(alpha=alpha, epsilon=eps, n=n),
            ring_depth=ring_depth,
        )
        return SweepRow(
            epsilon=eps,
            delta=delta,
            achieved_ratio=achieved,
            hypothesis_holds=(
                None if report.hypothesis is None else report.hypothesis.holds
            ),
            contained=(
                None if report.annulus is None else report.annulus.contained
            ),
            oscillation=report.oscillation,
        )

    workers = int(os.environ.get("UMBILIC_THREADS", "1"))
    if workers > 1 and len(eps_grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(run_one, eps_grid))
    else:
        rows = tuple(run_one(e) for e in eps_grid)

    pts = [
        (math.log(r.epsilon), math.log(r.oscillation))
        for r in rows
        if r.oscillation is not None and r.oscillation > 0.0
    ]
    if len(pts) >= 2 and len({x for x, _ in pts}) >= 2:
        slope, intercept = np.polyfit(*zip(*pts), deg=1)
    else:
        slope = intercept = float("nan")
    return SweepResult(
        rows=rows, fit_slope=float(slope), fit_intercept=float(intercept)
    )
