import dataclasses
import math

import numpy as np
import pytest

from umbilic.diffgeo import estimate_geometry
from umbilic.fields import normalize_mesh
from umbilic.pinching import (
    PinchingConstants,
    amplitude_for_ratio,
    annulus_check,
    check_hypothesis,
    eta_of_epsilon,
    fit_umbilical_mu,
    phi_sup,
    pinch_ratio,
    proof_trace,
    roth_condition,
    sharpness_sweep,
    verify_theorem,
)
from umbilic.spectral import build_laplace, lambda1
from umbilic.surfgen import (
    Ellipsoid,
    PerturbedSphere,
    Sphere,
    generate,
    oracle_geometry,
)


def with_field(geometry, **overrides):
    """Copy of a geometry record with some per-vertex arrays replaced."""
    return dataclasses.replace(geometry, **overrides)


# -- constants ------------------------------------------------------------------


def test_constants_validation():
    with pytest.raises(ValueError):
        PinchingConstants(alpha=0.0, epsilon=0.1)
    with pytest.raises(ValueError):
        PinchingConstants(alpha=1.0, epsilon=0.1)
    with pytest.raises(ValueError):
        PinchingConstants(alpha=0.5, epsilon=-1.0)
    with pytest.raises(ValueError):
        PinchingConstants(alpha=0.5, epsilon=0.1, L=0.0)
    with pytest.raises(ValueError):
        PinchingConstants(alpha=0.5, epsilon=0.1, p_roth=1.0)


def test_constants_derived_values():
    c = PinchingConstants(alpha=0.5, epsilon=0.2)
    assert c.p_roth == 3.0  # n + 1
    assert c.k_exponent == pytest.approx(12.0)
    assert c.kp == pytest.approx(36.0)
    # (1/sqrt(2))^(1/2.5) = 2^(-0.2)
    assert c.c_threshold == pytest.approx(2.0 ** -0.2, rel=1e-14)
    scaled = c.rescaled(2.0)
    assert scaled.epsilon == 0.4
    assert scaled.alpha == c.alpha and scaled.L == c.L


# -- hypothesis -------------------------------------------------------------------


def test_hypothesis_sphere_holds(sphere4, geom_sphere4):
    c = PinchingConstants(alpha=0.5, epsilon=0.5)
    res = check_hypothesis(sphere4, geom_sphere4, c)
    assert res.holds
    assert res.worst_margin > 0
    assert res.epsilon_admissible
    assert res.margins.shape == (sphere4.n_vertices,)


def test_hypothesis_fails_beyond_threshold():
    # amplitude tuned 3x past the pinching target must give a negative margin
    eps, alpha = 0.3, 0.5
    delta, _ = amplitude_for_ratio(1.0, 2, 0, alpha, eps, 3, slack=3.0)
    surf = PerturbedSphere(1.0, delta, 2, 0)
    mesh = generate(surf, 3)
    res = check_hypothesis(
        mesh, oracle_geometry(surf, mesh), PinchingConstants(alpha=alpha, epsilon=eps)
    )
    assert not res.holds
    assert res.worst_margin < 0


def test_hypothesis_requires_mean_convexity(torus):
    geo = estimate_geometry(torus)
    c = PinchingConstants(alpha=0.5, epsilon=0.1)
    with pytest.raises(ValueError, match="mean-convexity"):
        check_hypothesis(torus, geo, c)


def test_hypothesis_scale_covariance():
    surf1, surf2 = Ellipsoid(1.2, 1.0, 1.1), Ellipsoid(2.4, 2.0, 2.2)
    m1 = generate(surf1, 3)
    m2 = m1.scaled(2.0)
    c1 = PinchingConstants(alpha=0.5, epsilon=0.3)
    c2 = c1.rescaled(2.0)
    r1 = check_hypothesis(m1, oracle_geometry(surf1, m1), c1)
    r2 = check_hypothesis(m2, oracle_geometry(surf2, m2), c2)
    assert r1.holds == r2.holds
    assert r1.epsilon_admissible == r2.epsilon_admissible
    assert np.allclose(r2.margins, 0.5 * r1.margins, rtol=1e-9, atol=1e-15)


def test_epsilon_admissibility_threshold(sphere4, geom_sphere4):
    area = float(np.sum(sphere4.face_areas))
    c_small = PinchingConstants(alpha=0.5, epsilon=0.9 * 2.0**-0.2 * area**0.5)
    c_large = PinchingConstants(alpha=0.5, epsilon=1.1 * 2.0**-0.2 * area**0.5)
    assert check_hypothesis(sphere4, geom_sphere4, c_small).epsilon_admissible
    assert not check_hypothesis(sphere4, geom_sphere4, c_large).epsilon_admissible


# -- spectral condition ------------------------------------------------------------


@pytest.fixture(scope="module")
def normalized_sphere4(sphere4, geom_sphere4):
    mesh_t, c = normalize_mesh(sphere4)
    geo_t = geom_sphere4.rescaled(c)
    lam_t = lambda1(build_laplace(sphere4)).lambda1 / c**2
    return mesh_t, geo_t, lam_t, c


def test_roth_sphere_equality_case(normalized_sphere4):
    mesh_t, geo_t, lam_t, c = normalized_sphere4
    consts = PinchingConstants(alpha=0.5, epsilon=0.2).rescaled(c)
    res = roth_condition(mesh_t, geo_t, lam_t, consts)
    # on the round sphere lambda1*(int H)^2 = n*||H2||^2 up to discretization
    scale = 2.0 * res.h2_norm_2p**2
    assert abs(res.lhs) <= 1e-3 * scale
    assert res.holds
    assert res.c_eps > 0
    assert res.threshold == -res.c_eps
    assert res.c_eps == pytest.approx(0.5 * min(res.constituents.values()), rel=1e-14)


def test_roth_c_eps_formula(normalized_sphere4):
    mesh_t, geo_t, lam_t, c = normalized_sphere4
    consts = PinchingConstants(alpha=0.5, epsilon=0.2, L=0.001).rescaled(c)
    res = roth_condition(mesh_t, geo_t, lam_t, consts)
    eps_t = consts.epsilon
    expected = 0.5 * min(
        0.001 * math.sqrt(2.0 / lam_t) * eps_t**2,
        0.001,
        1.0,
        0.5 * 2.0 * res.h2_norm_2p**2,
    )
    assert res.c_eps == pytest.approx(expected, rel=1e-12)


def test_roth_requires_unit_area(sphere4, geom_sphere4):
    consts = PinchingConstants(alpha=0.5, epsilon=0.05)
    with pytest.raises(ValueError, match="unit-area"):
        roth_condition(sphere4, geom_sphere4, 2.0, consts)


def test_roth_requires_positive_h2(normalized_sphere4):
    mesh_t, geo_t, lam_t, _ = normalized_sphere4
    h2 = geo_t.H2.copy()
    h2[3] = -1e-3
    bad = with_field(geo_t, H2=h2)
    with pytest.raises(ValueError, match="H2"):
        roth_condition(mesh_t, bad, lam_t, PinchingConstants(alpha=0.5, epsilon=0.01))


def test_roth_epsilon_too_large(normalized_sphere4):
    mesh_t, geo_t, lam_t, _ = normalized_sphere4
    h_inf = float(np.abs(geo_t.H).max())
    eps_big = 2.0 / (3.0 * h_inf) * 1.01
    with pytest.raises(ValueError, match="eps"):
        roth_condition(
            mesh_t, geo_t, lam_t, PinchingConstants(alpha=0.5, epsilon=eps_big)
        )


# -- annulus and phi ---------------------------------------------------------------


def test_annulus_sphere_three():
    mesh = generate(Sphere(3.0), 4)
    lam = lambda1(build_laplace(mesh)).lambda1
    res = annulus_check(mesh, lam, epsilon=0.05)
    assert res.r_lambda == pytest.approx(3.0, rel=1e-3)
    assert res.min_dist == pytest.approx(3.0, rel=1e-12)
    assert res.max_dist == pytest.approx(3.0, rel=1e-12)
    assert res.contained
    assert res.oscillation <= 1e-10


def test_annulus_perturbed(perturbed4):
    surf_delta = 0.005
    mesh = generate(PerturbedSphere(1.0, surf_delta, 2, 0), 4)
    lam = lambda1(build_laplace(mesh)).lambda1
    res = annulus_check(mesh, lam, epsilon=0.1)
    assert res.contained
    from umbilic.surfgen import harmonic_sup

    assert res.oscillation <= 2 * surf_delta * harmonic_sup(2, 0) + 1e-6


def test_annulus_inner_radius_guard(sphere4, lam1_sphere4):
    lam = lam1_sphere4.lambda1
    with pytest.raises(ValueError, match="inner radius"):
        annulus_check(sphere4, lam, epsilon=math.sqrt(2.0 / lam) * 1.01)
    with pytest.raises(ValueError):
        annulus_check(sphere4, 0.0, epsilon=0.1)


def test_annulus_containment_definition(perturbed4):
    lam = 2.0
    res = annulus_check(perturbed4, lam, epsilon=0.2)
    assert res.contained == (
        res.inner <= res.min_dist and res.max_dist <= res.outer
    )
    assert res.oscillation == pytest.approx(res.max_dist - res.min_dist)


def test_phi_sup_sphere(sphere5, lam1_sphere5):
    # vertices sit essentially at radius sqrt(n/lambda1): phi ~ 0
    assert phi_sup(sphere5, lam1_sphere5.lambda1) <= 1e-3


def test_phi_sup_formula(perturbed4):
    lam = 2.0
    r_lam = math.sqrt(2.0 / lam)
    from umbilic.mesh import measures

    x0 = measures(perturbed4).barycenter
    dist = np.linalg.norm(perturbed4.vertices - x0, axis=1)
    expected = float((dist * (dist - r_lam) ** 2).max())
    assert phi_sup(perturbed4, lam) == pytest.approx(expected, rel=1e-14)


def test_eta_inequality(geom_perturbed4, perturbed4):
    lam = lambda1(build_laplace(perturbed4)).lambda1
    h_inf = float(np.abs(geom_perturbed4.H).max())
    r_lam = math.sqrt(2.0 / lam)
    cap = 2.0 / (3.0 * h_inf)
    for frac in (0.15, 0.3, 0.5, 0.7, 0.9):
        eps = frac * cap
        eta = eta_of_epsilon(lam, h_inf, eps)
        lower = min(r_lam * eps**2 / 3.0, 1.0 / (27.0 * h_inf**3))
        assert eta >= lower * (1 - 1e-12)


# -- umbilical fit ------------------------------------------------------------------


def test_mu_fit_p2_closed_form(geom_ellipsoid4, ellipsoid4):
    fit = fit_umbilical_mu(geom_ellipsoid4, ellipsoid4.vertex_areas, 2.0)
    assert fit.mu_star == pytest.approx(fit.mean_H, rel=1e-8)


def test_mu_fit_sphere_all_p(geom_sphere4, sphere4):
    for p in (2.0, 4.0, 36.0):
        fit = fit_umbilical_mu(geom_sphere4, sphere4.vertex_areas, p)
        assert fit.mu_star == pytest.approx(1.0, abs=2e-3)
        assert fit.attained_norm <= 1e-2


def test_mu_fit_two_point_toy_grid_oracle():
    # kappa = (1,1) and (3,3), equal weights, p = 4; independent grid scan
    geo = _toy_geometry([[1.0, 1.0], [3.0, 3.0]])
    weights = np.array([0.5, 0.5])
    fit = fit_umbilical_mu(geo, weights, 4.0)
    mus = np.arange(1.0, 3.0 + 1e-12, 1e-6)
    vals = 0.5 * (2.0 * (1.0 - mus) ** 2) ** 2 + 0.5 * (2.0 * (3.0 - mus) ** 2) ** 2
    mu_grid = mus[np.argmin(vals)]
    assert abs(fit.mu_star - mu_grid) < 1e-5


def test_mu_fit_asymmetric_weights_grid_oracle():
    geo = _toy_geometry([[0.5, 1.0], [2.0, 2.5], [3.0, 3.0]])
    weights = np.array([0.2, 0.5, 0.3])
    fit = fit_umbilical_mu(geo, weights, 6.0)
    mus = np.arange(0.5, 3.0 + 1e-12, 1e-6)
    k = np.array([[0.5, 1.0], [2.0, 2.5], [3.0, 3.0]])
    dev2 = (k[:, 0][:, None] - mus) ** 2 + (k[:, 1][:, None] - mus) ** 2
    vals = (weights[:, None] * dev2**3.0).sum(axis=0)
    mu_grid = mus[np.argmin(vals)]
    assert abs(fit.mu_star - mu_grid) < 1e-5
    lo = k[:, 0].min()
    hi = k[:, 1].max()
    assert lo <= fit.mu_star <= hi


def _toy_geometry(kappas):
    from umbilic.diffgeo import SurfaceGeometry, ricci_from_gauss

    kappa = np.asarray(kappas, dtype=float)
    V = len(kappa)
    H = kappa.mean(axis=1)
    rmin, scal = ricci_from_gauss(kappa, 2)
    return SurfaceGeometry(
        normal=np.tile([0.0, 0.0, 1.0], (V, 1)),
        shape_operator=np.zeros((V, 2, 2)),
        kappa=kappa,
        H=H,
        A_traceless_norm=np.abs(kappa[:, 1] - kappa[:, 0]) / np.sqrt(2.0),
        H2=kappa[:, 0] * kappa[:, 1],
        ricci_min=rmin,
        scalar_curv=scal,
    )


def test_mu_fit_rejects_small_p(geom_sphere4, sphere4):
    with pytest.raises(ValueError):
        fit_umbilical_mu(geom_sphere4, sphere4.vertex_areas, 1.5)


# -- proof trace --------------------------------------------------------------------


def test_proof_trace_sphere(sphere4, geom_sphere4, lam1_sphere4):
    c = PinchingConstants(alpha=0.5, epsilon=0.2)
    tr = proof_trace(sphere4, geom_sphere4, c, lam1=lam1_sphere4.lambda1)
    assert tr.kp == pytest.approx(36.0)
    assert tr.mu0_bracket[0] <= tr.mu0 <= tr.mu0_bracket[1]
    assert tr.bad_set_P_measure == 0.0
    assert tr.bad_set_Pgamma_measure == 0.0
    assert tr.ricci_deficit_integral <= 1e-100
    assert tr.aubry_bound == pytest.approx(2.0, abs=1e-3)
    assert tr.aubry_bound_normalized == pytest.approx(tr.mu0**2 * tr.aubry_bound)
    assert tr.gamma == pytest.approx(tr.eps_tilde ** 2.25, rel=1e-12)
    assert tr.gamma_ok and not tr.warnings


def test_proof_trace_perturbed(perturbed4, geom_perturbed4):
    c = PinchingConstants(alpha=0.5, epsilon=0.2)
    tr = proof_trace(perturbed4, geom_perturbed4, c)
    assert tr.mu0_bracket[0] <= tr.mu0 <= tr.mu0_bracket[1]
    assert tr.bad_set_Pgamma_measure <= tr.chebyshev_bound_Pgamma * (1 + 1e-12)
    assert tr.bad_set_P_measure <= tr.bad_set_P_bound * (1 + 1e-12)
    assert np.isfinite(tr.dev_norm_kp)
    assert tr.eta_eps > 0
    assert tr.lambda1_normalized > 0


def test_proof_trace_gamma_warning(sphere4, geom_sphere4, lam1_sphere4):
    # epsilon past the normalized-unity scale violates the gamma requirement
    c = PinchingConstants(alpha=0.5, epsilon=4.0)
    tr = proof_trace(sphere4, geom_sphere4, c, lam1=lam1_sphere4.lambda1)
    assert not tr.gamma_ok
    assert any("gamma" in w for w in tr.warnings)


def test_proof_trace_requires_convexity(torus):
    geo = estimate_geometry(torus)
    with pytest.raises(ValueError, match="convexity"):
        proof_trace(torus, geo, PinchingConstants(alpha=0.5, epsilon=0.1))


# -- end-to-end -----------------------------------------------------------------------


def test_verify_sphere_model_case(sphere4):
    report = verify_theorem(sphere4, PinchingConstants(alpha=0.5, epsilon=0.2))
    assert report.failure is None
    assert report.hypothesis.holds
    assert report.strictly_convex
    assert report.roth.holds
    assert report.annulus.contained
    assert report.oscillation < 1e-10
    assert report.phi_sup < 1e-6
    assert report.trace is not None
    assert report.lambda1 == pytest.approx(2.0, rel=0.01)
    assert report.lambda1_normalized == pytest.approx(
        report.lambda1 * report.area, rel=1e-12
    )


def test_verify_strong_perturbation_reports_failure_diagnostics():
    # hypothesis fails but the annulus is still measured
    surf = PerturbedSphere(1.0, 0.3, 2, 0)
    mesh = generate(surf, 3)
    report = verify_theorem(mesh, PinchingConstants(alpha=0.5, epsilon=0.1))
    assert report.hypothesis is not None
    assert not report.hypothesis.holds
    assert report.annulus is not None
    assert report.oscillation > 0.1
    assert report.failure is None


def test_verify_non_mean_convex_halts(torus):
    report = verify_theorem(torus, PinchingConstants(alpha=0.5, epsilon=0.1))
    assert report.failure is not None
    assert "mean-convexity" in report.failure
    assert report.hypothesis is None
    assert report.strictly_convex is False
    assert report.lambda1 is None
    assert report.roth is None
    assert report.annulus is None
    assert report.trace is None


def test_verify_rejects_invalid_mesh(sphere3):
    from umbilic.mesh import Mesh

    open_mesh = Mesh(sphere3.vertices, sphere3.faces[1:])
    with pytest.raises(ValueError, match="validation"):
        verify_theorem(open_mesh, PinchingConstants(alpha=0.5, epsilon=0.1))


def test_verify_rejects_wrong_dimension(sphere3):
    with pytest.raises(ValueError, match="two-dimensional"):
        verify_theorem(sphere3, PinchingConstants(alpha=0.5, epsilon=0.1, n=3))


def test_verify_scale_covariance_booleans(sphere3):
    c1 = PinchingConstants(alpha=0.5, epsilon=0.2)
    r1 = verify_theorem(sphere3, c1, with_trace=False)
    r2 = verify_theorem(sphere3.scaled(2.0), c1.rescaled(2.0), with_trace=False)
    assert r1.hypothesis.holds == r2.hypothesis.holds
    assert r1.roth.holds == r2.roth.holds
    assert r1.annulus.contained == r2.annulus.contained
    assert r2.lambda1 == pytest.approx(r1.lambda1 / 4.0, rel=1e-9)
    assert r2.oscillation == pytest.approx(2.0 * r1.oscillation, rel=1e-6, abs=1e-12)


# -- sweep ------------------------------------------------------------------------


def test_pinch_ratio_nonconvex_guard(torus):
    # oracle route is only defined for the analytic families; use a surface
    # whose oracle loses mean-convexity: a heavily perturbed sphere
    surf = PerturbedSphere(1.0, 1.4, 2, 0)
    mesh = generate(surf, 2)
    c = PinchingConstants(alpha=0.5, epsilon=0.2)
    assert pinch_ratio(surf, mesh, c) == math.inf


def test_amplitude_search_positivity_failure():
    # the constant harmonic (l=0) never bends the sphere: no amplitude works
    with pytest.raises(ValueError, match="amplitude search failed"):
        amplitude_for_ratio(1.0, 0, 0, 0.5, 0.3, 2)


def test_sharpness_sweep_rows_and_fit():
    result = sharpness_sweep(
        1.0, 2, 0, alpha=0.5, eps_grid=[0.4, 0.2, 0.1], subdivision=3
    )
    assert len(result.rows) == 3
    eps = [r.epsilon for r in result.rows]
    assert eps == [0.4, 0.2, 0.1]
    osc = [r.oscillation for r in result.rows]
    assert osc[0] >= osc[1] >= osc[2]
    assert all(r.contained for r in result.rows)
    assert all(r.delta > 0 for r in result.rows)
    # delta(eps) ~ eps^(2+alpha) forces the oscillation slope to 2+alpha
    assert result.fit_slope == pytest.approx(2.5, rel=0.1)


def test_sweep_rejects_bad_grid():
    with pytest.raises(ValueError):
        sharpness_sweep(1.0, 2, 0, alpha=0.5, eps_grid=[0.4, -0.1])


def test_sweep_thread_determinism(monkeypatch):
    args = dict(radius=1.0, degree=2, order=0, alpha=0.5,
                eps_grid=[0.3, 0.2], subdivision=2)
    seq = sharpness_sweep(**args)
    monkeypatch.setenv("UMBILIC_THREADS", "2")
    par = sharpness_sweep(**args)
    assert seq == par
