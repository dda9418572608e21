import numpy as np
import pytest

from dressing_forge import (PathSpec,
                            ProjectionDriftError, StepTooLargeError,
                            dress_real, dress_translation, estimate_order,
                            integrate_bf, integrate_frame,
                            integrate_frame_with_order, max_abs,
                            project_onto_span, solve_linear)


def test_pathspec_staircase_and_endpoint():
    path = PathSpec.staircase(np.array([0.5, -0.4]))
    assert path.segments == ((0, 0.5), (1, -0.4))
    assert np.allclose(path.endpoint(2), [0.5, -0.4])
    wps = path.waypoints(2)
    assert np.allclose(wps[1][0], [0.5, 0.0])
    with pytest.raises(ValueError):
        PathSpec(((3, 1.0),)).waypoints(2)


def test_integrate_frame_vacuum_closed_form(torus_frame):
    lam = 1.0
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)
    E, X = integrate_frame(2, torus_frame.beta, torus_frame.h, lam, path, 1e-2)
    E_ref, X_ref = torus_frame.evaluate(target, lam)
    assert max_abs(E - E_ref) < 1e-10
    assert max_abs(X - X_ref) < 1e-10


def test_integrate_frame_dressed_order4(torus_frame, pi_diag):
    frame = dress_real(torus_frame, 0.6, pi_diag)
    lam = 0.9
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)
    result = integrate_frame_with_order(2, frame.beta, frame.h, lam, path, 2e-2,
                                        frame.evaluate(target, lam))
    assert 3.2 < result.order < 4.8
    E, X = integrate_frame(2, frame.beta, frame.h, lam, path, 1e-2)
    E_ref, X_ref = frame.evaluate(target, lam)
    assert max(max_abs(E - E_ref), max_abs(X - X_ref)) < 1e-6


def test_integrate_frame_path_independence(torus_frame, pi_diag):
    frame = dress_real(torus_frame, 0.6, pi_diag)
    lam = 0.9
    target = np.array([0.5, -0.4])
    fwd = PathSpec.staircase(target)
    rev = PathSpec.staircase(target, order=(1, 0))
    Ef, Xf = integrate_frame(2, frame.beta, frame.h, lam, fwd, 1e-2)
    Er, Xr = integrate_frame(2, frame.beta, frame.h, lam, rev, 1e-2)
    assert max(max_abs(Ef - Er), max_abs(Xf - Xr)) < 1e-6


def test_step_too_large_raises(torus_frame, pi_diag):
    # a fast soliton integrated at a coarse step: observed order degrades
    frame = dress_real(torus_frame, 8.0, pi_diag)
    lam = 0.9
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)
    with pytest.raises(StepTooLargeError):
        integrate_frame_with_order(2, frame.beta, frame.h, lam, path, 0.45,
                                   frame.evaluate(target, lam))


def test_bf_fixed_points(torus_frame, pi_diag):
    path = PathSpec.staircase(np.array([0.4, -0.3]))
    for pi0 in (np.zeros((2, 2)), np.eye(2)):
        out = integrate_bf(2, torus_frame.beta, torus_frame.h, 0.6, pi0,
                           np.array([0.3, -0.1]), path, 1e-2)
        assert max_abs(out.pi_tilde - pi0) < 1e-12
        assert np.all(np.isfinite(out.y))


def test_bf_matches_algebraic_projection(torus_frame, pi_diag):
    alpha = 0.6
    frame = dress_real(torus_frame, alpha, pi_diag)
    rec = frame.history[0]
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)

    def run(step):
        out = integrate_bf(2, torus_frame.beta, torus_frame.h, alpha,
                           pi_diag.matrix, np.zeros(2), path, step)
        data = rec.point_data(frame, 0, target)
        return out, max_abs(out.pi_tilde - data.pi_tilde.matrix)

    out1, r1 = run(2e-2)
    out2, r2 = run(1e-2)
    assert 3.0 < estimate_order(r1, r2) < 5.0
    assert r2 < 1e-7
    assert out2.max_correction < 1e-8
    # b = 0 case: y equals pi_tilde eta, i.e. (h - h_dressed) / (2 alpha)
    expected_y = (torus_frame.h(target) - frame.h(target)) / (2 * alpha)
    assert max_abs(out2.y - expected_y) < 1e-7


def test_bf_translation_composite_initial_data(torus_frame, pi_diag):
    """y(0) = b corresponds to the composite of the one-pole dressing with the
    translation factor k_{-i alpha, -2 alpha b}: empirically
    y(u) = pi_tilde eta + E_dressed(u, -i alpha)^{-1} b."""
    alpha = 0.6
    b = np.array([1.0, 0.0])
    frame = dress_real(torus_frame, alpha, pi_diag)
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)
    out = integrate_bf(2, torus_frame.beta, torus_frame.h, alpha,
                       pi_diag.matrix, b, path, 5e-3)
    rec = frame.history[0]
    data = rec.point_data(frame, 0, target)
    y_expected = data.pe + solve_linear(frame.E(target, -1j * alpha), b.astype(complex))
    assert max_abs(out.y - y_expected) < 1e-7
    # equivalently: h - 2 alpha y equals the composite-dressed h
    composite = dress_translation(frame, -alpha, -2 * alpha * b)
    assert max_abs((torus_frame.h(target) - 2 * alpha * out.y) - composite.h(target)) < 1e-7


def test_bf_cross_derivative_consistency(torus_frame, pi_diag):
    """Solvability of the dressing system is witnessed by path-order
    independence: integrating axis 1 then 2 agrees with 2 then 1 to
    integrator order."""
    alpha = 0.6
    target = np.array([0.5, -0.4])
    out_a = integrate_bf(2, torus_frame.beta, torus_frame.h, alpha,
                         pi_diag.matrix, np.array([0.3, -0.1]),
                         PathSpec.staircase(target), 1e-2)
    out_b = integrate_bf(2, torus_frame.beta, torus_frame.h, alpha,
                         pi_diag.matrix, np.array([0.3, -0.1]),
                         PathSpec.staircase(target, order=(1, 0)), 1e-2)
    assert max_abs(out_a.pi_tilde - out_b.pi_tilde) < 1e-8
    assert max_abs(out_a.y - out_b.y) < 1e-8


def test_metric_interpolators_feed_integrator(torus_frame, pi_diag):
    """Externally supplied gridded metrics integrate through spline
    interpolants; accuracy is capped by interpolation, not by the step."""
    from dressing_forge import Grid, metric_from_frame
    from dressing_forge.oracle import metric_interpolators

    frame = dress_real(torus_frame, 0.6, pi_diag)
    metric = metric_from_frame(frame, Grid.from_specs([(-0.6, 0.6, 25)] * 2))
    beta_fn, h_fn = metric_interpolators(metric)
    u = np.array([0.23, -0.41])
    assert max_abs(h_fn(u) - frame.h(u)) < 1e-5
    assert max_abs(beta_fn(u) - frame.beta(u)) < 1e-5
    target = np.array([0.5, -0.4])
    path = PathSpec.staircase(target)
    E, X = integrate_frame(2, beta_fn, h_fn, 0.9, path, 1e-2)
    E_ref, X_ref = frame.evaluate(target, 0.9)
    assert max(max_abs(E - E_ref), max_abs(X - X_ref)) < 1e-4


def test_bf_projection_drift_guard(torus_frame, pi_diag):
    path = PathSpec.staircase(np.array([0.6, -0.5]))
    with pytest.raises(ProjectionDriftError):
        integrate_bf(2, torus_frame.beta, torus_frame.h, 3.0, pi_diag.matrix,
                     np.zeros(2), path, 0.3, drift_tol=1e-10)


def test_estimate_order_values():
    assert abs(estimate_order(1e-2, 1e-2 / 16) - 4.0) < 1e-12
    # central differences on a smooth function: order 2
    f = np.sin
    def fd(h):
        return abs((f(0.3 + h) - f(0.3 - h)) / (2 * h) - np.cos(0.3))
    assert 1.8 < estimate_order(fd(1e-2), fd(5e-3)) < 2.2
    # non-smooth (clamped) data degrades the observed order: differentiate
    # max(x, 0) across its kink at a point the stencils straddle
    g = lambda x: max(x, 0.0)
    def fd_bad(h):
        return abs((g(0.001 + h) - g(0.001 - h)) / (2 * h) - 1.0)
    assert estimate_order(fd_bad(1e-2), fd_bad(5e-3)) < 1.2
    assert estimate_order(1.0, 0.0) == np.inf
