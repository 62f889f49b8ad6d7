"""Dimension from eigenvalue growth and distances from commutator-bounded functions."""

import math

import numpy as np
import pytest

from qtopo.domain import u_case_b
from qtopo.errors import DegenerateFitError
from qtopo.geometry import (
    DistanceProblem,
    circle_laplacian_problem,
    connes_distance,
    connes_distance_report,
    estimate_dimension,
    iterated_commutator,
    path_graph_dirac,
    spectral_norm,
)
from qtopo.spectral import solve_spectrum


# ---------------------------------------------------------------------------
# dimension fits


def test_dimension_exact_linear_growth():
    lam = np.arange(1, 121, dtype=float)
    fit = estimate_dimension(lam, N=2, fit_window=(20, 100))
    assert abs(fit.d - 2.0) < 1e-12
    assert fit.residual < 1e-12
    assert fit.window == (20, 100)


def test_dimension_quadratic_growth_gives_one():
    lam = np.arange(1, 121, dtype=float) ** 2
    fit = estimate_dimension(lam, N=2, fit_window=(20, 100))
    assert abs(fit.d - 1.0) < 1e-12


def test_dimension_case_b_spectrum():
    spec = solve_spectrum(u_case_b(), 110, n_x=201)
    fit = estimate_dimension(spec.state_eigenvalues, N=2, fit_window=(20, 100))
    assert abs(fit.d - 1.0) <= 0.05, f"d = {fit.d}"


def test_dimension_fit_to_json():
    fit = estimate_dimension(np.arange(1, 41, dtype=float), N=1, fit_window=(5, 40))
    payload = fit.to_json()
    assert set(payload) == {"d", "slope", "residual", "window"}
    assert payload["window"] == [5, 40]


def test_dimension_window_validation():
    lam = np.arange(1, 31, dtype=float)
    with pytest.raises(ValueError):
        estimate_dimension(lam, N=2, fit_window=(5, 15))  # fewer than 20 levels
    with pytest.raises(ValueError):
        estimate_dimension(lam, N=2, fit_window=(1, 40))  # beyond the list
    with pytest.raises(ValueError):
        estimate_dimension(np.arange(-5, 30, dtype=float), N=2, fit_window=(1, 30))


def test_dimension_flat_spectrum_rejected():
    # the fit sorts its input, so a flat list is the canonical zero-slope case
    lam = np.ones(40)
    with pytest.raises(DegenerateFitError):
        estimate_dimension(lam, N=2, fit_window=(1, 40))


# ---------------------------------------------------------------------------
# iterated commutators


def test_iterated_commutator_matches_direct_nesting():
    rng = np.random.default_rng(2)
    n = 6
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = h + h.conj().T
    a = rng.standard_normal(n)
    direct = h.copy()
    ad = np.diag(a)
    for order in range(1, 4):
        direct = ad @ direct - direct @ ad
        got = iterated_commutator(a, h, order)
        assert np.max(np.abs(got - direct)) < 1e-12


def test_iterated_commutator_entry_formula():
    rng = np.random.default_rng(4)
    n = 5
    h = rng.standard_normal((n, n))
    a = rng.standard_normal(n)
    got = iterated_commutator(a, h, 3)
    expected = ((a[:, None] - a[None, :]) ** 3) * h
    assert np.max(np.abs(got - expected)) < 1e-12


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(6)
    m = rng.standard_normal((7, 7)) + 1j * rng.standard_normal((7, 7))
    assert abs(spectral_norm(m) - np.linalg.svd(m, compute_uv=False)[0]) < 1e-12


# ---------------------------------------------------------------------------
# distances


def test_path_graph_distances_are_geodesic():
    spacing = 0.3
    prob = path_graph_dirac(9, spacing)
    worst = 0.0
    for j in (1, 2, 5, 8):
        d = connes_distance(prob, 0, j)
        worst = max(worst, abs(d - j * spacing))
    assert worst < 1e-6, f"worst geodesic error {worst:.3e}"


def test_path_graph_distance_symmetric():
    prob = path_graph_dirac(6, 0.5)
    assert abs(connes_distance(prob, 1, 4) - connes_distance(prob, 4, 1)) < 1e-8


def test_same_point_distance_is_zero():
    prob = path_graph_dirac(5, 1.0)
    report = connes_distance_report(prob, 2, 2)
    assert report.value == 0.0
    assert report.method == "trivial"


def test_disconnected_points_are_infinitely_far():
    h = np.zeros((4, 4))
    h[0, 1] = h[1, 0] = 1.0
    h[2, 3] = h[3, 2] = 1.0
    prob = DistanceProblem(h, [[0], [1], [2], [3]], order=1)
    report = connes_distance_report(prob, 0, 3)
    assert math.isinf(report.value)
    assert report.method == "disconnected"


def test_circle_antipodal_distance_second_order():
    prob = circle_laplacian_problem(64, order=2, restarts=8, iterations=200, seed=0)
    report = connes_distance_report(prob, 0, 32)
    assert report.method == "projected_gradient"
    assert abs(report.value - np.pi) <= 0.05 * np.pi, f"d = {report.value}"


def test_circle_quarter_distance_second_order():
    # the discrete operator-norm constraint admits slightly longer profiles
    # than the continuum geodesic, so only closeness is asserted
    prob = circle_laplacian_problem(64, order=2, restarts=8, iterations=200, seed=0)
    d = connes_distance(prob, 0, 16)
    assert abs(d - np.pi / 2) <= 0.08 * np.pi


def test_distance_problem_validation():
    with pytest.raises(ValueError):
        DistanceProblem(np.array([[0.0, 1.0], [0.0, 0.0]]), [[0], [1]])
    with pytest.raises(ValueError):
        DistanceProblem(np.eye(2), [[0, 1], [1]])
