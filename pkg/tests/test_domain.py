"""Unit tests for the interval-pair domain: unitaries, fields, derivatives,
the boundary surface term, and the gauge maps."""

import numpy as np
import pytest

from qtopo.domain import (
    TWO_PI,
    WaveField,
    boundary_form,
    default_grid,
    endpoint_derivative,
    fornberg_weights,
    gauge_transform,
    in_domain,
    load_unitary,
    make_boundary_unitary,
    make_gauge_map,
    make_wave_field,
    random_domain_field,
    save_unitary,
    scalar_product,
    u_case_a,
    u_case_b,
    u_hadamard,
)
from qtopo.errors import GridMismatchError, GridTooCoarseError, NonUnitaryError

from conftest import haar_unitary

# classic forward-difference first-derivative weights on 7 equispaced points
FORWARD_7PT = [-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4, 6.0 / 5, -1.0 / 6]


# ---------------------------------------------------------------------------
# boundary unitaries


def test_unitary_validation_rejects_non_unitary():
    with pytest.raises(NonUnitaryError):
        make_boundary_unitary([[1.0, 0.1], [0.0, 1.0]])
    with pytest.raises(NonUnitaryError):
        make_boundary_unitary(np.zeros((3, 3)))


def test_preset_kinds():
    assert u_case_a().kind == "off_diagonal"
    assert u_case_b().kind == "diagonal"
    assert u_hadamard().kind == "generic"


def test_unitary_json_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = haar_unitary(rng)
        path = tmp_path / "u.json"
        save_unitary(u, path)
        back = load_unitary(path)
        assert np.max(np.abs(back.matrix - u.matrix)) < 1e-15


# ---------------------------------------------------------------------------
# wave fields


def test_wave_field_shape_checked():
    x = default_grid(11)
    with pytest.raises(ValueError):
        WaveField(x, np.zeros((2, 7)))


def test_make_wave_field_normalizes():
    x = default_grid(201)
    vals = np.ones((2, 201), dtype=complex)
    f = make_wave_field(x, vals)
    assert abs(f.norm() - 1.0) < 1e-12


def test_scalar_product_grid_mismatch():
    f = make_wave_field(default_grid(101), np.ones((2, 101)))
    g = make_wave_field(default_grid(102), np.ones((2, 102)))
    with pytest.raises(GridMismatchError):
        scalar_product(f, g)


def test_field_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    x = default_grid(64)
    vals = rng.normal(size=(2, 64)) + 1j * rng.normal(size=(2, 64))
    f = make_wave_field(x, vals)
    path = tmp_path / "field.csv"
    f.to_csv(path)
    g = WaveField.from_csv(path)
    assert np.max(np.abs(g.values - f.values)) < 1e-15
    assert np.max(np.abs(g.x - f.x)) < 1e-15


# ---------------------------------------------------------------------------
# one-sided derivatives


def test_fornberg_weights_classic_tables():
    assert np.allclose(fornberg_weights(1, np.arange(2.0)), [-1.0, 1.0])
    assert np.allclose(fornberg_weights(1, np.arange(3.0)), [-1.5, 2.0, -0.5])
    assert np.allclose(fornberg_weights(2, np.arange(3.0)), [1.0, -2.0, 1.0])
    assert np.allclose(fornberg_weights(1, np.arange(7.0)), FORWARD_7PT)


def test_fornberg_rejects_short_stencil():
    with pytest.raises(ValueError):
        fornberg_weights(3, np.arange(3.0))


def test_endpoint_derivative_polynomial_exact():
    # the stencil with `order + accuracy` points must differentiate
    # polynomials of that degree - 1 exactly
    x = np.linspace(0.0, 1.0, 21)
    h = x[1] - x[0]
    vals = (x**5 - 2 * x**3 + x)[None, :]
    d_left = endpoint_derivative(vals, h, "left", 2, accuracy=6)
    d_right = endpoint_derivative(vals, h, "right", 2, accuracy=6)
    assert abs(d_left[0] - 0.0) < 1e-9
    assert abs(d_right[0] - (20.0 - 12.0)) < 1e-8


def test_endpoint_derivative_trig():
    n = 801
    x = default_grid(n)
    h = x[1] - x[0]
    vals = np.sin(3 * x)[None, :]
    for order, want_l, want_r in ((1, 3.0, 3.0), (3, -27.0, -27.0)):
        dl = endpoint_derivative(vals, h, "left", order)[0]
        dr = endpoint_derivative(vals, h, "right", order)[0]
        # higher orders amplify roundoff by 1/h^order, so the bar scales
        assert abs(dl - want_l) < 1e-5
        assert abs(dr - want_r) < 1e-5


def test_endpoint_derivative_too_coarse():
    with pytest.raises(GridTooCoarseError):
        endpoint_derivative(np.ones((2, 5)), 0.1, "left", 4, accuracy=6)


# ---------------------------------------------------------------------------
# boundary form and domain membership


def test_boundary_form_vanishes_on_domain_pairs():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        u = haar_unitary(rng)
        fields = [random_domain_field(u, rng, n_x=801) for _ in range(5)]
        for i in range(5):
            for j in range(5):
                worst = max(worst, abs(boundary_form(fields[i], fields[j])))
    assert worst < 1e-6


def test_boundary_form_detects_mismatched_domains():
    rng = np.random.default_rng(8)
    f = random_domain_field(u_case_a(), rng, n_x=801)
    g = random_domain_field(u_case_b(), rng, n_x=801)
    assert abs(boundary_form(f, g)) > 1e-3


def test_in_domain_examples():
    rng = np.random.default_rng(9)
    u = u_hadamard()
    f = random_domain_field(u, rng, n_x=801)
    assert in_domain(f, u)
    assert not in_domain(f, u_case_b())


# ---------------------------------------------------------------------------
# gauge maps


def test_gauge_generator_inverts_unitary():
    rng = np.random.default_rng(10)
    from scipy.linalg import expm

    for u in (u_case_a(), u_case_b(), u_hadamard(), haar_unitary(rng)):
        g = make_gauge_map(u)
        back = expm(TWO_PI * g.generator)
        assert np.max(np.abs(back - u.inverse_matrix())) < 1e-12
        # anti-hermitian generator, so V stays unitary along the interval
        assert np.max(np.abs(g.generator + g.generator.conj().T)) < 1e-12


def test_forward_transform_makes_fields_periodic():
    rng = np.random.default_rng(11)
    for _ in range(5):
        u = haar_unitary(rng)
        f = random_domain_field(u, rng, n_x=801)
        p = gauge_transform(f, make_gauge_map(u), "forward")
        assert np.max(np.abs(p.values[:, -1] - p.values[:, 0])) < 1e-8


def test_gauge_round_trip():
    rng = np.random.default_rng(12)
    u = haar_unitary(rng)
    g = make_gauge_map(u)
    f = random_domain_field(u, rng, n_x=401)
    back = gauge_transform(gauge_transform(f, g, "forward"), g, "inverse")
    assert np.max(np.abs(back.values - f.values)) < 1e-12


def test_gauge_branch_point_handled():
    # u with eigenvalue -1 sits on the logarithm's branch cut
    u = make_boundary_unitary(np.diag([-1.0, 1.0]))
    g = make_gauge_map(u)
    from scipy.linalg import expm

    assert np.max(np.abs(expm(TWO_PI * g.generator) - u.inverse_matrix())) < 1e-9
