"""Spectrum solver tests against closed-form oracles and invariants."""

import numpy as np
import pytest

from qtopo.domain import (
    TWO_PI,
    in_domain,
    u_case_a,
    u_case_b,
    u_hadamard,
)
from qtopo.errors import InsufficientDataError
from qtopo.spectral import (
    finite_difference_eigenvalues,
    secular_matrix,
    sobolev_class,
    solve_spectrum,
)

from conftest import haar_unitary

# frozen expected levels: (eigenvalue, multiplicity)
CASE_A_LEVELS = [(0.0, 1), (0.25, 2), (1.0, 2), (2.25, 2), (4.0, 2), (6.25, 2)]
CASE_B_LEVELS = [(0.0, 2), (1.0, 4), (4.0, 4)]
HADAMARD_LEVELS = [
    (0.015625, 2),
    (0.765625, 2),
    (1.265625, 2),
    (3.515625, 2),
    (4.515625, 2),
]


def closed_form_state_eigenvalues(u, n):
    """Independent oracle: k = +-alpha/(2 pi) mod 1 for each eigenphase of u.

    Derived from diagonalizing the gluing matrix; each eigenphase alpha
    contributes the wavenumber ladder |m + alpha/(2 pi)| over all integers m.
    """
    phases = np.angle(np.linalg.eigvals(u.matrix))
    ks = []
    for alpha in phases:
        base = alpha / TWO_PI
        for m in range(-n - 2, n + 3):
            ks.append(abs(m + base))
    lam = np.sort(np.array(ks)) ** 2
    return lam[:n]


# ---------------------------------------------------------------------------
# closed-form agreement


def test_case_a_levels():
    spec = solve_spectrum(u_case_a(), 11)
    got = list(zip(spec.eigenvalues, spec.multiplicities))
    for (lam, mult), (want_lam, want_mult) in zip(got, CASE_A_LEVELS):
        assert abs(lam - want_lam) < 1e-8
        assert mult == want_mult


def test_case_b_levels():
    spec = solve_spectrum(u_case_b(), 10)
    got = list(zip(spec.eigenvalues, spec.multiplicities))
    for (lam, mult), (want_lam, want_mult) in zip(got, CASE_B_LEVELS):
        assert abs(lam - want_lam) < 1e-8
        assert mult == want_mult


def test_hadamard_levels():
    spec = solve_spectrum(u_hadamard(), 10)
    got = list(zip(spec.eigenvalues, spec.multiplicities))
    for (lam, mult), (want_lam, want_mult) in zip(got, HADAMARD_LEVELS):
        assert abs(lam - want_lam) < 1e-8
        assert mult == want_mult


def test_random_unitaries_match_closed_form():
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(20):
        u = haar_unitary(rng)
        spec = solve_spectrum(u, 10)
        want = closed_form_state_eigenvalues(u, 10)
        worst = max(worst, float(np.max(np.abs(spec.state_eigenvalues[:10] - want))))
    assert worst < 1e-9


def test_eigenvalues_sorted_non_negative():
    spec = solve_spectrum(u_hadamard(), 12)
    lam = spec.eigenvalues
    assert np.all(lam >= 0)
    assert np.all(np.diff(lam) > 0)
    assert np.all(spec.multiplicities >= 1)


# ---------------------------------------------------------------------------
# eigenfunction invariants


def test_orthonormality(spec_case_a, spec_case_b, spec_hadamard):
    for spec in (spec_case_a, spec_case_b, spec_hadamard):
        fs = spec.eigenfunctions
        gram = np.array(
            [[fs[i].modes.inner(fs[j].modes) for j in range(len(fs))] for i in range(len(fs))]
        )
        assert np.max(np.abs(gram - np.eye(len(fs)))) < 1e-8


def test_eigenfunction_residual(spec_hadamard):
    # -psi'' = lambda psi must hold pointwise for the analytic mode data
    xs = np.linspace(0.3, TWO_PI - 0.3, 17)
    for f, lam in zip(spec_hadamard.eigenfunctions, spec_hadamard.state_eigenvalues):
        res = -f.modes.second_derivative_sample(xs) - lam * f.modes.sample(xs)
        assert np.max(np.abs(res)) < 1e-6


def test_boundary_condition_residual(spec_case_a, spec_hadamard):
    for spec in (spec_case_a, spec_hadamard):
        m = spec.u.matrix
        for f in spec.eigenfunctions:
            d = f.modes.derivatives_at(0.0, 1)
            e = f.modes.derivatives_at(TWO_PI, 1)
            assert np.max(np.abs(e[0] - m @ d[0])) < 1e-7
            assert np.max(np.abs(e[1] - m @ d[1])) < 1e-7


def test_eigenfunctions_pass_in_domain(spec_case_b):
    for f in spec_case_b.eigenfunctions:
        assert in_domain(f, spec_case_b.u)


def test_secular_matrix_singular_at_roots():
    u = u_case_a()
    for k in (0.5, 1.0, 1.5):
        s = np.linalg.svd(secular_matrix(u, k), compute_uv=False)
        assert s[-1] < 1e-9
    s = np.linalg.svd(secular_matrix(u, 0.71), compute_uv=False)
    assert s[-1] > 1e-3


# ---------------------------------------------------------------------------
# finite-difference cross-check


def test_finite_difference_oracle_presets():
    for mk in (u_case_a, u_case_b, u_hadamard):
        u = mk()
        spec = solve_spectrum(u, 10)
        fd = finite_difference_eigenvalues(u, 2048, 10)
        sec = spec.state_eigenvalues[:10]
        rel = np.abs(fd[:10] - sec) / np.maximum(np.abs(sec), 1.0)
        assert np.max(rel) < 2e-3


def test_finite_difference_oracle_random():
    rng = np.random.default_rng(22)
    for _ in range(20):
        u = haar_unitary(rng)
        spec = solve_spectrum(u, 10)
        fd = finite_difference_eigenvalues(u, 2048, 10)
        sec = spec.state_eigenvalues[:10]
        rel = np.abs(fd[:10] - sec) / np.maximum(np.abs(sec), 1.0)
        assert np.max(rel) < 2e-3


# ---------------------------------------------------------------------------
# smoothness classification of coefficient vectors


def test_sobolev_class_examples():
    n = np.arange(1, 129, dtype=float)
    energies = n**2
    assert sobolev_class(np.exp(-n), energies, 8) == float("inf")
    assert sobolev_class(1.0 / n, energies, 8) == 0
    assert sobolev_class(n**-2.5, energies, 8) == 1


def test_sobolev_class_needs_data():
    with pytest.raises(InsufficientDataError):
        sobolev_class(np.ones(10), np.ones(10), 2)
    with pytest.raises(ValueError):
        sobolev_class(np.ones(40), np.ones(41), 2)
