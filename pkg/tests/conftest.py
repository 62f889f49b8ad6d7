"""Shared fixtures: cached spectra for the three canonical gluings."""

import numpy as np
import pytest

from qtopo.domain import make_boundary_unitary, u_case_a, u_case_b, u_hadamard
from qtopo.spectral import solve_spectrum


def haar_unitary(rng):
    """A 2x2 unitary drawn from the Haar measure."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phase = np.diag(r) / np.abs(np.diag(r))
    return make_boundary_unitary(q @ np.diag(phase))


@pytest.fixture(scope="session")
def spec_case_a():
    return solve_spectrum(u_case_a(), 8, n_x=501)


@pytest.fixture(scope="session")
def spec_case_b():
    return solve_spectrum(u_case_b(), 8, n_x=501)


@pytest.fixture(scope="session")
def spec_hadamard():
    return solve_spectrum(u_hadamard(), 8, n_x=501)
