"""Fields on two copies of [0, 2pi] glued by a U(2) boundary matrix.

A state is a two-component wavefunction psi = (psi_1, psi_2), each component
sampled on the closed interval [0, 2pi].  The self-adjoint realizations of
H = -d^2/dx^2 on this configuration space are labelled by a unitary u acting
on the component index:

    psi(2pi) = u psi(0),    psi'(2pi) = u psi'(0).

This module holds the basic types (BoundaryUnitary, WaveField, GaugeMap) and
the field-level operations: scalar products, the boundary form whose vanishing
expresses self-adjointness, domain membership checks, and the gauge map that
trades the twisted boundary condition for a flat connection.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .errors import GridMismatchError, GridTooCoarseError, NonUnitaryError

TWO_PI = 2.0 * np.pi

#: default number of grid points (inclusive of both endpoints)
N_X_DEFAULT = 2001

UNITARY_TOL = 1e-12
FORM_TAG_TOL = 1e-10


def default_grid(n_x: int = N_X_DEFAULT) -> np.ndarray:
    """Uniform grid on [0, 2pi], both endpoints included."""
    return np.linspace(0.0, TWO_PI, n_x)


# ---------------------------------------------------------------------------
# boundary unitaries


@dataclass(frozen=True)
class BoundaryUnitary:
    """A 2x2 unitary labelling a self-adjoint domain of -d^2/dx^2."""

    matrix: np.ndarray

    @property
    def kind(self) -> str:
        """'off_diagonal', 'diagonal' or 'generic', by entry magnitudes."""
        u = self.matrix
        if abs(u[0, 0]) < FORM_TAG_TOL and abs(u[1, 1]) < FORM_TAG_TOL:
            return "off_diagonal"
        if abs(u[0, 1]) < FORM_TAG_TOL and abs(u[1, 0]) < FORM_TAG_TOL:
            return "diagonal"
        return "generic"

    def inverse_matrix(self) -> np.ndarray:
        return self.matrix.conj().T

    def to_json(self) -> list:
        """Nested 2x2 list of [re, im] pairs."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]

    @staticmethod
    def from_json(data) -> "BoundaryUnitary":
        return make_boundary_unitary(complex_matrix_from_json(data))


def complex_matrix_from_json(data) -> np.ndarray:
    """Read a nested list whose entries are numbers or [re, im] pairs."""
    def entry(v):
        if isinstance(v, (int, float)):
            return complex(v)
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return complex(v[0], v[1])
        raise ValueError(f"cannot parse matrix entry {v!r}")

    return np.array([[entry(v) for v in row] for row in data], dtype=complex)


def make_boundary_unitary(matrix, tol: float = UNITARY_TOL) -> BoundaryUnitary:
    """Validate and wrap a 2x2 unitary.

    Raises NonUnitaryError when ``u u^dag`` deviates from the identity by more
    than ``tol`` in any entry.
    """
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise NonUnitaryError(f"expected a 2x2 matrix, got shape {u.shape}")
    defect = np.max(np.abs(u @ u.conj().T - np.eye(2)))
    if defect > tol:
        raise NonUnitaryError(f"unitarity defect {defect:.3e} exceeds {tol:.1e}")
    u = u.copy()
    u.setflags(write=False)
    return BoundaryUnitary(u)


# common gluings used throughout the tests and the command line
def u_case_a() -> BoundaryUnitary:
    """Component swap: the two intervals close into a single circle."""
    return make_boundary_unitary([[0, 1], [1, 0]])


def u_case_b() -> BoundaryUnitary:
    """Identity: each interval closes into its own circle."""
    return make_boundary_unitary(np.eye(2))


def u_hadamard() -> BoundaryUnitary:
    """A mixing unitary with no sharp classical gluing."""
    return make_boundary_unitary(np.array([[1, 1], [-1, 1]]) / np.sqrt(2))


# ---------------------------------------------------------------------------
# wave fields


@dataclass
class WaveField:
    """Two complex components sampled on a shared uniform grid.

    ``modes`` optionally carries an exact description of the field as a sum
    of plane-wave / linear terms (see spectral.ModeSum); solvers that know
    the analytic form attach it so later consumers can evaluate derivatives
    without finite differencing.
    """

    x: np.ndarray
    values: np.ndarray
    modes: object | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (2, self.x.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid size {self.x.size}"
            )

    @property
    def n_x(self) -> int:
        return self.x.size

    @property
    def spacing(self) -> float:
        return self.x[1] - self.x[0]

    def norm(self) -> float:
        return float(np.sqrt(scalar_product(self, self).real))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "re1", "im1", "re2", "im2"])
            for j in range(self.n_x):
                w.writerow(
                    [
                        repr(float(self.x[j])),
                        repr(float(self.values[0, j].real)),
                        repr(float(self.values[0, j].imag)),
                        repr(float(self.values[1, j].real)),
                        repr(float(self.values[1, j].imag)),
                    ]
                )

    @staticmethod
    def from_csv(path) -> "WaveField":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["x", "re1", "im1", "re2", "im2"]:
                raise ValueError(f"unexpected CSV header {header}")
            for row in reader:
                rows.append([float(v) for v in row])
        arr = np.array(rows)
        values = np.stack(
            [arr[:, 1] + 1j * arr[:, 2], arr[:, 3] + 1j * arr[:, 4]], axis=0
        )
        return WaveField(arr[:, 0], values)


def make_wave_field(x, values, modes=None) -> WaveField:
    """Build a normalized WaveField from raw samples."""
    f = WaveField(np.asarray(x, float), np.asarray(values, complex), modes)
    n = f.norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero field")
    f.values = f.values / n
    if f.modes is not None:
        f.modes = f.modes.scaled(1.0 / n)
    return f


def _check_same_grid(psi: WaveField, chi: WaveField) -> None:
    if psi.n_x != chi.n_x or np.max(np.abs(psi.x - chi.x)) > 1e-12:
        raise GridMismatchError("fields are sampled on different grids")


def scalar_product(psi: WaveField, chi: WaveField) -> complex:
    """Trapezoidal (psi, chi) = int dx sum_i conj(psi_i) chi_i."""
    _check_same_grid(psi, chi)
    integrand = np.sum(np.conj(psi.values) * chi.values, axis=0)
    return complex(np.trapezoid(integrand, psi.x))


# ---------------------------------------------------------------------------
# one-sided derivatives at the endpoints

def fornberg_weights(order: int, offsets: np.ndarray) -> np.ndarray:
    """Finite-difference weights for d^order/dx^order at x=0 on given offsets.

    Standard recursive construction for arbitrary node sets; offsets are in
    grid units (floats or ints).
    """
    offsets = np.asarray(offsets, dtype=float)
    n = offsets.size
    if order >= n:
        raise ValueError("need more points than the derivative order")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    for i in range(1, n):
        prev = c[i - 1].copy()  # row i builds on the pre-update row i-1
        c2 = 1.0
        for j in range(i):
            c3 = offsets[i] - offsets[j]
            c2 *= c3
            for m in range(min(i, order), 0, -1):
                c[j, m] = (offsets[i] * c[j, m] - m * c[j, m - 1]) / c3
            c[j, 0] = offsets[i] * c[j, 0] / c3
        for m in range(min(i, order), 0, -1):
            c[i, m] = (c1 / c2) * (m * prev[m - 1] - offsets[i - 1] * prev[m])
        c[i, 0] = -c1 * offsets[i - 1] * prev[0] / c2
        c1 = c2
    return c[:, order]


def endpoint_derivative(values: np.ndarray, spacing: float, side: str,
                        order: int = 1, accuracy: int = 6) -> np.ndarray:
    """One-sided derivative of sampled rows at the left or right endpoint.

    ``values`` has shape (..., n); the stencil uses ``order + accuracy``
    points counted inward from the chosen side.
    """
    npts = order + accuracy
    n = values.shape[-1]
    if npts > n:
        raise GridTooCoarseError(
            f"stencil needs {npts} points, grid has only {n}"
        )
    offsets = np.arange(npts, dtype=float)
    w = fornberg_weights(order, offsets) / spacing**order
    if side == "left":
        block = values[..., :npts]
        return np.tensordot(block, w, axes=([-1], [0]))
    if side == "right":
        block = values[..., -npts:]
        # mirror: offsets run inward, so odd derivatives flip sign
        return np.tensordot(block, w[::-1], axes=([-1], [0])) * (-1.0) ** order
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _endpoint_data(psi: WaveField, accuracy: int = 6):
    """Values and first derivatives of both components at x=0 and x=2pi."""
    v0 = psi.values[:, 0]
    v1 = psi.values[:, -1]
    d0 = endpoint_derivative(psi.values, psi.spacing, "left", 1, accuracy)
    d1 = endpoint_derivative(psi.values, psi.spacing, "right", 1, accuracy)
    return v0, v1, d0, d1


def boundary_form(psi: WaveField, chi: WaveField) -> complex:
    """Surface term sum_i [-conj(psi_i) chi_i' + conj(psi_i)' chi_i] between endpoints.

    Vanishes when both fields obey the same u-boundary condition; a nonzero
    value signals that -d^2/dx^2 is not symmetric on the pair.
    """
    _check_same_grid(psi, chi)
    p0, p1, dp0, dp1 = _endpoint_data(psi)
    c0, c1, dc0, dc1 = _endpoint_data(chi)
    upper = np.sum(-np.conj(p1) * dc1 + np.conj(dp1) * c1)
    lower = np.sum(-np.conj(p0) * dc0 + np.conj(dp0) * c0)
    return complex(upper - lower)


def in_domain(psi: WaveField, u: BoundaryUnitary, tol: float = 1e-8) -> bool:
    """Check psi(2pi) = u psi(0) and psi'(2pi) = u psi'(0) within tol.

    Residuals are compared against ``tol`` scaled by the endpoint magnitudes
    (floored at 1) so the answer does not depend on overall normalization.
    """
    v0, v1, d0, d1 = _endpoint_data(psi)
    m = u.matrix
    res_val = np.max(np.abs(v1 - m @ v0))
    res_der = np.max(np.abs(d1 - m @ d0))
    scale_val = max(1.0, float(np.max(np.abs(v0))), float(np.max(np.abs(v1))))
    scale_der = max(1.0, float(np.max(np.abs(d0))), float(np.max(np.abs(d1))))
    return res_val <= tol * scale_val and res_der <= tol * scale_der


# ---------------------------------------------------------------------------
# gauge maps

BRANCH_NUDGE = 1e-6


@dataclass(frozen=True)
class GaugeMap:
    """V(x) = exp(x X) with X anti-hermitian and exp(2pi X) = u^{-1}.

    Multiplication by V maps fields obeying the u-boundary condition to
    periodic fields; V^{-1} runs the other way.  Stored in diagonalized form
    so V can be evaluated on whole grids at once.
    """

    u: BoundaryUnitary
    generator: np.ndarray          # X, anti-hermitian
    _basis: np.ndarray             # unitary W with X = W diag(i theta / 2pi) W^dag
    _angles: np.ndarray            # theta_j, principal angles of u^{-1}

    def v_at(self, x: float) -> np.ndarray:
        phases = np.exp(1j * self._angles * (x / TWO_PI))
        return (self._basis * phases) @ self._basis.conj().T

    def v_on_grid(self, x: np.ndarray) -> np.ndarray:
        """Stack of V(x_j), shape (n, 2, 2)."""
        phases = np.exp(1j * np.outer(np.asarray(x), self._angles) / TWO_PI)
        return np.einsum("ab,nb,cb->nac", self._basis, phases, self._basis.conj())

    def connection(self) -> np.ndarray:
        """A = V d(V^{-1})/dx = -X, constant in x."""
        return -self.generator


def make_gauge_map(u: BoundaryUnitary) -> GaugeMap:
    """Principal-branch logarithm of u^{-1}, with the cut nudged off -1.

    When u^{-1} has an eigenvalue at the branch point -1, all angles are
    computed with the cut rotated by BRANCH_NUDGE so the result varies
    continuously under small perturbations of u.
    """
    u_inv = u.inverse_matrix()
    # unitary matrices are normal, so the complex Schur form is diagonal
    t, w = schur(u_inv, output="complex")
    eigs = np.diag(t)
    angles = np.angle(eigs)
    if np.any(np.abs(eigs + 1.0) < 1e-9):
        angles = np.angle(eigs * np.exp(-1j * BRANCH_NUDGE)) + BRANCH_NUDGE
    x_gen = (w * (1j * angles / TWO_PI)) @ w.conj().T
    x_gen.setflags(write=False)
    return GaugeMap(u, x_gen, w, angles)


def gauge_transform(psi: WaveField, gauge: GaugeMap, direction: str = "forward") -> WaveField:
    """Apply V (forward) or V^{-1} (inverse) pointwise to a field.

    Forward turns a u-domain field into a periodic one; inverse turns a
    periodic field into a u-domain one.
    """
    vstack = gauge.v_on_grid(psi.x)
    if direction == "forward":
        pass
    elif direction == "inverse":
        vstack = np.conj(np.swapaxes(vstack, 1, 2))
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    out = np.einsum("nab,bn->an", vstack, psi.values)
    return WaveField(psi.x, out, None)


def random_domain_field(u: BoundaryUnitary, rng: np.random.Generator,
                        n_modes: int = 5, n_x: int = N_X_DEFAULT) -> WaveField:
    """A smooth normalized field obeying the u-boundary condition.

    Draws a random low-frequency periodic field and pulls it back through
    the gauge map.
    """
    x = default_grid(n_x)
    vals = np.zeros((2, n_x), dtype=complex)
    for m in range(-n_modes, n_modes + 1):
        coeff = rng.standard_normal((2, 1)) + 1j * rng.standard_normal((2, 1))
        vals += coeff * np.exp(1j * m * x)[None, :] / (1 + m * m)
    periodic = make_wave_field(x, vals)
    twisted = gauge_transform(periodic, make_gauge_map(u), "inverse")
    return make_wave_field(twisted.x, twisted.values)


# ---------------------------------------------------------------------------
# serialization helpers


def save_unitary(u: BoundaryUnitary, path) -> None:
    with open(path, "w") as fh:
        json.dump({"schema": 1, "u": u.to_json()}, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_unitary(path) -> BoundaryUnitary:
    with open(path) as fh:
        data = json.load(fh)
    payload = data["u"] if isinstance(data, dict) and "u" in data else data
    return BoundaryUnitary.from_json(payload)
