"""Dynamics of the boundary condition as a quantum degree of freedom.

The gluing unitary is promoted to a rotor coordinate phi with u(phi) =
exp(i phi sigma_x): phi = 0 glues the intervals into two circles, phi = pi/2
into one circle.  In the flat-connection picture the particle sees periodic
boundary conditions and a phi-dependent vector potential A(phi) =
i phi sigma_x / (2 pi), while the rotor itself carries kinetic energy
-(1/2I) d^2/dphi^2 inside hard walls at +-Phi and an optional potential
W(phi).  The joint Hamiltonian

    H = -(d/dx + A(phi))^2 - (1/2I) d^2/dphi^2 + W(phi)

is discretized with symmetric stencils (exactly Hermitian) and evolved with
the Crank-Nicolson unitary, so norm and energy are conserved to solver
precision.  Weighting the phi-marginal near 0 or pi/2 gives the probability
of finding each topology.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import TWO_PI, BoundaryUnitary, make_boundary_unitary
from .errors import LinearSolveFailureError

PHI_ONE_CIRCLE = np.pi / 2.0   # swap-like gluing: a single circle
PHI_TWO_CIRCLES = 0.0          # identity gluing: two circles

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)

DEFAULTS = {
    "n_x": 64,
    "n_phi": 64,
    "Phi": np.pi,
    "I": 10.0,
    "dt": 1e-3,
    "epsilon": 0.3,
}


def rotor_unitary(phi: float) -> BoundaryUnitary:
    """u(phi) = exp(i phi sigma_x)."""
    m = np.cos(phi) * np.eye(2) + 1j * np.sin(phi) * SIGMA_X
    return make_boundary_unitary(m)


def connection_coefficient(phi: float) -> float:
    """A(phi) = i c sigma_x with c = phi / (2 pi); returns c."""
    return phi / TWO_PI


@dataclass(frozen=True)
class RotorPath:
    """The one-parameter family of gluings swept by the rotor angle.

    phi = phi_two_circles glues each interval to itself; phi = phi_one_circle
    swaps the interval ends into a single loop.
    """

    phi_one_circle: float = PHI_ONE_CIRCLE
    phi_two_circles: float = PHI_TWO_CIRCLES

    def unitary_at(self, phi: float) -> BoundaryUnitary:
        return rotor_unitary(phi)

    def connection_at(self, phi: float) -> np.ndarray:
        return 1j * connection_coefficient(phi) * SIGMA_X


# ---------------------------------------------------------------------------
# grids and states


def x_grid(n_x: int) -> np.ndarray:
    """Periodic grid: n_x points on [0, 2pi), endpoint identified with 0."""
    return np.arange(n_x) * (TWO_PI / n_x)


def phi_grid(n_phi: int, Phi: float) -> np.ndarray:
    """Interior Dirichlet grid: n_phi points strictly inside (-Phi, Phi)."""
    h = 2.0 * Phi / (n_phi + 1)
    return -Phi + h * np.arange(1, n_phi + 1)


@dataclass
class RotorState:
    """Joint particle-rotor wavefunction on the x (periodic) x phi grid."""

    x: np.ndarray
    phi: np.ndarray
    values: np.ndarray  # shape (2, n_x, n_phi)

    @property
    def cell_weight(self) -> float:
        hx = self.x[1] - self.x[0]
        hphi = self.phi[1] - self.phi[0]
        return float(hx * hphi)

    def norm(self) -> float:
        return float(np.sqrt(self.cell_weight * np.sum(np.abs(self.values) ** 2)))

    def ravel(self) -> np.ndarray:
        return self.values.ravel()

    @staticmethod
    def from_vector(x, phi, vec) -> "RotorState":
        return RotorState(x, phi, vec.reshape(2, x.size, phi.size))


def normalize_state(state: RotorState) -> RotorState:
    n = state.norm()
    if n == 0:
        raise ValueError("cannot normalize the zero state")
    return RotorState(state.x, state.phi, state.values / n)


# ---------------------------------------------------------------------------
# Hamiltonian assembly


@dataclass
class JointHamiltonian:
    matrix: sp.csr_matrix
    x: np.ndarray
    phi: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return float(np.max(np.abs(d.data))) if d.nnz else 0.0

    def expectation(self, state: RotorState) -> float:
        v = state.ravel()
        return float(np.real(np.vdot(v, self.matrix @ v)) / np.real(np.vdot(v, v)))


def _periodic_laplacian(n: int, h: float) -> sp.csr_matrix:
    main = 2.0 * np.ones(n) / h**2
    off = -np.ones(n - 1) / h**2
    L = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    L[0, n - 1] += -1.0 / h**2
    L[n - 1, 0] += -1.0 / h**2
    return L.tocsr()


def _periodic_gradient(n: int, h: float) -> sp.csr_matrix:
    off = np.ones(n - 1) / (2.0 * h)
    D = sp.diags([-off, off], [-1, 1], format="lil")
    D[0, n - 1] = -1.0 / (2.0 * h)
    D[n - 1, 0] = 1.0 / (2.0 * h)
    return D.tocsr()


def potential_from_config(w_conf: dict | None):
    """Potential W(phi) from a {'kind': ..., 'params': ...} description."""
    if w_conf is None or w_conf.get("kind", "zero") == "zero":
        return lambda phi: np.zeros_like(phi)
    kind = w_conf["kind"]
    params = w_conf.get("params", {})
    if kind == "harmonic":
        k = float(params.get("k", 8.0))
        center = float(params.get("center", PHI_ONE_CIRCLE))
        return lambda phi: 0.5 * k * (phi - center) ** 2
    if kind == "tilted_double_well":
        barrier = float(params.get("barrier", 2.0))
        tilt = float(params.get("tilt", 4.0))
        c = 0.5 * (PHI_ONE_CIRCLE + PHI_TWO_CIRCLES)
        w = 0.5 * (PHI_ONE_CIRCLE - PHI_TWO_CIRCLES)
        return lambda phi: (
            barrier * ((phi - c) ** 2 - w**2) ** 2 / w**4
            + tilt * (phi - PHI_TWO_CIRCLES) / (PHI_ONE_CIRCLE - PHI_TWO_CIRCLES)
        )
    raise ValueError(f"unknown potential kind {kind!r}")


def build_joint_hamiltonian(
    n_x: int = 64,
    n_phi: int = 64,
    Phi: float = np.pi,
    inertia: float = 10.0,
    potential=None,
    include_connection: bool = True,
) -> JointHamiltonian:
    """Sparse Hermitian joint Hamiltonian on the (component, x, phi) grid.

    ``potential`` is a callable W(phi) or None; ``include_connection=False``
    freezes A at 0, decoupling particle and rotor (useful as an oracle).
    """
    xs = x_grid(n_x)
    phis = phi_grid(n_phi, Phi)
    hx = TWO_PI / n_x
    hphi = phis[1] - phis[0]

    I2 = sp.identity(2, format="csr")
    Ix = sp.identity(n_x, format="csr")
    Iphi = sp.identity(n_phi, format="csr", dtype=complex)

    H = sp.kron(sp.kron(I2, _periodic_laplacian(n_x, hx)), Iphi, format="csr")

    if include_connection:
        c = phis / TWO_PI
        # -2 A d/dx with A = i phi sigma_x / (2 pi)
        H = H - 2.0 * sp.kron(
            sp.kron(sp.csr_matrix(1j * SIGMA_X), _periodic_gradient(n_x, hx)),
            sp.diags(c),
            format="csr",
        )
        # -A^2 = + (phi / 2 pi)^2
        H = H + sp.kron(sp.kron(I2, Ix), sp.diags(c**2), format="csr")

    t_phi = sp.diags(
        [
            -np.ones(n_phi - 1) / (2.0 * inertia * hphi**2),
            2.0 * np.ones(n_phi) / (2.0 * inertia * hphi**2),
            -np.ones(n_phi - 1) / (2.0 * inertia * hphi**2),
        ],
        [-1, 0, 1],
    )
    H = H + sp.kron(sp.kron(I2, Ix), t_phi, format="csr")

    if potential is not None:
        H = H + sp.kron(sp.kron(I2, Ix), sp.diags(potential(phis)), format="csr")

    params = {
        "n_x": n_x,
        "n_phi": n_phi,
        "Phi": Phi,
        "I": inertia,
        "include_connection": include_connection,
    }
    return JointHamiltonian(H.tocsr(), xs, phis, params)


def frozen_x_hamiltonian(phi: float, n_x: int, include_connection: bool = True) -> np.ndarray:
    """Dense particle Hamiltonian at a frozen rotor angle (2 n_x unknowns)."""
    hx = TWO_PI / n_x
    L = _periodic_laplacian(n_x, hx).toarray()
    H = np.kron(np.eye(2), L).astype(complex)
    if include_connection:
        c = connection_coefficient(phi)
        D = _periodic_gradient(n_x, hx).toarray()
        H += -2.0 * c * np.kron(1j * SIGMA_X, D)
        H += c**2 * np.kron(np.eye(2), np.eye(n_x))
    return H


def particle_ground_state(phi: float, n_x: int) -> np.ndarray:
    """Lowest eigenvector of the frozen-angle particle Hamiltonian, (2, n_x)."""
    H = frozen_x_hamiltonian(phi, n_x)
    _, v = np.linalg.eigh(H)
    return v[:, 0].reshape(2, n_x)


def gaussian_rotor_state(
    joint: JointHamiltonian, center: float, sigma: float
) -> RotorState:
    """Particle ground state at u(center) times a Gaussian packet in phi."""
    part = particle_ground_state(center, joint.params["n_x"])
    packet = np.exp(-((joint.phi - center) ** 2) / (4.0 * sigma**2))
    values = part[:, :, None] * packet[None, None, :]
    return normalize_state(RotorState(joint.x, joint.phi, values.astype(complex)))


# ---------------------------------------------------------------------------
# probabilities over the rotor angle


def _window_weights(phi: np.ndarray, center: float, eps: float) -> np.ndarray:
    """Fraction of each phi cell inside |phi - center| < eps."""
    h = phi[1] - phi[0]
    lo = np.maximum(phi - h / 2, center - eps)
    hi = np.minimum(phi + h / 2, center + eps)
    return np.clip((hi - lo) / h, 0.0, 1.0)


def topology_probability(state: RotorState, eps: float = 0.3):
    """(P_one_circle, P_two_circles, P_other) from the phi-marginal."""
    dens = np.sum(np.abs(state.values) ** 2, axis=(0, 1))
    total = float(np.sum(dens))
    if total == 0:
        raise ValueError("zero state has no topology distribution")
    w_a = _window_weights(state.phi, PHI_ONE_CIRCLE, eps)
    w_b = _window_weights(state.phi, PHI_TWO_CIRCLES, eps)
    p_a = float(np.dot(w_a, dens) / total)
    p_b = float(np.dot(w_b, dens) / total)
    return p_a, p_b, max(0.0, 1.0 - p_a - p_b)


# ---------------------------------------------------------------------------
# Crank-Nicolson evolution


@dataclass
class EvolutionRecord:
    times: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    p_other: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    final_state: RotorState

    def to_rows(self):
        for i in range(self.times.size):
            yield (
                self.times[i],
                self.p_a[i],
                self.p_b[i],
                self.p_other[i],
                self.energy[i],
                self.norm[i],
            )


def evolve(
    joint: JointHamiltonian,
    state: RotorState,
    dt: float,
    n_steps: int,
    sample_every: int = 1,
    eps: float = 0.3,
) -> EvolutionRecord:
    """Crank-Nicolson propagation with probability and drift bookkeeping.

    Each step applies (1 + i dt H / 2)^{-1} (1 - i dt H / 2), a Cayley
    unitary of the Hermitian H, via a pre-factorized sparse LU solve.
    Raises LinearSolveFailureError if the factorization or any solve
    produces non-finite values.
    """
    H = joint.matrix
    dim = H.shape[0]
    ident = sp.identity(dim, format="csr", dtype=complex)
    try:
        solver = splu((ident + 0.5j * dt * H).tocsc())
    except Exception as exc:  # pragma: no cover - singular factorization
        raise LinearSolveFailureError(f"LU factorization failed: {exc}") from exc
    forward = (ident - 0.5j * dt * H).tocsr()

    v = state.ravel().astype(complex)
    cellw = state.cell_weight

    times, pa, pb, po, energy, norms = [], [], [], [], [], []

    def record(step):
        cur = RotorState.from_vector(state.x, state.phi, v)
        a, b, other = topology_probability(cur, eps)
        times.append(step * dt)
        pa.append(a)
        pb.append(b)
        po.append(other)
        energy.append(float(np.real(np.vdot(v, H @ v)) / np.real(np.vdot(v, v))))
        norms.append(float(np.sqrt(cellw * np.real(np.vdot(v, v)))))

    record(0)
    for step in range(1, n_steps + 1):
        v = solver.solve(forward @ v)
        if not np.all(np.isfinite(v)):
            raise LinearSolveFailureError(f"non-finite state at step {step}")
        if step % sample_every == 0 or step == n_steps:
            record(step)

    return EvolutionRecord(
        np.array(times),
        np.array(pa),
        np.array(pb),
        np.array(po),
        np.array(energy),
        np.array(norms),
        RotorState.from_vector(state.x, state.phi, v),
    )


# ---------------------------------------------------------------------------
# configured experiments


def load_experiment_config(source) -> dict:
    """Read a config dict from a JSON path or a bundled preset name."""
    if isinstance(source, dict):
        conf = dict(source)
    else:
        text = None
        try:
            with open(source) as fh:
                text = fh.read()
        except (OSError, TypeError):
            from importlib import resources

            ref = resources.files("qtopo") / "configs" / f"{source}.json"
            text = ref.read_text()
        conf = json.loads(text)
    merged = dict(DEFAULTS)
    merged.update(conf)
    return merged


def topology_change_experiment(config) -> EvolutionRecord:
    """Evolve the configured initial packet and report the probability traces."""
    conf = load_experiment_config(config)
    joint = build_joint_hamiltonian(
        n_x=int(conf["n_x"]),
        n_phi=int(conf["n_phi"]),
        Phi=float(conf["Phi"]),
        inertia=float(conf["I"]),
        potential=potential_from_config(conf.get("W")),
    )
    init = conf.get("init", {})
    state = gaussian_rotor_state(
        joint,
        float(init.get("center", PHI_ONE_CIRCLE)),
        float(init.get("sigma", 0.2)),
    )
    dt = float(conf["dt"])
    n_steps = int(round(float(conf["T"]) / dt))
    sample_every = max(1, n_steps // int(conf.get("samples", 200)))
    return evolve(
        joint, state, dt, n_steps, sample_every, eps=float(conf["epsilon"])
    )


def write_record_csv(record: EvolutionRecord, path) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["t", "P_a", "P_b", "P_other", "energy", "norm"])
        for row in record.to_rows():
            w.writerow([repr(float(v)) for v in row])
