"""Sequential measurement statistics for pairs of Hermitian observables.

Both the compatible and the incompatible case run through one formula: the
probability of seeing alpha for the first observable and then beta for the
second is the squared norm of the state after both eigenspace projections,

    P(beta after alpha) = || P_beta P_alpha psi ||^2.

When the observables commute this collapses to the joint-eigenbasis weight
of the outcome pair and the order of the factors is irrelevant; when they do
not, swapping the order changes the number, and the maximal discrepancy is a
direct witness of incompatibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EigenvalueNotFoundError, UnnormalizedStateError
from .gelfand import MatrixAlgebraPresentation, SpectrumPointSet, joint_spectrum

HERMITIAN_TOL = 1e-12
CLUSTER_TOL = 1e-9
NORM_TOL = 1e-10


def _spectral_clusters(a: np.ndarray):
    """Distinct eigenvalues (clustered within CLUSTER_TOL) and projectors."""
    w, v = np.linalg.eigh(a)
    scale = max(1.0, float(np.max(np.abs(w))))
    clusters = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[start] > CLUSTER_TOL * scale:
            block = v[:, start:i]
            clusters.append((float(np.mean(w[start:i])), block @ block.conj().T))
            start = i
    return clusters


@dataclass
class ObservablePair:
    """Two Hermitian matrices with cached eigenspace projectors."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=complex)
        self.b = np.asarray(self.b, dtype=complex)
        for name, m in (("a", self.a), ("b", self.b)):
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"observable {name} must be square")
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL * scale:
                raise ValueError(f"observable {name} is not Hermitian")
        self._clusters_a = _spectral_clusters(self.a)
        self._clusters_b = _spectral_clusters(self.b)
        dim = self.a.shape[0]
        for clusters in (self._clusters_a, self._clusters_b):
            total = sum(proj for _, proj in clusters)
            if np.max(np.abs(total - np.eye(dim))) > NORM_TOL:
                raise ValueError("projectors do not resolve the identity")

    def outcomes(self, which: str):
        clusters = self._clusters_a if which == "a" else self._clusters_b
        return [lam for lam, _ in clusters]

    def projector(self, which: str, outcome: float) -> np.ndarray:
        clusters = self._clusters_a if which == "a" else self._clusters_b
        scale = max(1.0, max(abs(lam) for lam, _ in clusters))
        for lam, proj in clusters:
            if abs(lam - outcome) <= 1e-8 * scale + CLUSTER_TOL:
                return proj
        raise EigenvalueNotFoundError(
            f"outcome {outcome} not in spectrum of observable {which}"
        )


def _check_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    n = np.linalg.norm(psi)
    if abs(n - 1.0) > NORM_TOL:
        raise UnnormalizedStateError(f"state norm {n} differs from 1")
    return psi


def sequential_probability(pair: ObservablePair, psi, alpha: float, beta: float,
                           order: str = "ab") -> float:
    """P(second outcome after first) = ||P_2 P_1 psi||^2.

    ``order='ab'`` measures observable a first (outcome alpha) then b
    (outcome beta); ``order='ba'`` the reverse.
    """
    psi = _check_state(psi)
    if order == "ab":
        first = pair.projector("a", alpha)
        second = pair.projector("b", beta)
    elif order == "ba":
        first = pair.projector("b", beta)
        second = pair.projector("a", alpha)
    else:
        raise ValueError(f"order must be 'ab' or 'ba', got {order!r}")
    v = second @ (first @ psi)
    return float(np.real(np.vdot(v, v)))


def order_asymmetry(pair: ObservablePair, psi) -> float:
    """Largest |P(b after a) - P(a after b)| over all outcome pairs."""
    psi = _check_state(psi)
    worst = 0.0
    for alpha in pair.outcomes("a"):
        pa = pair.projector("a", alpha)
        for beta in pair.outcomes("b"):
            pb = pair.projector("b", beta)
            v1 = pb @ (pa @ psi)
            v2 = pa @ (pb @ psi)
            p_ab = float(np.real(np.vdot(v1, v1)))
            p_ba = float(np.real(np.vdot(v2, v2)))
            worst = max(worst, abs(p_ab - p_ba))
    return worst


def classical_distribution(algebra: MatrixAlgebraPresentation, psi):
    """Joint outcome distribution for a commuting family.

    Returns (spectrum, weights) where weights[p] = ||P_p psi||^2 over the
    joint eigenspaces.  Weights sum to 1 for a normalized state.
    """
    psi = _check_state(psi)
    spectrum = joint_spectrum(algebra)
    weights = []
    for V in spectrum.vectors:
        amps = V.conj().T @ psi
        weights.append(float(np.real(np.vdot(amps, amps))))
    return spectrum, np.array(weights)


def distribution_mean(spectrum: SpectrumPointSet, weights: np.ndarray,
                      component: int) -> complex:
    """Mean of one generator's character under the joint distribution."""
    return complex(
        sum(w * pt[component] for w, pt in zip(weights, spectrum.points))
    )
