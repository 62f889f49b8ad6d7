"""Commutative matrix algebras and their character spectra.

A finite commutative *-algebra of normal matrices is, up to isomorphism, the
functions on a finite point set: the joint eigenspaces.  This module extracts
that point set by sequential eigenspace refinement, evaluates polynomial
elements as functions on it, and provides the operator norm together with the
standard noncommutative-torus generators used as examples elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NotCommutingError, NotNormalError

NORMALITY_TOL = 1e-10
POINT_MERGE_TOL = 1e-8


@dataclass
class MatrixAlgebraPresentation:
    """Generators (square complex matrices) with optional labels."""

    generators: list
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.generators = [np.asarray(g, dtype=complex) for g in self.generators]
        dims = {g.shape for g in self.generators}
        if len(dims) != 1 or any(g.shape[0] != g.shape[1] for g in self.generators):
            raise ValueError("generators must be square matrices of equal size")
        if not self.labels:
            self.labels = [f"g{i}" for i in range(len(self.generators))]

    @property
    def dim(self) -> int:
        return self.generators[0].shape[0]


@dataclass
class SpectrumPointSet:
    """Joint spectrum: one character tuple per point, with multiplicities.

    ``vectors[p]`` is an orthonormal (dim, mult_p) basis of the joint
    eigenspace at point p; kept around so matrices in the algebra can be
    evaluated as functions after the fact.
    """

    points: list
    weights: np.ndarray
    vectors: list = field(default_factory=list, repr=False)
    labels: list = field(default_factory=list)

    @property
    def total_weight(self) -> int:
        return int(np.sum(self.weights))

    def to_json(self) -> dict:
        return {
            "points": [
                [[float(z.real), float(z.imag)] for z in pt] for pt in self.points
            ],
            "weights": [int(w) for w in self.weights],
            "labels": list(self.labels),
        }


def _check_normal(g: np.ndarray, label: str) -> None:
    scale = max(1.0, float(np.max(np.abs(g))) ** 2)
    defect = np.max(np.abs(g @ g.conj().T - g.conj().T @ g))
    if defect > NORMALITY_TOL * scale:
        raise NotNormalError(f"generator {label}: normality defect {defect:.3e}")


def _check_commuting(a, b, la, lb) -> None:
    scale = max(1.0, float(np.max(np.abs(a)) * np.max(np.abs(b))))
    defect = np.max(np.abs(a @ b - b @ a))
    if defect > NORMALITY_TOL * scale:
        raise NotCommutingError(
            f"generators {la}, {lb} do not commute (defect {defect:.3e})"
        )


def joint_spectrum(algebra: MatrixAlgebraPresentation,
                   merge_tol: float = POINT_MERGE_TOL) -> SpectrumPointSet:
    """Simultaneous diagonalization by sequential eigenspace refinement.

    Each generator is split into commuting Hermitian parts, blocks are
    refined one Hermitian matrix at a time, and characters are read off as
    expectation values on the refined blocks.  Points closer than
    ``merge_tol`` (Euclidean over all character components) are merged.
    """
    gens = algebra.generators
    for g, lab in zip(gens, algebra.labels):
        _check_normal(g, lab)
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            _check_commuting(gens[i], gens[j], algebra.labels[i], algebra.labels[j])

    dim = algebra.dim
    herms = []
    for g in gens:
        herms.append((g + g.conj().T) / 2)
        herms.append((g - g.conj().T) / 2j)

    blocks = [np.eye(dim, dtype=complex)]
    for h in herms:
        scale = max(1.0, float(np.max(np.abs(h))))
        refined = []
        for Q in blocks:
            if Q.shape[1] == 1:
                refined.append(Q)
                continue
            w, v = np.linalg.eigh(Q.conj().T @ h @ Q)
            start = 0
            for i in range(1, w.size + 1):
                if i == w.size or w[i] - w[start] > 1e-8 * scale:
                    refined.append(Q @ v[:, start:i])
                    start = i
        blocks = refined

    raw_points = []
    for Q in blocks:
        chars = []
        for g in gens:
            vals = np.einsum("ij,jk,ki->i", Q.conj().T, g, Q)
            chars.append(complex(np.mean(vals)))
        raw_points.append((tuple(chars), Q))

    # merge numerically coincident characters
    merged: list[tuple[tuple, list]] = []
    for chars, Q in raw_points:
        placed = False
        for i, (c0, qs) in enumerate(merged):
            dist = np.sqrt(sum(abs(a - b) ** 2 for a, b in zip(chars, c0)))
            if dist < merge_tol:
                merged[i] = (c0, qs + [Q])
                placed = True
                break
        if not placed:
            merged.append((chars, [Q]))

    points, weights, vectors = [], [], []
    for chars, qs in merged:
        V = np.hstack(qs)
        points.append(chars)
        weights.append(V.shape[1])
        vectors.append(V)
    idx = sorted(range(len(points)),
                 key=lambda i: tuple((z.real, z.imag) for z in points[i]))
    return SpectrumPointSet(
        [points[i] for i in idx],
        np.array([weights[i] for i in idx], dtype=int),
        [vectors[i] for i in idx],
        list(algebra.labels),
    )


# ---------------------------------------------------------------------------
# polynomial elements and the transform


@dataclass
class Poly:
    """Polynomial in commuting generators: {exponent tuple: coefficient}."""

    coeffs: dict

    @staticmethod
    def generator(i: int, n_gens: int) -> "Poly":
        e = [0] * n_gens
        e[i] = 1
        return Poly({tuple(e): 1.0 + 0.0j})

    @staticmethod
    def constant(c: complex, n_gens: int) -> "Poly":
        return Poly({(0,) * n_gens: complex(c)})

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return Poly(out)

    def __mul__(self, other):
        if isinstance(other, Poly):
            out: dict = {}
            for e1, c1 in self.coeffs.items():
                for e2, c2 in other.coeffs.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, 0.0) + c1 * c2
            return Poly(out)
        return Poly({e: other * c for e, c in self.coeffs.items()})

    __rmul__ = __mul__

    def on_matrices(self, gens: list) -> np.ndarray:
        dim = gens[0].shape[0]
        acc = np.zeros((dim, dim), dtype=complex)
        for e, c in self.coeffs.items():
            term = np.eye(dim, dtype=complex)
            for g, p in zip(gens, e):
                if p:
                    term = term @ np.linalg.matrix_power(g, p)
            acc += c * term
        return acc

    def on_point(self, point: tuple) -> complex:
        total = 0.0 + 0.0j
        for e, c in self.coeffs.items():
            val = c
            for z, p in zip(point, e):
                if p:
                    val *= z**p
            total += val
        return complex(total)


def gelfand_transform(poly: Poly, spectrum: SpectrumPointSet) -> np.ndarray:
    """Values of a polynomial element as a function on the joint spectrum."""
    return np.array([poly.on_point(pt) for pt in spectrum.points])


def transform_matrix(mat: np.ndarray, spectrum: SpectrumPointSet) -> np.ndarray:
    """Function values of an algebra element given directly as a matrix."""
    out = []
    for V in spectrum.vectors:
        vals = np.einsum("ij,jk,ki->i", V.conj().T, mat, V)
        out.append(complex(np.mean(vals)))
    return np.array(out)


def cstar_norm(a) -> float:
    """Operator norm: the largest singular value."""
    a = np.asarray(a, dtype=complex)
    return float(np.linalg.svd(a, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# clock-and-shift pair


def fuzzy_torus(K: int) -> MatrixAlgebraPresentation:
    """Clock and shift at level K with U1 U2 = omega U2 U1, omega = e^{2 pi i/K}."""
    if K < 1:
        raise ValueError("K must be positive")
    j = np.arange(K)
    clock = np.diag(np.exp(2j * np.pi * j / K))
    shift = np.zeros((K, K))
    shift[(j + 1) % K, j] = 1.0
    return MatrixAlgebraPresentation([clock, shift], ["clock", "shift"])


def fuzzy_torus_relation_residual(algebra: MatrixAlgebraPresentation) -> float:
    u1, u2 = algebra.generators
    K = algebra.dim
    omega = np.exp(2j * np.pi / K)
    return float(np.max(np.abs(u1 @ u2 - omega * u2 @ u1)))


def circle_from_truncated_algebra(n_trunc: int) -> SpectrumPointSet:
    """Spectrum of the level-n clock alone: n points filling the unit circle."""
    algebra = MatrixAlgebraPresentation(
        [np.diag(np.exp(2j * np.pi * np.arange(n_trunc) / n_trunc))], ["clock"]
    )
    return joint_spectrum(algebra)


def max_angular_gap(spectrum: SpectrumPointSet, component: int = 0) -> float:
    """Largest angular gap between unit-circle points of one character."""
    angles = np.sort([np.angle(pt[component]) for pt in spectrum.points])
    if angles.size == 1:
        return 2.0 * np.pi
    gaps = np.diff(angles)
    wrap = 2.0 * np.pi - (angles[-1] - angles[0])
    return float(max(np.max(gaps), wrap))
