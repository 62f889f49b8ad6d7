"""Commutative matrix algebras: joint spectra, the transform, norms, clock and shift."""

import numpy as np
import pytest

from qtopo.errors import NotCommutingError, NotNormalError
from qtopo.gelfand import (
    MatrixAlgebraPresentation,
    Poly,
    circle_from_truncated_algebra,
    cstar_norm,
    fuzzy_torus,
    fuzzy_torus_relation_residual,
    gelfand_transform,
    joint_spectrum,
    max_angular_gap,
    transform_matrix,
)


def haar_unitary(rng, n):
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def diag_pair_algebra(rng, dim, conjugate=True):
    """Two commuting normal matrices with integer joint characters."""
    wa = rng.integers(-3, 4, size=dim).astype(float)
    wb = rng.integers(-3, 4, size=dim).astype(float)
    a, b = np.diag(wa).astype(complex), np.diag(wb).astype(complex)
    if conjugate:
        q = haar_unitary(rng, dim)
        a, b = q @ a @ q.conj().T, q @ b @ q.conj().T
    return MatrixAlgebraPresentation([a, b]), wa, wb


def test_cstar_identity_random_matrices():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        lhs = cstar_norm(a.conj().T @ a)
        rhs = cstar_norm(a) ** 2
        worst = max(worst, abs(lhs - rhs) / max(rhs, 1.0))
    assert worst < 1e-10, f"worst C* identity defect {worst:.3e}"


def test_fuzzy_torus_relation_small_levels():
    for K in (1, 2, 3, 8, 17, 32, 64):
        residual = fuzzy_torus_relation_residual(fuzzy_torus(K))
        assert residual < 1e-13, f"K={K}: residual {residual:.3e}"


def test_fuzzy_torus_generators_are_unitary():
    alg = fuzzy_torus(12)
    for g in alg.generators:
        assert np.max(np.abs(g @ g.conj().T - np.eye(12))) < 1e-13


def test_fuzzy_torus_rejects_bad_level():
    with pytest.raises(ValueError):
        fuzzy_torus(0)


def test_joint_spectrum_diagonal_pair_with_repeats():
    a = np.diag([1.0, 1.0, 2.0]).astype(complex)
    b = np.diag([3.0, 4.0, 4.0]).astype(complex)
    spectrum = joint_spectrum(MatrixAlgebraPresentation([a, b]))
    points = {
        tuple(round(z.real) for z in pt): int(w)
        for pt, w in zip(spectrum.points, spectrum.weights)
    }
    assert points == {(1, 3): 1, (1, 4): 1, (2, 4): 1}
    assert spectrum.total_weight == 3


def test_joint_spectrum_invariant_under_conjugation():
    rng = np.random.default_rng(19)
    algebra, wa, wb = diag_pair_algebra(rng, 6)
    spectrum = joint_spectrum(algebra)
    expected = {}
    for x, y in zip(wa, wb):
        expected[(x, y)] = expected.get((x, y), 0) + 1
    got = {
        (round(pt[0].real), round(pt[1].real)): int(w)
        for pt, w in zip(spectrum.points, spectrum.weights)
    }
    assert got == {(int(x), int(y)): m for (x, y), m in expected.items()}
    # eigenspace columns stay orthonormal after the merge
    for V in spectrum.vectors:
        gram = V.conj().T @ V
        assert np.max(np.abs(gram - np.eye(V.shape[1]))) < 1e-10


def test_transform_is_multiplicative():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        algebra, _, _ = diag_pair_algebra(rng, 5)
        spectrum = joint_spectrum(algebra)
        g0, g1 = Poly.generator(0, 2), Poly.generator(1, 2)
        p = g0 * g0 + 2.0 * g1 + Poly.constant(0.5 + 0.25j, 2)
        q = g0 * g1 + Poly.constant(-1.0, 2)
        lhs = gelfand_transform(p * q, spectrum)
        rhs = gelfand_transform(p, spectrum) * gelfand_transform(q, spectrum)
        scale = max(1.0, float(np.max(np.abs(rhs))))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) / scale)
    assert worst < 1e-10, f"worst multiplicativity defect {worst:.3e}"


def test_transform_matches_matrix_evaluation():
    rng = np.random.default_rng(23)
    algebra, _, _ = diag_pair_algebra(rng, 5)
    spectrum = joint_spectrum(algebra)
    g0, g1 = Poly.generator(0, 2), Poly.generator(1, 2)
    p = 3.0 * g0 * g1 * g1 + Poly.constant(1.5, 2) + g0
    mat = p.on_matrices(algebra.generators)
    assert np.max(np.abs(transform_matrix(mat, spectrum) - gelfand_transform(p, spectrum))) < 1e-9


def test_transform_preserves_sup_norm_on_spectrum():
    # for a normal element the operator norm equals the sup of |values|
    a = np.diag([1.0 + 1.0j, -2.0, 0.5j]).astype(complex)
    algebra = MatrixAlgebraPresentation([a])
    spectrum = joint_spectrum(algebra)
    vals = transform_matrix(a, spectrum)
    assert abs(cstar_norm(a) - np.max(np.abs(vals))) < 1e-12


def test_circle_truncation_fills_in():
    gaps = []
    for n in (4, 8, 16, 32):
        spectrum = circle_from_truncated_algebra(n)
        assert spectrum.total_weight == n
        gap = max_angular_gap(spectrum)
        assert abs(gap - 2.0 * np.pi / n) < 1e-9
        gaps.append(gap)
    assert all(g1 > g2 for g1, g2 in zip(gaps, gaps[1:]))


def test_clock_and_shift_do_not_commute():
    with pytest.raises(NotCommutingError):
        joint_spectrum(fuzzy_torus(4))


def test_non_normal_generator_rejected():
    jordan = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NotNormalError):
        joint_spectrum(MatrixAlgebraPresentation([jordan]))


def test_mismatched_generator_shapes_rejected():
    with pytest.raises(ValueError):
        MatrixAlgebraPresentation([np.eye(2), np.eye(3)])
