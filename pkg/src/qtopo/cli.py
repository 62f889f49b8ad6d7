"""Command-line front end.

Subcommands cover the main workflows: solve a spectrum, reconstruct the
glued topology, fit a dimension, compute algebraic distances, run a
boundary-rotor evolution, and tabulate sequential measurements.  Outputs are
deterministic (sorted JSON keys, repr'd floats) and written atomically via a
temp file in the destination directory.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import domain, dynamics, gelfand, geometry, measurement, spectral, topology
from .errors import (
    AmbiguousClassificationError,
    DegenerateFitError,
    EigenvalueNotFoundError,
    GridMismatchError,
    GridTooCoarseError,
    InsufficientDataError,
    LinearSolveFailureError,
    NonUnitaryError,
    NotCommutingError,
    NotNormalError,
    QTopoError,
    RootScanExhaustedError,
    ToleranceFailureError,
    UnnormalizedStateError,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_VALIDATION_ERRORS = (
    NonUnitaryError,
    GridMismatchError,
    GridTooCoarseError,
    InsufficientDataError,
    EigenvalueNotFoundError,
    UnnormalizedStateError,
    NotCommutingError,
    NotNormalError,
    ValueError,
    KeyError,
    OSError,
    json.JSONDecodeError,
)
_NUMERICAL_ERRORS = (
    RootScanExhaustedError,
    ToleranceFailureError,
    LinearSolveFailureError,
    DegenerateFitError,
    AmbiguousClassificationError,
)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INVALID):
        super().__init__(message)
        self.code = code


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qtopo-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(payload: dict, out: str | None) -> None:
    text = _dump_json(payload)
    if out:
        _atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _parse_unitary(spec_text: str) -> domain.BoundaryUnitary:
    presets = {
        "case_a": domain.u_case_a,
        "case_b": domain.u_case_b,
        "hadamard": domain.u_hadamard,
    }
    if spec_text in presets:
        return presets[spec_text]()
    try:
        raw = json.loads(spec_text)
    except json.JSONDecodeError as exc:
        raise CliError(f"--u must be a preset name or a JSON 2x2 matrix: {exc}")
    matrix = domain.complex_matrix_from_json(raw)
    return domain.make_boundary_unitary(matrix)


def _load_matrix_file(path: str) -> np.ndarray:
    with open(path) as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        raw = raw["matrix"]
    return domain.complex_matrix_from_json(raw)


def _load_vector_file(path: str) -> np.ndarray:
    with open(path) as fh:
        raw = json.load(fh)
    if isinstance(raw, dict):
        raw = raw["vector"]
    entries = [complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in raw]
    return np.array(entries, dtype=complex)


def _load_eigenvalue_file(path: str) -> np.ndarray:
    """Eigenvalues from a spectrum JSON or a plain one-per-line text file."""
    with open(path) as fh:
        text = fh.read()
    values: list[float] = []
    try:
        raw = json.loads(text)
    except json.JSONDecodeError:
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                values.append(float(line))
    else:
        if isinstance(raw, dict):
            eigs = raw["eigenvalues"]
            mults = raw.get("multiplicities", [1] * len(eigs))
            for ev, m in zip(eigs, mults):
                values.extend([float(ev)] * int(m))
        else:
            values = [float(v) for v in raw]
    if not values:
        raise CliError(f"no eigenvalues found in {path}")
    return np.array(values)


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args) -> int:
    if args.n <= 0:
        raise CliError("--n must be a positive state count")
    u = _parse_unitary(args.u)
    result = spectral.solve_spectrum(u, n_max=args.n, n_x=args.n_x)
    payload = result.to_json()
    payload["schema"] = 1
    _emit(payload, args.out)
    if args.states_dir:
        os.makedirs(args.states_dir, exist_ok=True)
        for idx, wf in enumerate(result.eigenfunctions):
            wf.to_csv(os.path.join(args.states_dir, f"state_{idx:03d}.csv"))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    u = _parse_unitary(args.u)
    space = topology.classify_topology(
        u, n_states=args.n_states, order=args.order, n_x=args.n_x
    )
    payload = space.to_json()
    payload["schema"] = 1
    _emit(payload, args.out)
    sys.stdout.write(topology.ascii_diagram(space) + "\n")
    return EXIT_OK


def cmd_dimension(args) -> int:
    eigenvalues = _load_eigenvalue_file(args.spectrum)
    fit = geometry.estimate_dimension(
        eigenvalues, N=args.N, fit_window=(args.window[0], args.window[1])
    )
    payload = fit.to_json()
    payload["schema"] = 1
    payload["N"] = args.N
    _emit(payload, args.out)
    return EXIT_OK


def _parse_pairs(text: str) -> list[tuple[int, int]]:
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise CliError(f"bad pair {chunk!r}; expected i:j")
        pairs.append((int(parts[0]), int(parts[1])))
    if not pairs:
        raise CliError("no point pairs given")
    return pairs


def cmd_distance(args) -> int:
    with open(args.h) as fh:
        raw = json.load(fh)
    matrix = domain.complex_matrix_from_json(raw["matrix"] if isinstance(raw, dict) else raw)
    if isinstance(raw, dict) and "point_slots" in raw:
        slots = [list(map(int, s)) for s in raw["point_slots"]]
    else:
        slots = [[j] for j in range(matrix.shape[0])]
    problem = geometry.DistanceProblem(
        h=matrix,
        point_slots=slots,
        order=args.N,
        restarts=args.restarts,
        seed=args.seed,
    )
    pairs = _parse_pairs(args.pairs) if args.pairs else [(0, len(problem.point_slots) - 1)]
    lines = ["i,j,distance"]
    for i, j in pairs:
        report = geometry.connes_distance_report(problem, i, j)
        value = "inf" if np.isinf(report.value) else repr(float(report.value))
        lines.append(f"{i},{j},{value}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evolve(args) -> int:
    record = dynamics.topology_change_experiment(args.config)
    if args.out:
        dynamics.write_record_csv(record, args.out)
    summary = {
        "schema": 1,
        "P_a_final": float(record.p_a[-1]),
        "P_b_final": float(record.p_b[-1]),
        "P_other_final": float(record.p_other[-1]),
        "norm_drift": float(np.max(np.abs(record.norm - record.norm[0]))),
        "energy_drift": float(
            np.max(np.abs(record.energy - record.energy[0]))
            / max(abs(record.energy[0]), 1e-30)
        ),
        "samples": int(record.times.size),
    }
    sys.stdout.write(_dump_json(summary))
    return EXIT_OK


def cmd_measure(args) -> int:
    a = _load_matrix_file(args.a)
    b = _load_matrix_file(args.b)
    psi = _load_vector_file(args.state)
    pair = measurement.ObservablePair(a, b)
    table = []
    for alpha in pair.outcomes("a"):
        for beta in pair.outcomes("b"):
            table.append(
                {
                    "alpha": float(alpha),
                    "beta": float(beta),
                    "P_ab": measurement.sequential_probability(pair, psi, alpha, beta, order="ab"),
                    "P_ba": measurement.sequential_probability(pair, psi, alpha, beta, order="ba"),
                }
            )
    payload = {
        "schema": 1,
        "order_asymmetry": measurement.order_asymmetry(pair, psi),
        "table": sorted(table, key=lambda r: (r["alpha"], r["beta"])),
    }
    _emit(payload, args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = []

    spec_a = spectral.solve_spectrum(domain.u_case_a(), n_max=5)
    target = np.array([0.0, 0.25, 0.25, 1.0, 1.0])
    checks.append(
        ("one-circle spectrum", np.allclose(spec_a.state_eigenvalues[:5], target, atol=1e-8))
    )

    space = topology.classify_topology(domain.u_case_a(), n_states=6)
    checks.append(("one-circle gluing", space.kind == "Circle"))

    cs = gelfand.fuzzy_torus(16)
    checks.append(("clock-shift relation", gelfand.fuzzy_torus_relation_residual(cs) < 1e-13))

    sz = np.diag([1.0, -1.0]).astype(complex)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    pair = measurement.ObservablePair(sz, sx)
    up = np.array([1.0, 0.0], dtype=complex)
    p_ab = measurement.sequential_probability(pair, up, 1.0, 1.0, order="ab")
    p_ba = measurement.sequential_probability(pair, up, 1.0, 1.0, order="ba")
    checks.append(("measurement order", abs(p_ab - 0.5) < 1e-12 and abs(p_ba - 0.25) < 1e-12))

    ok = True
    for name, passed in checks:
        sys.stdout.write(f"{'PASS' if passed else 'FAIL'}  {name}\n")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_NUMERICAL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtopo",
        description="Quantum particle on glued intervals: spectra, topology, "
        "geometry, and boundary-condition dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="solve the boundary-value spectrum")
    p.add_argument("--u", required=True, help="case_a | case_b | hadamard | JSON 2x2 matrix")
    p.add_argument("--n", type=int, required=True, help="number of states")
    p.add_argument("--n-x", type=int, default=domain.N_X_DEFAULT, dest="n_x")
    p.add_argument("--out", help="JSON output path (default stdout)")
    p.add_argument("--states-dir", help="directory for eigenfunction CSVs")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("reconstruct", help="classify the glued configuration space")
    p.add_argument("--u", required=True)
    p.add_argument("--n-states", type=int, default=8, dest="n_states")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--n-x", type=int, default=501, dest="n_x",
                   help="profile grid; coarser than the solver grid to keep "
                   "high-order endpoint stencils off the roundoff floor")
    p.add_argument("--out", help="JSON output path (diagram always on stdout)")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("dimension", help="fit a growth dimension to a spectrum file")
    p.add_argument("--spectrum", required=True, help="spectrum JSON or one eigenvalue per line")
    p.add_argument("--N", type=int, default=2, help="operator order")
    p.add_argument("--window", type=int, nargs=2, default=[20, 100], metavar=("LO", "HI"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("distance", help="algebraic distance between marked points")
    p.add_argument("--h", required=True, help="JSON file with matrix and optional point_slots")
    p.add_argument("--N", type=int, default=1, help="commutator order")
    p.add_argument("--pairs", help="semicolon list i:j (default first:last)")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("evolve", help="run a boundary-rotor evolution experiment")
    p.add_argument("--config", required=True, help="JSON config path or bundled preset name")
    p.add_argument("--out", help="trajectory CSV path")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("measure", help="sequential measurement probability table")
    p.add_argument("--a", required=True, help="JSON hermitian matrix file")
    p.add_argument("--b", required=True, help="JSON hermitian matrix file")
    p.add_argument("--state", required=True, help="JSON state vector file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("selftest", help="quick internal consistency battery")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    except QTopoError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
