"""Quantum mechanics on a pair of glued intervals.

The package follows one thread: a free particle on two copies of [0, 2pi]
whose endpoint identifications are parametrized by a 2x2 unitary.  From that
starting point it computes spectra, reconstructs the glued topology from
eigenfunction data, probes the algebraic (Gel'fand / distance) side of the
same geometry, and finally promotes the gluing itself to a dynamical degree
of freedom.
"""

from .domain import (
    BoundaryUnitary,
    GaugeMap,
    WaveField,
    boundary_form,
    default_grid,
    gauge_transform,
    in_domain,
    make_boundary_unitary,
    make_gauge_map,
    make_wave_field,
    random_domain_field,
    scalar_product,
    u_case_a,
    u_case_b,
    u_hadamard,
)
from .dynamics import (
    JointHamiltonian,
    RotorPath,
    RotorState,
    build_joint_hamiltonian,
    evolve,
    rotor_unitary,
    topology_change_experiment,
    topology_probability,
)
from .errors import QTopoError
from .gelfand import (
    MatrixAlgebraPresentation,
    Poly,
    SpectrumPointSet,
    cstar_norm,
    circle_from_truncated_algebra,
    fuzzy_torus,
    fuzzy_torus_relation_residual,
    gelfand_transform,
    joint_spectrum,
)
from .geometry import (
    DistanceProblem,
    circle_laplacian_problem,
    connes_distance,
    connes_distance_report,
    estimate_dimension,
    path_graph_dirac,
)
from .measurement import (
    ObservablePair,
    classical_distribution,
    order_asymmetry,
    sequential_probability,
)
from .spectral import (
    SpectrumResult,
    finite_difference_eigenvalues,
    finite_difference_hamiltonian,
    sobolev_class,
    solve_spectrum,
)
from .topology import (
    TopologySpace,
    ascii_diagram,
    classify_topology,
    smoothness_degradation,
    smoothness_order,
    verify_module_property,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
