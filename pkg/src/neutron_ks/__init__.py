"""Simulation and analysis of a spin-path Kochen-Specker test in a neutron interferometer."""

from neutron_ks.algebra import (
    Operator,
    StateVector,
    bell_state,
    commutator,
    eigenstate,
    expectation,
    pauli,
    tensor_observable,
)
from neutron_ks.interferometer import InstrumentConfig, MeasurementContext, standard_scans
from neutron_ks.measurement import (
    CountRecord,
    ExpectationEstimate,
    FringeFit,
    InequalityResult,
    analyze_records,
    evaluate_inequality,
    fit_fringe,
    run_experiment,
    simulate_scans,
)
from neutron_ks.peres_mermin import (
    assignment_contradiction,
    build_magic_square,
    classical_bound,
    qm_lhs,
    verify_square,
)

__version__ = "0.1.0"
