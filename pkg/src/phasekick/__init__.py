"""Statevector simulation and experiment harness for phase-kickback-based
amplitude estimation, serial and parallel, with noise injection and
algorithm-specific error correction."""

from .statevec import (
    GateMatrix,
    StateVector,
    MAX_QUBITS,
    SimulationBudgetError,
    apply_gate,
    haar_unitary,
    measure,
    reset,
    u3,
)
from .circuit import Circuit, DepthReport, build_qft, depth_report, structural_depth
from .simulator import derive_rng, final_distribution, run_shot, sample_counts
from .grover import (
    GroverSpec,
    GroverSpectrum,
    OverlapReport,
    analyze,
    build_grover,
    plane_eigenvector,
    spectrum_with_injected_error,
    trace_probe,
)
from .eigenprep import (
    FidelityReport,
    PrepRecipe,
    build_ep,
    build_ep2,
    fidelity_report,
)
from .estimators import (
    DecodedEstimate,
    EstimatorConfig,
    build,
    decode,
    lowdepth_p1,
)
from .noise import (
    CalibrationReport,
    ErrorLog,
    NoiseSpec,
    calibrate_error,
    effective_error,
    inject,
)
from . import analytics

__all__ = [
    "GateMatrix", "StateVector", "MAX_QUBITS", "SimulationBudgetError",
    "apply_gate", "haar_unitary", "measure", "reset", "u3",
    "Circuit", "DepthReport", "build_qft", "depth_report", "structural_depth",
    "derive_rng", "final_distribution", "run_shot", "sample_counts",
    "GroverSpec", "GroverSpectrum", "OverlapReport", "analyze", "build_grover",
    "plane_eigenvector", "spectrum_with_injected_error", "trace_probe",
    "FidelityReport", "PrepRecipe", "build_ep", "build_ep2", "fidelity_report",
    "DecodedEstimate", "EstimatorConfig", "build", "decode", "lowdepth_p1",
    "CalibrationReport", "ErrorLog", "NoiseSpec", "calibrate_error",
    "effective_error", "inject",
    "analytics",
]
