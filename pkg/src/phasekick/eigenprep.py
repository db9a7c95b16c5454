"""Eigenstate preparation for amplification operators.

Three routes to a single plane eigenvector:

- "exact-injection": the eigenvector is computed classically and wrapped in
  a unitary that maps |0...0> onto it (Householder completion), so it can be
  used mid-circuit after resets and inverted for checks.
- "approx-no-measure": the one-ancilla circuit H, 0-controlled M,
  1-controlled W, H, controlled P, H, followed by a phase tail that turns
  the (bad + good)/sqrt(2) superposition into an eigenvector approximation.
  Requires exactly one good basis state. The ancilla is left entangled with
  amplitude sqrt(a/2) and is treated as environment.
- "approx-with-measure": same circuit plus an ancilla measurement; outcome 1
  (probability a/2) means the preparation failed and the state is discarded.

A fourth variant, "superposition-M", is the model circuit itself: the
standard initialization that yields a superposition of both plane
eigenvectors. It is only valid where a serial estimation can tolerate the
superposition.

Overlap of the prepared state with the exact eigenvector, as a function of
the good-state probability a:

    no measure:    (sqrt(1-a) + 1) / 2
    with measure:  (sqrt(1-a) + 1) / sqrt(2 * (2-a))

Fidelity here always means the squared overlap magnitude; that convention
reconciles the overlap value 0.9732 at a = 0.104 with the quoted fidelity
0.947 for the same construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import sqrt

import numpy as np

from .circuit import Circuit
from .grover import GroverSpec, model_state, plane_eigenvector
from .statevec import StateVector

VARIANTS = ("exact-injection", "approx-no-measure", "approx-with-measure",
            "superposition-M")


@dataclass(frozen=True)
class PrepRecipe:
    variant: str
    spec: GroverSpec
    sign: int = +1
    ancilla_index: int | None = None  # defaults to the qubit after the register

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown preparation variant {self.variant!r}")
        if self.variant.startswith("approx") and len(self.spec.good_states) != 1:
            raise ValueError("approximate preparation needs exactly one good state")

    @property
    def ancilla(self) -> int:
        return self.spec.n_qubits if self.ancilla_index is None else self.ancilla_index

    @property
    def uses_ancilla(self) -> bool:
        return self.variant.startswith("approx")


@dataclass
class FidelityReport:
    a: float
    overlap_no_measure: float
    overlap_with_measure: float
    fidelity_no_measure: float
    fidelity_with_measure: float
    accept_probability: float


def fidelity_report(a: float) -> FidelityReport:
    if not 0.0 <= a < 1.0:
        raise ValueError("good-state probability must be in [0, 1)")
    ov_nm = (sqrt(1.0 - a) + 1.0) / 2.0
    ov_wm = (sqrt(1.0 - a) + 1.0) / sqrt(2.0 * (2.0 - a))
    return FidelityReport(a, ov_nm, ov_wm, ov_nm ** 2, ov_wm ** 2, 1.0 - a / 2.0)


def preparation_unitary(target: np.ndarray) -> np.ndarray:
    """Unitary completion mapping |0...0> exactly onto `target`."""
    target = np.asarray(target, dtype=complex)
    dim = target.size
    phase = np.exp(1j * np.angle(target[0])) if abs(target[0]) > 1e-14 else 1.0
    t = target / phase
    v = np.zeros(dim, dtype=complex)
    v[0] = 1.0
    v -= t
    vnorm2 = np.vdot(v, v).real
    if vnorm2 < 1e-28:
        return np.eye(dim, dtype=complex) * phase
    house = np.eye(dim, dtype=complex) - 2.0 * np.outer(v, v.conj()) / vnorm2
    return phase * house


def _single_good_state(spec: GroverSpec) -> int:
    (g,) = spec.good_states
    return g


def _good_pattern_controls(spec: GroverSpec, g: int):
    return tuple((j, (g >> j) & 1) for j in range(spec.n_qubits))


def build_ep(recipe: PrepRecipe) -> Circuit:
    """Preparation circuit for one plane eigenvector (see module docstring).

    Approximate variants occupy the register plus one ancilla; the W block
    carries the phase of the good amplitude of M|0> so the construction also
    works when that amplitude is not real positive.
    """
    spec = recipe.spec
    q = spec.n_qubits
    if recipe.variant == "superposition-M":
        out = Circuit(q)
        out.extend(spec.model)
        return out
    if recipe.variant == "exact-injection":
        vec = plane_eigenvector(spec, recipe.sign).amplitudes
        out = Circuit(q)
        out.gate(preparation_unitary(vec), tuple(range(q)), name="EP")
        return out

    g = _single_good_state(spec)
    anc = recipe.ancilla
    amp_g = model_state(spec)[g]
    if abs(amp_g) < 1e-14:
        raise ValueError("good state has zero amplitude under the model")
    s = 1 if recipe.sign >= 0 else -1
    out = Circuit(max(q, anc) + 1)
    out.h(anc)
    for instr in spec.model.controlled(anc, polarity=0).instructions:
        out.instructions.append(instr)
    for j in range(q):  # W: prepare the good basis state
        if (g >> j) & 1:
            out.x(j, controls=((anc, 1),))
    out.phase(amp_g / abs(amp_g), controls=((anc, 1),))
    out.h(anc)
    out.phase(-1, controls=((anc, 1),) + _good_pattern_controls(spec, g))  # P
    out.h(anc)
    # phase tail: i^s on the bad component, 1 on the good state
    out.phase(1j * s, controls=((anc, 0),))
    out.phase(-1j * s, controls=((anc, 0),) + _good_pattern_controls(spec, g))
    if recipe.variant == "approx-with-measure":
        out.measure(anc)
    return out


def build_ep2(recipe: PrepRecipe) -> Circuit:
    """The preparation circuit with its first two gates (H and the
    0-controlled M) removed, phase tail included. Satisfies
    EP2^dag EP |0> = (|0>|M 0> + |1>|0...0>)/sqrt(2) on (ancilla, register),
    which is what the measurement-based error correction uncomputes against."""
    spec = recipe.spec
    if recipe.variant not in ("approx-no-measure", "approx-with-measure"):
        raise ValueError("the truncated preparation exists for approximate variants only")
    q = spec.n_qubits
    g = _single_good_state(spec)
    anc = recipe.ancilla
    amp_g = model_state(spec)[g]
    if abs(amp_g) < 1e-14:
        raise ValueError("good state has zero amplitude under the model")
    s = 1 if recipe.sign >= 0 else -1
    out = Circuit(max(q, anc) + 1)
    for j in range(q):
        if (g >> j) & 1:
            out.x(j, controls=((anc, 1),))
    out.phase(amp_g / abs(amp_g), controls=((anc, 1),))
    out.h(anc)
    out.phase(-1, controls=((anc, 1),) + _good_pattern_controls(spec, g))
    out.h(anc)
    out.phase(1j * s, controls=((anc, 0),))
    out.phase(-1j * s, controls=((anc, 0),) + _good_pattern_controls(spec, g))
    return out


def prepared_state(recipe: PrepRecipe) -> StateVector:
    """Output of the (unmeasured) preparation circuit from |0...0>."""
    circ = build_ep(recipe if recipe.variant != "approx-with-measure"
                    else PrepRecipe("approx-no-measure", recipe.spec,
                                    recipe.sign, recipe.ancilla_index))
    return circ.apply_to(StateVector.zero(circ.n_qubits))


def circuit_overlap(recipe: PrepRecipe, conditioned_on_accept: bool = False) -> float:
    """|<exact eigenvector (x) |0>_anc | prepared>|, optionally after
    post-selecting ancilla outcome 0."""
    spec = recipe.spec
    q = spec.n_qubits
    state = prepared_state(recipe)
    exact = plane_eigenvector(spec, recipe.sign).amplitudes
    amps = state.amplitudes.reshape(-1)
    n = state.n_qubits
    anc = recipe.ancilla if recipe.uses_ancilla else None
    if anc is None:
        return abs(complex(np.vdot(exact, amps)))
    psi = amps.reshape([2] * n)
    block = np.moveaxis(psi, n - 1 - anc, 0)[0].reshape(-1)  # ancilla |0> part
    if conditioned_on_accept:
        block = block / np.linalg.norm(block)
    return abs(complex(np.vdot(exact, block)))
