"""Circuit execution on dense statevectors.

Two sampling strategies, chosen structurally:
- circuits whose only non-unitary instructions are trailing measurements are
  run once; the readout distribution is exact and shots are multinomial draws
- circuits with mid-circuit measurement, reset, or classical conditions run
  one trajectory per shot

Per-shot RNG streams derive from (seed, shot index), so outcomes are
reproducible and independent of execution order. A statevector is owned by
exactly one shot at a time.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit, _apply_instruction
from .statevec import ClassicalBits, StateVector, X, apply_matrix


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent child stream of a master seed along an integer path."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=tuple(path))))


@dataclass
class ShotResult:
    state: StateVector
    bits: ClassicalBits          # append-only log, in execution order
    creg: dict[int, int]         # classical bit index -> outcome


def run_shot(circuit: Circuit, rng: np.random.Generator,
             initial: StateVector | None = None) -> ShotResult:
    """Execute every instruction of one shot, trajectory-style."""
    n = circuit.n_qubits
    state = StateVector.zero(n) if initial is None else initial.copy()
    amps = state.amplitudes
    bits = ClassicalBits()
    creg: dict[int, int] = {}
    for instr in circuit.instructions:
        if instr.condition is not None:
            cbit, want = instr.condition
            if cbit not in creg:
                raise IndexError("condition refers to an unmeasured bit")
            if creg[cbit] != want:
                continue
        if instr.kind == "measure":
            amps, outcome = _measure_inplace(amps, n, instr.targets[0], rng)
            bits.append(outcome)
            creg[instr.cbit] = outcome
        elif instr.kind == "reset":
            amps, outcome = _measure_inplace(amps, n, instr.targets[0], rng)
            if outcome == 1:
                amps = apply_matrix(amps, n, X, (instr.targets[0],))
        else:
            amps = _apply_instruction(amps, n, instr)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-8:
        raise RuntimeError("statevector norm drifted")
    return ShotResult(StateVector(n, amps), bits, creg)


def _measure_inplace(amps, n, qubit, rng):
    psi = amps.reshape([2] * n)
    axis = n - 1 - qubit
    moved = np.moveaxis(psi, axis, 0)
    p1 = float(np.sum(np.abs(moved[1]) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    p_sel = p1 if outcome else 1.0 - p1
    if p_sel <= 0.0:
        raise RuntimeError("measurement selected a zero-norm branch")
    moved[1 - outcome] = 0.0
    return amps / np.sqrt(p_sel), outcome


def _trailing_measure_split(circuit: Circuit):
    """If all non-unitary content is a trailing run of unconditioned
    measurements, return (unitary prefix length, measured qubits, cbits)."""
    instrs = circuit.instructions
    k = len(instrs)
    while k > 0 and instrs[k - 1].kind == "measure" and instrs[k - 1].condition is None:
        k -= 1
    prefix = instrs[:k]
    if any(i.kind in ("measure", "reset") or i.condition is not None for i in prefix):
        return None
    qubits = [i.targets[0] for i in instrs[k:]]
    cbits = [i.cbit for i in instrs[k:]]
    if len(set(qubits)) != len(qubits):
        return None
    return k, qubits, cbits


def final_distribution(circuit: Circuit, initial: StateVector | None = None
                       ) -> tuple[np.ndarray, list[int]]:
    """Exact readout distribution of a trailing-measurement circuit.

    The returned array is indexed by the little-endian integer over the
    measured qubits in measurement order.
    """
    split = _trailing_measure_split(circuit)
    if split is None:
        raise ValueError("circuit has mid-circuit measurement or conditions")
    k, qubits, _ = split
    n = circuit.n_qubits
    state = StateVector.zero(n) if initial is None else initial.copy()
    amps = state.amplitudes
    for instr in circuit.instructions[:k]:
        amps = _apply_instruction(amps, n, instr)
    probs = np.abs(amps.reshape([2] * n)) ** 2
    keep = [n - 1 - q for q in reversed(qubits)]
    rest = [a for a in range(n) if a not in keep]
    marg = probs.transpose(keep + rest).reshape(1 << len(qubits), -1).sum(axis=1)
    return marg / marg.sum(), qubits


def sample_counts(circuit: Circuit, shots: int, seed: int,
                  initial: StateVector | None = None,
                  readout_cbits: list[int] | None = None) -> dict[int, int]:
    """Measurement histogram; keys are little-endian integers over
    `readout_cbits` (default: all classical bits in index order)."""
    split = _trailing_measure_split(circuit)
    if split is not None and readout_cbits is None:
        probs, _ = final_distribution(circuit, initial=initial)
        counts = derive_rng(seed, 0).multinomial(shots, probs)
        return {int(i): int(c) for i, c in enumerate(counts) if c}
    if readout_cbits is None:
        readout_cbits = list(range(circuit.n_cbits))
    hist: dict[int, int] = {}
    for shot in range(shots):
        res = run_shot(circuit, derive_rng(seed, shot), initial=initial)
        key = 0
        for j, cbit in enumerate(readout_cbits):
            key |= res.creg.get(cbit, 0) << j
        hist[key] = hist.get(key, 0) + 1
    return hist
