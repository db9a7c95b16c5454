"""Circuit representation: ordered instructions plus labeled injection sites.

Instruction kinds:
- "gate": dense unitary on targets, optional (qubit, polarity) controls
- "phase": scalar phase, optional controls (an uncontrolled "phase" is a
  global phase; it matters once the instruction is wrapped with controls,
  so it is never dropped)
- "mark": multiply listed basis states of the target register by a phase
  (exact diagonal; realizes reflections without ancilla decomposition)
- "measure": projective measurement writing classical bit `cbit`
- "reset": measure-then-X to |0>

Any instruction may carry `condition=(cbit, value)`: it executes only when
the classical bit recorded earlier in the same shot equals `value`.

Circuits are treated as immutable once built (builder methods are for
construction only); sharing across shots is safe. `sites` mark the noise
injection points: position, site kind ("G" or "EP"), the register the block
acts on, the kickback/control qubit if any, and the block length, so an
error gate can be placed before the block or at a cut inside it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .statevec import (
    GateMatrix,
    H,
    StateVector,
    UNITARY_TOL,
    apply_matrix,
    apply_phase_to_indices,
    phase_gate,
    require_qubits,
)


@dataclass(eq=False)
class Instruction:
    kind: str
    targets: tuple[int, ...] = ()
    controls: tuple[tuple[int, int], ...] = ()
    matrix: np.ndarray | None = None
    phase: complex = 1.0
    indices: tuple[int, ...] = ()
    cbit: int | None = None
    condition: tuple[int, int] | None = None
    name: str = ""
    params: tuple[float, ...] = ()

    def daggered(self) -> "Instruction":
        if self.kind == "gate":
            return replace(self, matrix=self.matrix.conj().T,
                           name=_dagger_name(self.name), params=())
        if self.kind == "phase":
            return replace(self, phase=np.conj(self.phase))
        if self.kind == "mark":
            return replace(self, phase=np.conj(self.phase))
        raise ValueError(f"cannot invert non-unitary instruction {self.kind!r}")

    def equivalent(self, other: "Instruction") -> bool:
        if (self.kind, self.targets, self.controls, self.cbit, self.condition,
                self.indices) != (other.kind, other.targets, other.controls,
                                  other.cbit, other.condition, other.indices):
            return False
        if (self.matrix is None) != (other.matrix is None):
            return False
        if self.matrix is not None and not np.array_equal(self.matrix, other.matrix):
            return False
        return self.phase == other.phase


def _dagger_name(name: str) -> str:
    return name[:-4] if name.endswith("-dag") else (name + "-dag" if name else "")


@dataclass
class Site:
    pos: int
    kind: str  # "G" | "EP"
    register: tuple[int, ...]
    control: int | None = None
    length: int = 1


class Circuit:
    def __init__(self, n_qubits: int):
        require_qubits(n_qubits)
        self.n_qubits = n_qubits
        self.instructions: list[Instruction] = []
        self.sites: list[Site] = []
        self.n_cbits = 0
        self.pre_transform_len: int | None = None  # set by estimator builders
        self.readout_cbits: list[int] | None = None  # set by estimator builders

    # -- construction -----------------------------------------------------

    def _add(self, instr: Instruction) -> "Circuit":
        for q in instr.targets:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range")
        for q, _ in instr.controls:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"qubit {q} out of range")
        self.instructions.append(instr)
        return self

    def gate(self, matrix, targets, controls=(), name="", params=(),
             condition=None) -> "Circuit":
        m = matrix.matrix if isinstance(matrix, GateMatrix) else GateMatrix(np.asarray(matrix)).matrix
        return self._add(Instruction(
            "gate", tuple(targets), _norm_controls(controls), m,
            condition=condition, name=name, params=tuple(params)))

    def phase(self, value: complex, controls=(), condition=None) -> "Circuit":
        if abs(abs(value) - 1) > UNITARY_TOL:
            raise ValueError("phase must have unit modulus")
        return self._add(Instruction("phase", (), _norm_controls(controls),
                                     phase=complex(value), condition=condition,
                                     name="phase"))

    def mark(self, targets, indices, phase: complex, controls=(), name="mark") -> "Circuit":
        if abs(abs(phase) - 1) > UNITARY_TOL:
            raise ValueError("mark phase must have unit modulus")
        t = len(tuple(targets))
        idx = tuple(int(i) for i in indices)
        if any(not 0 <= i < (1 << t) for i in idx):
            raise ValueError("mark index out of range")
        return self._add(Instruction("mark", tuple(targets), _norm_controls(controls),
                                     phase=complex(phase), indices=idx, name=name))

    def measure(self, qubit: int, condition=None) -> int:
        cbit = self.n_cbits
        self.n_cbits += 1
        self._add(Instruction("measure", (qubit,), cbit=cbit, condition=condition,
                              name="measure"))
        return cbit

    def reset(self, qubit: int) -> "Circuit":
        return self._add(Instruction("reset", (qubit,), name="reset"))

    # gate shorthands used throughout the builders
    def h(self, q, **kw):
        return self.gate(H, (q,), name="h", **kw)

    def x(self, q, controls=(), **kw):
        from .statevec import X as _X
        return self.gate(_X, (q,), controls=controls, name="x", **kw)

    def z(self, q, controls=(), **kw):
        from .statevec import Z as _Z
        return self.gate(_Z, (q,), controls=controls, name="z", **kw)

    def cx(self, ctrl, tgt, **kw):
        return self.x(tgt, controls=((ctrl, 1),), **kw)

    def swap(self, a, b):
        return self.cx(a, b).cx(b, a).cx(a, b)

    def u3(self, q, theta, phi=0.0, lam=0.0, controls=(), **kw):
        from .statevec import u3 as _u3
        return self.gate(_u3(theta, phi, lam), (q,), controls=controls,
                         name="u3", params=(theta, phi, lam), **kw)

    def cphase(self, ctrl, tgt, angle):
        return self.gate(phase_gate(angle), (tgt,), controls=((ctrl, 1),),
                         name="cphase", params=(angle,))

    def add_site(self, kind: str, register, control=None, length: int = 1,
                 pos: int | None = None) -> "Circuit":
        self.sites.append(Site(len(self.instructions) if pos is None else pos,
                               kind, tuple(register), control, length))
        return self

    # -- composition -------------------------------------------------------

    def copy(self) -> "Circuit":
        out = Circuit(self.n_qubits)
        out.instructions = list(self.instructions)
        out.sites = [replace(s) for s in self.sites]
        out.n_cbits = self.n_cbits
        out.pre_transform_len = self.pre_transform_len
        return out

    def extend(self, other: "Circuit") -> "Circuit":
        """Append `other` in place (construction helper); sites shift along."""
        if other.n_qubits > self.n_qubits:
            raise ValueError("cannot extend with a wider circuit")
        offset = len(self.instructions)
        if other.n_cbits:
            if any(i.cbit is not None or i.condition is not None
                   for i in other.instructions):
                raise ValueError("extend does not remap classical bits")
        self.instructions.extend(other.instructions)
        for s in other.sites:
            self.sites.append(replace(s, pos=s.pos + offset))
        return self

    def is_unitary_only(self) -> bool:
        return all(i.kind in ("gate", "phase", "mark") and i.condition is None
                   for i in self.instructions)

    def inverse(self) -> "Circuit":
        """Reverse instruction order and dagger each gate; unitary-only."""
        if not self.is_unitary_only():
            raise ValueError("cannot invert a circuit with measure/reset/conditions")
        out = Circuit(self.n_qubits)
        out.instructions = [i.daggered() for i in reversed(self.instructions)]
        return out

    def controlled(self, control: int, polarity: int = 1) -> "Circuit":
        """Wrap every instruction with an extra control (default 1-control)."""
        if not self.is_unitary_only():
            raise ValueError("cannot control a circuit with measure/reset/conditions")
        out = Circuit(max(self.n_qubits, control + 1))
        extra = ((control, polarity),)
        for i in self.instructions:
            if control in i.targets or any(q == control for q, _ in i.controls):
                raise ValueError("control qubit collides with circuit qubits")
            out.instructions.append(replace(i, controls=i.controls + extra))
        for s in self.sites:
            out.sites.append(replace(s, control=control))
        return out

    def remapped(self, mapping, n_qubits: int | None = None) -> "Circuit":
        """Relabel qubits; `mapping` maps old index -> new index (dict or
        sequence). Used to embed register-local blocks into larger layouts."""
        if not isinstance(mapping, dict):
            mapping = {i: m for i, m in enumerate(mapping)}
        width = n_qubits if n_qubits is not None else max(mapping.values()) + 1
        out = Circuit(width)
        out.n_cbits = self.n_cbits
        for i in self.instructions:
            out.instructions.append(replace(
                i,
                targets=tuple(mapping[q] for q in i.targets),
                controls=tuple((mapping[q], p) for q, p in i.controls),
            ))
        for s in self.sites:
            out.sites.append(replace(
                s,
                register=tuple(mapping[q] for q in s.register),
                control=None if s.control is None else mapping[s.control],
            ))
        return out

    def structurally_equal(self, other: "Circuit") -> bool:
        return (self.n_qubits == other.n_qubits
                and len(self.instructions) == len(other.instructions)
                and all(a.equivalent(b) for a, b in
                        zip(self.instructions, other.instructions)))

    # -- analysis ----------------------------------------------------------

    def qubit_demand(self) -> int:
        return self.n_qubits

    def has_nonunitary(self) -> bool:
        return not self.is_unitary_only()

    def to_unitary(self) -> np.ndarray:
        """Dense matrix of a unitary-only circuit (small registers only)."""
        if not self.is_unitary_only():
            raise ValueError("non-unitary circuit has no matrix")
        require_dim = 1 << self.n_qubits
        if self.n_qubits > 13:
            raise ValueError("to_unitary supports at most 13 qubits")
        u = np.eye(require_dim, dtype=complex)
        for instr in self.instructions:
            u = _apply_instruction_matrix(u, self.n_qubits, instr)
        return u

    def apply_to(self, state: StateVector) -> StateVector:
        """Apply a unitary-only circuit to a state (no rng required)."""
        if not self.is_unitary_only():
            raise ValueError("use the simulator for non-unitary circuits")
        amps = state.amplitudes.copy()
        for instr in self.instructions:
            amps = _apply_instruction(amps, self.n_qubits, instr)
        return StateVector(self.n_qubits, amps)

    def to_json(self) -> str:
        """Serialize the instruction list for debugging and golden tests."""
        def inst(i: Instruction):
            d = {
                "kind": i.kind,
                "name": i.name,
                "targets": list(i.targets),
                "controls": [[q, p] for q, p in i.controls],
            }
            if i.params:
                d["params"] = list(i.params)
            elif i.matrix is not None:
                d["matrix"] = [[[float(z.real), float(z.imag)] for z in row]
                               for row in i.matrix]
            if i.kind in ("phase", "mark"):
                d["phase"] = [float(np.real(i.phase)), float(np.imag(i.phase))]
            if i.indices:
                d["indices"] = list(i.indices)
            if i.cbit is not None:
                d["cbit"] = i.cbit
            if i.condition is not None:
                d["condition"] = list(i.condition)
            return d

        return json.dumps({
            "n_qubits": self.n_qubits,
            "n_cbits": self.n_cbits,
            "instructions": [inst(i) for i in self.instructions],
        }, indent=1)


def _norm_controls(controls) -> tuple[tuple[int, int], ...]:
    return tuple((int(q), int(p)) for q, p in controls)


def _apply_instruction(amps: np.ndarray, n: int, instr: Instruction) -> np.ndarray:
    if instr.kind == "gate":
        return apply_matrix(amps, n, instr.matrix, instr.targets, instr.controls)
    if instr.kind == "phase":
        if instr.controls:
            return apply_phase_to_indices(amps, n, (), (0,), instr.phase, instr.controls)
        return amps * instr.phase
    if instr.kind == "mark":
        return apply_phase_to_indices(amps, n, instr.targets, instr.indices,
                                      instr.phase, instr.controls)
    raise ValueError(f"unsupported instruction in unitary context: {instr.kind}")


def _apply_instruction_matrix(u: np.ndarray, n: int, instr: Instruction) -> np.ndarray:
    cols = u.shape[1]
    out = np.empty_like(u)
    for k in range(cols):
        out[:, k] = _apply_instruction(np.ascontiguousarray(u[:, k]), n, instr)
    return out


# -- QFT ------------------------------------------------------------------


def build_qft(b: int) -> Circuit:
    """Decoding transform for phase-kickback registers, with final swaps.

    When QFT-register qubit j carries the relative phase e^{i 2^j phi}
    (prepared from H|0>), applying this circuit and measuring the register
    as a little-endian integer y estimates phi ~ 2*pi*y / 2^b.
    For b=1 this is a single H.
    """
    if b < 1:
        raise ValueError("need at least one output bit")
    c = Circuit(b)
    # inverse Fourier transform, little-endian, then bit reversal via swaps
    for j in range(b - 1, -1, -1):
        c.h(j)
        for k in range(j - 1, -1, -1):
            c.cphase(j, k, -np.pi / (1 << (j - k)))
    for j in range(b // 2):
        c.swap(j, b - 1 - j)
    return c


# -- depth accounting ------------------------------------------------------


@dataclass
class DepthReport:
    """Coarse pre-transform depth accounting: one instruction is one layer,
    except controlled-G blocks which count as d_G layers."""

    b: int
    d_G: int
    D_serial: int
    D_parallel: int
    ratio: float


def depth_report(b: int, d_G: int) -> DepthReport:
    if b < 1 or d_G < 1:
        raise ValueError("b and d_G must be >= 1")
    d_serial = 1 + (1 << (b - 1)) * d_G
    d_parallel = 1 + (1 << b) + d_G
    return DepthReport(b, d_G, d_serial, d_parallel, d_parallel / d_serial)


def structural_depth(circuit: Circuit, g_depth: int = 1, upto: int | None = None) -> int:
    """ASAP-scheduled layer count of the instruction list (or its prefix).

    Instructions inside a G site block occupy the block's qubits for
    `g_depth` layers and are counted once per block.
    """
    limit = len(circuit.instructions) if upto is None else upto
    block_start = {}
    for s in circuit.sites:
        if s.kind == "G":
            block_start[s.pos] = s
    avail = [0] * circuit.n_qubits
    pos = 0
    while pos < limit:
        site = block_start.get(pos)
        if site is not None:
            qubits = set(site.register)
            if site.control is not None:
                qubits.add(site.control)
            for instr in circuit.instructions[pos:pos + site.length]:
                qubits.update(instr.targets)
                qubits.update(q for q, _ in instr.controls)
            start = max(avail[q] for q in qubits)
            for q in qubits:
                avail[q] = start + g_depth
            pos += site.length
            continue
        instr = circuit.instructions[pos]
        qubits = set(instr.targets) | {q for q, _ in instr.controls}
        if qubits:
            start = max(avail[q] for q in qubits)
            for q in qubits:
                avail[q] = start + 1
        pos += 1
    return max(avail) if avail else 0
