"""Estimation circuit families and decoding.

Families (b = precision bits, q = register width, N = operator count):

- "serial-qpe": one register, EP once, qubit j kicks back 2^j controlled
  operators, decoding transform, measure. The only family that tolerates
  the "superposition-M" preparation.
- "simple-parallel": one fresh register and EP per operator; qubit j
  controls operators on 2^j distinct registers.
- "entangled-parallel": qubit j fans out over CNOTs to 2^j fresh ancillas,
  one per operator, each ancilla controls the operator on its own register;
  fanout is uncomputed symmetrically. One extra qubit per operator. The
  fanout is what realizes the 1 + 2^b + d_G depth.
- "reinit-parallel": one register reused; before every kickback the register
  (and preparation ancilla) is reset and re-prepared. Trades depth for
  qubits; error-free it reproduces the other parallel families.
- "lowdepth-serial": H, EP, N controlled operators on one kick qubit, H,
  measure; P(1) = sin^2(N*theta) error-free.
- "lowdepth-parallel": same kick qubit, one register+EP per operator
  (or reinit=True to reuse a single register with resets).

Corrections:
- "inverse-ep": after each kickback, run EP^dag on that register; the
  register reads |0...0> exactly when nothing went wrong. A Z on the kick
  qubit plus a register-all-zeros 0-controlled Z applies a net Z exactly
  when an error is flagged, canceling an erroneous -1 kickback.
- "measured-ep2": after each kickback, run EP2^dag, measure the preparation
  ancilla, and apply M^dag classically conditioned on outcome 0; the
  register is then |0...0> in the error-free path, and the same Z pair
  corrects flagged kickbacks. Needs an approximate (ancilla) preparation
  and the reinit structure.

All parallel families require a single-eigenstate preparation; a
superposition preparation makes kickbacks from different registers
interfere and is rejected.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import pi, sin

import numpy as np

from .circuit import Circuit, build_qft
from .eigenprep import PrepRecipe, build_ep, build_ep2
from .grover import GroverSpec, build_grover
from .statevec import require_qubits

FAMILIES = ("serial-qpe", "simple-parallel", "entangled-parallel",
            "reinit-parallel", "lowdepth-serial", "lowdepth-parallel")
CORRECTIONS = ("none", "inverse-ep", "measured-ep2")


@dataclass(frozen=True)
class EstimatorConfig:
    family: str
    spec: GroverSpec
    prep: PrepRecipe
    b: int | None = None            # QPE families
    n_operators: int | None = None  # low-depth families
    correction: str = "none"
    reinit: bool = False            # lowdepth-parallel on one reused register

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.correction not in CORRECTIONS:
            raise ValueError(f"unknown correction {self.correction!r}")
        lowdepth = self.family.startswith("lowdepth")
        if lowdepth and (self.n_operators is None or self.n_operators < 0):
            raise ValueError("low-depth families need n_operators >= 0")
        if not lowdepth and (self.b is None or self.b < 1):
            raise ValueError("QPE families need b >= 1")
        if self.family != "serial-qpe" and self.prep.variant == "superposition-M":
            raise ValueError("parallel families need a single-eigenstate preparation")
        if self.prep.variant == "approx-with-measure":
            raise ValueError("post-selected preparation is not wired into estimators")
        if self.correction == "measured-ep2":
            if not self.prep.variant.startswith("approx"):
                raise ValueError("measured-ep2 needs the ancilla preparation")
            if self.family not in ("reinit-parallel", "lowdepth-parallel") or (
                    self.family == "lowdepth-parallel" and not self.reinit):
                raise ValueError("measured-ep2 needs the reinit structure")
        if self.correction == "inverse-ep" and self.family in (
                "serial-qpe", "lowdepth-serial"):
            raise ValueError("inverse-ep correction needs per-kick re-preparation")


@dataclass
class DecodedEstimate:
    histogram: dict[int, int]
    folded: dict[int, int]
    y_top: tuple[int, ...]
    theta_hat: float
    a_hat: float
    correction_factor: float


def lowdepth_p1(n_operators: int, theta: float) -> float:
    """Error-free probability of outcome 1 on the kick qubit after
    n_operators kickbacks: (1 - cos(2*N*theta))/2 = sin^2(N*theta)."""
    if n_operators < 0:
        raise ValueError("operator count must be >= 0")
    return sin(n_operators * theta) ** 2


def decode(histogram: dict[int, int], b: int,
           correction_factor: float = 1.0) -> DecodedEstimate:
    """Fold, interpolate the two most frequent angles, undo the noise factor.

    Outcomes y and 2^b - y encode the same magnitude (the two plane
    eigenvalues), so y > 2^(b-1) folds to 2^b - y. theta(y) = pi*y/2^b.
    The estimate is the count-weighted mean of the two most frequent folded
    angles (ties toward the smaller angle), divided by `correction_factor`;
    a_hat = sin^2(theta_hat).
    """
    if not histogram or sum(histogram.values()) == 0:
        raise ValueError("empty histogram")
    size = 1 << b
    folded: dict[int, int] = {}
    for y, c in histogram.items():
        if not 0 <= y < size:
            raise ValueError(f"outcome {y} outside {b}-bit range")
        yf = min(y, size - y)
        folded[yf] = folded.get(yf, 0) + c
    ranked = sorted(folded.items(), key=lambda kv: (-kv[1], kv[0]))
    top = ranked[:2]
    weight = sum(c for _, c in top)
    theta_raw = sum(c * pi * y / size for y, c in top) / weight
    theta_hat = theta_raw / correction_factor
    return DecodedEstimate(dict(histogram), folded, tuple(y for y, _ in top),
                           theta_hat, sin(theta_hat) ** 2, correction_factor)


# -- layout helpers ---------------------------------------------------------


@dataclass
class _Layout:
    circuit: Circuit
    gblock: Circuit          # register-local operator block
    ep_local: Circuit        # register-local preparation block
    ep_width: int            # q (+1 with ancilla)
    q: int


def _prepare_blocks(config: EstimatorConfig) -> tuple[Circuit, Circuit, int]:
    q = config.spec.n_qubits
    gblock = build_grover(config.spec)
    prep = config.prep
    if prep.uses_ancilla:
        local = PrepRecipe(prep.variant, prep.spec, prep.sign, ancilla_index=q)
        return gblock, build_ep(local), q + 1
    return gblock, build_ep(prep), q


def _append_ep(circ: Circuit, ep_local: Circuit, base: int, width: int,
               control: int | None = None):
    mapping = {j: base + j for j in range(width)}
    block = ep_local.remapped(mapping, n_qubits=circ.n_qubits)
    circ.add_site("EP", tuple(range(base, base + width)), control,
                  length=len(block.instructions))
    circ.extend(block)


def _append_ctrl_g(circ: Circuit, gblock: Circuit, base: int, q: int, control: int):
    mapping = {j: base + j for j in range(q)}
    block = gblock.remapped(mapping, n_qubits=circ.n_qubits).controlled(control)
    circ.add_site("G", tuple(range(base, base + q)), control,
                  length=len(block.instructions))
    circ.extend(block)


def _append_zero_check_z(circ: Circuit, register, kick: int):
    # Z exactly when the register is not all zeros: unconditional Z undone
    # by a 0-controlled Z on the no-error state
    circ.z(kick)
    circ.z(kick, controls=tuple((r, 0) for r in register))


def _append_inverse_ep_check(circ: Circuit, ep_local: Circuit, base: int,
                             width: int, kick: int):
    mapping = {j: base + j for j in range(width)}
    circ.extend(ep_local.inverse().remapped(mapping, n_qubits=circ.n_qubits))
    _append_zero_check_z(circ, range(base, base + width), kick)


def build(config: EstimatorConfig) -> Circuit:
    """Build the labeled estimation circuit for `config`.

    The returned circuit carries G/EP injection sites, `readout_cbits`
    naming the estimate bits, and `pre_transform_len` marking where the
    decoding transform starts (QPE families).
    """
    builder = {
        "serial-qpe": _build_serial_qpe,
        "simple-parallel": _build_simple_parallel,
        "entangled-parallel": _build_entangled_parallel,
        "reinit-parallel": _build_reinit_parallel,
        "lowdepth-serial": _build_lowdepth_serial,
        "lowdepth-parallel": _build_lowdepth_parallel,
    }[config.family]
    return builder(config)


def _finish_qpe(circ: Circuit, b: int):
    circ.pre_transform_len = len(circ.instructions)
    circ.extend(build_qft(b).remapped({j: j for j in range(b)},
                                      n_qubits=circ.n_qubits))
    circ.readout_cbits = [circ.measure(j) for j in range(b)]
    return circ


def _build_serial_qpe(config: EstimatorConfig) -> Circuit:
    b = config.b
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    circ = Circuit(require_qubits(b + width))
    base = b
    for j in range(b):
        circ.h(j)
    _append_ep(circ, ep_local, base, width)
    for j in range(b):
        for _ in range(1 << j):
            _append_ctrl_g(circ, gblock, base, q, j)
    return _finish_qpe(circ, b)


def _build_simple_parallel(config: EstimatorConfig) -> Circuit:
    b = config.b
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    n_ops = (1 << b) - 1
    circ = Circuit(require_qubits(b + n_ops * width))
    reg_base = lambda r: b + r * width
    for j in range(b):
        circ.h(j)
    for r in range(n_ops):
        _append_ep(circ, ep_local, reg_base(r), width)
    r = 0
    for j in range(b):
        for _ in range(1 << j):
            _append_ctrl_g(circ, gblock, reg_base(r), q, j)
            if config.correction == "inverse-ep":
                _append_inverse_ep_check(circ, ep_local, reg_base(r), width, j)
            r += 1
    return _finish_qpe(circ, b)


def _build_entangled_parallel(config: EstimatorConfig) -> Circuit:
    b = config.b
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    n_ops = (1 << b) - 1
    anc_base = b
    reg0 = b + n_ops  # one fanout ancilla per operator
    circ = Circuit(require_qubits(reg0 + n_ops * width))
    reg_base = lambda r: reg0 + r * width
    fan = lambda r: anc_base + r  # operator r's fanout ancilla
    for j in range(b):
        circ.h(j)
    for r in range(n_ops):
        _append_ep(circ, ep_local, reg_base(r), width)
    r = 0
    groups = []
    for j in range(b):
        ops = list(range(r, r + (1 << j)))
        groups.append((j, ops))
        r += 1 << j
    for j, ops in groups:
        for r in ops:
            circ.cx(j, fan(r))
    for j, ops in groups:
        for r in ops:
            _append_ctrl_g(circ, gblock, reg_base(r), q, fan(r))
            if config.correction == "inverse-ep":
                _append_inverse_ep_check(circ, ep_local, reg_base(r), width, fan(r))
    for j, ops in groups:
        for r in reversed(ops):
            circ.cx(j, fan(r))
    return _finish_qpe(circ, b)


def _build_reinit_parallel(config: EstimatorConfig) -> Circuit:
    b = config.b
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    circ = Circuit(require_qubits(b + width))
    base = b
    for j in range(b):
        circ.h(j)
    for j in range(b):
        for _ in range(1 << j):
            _append_unit(circ, config, gblock, ep_local, base, width, q, kick=j)
    return _finish_qpe(circ, b)


def _append_unit(circ: Circuit, config: EstimatorConfig, gblock, ep_local,
                 base: int, width: int, q: int, kick: int):
    """One reinit kickback unit: reset, prepare, kick, optional correction."""
    for dq in range(width):
        circ.reset(base + dq)
    _append_ep(circ, ep_local, base, width, control=kick)
    _append_ctrl_g(circ, gblock, base, q, kick)
    if config.correction == "inverse-ep":
        _append_inverse_ep_check(circ, ep_local, base, width, kick)
    elif config.correction == "measured-ep2":
        prep = config.prep
        local = PrepRecipe(prep.variant, prep.spec, prep.sign, ancilla_index=q)
        ep2 = build_ep2(local)
        mapping = {j: base + j for j in range(width)}
        circ.extend(ep2.inverse().remapped(mapping, n_qubits=circ.n_qubits))
        cbit = circ.measure(base + q)
        minv = config.spec.model.inverse().remapped(
            {j: base + j for j in range(q)}, n_qubits=circ.n_qubits)
        for instr in minv.instructions:
            circ.instructions.append(
                _conditioned(instr, (cbit, 0)))
        _append_zero_check_z(circ, range(base, base + q), kick)


def _conditioned(instr, condition):
    return replace(instr, condition=condition)


def _build_lowdepth_serial(config: EstimatorConfig) -> Circuit:
    n_ops = config.n_operators
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    circ = Circuit(require_qubits(1 + width))
    circ.h(0)
    _append_ep(circ, ep_local, 1, width, control=0)
    for _ in range(n_ops):
        _append_ctrl_g(circ, gblock, 1, q, 0)
    circ.h(0)
    circ.readout_cbits = [circ.measure(0)]
    return circ


def _build_lowdepth_parallel(config: EstimatorConfig) -> Circuit:
    n_ops = config.n_operators
    gblock, ep_local, width = _prepare_blocks(config)
    q = config.spec.n_qubits
    if config.reinit:
        circ = Circuit(require_qubits(1 + width))
        circ.h(0)
        for _ in range(n_ops):
            _append_unit(circ, config, gblock, ep_local, 1, width, q, kick=0)
        circ.h(0)
        circ.readout_cbits = [circ.measure(0)]
        return circ
    circ = Circuit(require_qubits(1 + n_ops * width))
    reg_base = lambda r: 1 + r * width
    circ.h(0)
    for r in range(n_ops):
        _append_ep(circ, ep_local, reg_base(r), width, control=0)
    for r in range(n_ops):
        _append_ctrl_g(circ, gblock, reg_base(r), q, 0)
        if config.correction == "inverse-ep":
            _append_inverse_ep_check(circ, ep_local, reg_base(r), width, 0)
    circ.h(0)
    circ.readout_cbits = [circ.measure(0)]
    return circ
