"""Seeded stochastic error injection into labeled circuit sites.

Each circuit carries sites marking its operator blocks ("G") and state
preparations ("EP"). Injection visits every site: with the site's
probability (p for G, p_ep for EP, default p/2) one error gate is inserted
on a uniformly chosen eligible qubit. Eligible qubits are the operator's
register, plus the kickback/control qubit when `include_control_qubit` is
set. Kinds:

- "X", "Z": the Pauli on one random eligible qubit
- "haar-1q": Haar-random 2x2 on one random eligible qubit
- "haar-register": Haar-random unitary on the whole register at once
  (control qubit never included)

G-site errors land before the block by default, or at a fixed instruction
cut inside it with site mode ("inside-G", cut). EP errors always land before
the preparation. Errors are never placed on kickback qubits unless
`include_control_qubit` asks for it.

Randomness derives from (seed, shot, site ordinal), so the realized error
pattern for a shot does not depend on how shots are scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit, Instruction
from .grover import GroverSpec, build_grover
from .simulator import derive_rng, run_shot
from .statevec import X as XMAT
from .statevec import Z as ZMAT
from .statevec import haar_unitary

KINDS = ("X", "Z", "haar-1q", "haar-register")


@dataclass(frozen=True)
class NoiseSpec:
    p: float
    p_ep: float | None = None  # defaults to p/2
    kind: str = "X"
    site_mode: str | tuple = "before-G"  # or ("inside-G", cut)
    include_control_qubit: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.p_ep is not None and not 0.0 <= self.p_ep <= 1.0:
            raise ValueError("p_ep must be in [0, 1]")
        if self.kind not in KINDS:
            raise ValueError(f"unknown error kind {self.kind!r}")
        ok = self.site_mode == "before-G" or (
            isinstance(self.site_mode, tuple) and len(self.site_mode) == 2
            and self.site_mode[0] == "inside-G")
        if not ok:
            raise ValueError(f"invalid site mode {self.site_mode!r}")

    @property
    def ep_probability(self) -> float:
        return self.p / 2.0 if self.p_ep is None else self.p_ep


def effective_error(p: float, p_ep: float) -> float:
    """Per-kickback compound error when preparation and operator both err."""
    return 1.0 - (1.0 - p) * (1.0 - p_ep)


@dataclass
class LogEvent:
    shot: int
    site: str
    qubits: tuple[int, ...]
    kind: str


@dataclass
class ErrorLog:
    events: list[LogEvent] = field(default_factory=list)

    @property
    def realized_count(self) -> int:
        return len(self.events)

    def as_dict(self) -> dict:
        return {
            "realized_count": self.realized_count,
            "events": [{"shot": e.shot, "site": e.site,
                        "qubits": list(e.qubits), "kind": e.kind}
                       for e in self.events],
        }


def draw_site_error(spec: NoiseSpec, site_kind: str, eligible, register,
                    rng: np.random.Generator):
    """One site's error draw: None, or (matrix, qubits acted on).

    The draw order (fire test, qubit pick, matrix sample) is fixed so that
    circuit injection and the vector-push fast paths consume identical
    randomness from the same (seed, shot, ordinal) stream.
    """
    prob = spec.p if site_kind == "G" else spec.ep_probability
    if rng.random() >= prob:
        return None
    if spec.kind == "haar-register":
        qs = tuple(register)
        mat = haar_unitary(1 << len(qs), rng)
    else:
        eligible = list(eligible)
        qs = (eligible[rng.integers(len(eligible))],)
        mat = {"X": XMAT, "Z": ZMAT}.get(spec.kind)
        if mat is None:
            mat = haar_unitary(2, rng)
    return np.asarray(mat, dtype=complex), qs


def site_stream(spec: NoiseSpec, shot: int, ordinal: int) -> np.random.Generator:
    return derive_rng(spec.seed, shot, ordinal)


def inject(circuit: Circuit, spec: NoiseSpec, shot: int = 0,
           log: ErrorLog | None = None) -> tuple[Circuit, ErrorLog]:
    """Return a copy of `circuit` with error gates drawn for one shot.

    With p = p_ep = 0 the instruction list is returned unchanged (same
    structure, fresh circuit object). Sites are visited in position order;
    ordinal i uses the (seed, shot, i) stream. An error on a single-gate
    injected preparation lands after it (the injection is classical
    bookkeeping; the error corrupts the prepared state), all other errors
    land before their block, or at the configured cut inside it.
    """
    if not circuit.sites:
        raise ValueError("circuit has no labeled injection sites")
    log = log if log is not None else ErrorLog()
    insertions = []  # (instruction position, Instruction)
    counters = {"G": 0, "EP": 0}
    for ordinal, site in enumerate(sorted(circuit.sites, key=lambda s: s.pos)):
        label = f"{site.kind}[{counters[site.kind]}]"
        counters[site.kind] += 1
        eligible = list(site.register)
        if spec.include_control_qubit and site.control is not None:
            eligible.append(site.control)
        drawn = draw_site_error(spec, site.kind, eligible, site.register,
                                site_stream(spec, shot, ordinal))
        if drawn is None:
            continue
        mat, qs = drawn
        pos = site.pos
        if site.kind == "G" and isinstance(spec.site_mode, tuple):
            cut = spec.site_mode[1]
            if not 0 <= cut <= site.length:
                raise ValueError("cut outside the operator block")
            pos += cut
        elif site.kind == "EP" and _is_injected_prep(circuit, site):
            pos += site.length
        insertions.append((pos, Instruction(
            "gate", qs, matrix=mat, name=f"err-{spec.kind}")))
        log.events.append(LogEvent(shot, label, qs, spec.kind))

    out = circuit.copy()
    if not insertions:
        return out, log
    insertions.sort(key=lambda t: t[0])
    instrs = []
    ins_i = 0
    for pos, instr in enumerate(circuit.instructions):
        while ins_i < len(insertions) and insertions[ins_i][0] == pos:
            instrs.append(insertions[ins_i][1])
            ins_i += 1
        instrs.append(instr)
    while ins_i < len(insertions):
        instrs.append(insertions[ins_i][1])
        ins_i += 1
    out.instructions = instrs
    shift = np.cumsum([0] + [1] * len(insertions))
    positions = [p for p, _ in insertions]
    for s in out.sites:
        s.pos += int(np.searchsorted(positions, s.pos, side="right"))
    out.readout_cbits = circuit.readout_cbits
    out.pre_transform_len = None
    return out, log


def _is_injected_prep(circuit: Circuit, site) -> bool:
    if site.length != 1 or site.pos >= len(circuit.instructions):
        return False
    instr = circuit.instructions[site.pos]
    return instr.kind == "gate" and instr.name == "EP"


@dataclass
class CalibrationReport:
    p_hat_g: float
    p_hat_ep: float
    correction_factor: float


def calibrate_error(spec: GroverSpec, noise: NoiseSpec, shots: int, seed: int = 0,
                    prep=None) -> CalibrationReport:
    """Estimate per-operator and per-preparation error rates from round-trip
    circuits.

    The operator circuit runs G then G^dag from |0...0> with one injection
    site before G; any shot not measured as all zeros counts as an error, so
    p_hat = 1 - freq(all zeros). The preparation rate is estimated the same
    way from EP then EP^dag when `prep` is given. The combined angle
    correction factor is (1 - p_hat_G) * (1 - p_hat_EP).
    """
    if shots < 1:
        raise ValueError("needs at least one shot")
    q = spec.n_qubits
    reg = tuple(range(q))
    gblock = build_grover(spec)
    circ = Circuit(q)
    circ.add_site("G", reg)
    circ.extend(gblock)
    circ.extend(gblock.inverse())
    p_hat_g = 1.0 - _all_zero_frequency(circ, noise, shots, seed, reg)

    p_hat_ep = 0.0
    if prep is not None:
        from .eigenprep import build_ep
        ep = build_ep(prep)
        qubits = tuple(range(ep.n_qubits))
        circ2 = Circuit(ep.n_qubits)
        circ2.add_site("EP", reg)
        circ2.extend(ep)
        circ2.extend(ep.inverse())
        p_hat_ep = 1.0 - _all_zero_frequency(circ2, noise, shots, seed + 1, qubits)
    return CalibrationReport(p_hat_g, p_hat_ep,
                             (1.0 - p_hat_g) * (1.0 - p_hat_ep))


def _all_zero_frequency(circ: Circuit, noise: NoiseSpec, shots: int, seed: int,
                        measured) -> float:
    zeros = 0
    for shot in range(shots):
        noisy, _ = inject(circ, noise, shot=shot)
        res = run_shot(noisy, derive_rng(seed, shot, 0))
        # measuring every qubit: all-zeros fires with the |0...0> weight
        if derive_rng(seed, shot, 1).random() < res.state.probability_of(0):
            zeros += 1
    return zeros / shots
