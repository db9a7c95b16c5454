"""Dense statevector engine.

Conventions (fixed for the whole package):
- Little-endian indexing: qubit 0 is the least significant bit of a basis
  state index, so basis state ``i`` assigns bit ``(i >> q) & 1`` to qubit q.
  Bitstrings are printed most-significant qubit first, i.e. ``format(i, "0nb")``.
- A gate on targets ``(t0, t1, ...)`` uses the same convention internally:
  bit j of the gate's own index refers to ``targets[j]``.
- Norm is preserved by unitaries to 1e-10 and renormalized after measurement
  only. Gates are validated as unitary to 1e-10 when wrapped in GateMatrix.
- RNG streams are numpy Generators; callers derive one stream per shot from
  (master seed, shot index) so results do not depend on execution order.

The dense representation tops out at MAX_QUBITS qubits; builders are expected
to call require_qubits() before allocating.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, pi, sin, sqrt

import numpy as np

MAX_QUBITS = 26
UNITARY_TOL = 1e-10
NORM_TOL = 1e-10

_SQRT2_INV = 1 / sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV
S = np.array([[1, 0], [0, 1j]], dtype=complex)
SDG = np.array([[1, 0], [0, -1j]], dtype=complex)


def u3(theta: float, phi: float = 0.0, lam: float = 0.0) -> np.ndarray:
    """Generic single-qubit rotation, half-angle convention:
    [[cos(t/2), -e^{i lam} sin(t/2)], [e^{i phi} sin(t/2), e^{i(phi+lam)} cos(t/2)]].
    """
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array(
        [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]],
        dtype=complex,
    )


def phase_gate(angle: float) -> np.ndarray:
    """diag(1, e^{i angle})."""
    return np.array([[1, 0], [0, np.exp(1j * angle)]], dtype=complex)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian with phase-fixed diagonal."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


class SimulationBudgetError(ValueError):
    """Raised when a construction would exceed the dense-simulation ceiling."""

    def __init__(self, required: int):
        self.required = required
        super().__init__(f"requires {required} qubits, dense ceiling is {MAX_QUBITS}")


def require_qubits(n: int) -> int:
    if n > MAX_QUBITS:
        raise SimulationBudgetError(n)
    return n


@dataclass
class GateMatrix:
    """A unitary on k target qubits, validated to UNITARY_TOL on construction."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("gate matrix must be square")
        dim = m.shape[0]
        if dim & (dim - 1) or dim == 0:
            raise ValueError("gate dimension must be a power of two")
        if np.max(np.abs(m @ m.conj().T - np.eye(dim))) > UNITARY_TOL:
            raise ValueError("gate matrix is not unitary within 1e-10")
        self.matrix = m

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_targets(self) -> int:
        return self.dimension.bit_length() - 1


class ClassicalBits:
    """Append-only record of measurement outcomes within one shot."""

    def __init__(self):
        self._bits: list[int] = []

    def append(self, bit: int) -> int:
        self._bits.append(int(bit))
        return len(self._bits) - 1

    def __getitem__(self, i: int) -> int:
        return self._bits[i]

    def __len__(self) -> int:
        return len(self._bits)

    def as_list(self) -> list[int]:
        return list(self._bits)


@dataclass
class StateVector:
    """2^n complex amplitudes over n qubits; norm 1 to 1e-10 after every op."""

    n_qubits: int
    amplitudes: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        require_qubits(self.n_qubits)
        if self.amplitudes is None:
            amp = np.zeros(1 << self.n_qubits, dtype=complex)
            amp[0] = 1.0
            self.amplitudes = amp
        else:
            self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
            if self.amplitudes.size != 1 << self.n_qubits:
                raise ValueError("amplitude length does not match qubit count")

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        return cls(n_qubits)

    @classmethod
    def from_amplitudes(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=complex)
        n = amps.size.bit_length() - 1
        return cls(n, amps.copy())

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def probability_of(self, basis_index: int) -> float:
        return float(abs(self.amplitudes[basis_index]) ** 2)

    def marginal_probability(self, qubit: int, value: int) -> float:
        psi = self.amplitudes.reshape([2] * self.n_qubits)
        sl = [slice(None)] * self.n_qubits
        sl[self.n_qubits - 1 - qubit] = value
        return float(np.sum(np.abs(psi[tuple(sl)]) ** 2))


def _axis(n: int, qubit: int) -> int:
    # qubit q lives on tensor axis n-1-q (C order, little-endian indices)
    return n - 1 - qubit


def _check_sites(n: int, targets, controls):
    seen = set()
    for q in targets:
        if not 0 <= q < n:
            raise IndexError(f"target qubit {q} out of range for {n} qubits")
        if q in seen:
            raise ValueError("duplicate target qubit")
        seen.add(q)
    for q, pol in controls:
        if not 0 <= q < n:
            raise IndexError(f"control qubit {q} out of range for {n} qubits")
        if q in seen:
            raise ValueError("target and control qubits overlap")
        seen.add(q)
        if pol not in (0, 1):
            raise ValueError("control polarity must be 0 or 1")


def apply_matrix(
    amps: np.ndarray,
    n: int,
    matrix: np.ndarray,
    targets: tuple[int, ...],
    controls: tuple[tuple[int, int], ...] = (),
) -> np.ndarray:
    """Apply a 2^t x 2^t matrix to `targets`, restricted to the control block.

    Returns a new array; the input is not modified. Internally vectorized over
    amplitude chunks (numpy handles the data parallelism).
    """
    t = len(targets)
    psi = amps.reshape([2] * n)
    ctrl_axes = [_axis(n, q) for q, _ in controls]
    # reversed targets: first transpose axis is the gate's most significant bit
    tgt_axes = [_axis(n, q) for q in reversed(targets)]
    rest = [a for a in range(n) if a not in ctrl_axes and a not in tgt_axes]
    perm = ctrl_axes + tgt_axes + rest
    work = psi.transpose(perm).copy()
    sel = tuple(pol for _, pol in controls)
    block = work[sel].reshape(1 << t, -1)
    work[sel] = (matrix @ block).reshape([2] * t + [2] * len(rest))
    inv = np.argsort(perm)
    return work.transpose(inv).reshape(-1)


def apply_phase_to_indices(
    amps: np.ndarray,
    n: int,
    targets: tuple[int, ...],
    indices,
    phase: complex,
    controls: tuple[tuple[int, int], ...] = (),
) -> np.ndarray:
    """Multiply the listed basis states of the target register by `phase`.

    `indices` are little-endian over `targets`. This is the exact-diagonal
    path used for reflections; no ancilla decomposition is attempted.
    """
    out = amps.copy()
    idx = np.asarray(indices, dtype=np.intp)
    base = np.zeros(idx.shape, dtype=np.intp)
    for j, t in enumerate(targets):
        base |= ((idx >> j) & 1) << t
    for q, pol in controls:
        if pol:
            base |= np.intp(1) << q
    fixed = set(targets) | {q for q, _ in controls}
    spread = np.zeros(1, dtype=np.intp)
    for r in range(n):
        if r not in fixed:
            spread = np.concatenate([spread, spread | (np.intp(1) << r)])
    flat = (base[:, None] | spread[None, :]).reshape(-1)
    out[flat] *= phase
    return out


def apply_gate(
    state: StateVector,
    gate: GateMatrix | np.ndarray,
    targets,
    controls=(),
) -> StateVector:
    """Controlled-unitary application; returns a fresh StateVector.

    `controls` is a sequence of (qubit, polarity) pairs, polarity 0 for a
    0-control and 1 for a 1-control.
    """
    if not isinstance(gate, GateMatrix):
        gate = GateMatrix(np.asarray(gate))
    targets = tuple(targets)
    controls = tuple((int(q), int(p)) for q, p in controls)
    _check_sites(state.n_qubits, targets, controls)
    if gate.dimension != 1 << len(targets):
        raise ValueError("gate dimension does not match target count")
    out = apply_matrix(state.amplitudes, state.n_qubits, gate.matrix, targets, controls)
    return StateVector(state.n_qubits, out)


def measure(state: StateVector, qubit: int, rng: np.random.Generator,
            bits: ClassicalBits | None = None) -> tuple[int, StateVector]:
    """Projective measurement of one qubit with Born sampling.

    Returns (outcome, collapsed state); the outcome is appended to `bits`
    when given. The zero-norm branch cannot be selected by construction, but
    is guarded against anyway.
    """
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range")
    p1 = state.marginal_probability(qubit, 1)
    outcome = 1 if rng.random() < p1 else 0
    p_sel = p1 if outcome == 1 else 1.0 - p1
    if p_sel <= 0.0:  # guard: rng.random() < 0 never fires, p1 > 1 impossible
        raise RuntimeError("measurement selected a zero-norm branch")
    psi = state.amplitudes.reshape([2] * n).copy()
    sl = [slice(None)] * n
    sl[_axis(n, qubit)] = 1 - outcome
    psi[tuple(sl)] = 0.0
    psi = psi.reshape(-1) / sqrt(p_sel)
    if bits is not None:
        bits.append(outcome)
    return outcome, StateVector(n, psi)


def reset(state: StateVector, qubit: int, rng: np.random.Generator) -> StateVector:
    """Leave `qubit` in |0>, via measure-then-conditional-X (non-unitary)."""
    outcome, state = measure(state, qubit, rng)
    if outcome == 1:
        state = apply_gate(state, GateMatrix(X), (qubit,))
    return state


def sample_basis(state: StateVector, shots: int, rng: np.random.Generator,
                 qubits=None) -> dict[int, int]:
    """Sample computational-basis outcomes; returns {basis index: count}.

    With `qubits` given, outcomes are marginal indices over that subset
    (little-endian in the listed order).
    """
    probs = state.probabilities()
    if qubits is not None:
        n = state.n_qubits
        psi2 = probs.reshape([2] * n)
        keep = [_axis(n, q) for q in reversed(qubits)]
        rest = tuple(a for a in range(n) if a not in keep)
        probs = psi2.transpose(keep + list(rest)).reshape(1 << len(keep), -1).sum(axis=1)
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def reduced_qubit_density(state: StateVector, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of one qubit."""
    n = state.n_qubits
    psi = state.amplitudes.reshape([2] * n)
    work = np.moveaxis(psi, _axis(n, qubit), 0).reshape(2, -1)
    return work @ work.conj().T


def kickback_angle(state: StateVector, qubit: int) -> float:
    """Phase angle of a kickback qubit prepared as H|0>, read from its
    reduced coherence: arg of <0|rho|1> conjugated, in (-pi, pi]."""
    rho = reduced_qubit_density(state, qubit)
    return float(np.angle(rho[1, 0]))
