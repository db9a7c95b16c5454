"""Reflection-based amplification operators and their spectral structure.

An operator is specified by a model circuit M on q qubits plus a nonempty
proper subset of basis states marked "good". The operator is

    G = (-1) * M * S0 * M^dag * Sx

with S0 the phase flip on |0...0>, Sx the phase flip on every good state,
both realized as exact diagonals, and the overall -1 as an explicit global
phase instruction (it matters once G is controlled).

G rotates the plane spanned by the normalized bad/good components of M|0>
by 2*theta with sin^2(theta) = a (the good-state probability of M|0>), and
acts as -Sx off that plane: eigenvalue +1 with multiplicity n_good - 1 and
-1 with multiplicity n_bad - 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .statevec import GateMatrix, StateVector

EIG_CLUSTER_TOL = 1e-8


class DegeneratePlaneError(ValueError):
    """Good probability 0 or 1: the rotation plane collapses."""


@dataclass(frozen=True)
class GroverSpec:
    model: Circuit
    good_states: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "good_states", frozenset(self.good_states))
        dim = 1 << self.model.n_qubits
        if not self.good_states or len(self.good_states) >= dim:
            raise ValueError("good states must be a nonempty proper subset")
        if any(not 0 <= s < dim for s in self.good_states):
            raise ValueError("good state index out of range")
        if not self.model.is_unitary_only():
            raise ValueError("model circuit must be unitary-only")

    @property
    def n_qubits(self) -> int:
        return self.model.n_qubits


@dataclass
class GroverSpectrum:
    a: float
    theta: float
    lambda_plus: complex
    lambda_minus: complex
    n_good: int
    n_bad: int
    n_plus: int
    n_minus: int
    epsilon: complex

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "theta": self.theta,
            "lambda_plus": [self.lambda_plus.real, self.lambda_plus.imag],
            "lambda_minus": [self.lambda_minus.real, self.lambda_minus.imag],
            "n_good": self.n_good,
            "n_bad": self.n_bad,
            "n_plus": self.n_plus,
            "n_minus": self.n_minus,
            "epsilon": [self.epsilon.real, self.epsilon.imag],
        }


@dataclass
class OverlapReport:
    alpha: complex
    beta: complex
    gamma_plus: complex
    gamma_minus: complex
    inner: complex
    k: int
    ell: int
    p1: float


def model_state(spec: GroverSpec) -> np.ndarray:
    return spec.model.apply_to(StateVector.zero(spec.n_qubits)).amplitudes


def good_mask(spec: GroverSpec) -> np.ndarray:
    mask = np.zeros(1 << spec.n_qubits, dtype=bool)
    mask[list(spec.good_states)] = True
    return mask


def plane_basis(spec: GroverSpec) -> tuple[float, np.ndarray, np.ndarray]:
    """(a, normalized good component, normalized bad component) of M|0>."""
    psi = model_state(spec)
    mask = good_mask(spec)
    good = np.where(mask, psi, 0)
    bad = np.where(mask, 0, psi)
    a = float(np.vdot(good, good).real)
    if a <= 0.0 or a >= 1.0:
        raise DegeneratePlaneError(f"good-state probability {a} leaves no rotation plane")
    return a, good / np.sqrt(a), bad / np.sqrt(1.0 - a)


def build_grover(spec: GroverSpec) -> Circuit:
    """Circuit for (-1) M S0 M^dag Sx; diagonal reflections, explicit phase."""
    q = spec.n_qubits
    reg = tuple(range(q))
    g = Circuit(q)
    g.mark(reg, sorted(spec.good_states), -1, name="Sx")
    g.extend(spec.model.inverse())
    g.mark(reg, (0,), -1, name="S0")
    g.phase(-1)
    g.extend(spec.model)
    return g


def analyze(spec: GroverSpec, validate: bool | None = None) -> GroverSpectrum:
    """Spectral summary from the good-state probability of M|0>.

    With `validate` (default on for q <= 8) the counts and plane eigenvalues
    are cross-checked against a dense eigendecomposition of the full 2^q
    operator, clustering eigenvalues at 1e-8.
    """
    q = spec.n_qubits
    a, _, _ = plane_basis(spec)
    theta = float(np.arcsin(np.sqrt(a)))
    lam = np.exp(2j * theta)
    n_good = len(spec.good_states)
    n_bad = (1 << q) - n_good
    spectrum = GroverSpectrum(
        a=a, theta=theta, lambda_plus=lam, lambda_minus=np.conj(lam),
        n_good=n_good, n_bad=n_bad, n_plus=n_good - 1, n_minus=n_bad - 1,
        epsilon=lam - 1.0,
    )
    if validate is None:
        validate = q <= 8
    if validate:
        if q > 12:
            raise ValueError("dense eigendecomposition validation needs q <= 12")
        eigs = np.linalg.eigvals(build_grover(spec).to_unitary())
        n_plus = int(np.sum(np.abs(eigs - 1.0) < EIG_CLUSTER_TOL))
        n_minus = int(np.sum(np.abs(eigs + 1.0) < EIG_CLUSTER_TOL))
        plane = eigs[(np.abs(eigs - 1.0) >= EIG_CLUSTER_TOL)
                     & (np.abs(eigs + 1.0) >= EIG_CLUSTER_TOL)]
        ok = (n_plus == spectrum.n_plus and n_minus == spectrum.n_minus
              and len(plane) == 2
              and min(np.abs(plane - lam)) < 1e-7
              and min(np.abs(plane - np.conj(lam))) < 1e-7)
        if not ok:
            raise AssertionError(
                "dense eigendecomposition disagrees with the counting formula: "
                f"got {n_plus} at +1, {n_minus} at -1, plane {plane}")
    return spectrum


def plane_eigenvector(spec: GroverSpec, sign: int = +1) -> StateVector:
    """Exact plane eigenvector (psi_good_tilde + i*sign*psi_bad_tilde)/sqrt(2),
    with eigenvalue e^{i*sign*2*theta}. Classical construction, not a circuit."""
    _, good_t, bad_t = plane_basis(spec)
    vec = (good_t + 1j * np.sign(sign) * bad_t) / np.sqrt(2.0)
    return StateVector(spec.n_qubits, vec)


def _eigenspace_components(spec: GroverSpec, psi: np.ndarray):
    """Decompose psi against (lambda+, lambda-, +1 space, -1 space)."""
    _, good_t, bad_t = plane_basis(spec)
    lam_p = plane_eigenvector(spec, +1).amplitudes
    lam_m = plane_eigenvector(spec, -1).amplitudes
    alpha = complex(np.vdot(lam_p, psi))
    beta = complex(np.vdot(lam_m, psi))
    mask = good_mask(spec)
    good_part = np.where(mask, psi, 0)
    bad_part = np.where(mask, 0, psi)
    plus_res = good_part - np.vdot(good_t, psi) * good_t
    minus_res = bad_part - np.vdot(bad_t, psi) * bad_t
    gamma_p = complex(np.linalg.norm(plus_res))
    gamma_m = complex(np.linalg.norm(minus_res))
    return alpha, beta, gamma_p, gamma_m


def _split_at_cut(gblock: Circuit, cut: int | None) -> tuple[Circuit, Circuit]:
    ni = len(gblock.instructions)
    if cut is None:
        cut = ni // 2
    if not 0 <= cut <= ni:
        raise ValueError("cut outside the operator block")
    first = Circuit(gblock.n_qubits)
    first.instructions = gblock.instructions[:cut]
    second = Circuit(gblock.n_qubits)
    second.instructions = gblock.instructions[cut:]
    return first, second


def trace_probe(spec: GroverSpec, error, error_qubits, k: int = 0, ell: int = 0,
                site="before", sign: int = +1) -> OverlapReport:
    """Kickback statistics for one faulty operator among good ones.

    The register starts in the exact plane eigenvector; `k` good controlled
    operators run before the faulty one and `ell` after it. `site` places
    the error gate: "before" / "after" the operator, or ("inside", cut) at
    an instruction cut inside it (the operator splits as second*first around
    the cut). Returns the decomposition of the errored state over the
    eigenspaces and the probability of measuring 1 on the kickback qubit,

        p1 = (1 - Re(lambda^k <Psi| G^ell |Phi>)) / 2,

    computed purely with statevector pushes.
    """
    if k < 0 or ell < 0:
        raise ValueError("operator counts must be nonnegative")
    q = spec.n_qubits
    error = error.matrix if isinstance(error, GateMatrix) else np.asarray(error, dtype=complex)
    error_qubits = tuple(error_qubits)
    gblock = build_grover(spec)
    err_circ = Circuit(q).gate(error, error_qubits, name="A")
    if site == "before":
        v_part, u_part = Circuit(q), gblock
    elif site == "after":
        v_part, u_part = gblock, Circuit(q)
    elif isinstance(site, tuple) and site[0] == "inside":
        v_part, u_part = _split_at_cut(gblock, site[1])
    else:
        raise ValueError(f"invalid error site {site!r}")

    lam_vec = plane_eigenvector(spec, sign)
    lam = np.exp(2j * np.sign(sign) * analyze(spec, validate=False).theta)
    psi = err_circ.apply_to(lam_vec).amplitudes                     # A|lambda>
    phi = u_part.apply_to(err_circ.apply_to(v_part.apply_to(lam_vec)))  # UAV|lambda>
    tail = phi
    for _ in range(ell):
        tail = gblock.apply_to(tail)
    inner = complex(np.vdot(psi, tail.amplitudes))
    p1 = float((1.0 - np.real(lam ** k * inner)) / 2.0)
    alpha, beta, gamma_p, gamma_m = _eigenspace_components(spec, psi)
    return OverlapReport(alpha, beta, gamma_p, gamma_m, inner, k, ell, p1)


def spectrum_with_injected_error(spec: GroverSpec, error, error_qubits,
                                 cut: int | None = None, window: float = 0.5):
    """Dense eigendecomposition of the faulty operator U*A*V.

    Returns (sorted eigenvalue phases, count near +1, count near -1) where
    "near" means within `window` of the point on the unit circle; all
    eigenvalue magnitudes are 1 since the error gate is unitary. The group
    counts are observational, not an identity.
    """
    q = spec.n_qubits
    if q > 10:
        raise ValueError("dense analysis supports q <= 10")
    gblock = build_grover(spec)
    v_part, u_part = _split_at_cut(gblock, cut)
    error = error.matrix if isinstance(error, GateMatrix) else np.asarray(error, dtype=complex)
    faulty = v_part.copy()
    faulty.gate(error, tuple(error_qubits), name="A")
    faulty.extend(u_part)
    eigs = np.linalg.eigvals(faulty.to_unitary())
    phases = np.sort(np.angle(eigs))
    n_plus = int(np.sum(np.abs(eigs - 1.0) < window))
    n_minus = int(np.sum(np.abs(eigs + 1.0) < window))
    return phases, n_plus, n_minus
