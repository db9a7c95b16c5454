"""Experiment harness: bundled scenarios, sweep runners, the business-risk
end-to-end study, and deterministic CSV/JSON output.

Reference models (registry names usable from scenario files and the CLI):

- "demo3": the 3-qubit chain u3(2.21), c-u3(-1.29), c-u3(-1.29); good state
  |111> with probability 0.10429. Angle 2*theta = 0.6577.
- "sweep3": the chain with angles +-2.86; the only bad state is |111> at
  probability 0.94208, every other state is good (a = 0.05792), so register
  errors kick +1 and the low-depth sweep peaks near six operators.
- "bell<q>:<a>": q-qubit model u3 + CNOT fan-out; the plane is spanned by
  |0...0> and |1...1>, the single bad state is |1...1>. Register errors from
  the plane land exactly in the +1 eigenspace, which makes these the clean
  testbeds for the kickback noise laws.
- "oneq:<theta>": one-qubit model u3(2*theta), good |1>. No off-plane
  eigenvectors: errors flip between the two plane eigenvectors (the
  persistent-walk regime).
- "risk4": the 4-qubit dependency model u3(2.214) plus controlled u3 pairs
  (0.643/1.671, 0.431/1.430); worst case |0111> at probability 0.04731.

Sweep statistics use exact per-instantiation outcome probabilities obtained
by statevector pushes (the kick qubit's coherence is the product of
per-operator overlaps; for serial chains it is the overlap of the
with-operators branch against the errors-only branch), then draw the
requested shots binomially. This is equivalent to trajectory sampling of
the same circuits and is cross-checked against it in the tests.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from math import asin, pi, sqrt

import numpy as np

from .analytics import (
    dampened_p1,
    exact_parallel_p1,
    mc_parallel_kickback,
    parallel_moments,
    serial_expected_kickback,
    serial_lowdepth_p1,
)
from .circuit import Circuit, build_qft
from .eigenprep import PrepRecipe, build_ep, build_ep2, fidelity_report
from .estimators import EstimatorConfig, build, decode
from .grover import GroverSpec, analyze, build_grover, plane_eigenvector
from .noise import NoiseSpec, calibrate_error, draw_site_error, effective_error, site_stream
from .simulator import derive_rng, final_distribution, sample_counts
from .statevec import StateVector

FORMULA_FLAGS = {"variance_form": "binomial", "dampening_exponent_form": "squared"}
QUBIT_ORDERING = "little-endian: qubit 0 is the least significant index bit"


# -- model registry ----------------------------------------------------------


def chain_model(first: float, rest: float, n: int = 3) -> Circuit:
    c = Circuit(n)
    c.u3(0, first)
    for j in range(1, n):
        c.u3(j, rest, controls=[(j - 1, 1)])
    return c


def bell_model(q: int, a: float) -> GroverSpec:
    """u3 + CNOT fan-out; bad state |1...1> with probability 1-a."""
    psi = 2.0 * asin(sqrt(1.0 - a))
    c = Circuit(q)
    c.u3(0, psi)
    for j in range(1, q):
        c.cx(j - 1, j)
    return GroverSpec(c, set(range((1 << q) - 1)))


def risk_model() -> Circuit:
    c = Circuit(4)
    c.u3(3, 2.214)
    c.x(2, controls=[(3, 0)])
    c.u3(1, 0.643, controls=[(2, 0)])
    c.u3(1, 1.671, controls=[(2, 1)])
    c.u3(0, 0.431, controls=[(1, 0)])
    c.u3(0, 1.430, controls=[(1, 1)])
    return c


def get_model(name: str) -> GroverSpec:
    if name == "demo3":
        return GroverSpec(chain_model(2.21, -1.29), {0b111})
    if name == "sweep3":
        return GroverSpec(chain_model(2.86, -2.86), set(range(7)))
    if name == "risk4":
        return GroverSpec(risk_model(), {0b0111})
    if name.startswith("bell"):
        head, a = name.split(":")
        return bell_model(int(head[4:]), float(a))
    if name.startswith("oneq:"):
        theta = float(name.split(":")[1])
        return GroverSpec(Circuit(1).u3(0, 2.0 * theta), {1})
    raise ValueError(f"unknown model {name!r}")


# -- exact per-instantiation kickback evolution ------------------------------


@dataclass
class KickRun:
    coherence: complex  # kick-qubit off-diagonal x2 (1.0 means no kick)

    @property
    def p1(self) -> float:
        return float((1.0 - self.coherence.real) / 2.0)

    @property
    def angle(self) -> float:
        return float(np.angle(self.coherence))


def _apply_local(vec: np.ndarray, q: int, mat: np.ndarray, qubits) -> np.ndarray:
    from .statevec import apply_matrix
    return apply_matrix(vec, q, mat, tuple(qubits))


def _operator_apply(spec: GroverSpec):
    """Fast application of the operator to a register vector.

    When every off-plane eigenvalue shares one sign (a single bad or single
    good state), the operator is the plane rotation plus that sign times the
    identity, so applying it costs two projections; otherwise fall back to
    the dense matrix.
    """
    from .grover import plane_basis

    s = analyze(spec, validate=False)
    if s.n_minus == 0 or s.n_plus == 0:
        rest = 1.0 if s.n_minus == 0 else -1.0
        _, good_t, bad_t = plane_basis(spec)
        c2, s2 = np.cos(2 * s.theta), np.sin(2 * s.theta)

        def apply(psi: np.ndarray) -> np.ndarray:
            c0 = np.vdot(bad_t, psi)
            c1 = np.vdot(good_t, psi)
            out = rest * psi
            out = out + (c2 * c0 - s2 * c1 - rest * c0) * bad_t \
                + (s2 * c0 + c2 * c1 - rest * c1) * good_t
            return out

        return apply
    dense = build_grover(spec).to_unitary()
    return lambda psi: dense @ psi


def _dense_parts(spec: GroverSpec):
    hit = getattr(spec, "_dense_parts", None)
    if hit is None:
        hit = (_operator_apply(spec), plane_eigenvector(spec, +1).amplitudes)
        object.__setattr__(spec, "_dense_parts", hit)
    return hit


def _haar_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def _haar_action_pair(psi0, psi1, rng):
    """Action of one register-wide Haar-random unitary on a pair of states,
    sampled directly: the image of psi0 is uniform on the sphere, the image
    of the residual of psi1 is uniform on its orthocomplement, and their
    inner product is preserved exactly. Distributionally identical to
    drawing the full matrix, at the cost of two Gaussian vectors."""
    a = complex(np.vdot(psi0, psi1))
    res = psi1 - a * psi0
    rnorm = np.linalg.norm(res)
    v0 = _haar_vector(psi0.size, rng)
    if rnorm < 1e-14:
        return v0, a * v0
    w = _haar_vector(psi0.size, rng)
    w -= np.vdot(v0, w) * v0
    w /= np.linalg.norm(w)
    return v0, a * v0 + rnorm * w


def _sites_of(noise: NoiseSpec | None, shot: int, n_units: int,
              with_prep_site: bool):
    """Ordinal protocol matching the built circuits' position-sorted sites:
    per-unit preparations (the reinit layout) give unit u ordinals
    (2u, 2u+1) for (preparation, operator); a single up-front preparation
    (the serial layout) owns ordinal 0 and operators use 1..n."""
    for u in range(n_units):
        if with_prep_site:
            yield u, ("EP", 2 * u), ("G", 2 * u + 1)
        else:
            yield u, None, ("G", u + 1)


def _maybe_error_pair(noise, shot, site, q, psi0, psi1, log=None):
    """Draw one site's error and apply it to both branch vectors; realized
    draws append to `log` as (shot, site label, qubits, kind)."""
    if noise is None or site is None:
        return psi0, psi1
    kind, ordinal = site
    rng = site_stream(noise, shot, ordinal)
    prob = noise.p if kind == "G" else noise.ep_probability
    if rng.random() >= prob:
        return psi0, psi1
    register = tuple(range(q))
    if noise.kind == "haar-register":
        if log is not None:
            log.append({"shot": shot, "site": f"{kind}[{ordinal}]",
                        "qubits": list(register), "kind": noise.kind})
        return _haar_action_pair(psi0, psi1, rng)
    qs = (register[rng.integers(q)],)
    from .statevec import X as XMAT, Z as ZMAT, haar_unitary
    mat = {"X": XMAT, "Z": ZMAT}.get(noise.kind)
    if mat is None:
        mat = haar_unitary(2, rng)
    if log is not None:
        log.append({"shot": shot, "site": f"{kind}[{ordinal}]",
                    "qubits": list(qs), "kind": noise.kind})
    return (_apply_local(psi0, q, mat, qs), _apply_local(psi1, q, mat, qs))


def serial_kick_run(spec: GroverSpec, n_operators: int,
                    noise: NoiseSpec | None = None, shot: int = 0,
                    ep_errors: bool = False, log=None) -> KickRun:
    """One serial chain: exact eigenvector in, n controlled operators with
    drawn errors; the kick-qubit coherence is the overlap of the full branch
    against the errors-only branch."""
    q = spec.n_qubits
    g_apply, lam = _dense_parts(spec)
    psi0 = lam.copy()
    psi1 = lam.copy()
    for _, ep_site, g_site in _sites_of(noise, shot, n_operators, ep_errors):
        psi0, psi1 = _maybe_error_pair(noise, shot, ep_site, q, psi0, psi1, log)
        psi0, psi1 = _maybe_error_pair(noise, shot, g_site, q, psi0, psi1, log)
        psi1 = g_apply(psi1)
    return KickRun(complex(np.vdot(psi0, psi1)))


def parallel_kick_run(spec: GroverSpec, n_operators: int,
                      noise: NoiseSpec | None = None, shot: int = 0,
                      ep_errors: bool = True, log=None) -> KickRun:
    """One parallel (or reinit) bank of kickback units onto one qubit: the
    coherence is the product of per-unit overlaps <u|G|u>."""
    q = spec.n_qubits
    g_apply, lam = _dense_parts(spec)
    coh = 1.0 + 0.0j
    for _, ep_site, g_site in _sites_of(noise, shot, n_operators, ep_errors):
        u = lam
        u, _unused = _maybe_error_pair(noise, shot, ep_site, q, u, u, log)
        u, _unused = _maybe_error_pair(noise, shot, g_site, q, u, u, log)
        coh *= complex(np.vdot(u, g_apply(u)))
    return KickRun(coh)


# -- scenarios ---------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    kind: str
    model: str = "demo3"
    sweep: list[int] = field(default_factory=list)
    shots: int = 10000
    repeats: int = 1
    noise: dict | None = None
    params: dict = field(default_factory=dict)
    seed: int = 7949
    gate: str = "hard"  # "hard": the analytic column is a 3-sigma oracle

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "sweep" in d and isinstance(d["sweep"], dict):
            sw = d["sweep"]
            d["sweep"] = list(range(sw["start"], sw["stop"] + 1,
                                    sw.get("step", 1)))
        return cls(**d)

    def noise_spec(self, seed_offset: int = 0) -> NoiseSpec | None:
        if not self.noise:
            return None
        kw = dict(self.noise)
        kw.setdefault("seed", self.seed + seed_offset)
        return NoiseSpec(**kw)


@dataclass
class ExperimentResult:
    scenario: Scenario
    rows: list[dict]
    histograms: dict = field(default_factory=dict)
    decoded: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    paths: list[str] = field(default_factory=list)
    error_events: list[dict] | None = None


class BudgetReport(ExperimentResult):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        raise ValueError("no rows to write")
    cols = list(rows[0].keys())
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in cols))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, result: ExperimentResult) -> None:
    doc = {
        "scenario": {
            "name": result.scenario.name,
            "kind": result.scenario.kind,
            "model": result.scenario.model,
            "sweep": result.scenario.sweep,
            "shots": result.scenario.shots,
            "repeats": result.scenario.repeats,
            "noise": result.scenario.noise,
            "params": result.scenario.params,
            "seed": result.scenario.seed,
        },
        "rows": result.rows,
        "histograms": result.histograms,
        "decoded": result.decoded,
        "metadata": result.metadata,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _base_metadata(scenario: Scenario) -> dict:
    return {"seed": scenario.seed, "qubit_ordering": QUBIT_ORDERING,
            **FORMULA_FLAGS}


# -- scenario runners --------------------------------------------------------


def _run_analytic_kickbacks(s: Scenario) -> ExperimentResult:
    spec = get_model(s.model)
    theta = analyze(spec, validate=False).theta
    p = s.params.get("p", 0.2)
    rows = []
    for n in s.sweep:
        rows.append({
            "n_operators": n,
            "errorfree": 2 * theta * n,
            "serial_expected": serial_expected_kickback(n, p, theta),
            "parallel_expected": parallel_moments(n, p, theta)[0],
        })
    meta = _base_metadata(s)
    meta["theta"] = theta
    meta["p"] = p
    return ExperimentResult(s, rows, metadata=meta)


def _run_lowdepth_sweep(s: Scenario) -> ExperimentResult:
    spec = get_model(s.model)
    theta = analyze(spec, validate=False).theta
    serial = s.params.get("family", "serial") == "serial"
    ep_errors = bool(s.params.get("ep_errors", False))
    noise = s.noise_spec()
    p = noise.p if noise else 0.0
    p_eff = effective_error(p, noise.ep_probability) if (noise and ep_errors) else p
    rows = []
    events: list[dict] = []
    runner = serial_kick_run if serial else parallel_kick_run
    for n in s.sweep:
        freqs = []
        single = None
        for r in range(s.repeats):
            run = runner(spec, n, noise, shot=_sweep_shot(s, n, r),
                         ep_errors=ep_errors, log=events)
            rng = derive_rng(s.seed, 1, n, r)
            freq = rng.binomial(s.shots, min(max(run.p1, 0.0), 1.0)) / s.shots
            freqs.append(freq)
            if single is None:
                single = freq
        mean = float(np.mean(freqs))
        stderr = float(np.std(freqs, ddof=1) / np.sqrt(len(freqs))) if len(freqs) > 1 \
            else sqrt(max(mean * (1 - mean), 1e-12) / s.shots)
        analytic = (serial_lowdepth_p1(n, p_eff, theta) if serial
                    else dampened_p1(n, p_eff, theta))
        exact = (serial_lowdepth_p1(n, p_eff, theta) if serial
                 else exact_parallel_p1(n, p_eff, theta))
        rows.append({
            "n_operators": n,
            "single_run_freq": single,
            "mean_freq": mean,
            "stderr": stderr,
            "analytic": analytic,
            "exact_reference": exact,
            "abs_err": abs(mean - exact),
            "z": (mean - exact) / stderr if stderr > 0 else 0.0,
        })
    meta = _base_metadata(s)
    meta.update({"theta": theta, "p": p, "p_effective": p_eff,
                 "family": "serial" if serial else "parallel"})
    result = ExperimentResult(s, rows, metadata=meta)
    result.error_events = events
    return result


def _sweep_shot(s: Scenario, n: int, r: int) -> int:
    # distinct error streams per (sweep value, repeat)
    return n * 100003 + r


def _run_kickback_angles(s: Scenario) -> ExperimentResult:
    spec = get_model(s.model)
    theta = analyze(spec, validate=False).theta
    serial = s.params.get("family", "serial") == "serial"
    noise = s.noise_spec()
    p = noise.p if noise else 0.0
    rows = []
    events: list[dict] = []
    runner = serial_kick_run if serial else parallel_kick_run
    for n in s.sweep:
        angles = [runner(spec, n, noise, shot=_sweep_shot(s, n, r),
                         ep_errors=False, log=events).angle
                  for r in range(s.repeats)]
        analytic = (serial_expected_kickback(n, p, theta) if serial
                    else parallel_moments(n, p, theta)[0])
        mean = float(np.mean(angles))
        stderr = float(np.std(angles, ddof=1) / np.sqrt(len(angles))) \
            if len(angles) > 1 else 0.0
        rows.append({
            "n_operators": n,
            "single_run_angle": angles[0],
            "mean_angle": mean,
            "stderr": stderr,
            "analytic": analytic,
            "errorfree": 2 * theta * n,
            "z": (mean - analytic) / stderr if stderr > 0 else 0.0,
        })
    meta = _base_metadata(s)
    meta.update({"theta": theta, "p": p,
                 "family": "serial" if serial else "parallel"})
    result = ExperimentResult(s, rows, metadata=meta)
    result.error_events = events
    return result


def _run_kickback_variance(s: Scenario) -> ExperimentResult:
    spec = get_model(s.model)
    theta = analyze(spec, validate=False).theta
    noise = s.noise_spec()
    p = noise.p if noise else 0.2
    samples = s.params.get("samples", 10 ** 5)
    rows = []
    for i, n in enumerate(s.sweep):
        _, var_par = mc_parallel_kickback(n, p, theta, samples,
                                          derive_rng(s.seed, 2, i))
        rng = derive_rng(s.seed, 3, i)
        k = np.minimum(rng.geometric(p, size=samples) - 1, n)
        var_ser = float(np.var(2.0 * theta * k))
        rows.append({
            "n_operators": n,
            "var_serial_mc": var_ser,
            "var_parallel_mc": var_par,
            "var_parallel_formula": parallel_moments(n, p, theta)[1],
            "var_parallel_linear_theta": parallel_moments(
                n, p, theta, variance_form="linear-theta")[1],
        })
    meta = _base_metadata(s)
    meta.update({"theta": theta, "p": p, "samples": samples})
    return ExperimentResult(s, rows, metadata=meta)


def _run_fidelity_curves(s: Scenario) -> ExperimentResult:
    grid = s.params.get("a_grid")
    if grid is None:
        grid = [round(0.0125 * i, 6) for i in range(77)]
    rows = []
    for a in grid:
        rep = fidelity_report(a)
        rows.append({
            "a": a,
            "overlap_no_measure": rep.overlap_no_measure,
            "overlap_with_measure": rep.overlap_with_measure,
            "fidelity_no_measure": rep.fidelity_no_measure,
            "fidelity_with_measure": rep.fidelity_with_measure,
            "accept_probability": rep.accept_probability,
        })
    return ExperimentResult(s, rows, metadata=_base_metadata(s))


def _run_qae_histograms(s: Scenario) -> ExperimentResult:
    spec = get_model(s.model)
    b = s.params.get("b", 5)
    size = 1 << b
    variants = {
        "superposition_M": PrepRecipe("superposition-M", spec),
        "exact_eigenvector": PrepRecipe("exact-injection", spec),
        "approximation": PrepRecipe("approx-no-measure", spec),
    }
    probs = {}
    counts = {}
    for i, (label, prep) in enumerate(variants.items()):
        circ = build(EstimatorConfig("serial-qpe", spec, prep, b=b))
        probs[label], _ = final_distribution(circ)
        counts[label] = sample_counts(circ, s.shots, seed=s.seed + i)
    rows = []
    for y in range(size):
        yf = min(y, size - y)
        row = {"y": y, "a_of_bin": float(np.sin(pi * yf / size) ** 2)}
        for label in variants:
            row[f"prob_{label}"] = float(probs[label][y])
            row[f"count_{label}"] = counts[label].get(y, 0)
        rows.append(row)
    decoded = {label: decode(counts[label], b).a_hat for label in variants}
    meta = _base_metadata(s)
    meta["b"] = b
    return ExperimentResult(s, rows, histograms=counts, decoded=decoded,
                            metadata=meta)


RUNNERS = {
    "analytic-kickbacks": _run_analytic_kickbacks,
    "lowdepth-sweep": _run_lowdepth_sweep,
    "kickback-angles": _run_kickback_angles,
    "kickback-variance": _run_kickback_variance,
    "fidelity-curves": _run_fidelity_curves,
    "qae-histograms": _run_qae_histograms,
}


def run_scenario(s: Scenario, out_dir: str | None = None,
                 fmt: str = "csv") -> ExperimentResult:
    """Execute one scenario; with shots == 0 only report the budget and
    write nothing."""
    if s.kind not in RUNNERS:
        raise ValueError(f"unknown scenario kind {s.kind!r}")
    if s.shots == 0:
        spec = get_model(s.model)
        meta = _base_metadata(s)
        meta["qubit_demand"] = spec.n_qubits + 1
        meta["dry_run"] = True
        return BudgetReport(s, rows=[], metadata=meta)
    result = RUNNERS[s.kind](s)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        base = os.path.join(out_dir, s.name)
        if result.error_events is not None:
            log_path = base + "-errors.json"
            with open(log_path, "w") as fh:
                json.dump({"realized_count": len(result.error_events),
                           "events": result.error_events}, fh, indent=1,
                          sort_keys=True)
                fh.write("\n")
            result.metadata["error_log_path"] = os.path.basename(log_path)
            result.paths.append(log_path)
        if fmt in ("csv", "both"):
            write_csv(base + ".csv", result.rows)
            result.paths.append(base + ".csv")
        if fmt in ("json", "both"):
            write_json(base + ".json", result)
            result.paths.append(base + ".json")
    return result


def load_bundled_scenarios() -> dict[str, Scenario]:
    here = os.path.join(os.path.dirname(__file__), "scenarios")
    out = {}
    for fname in sorted(os.listdir(here)):
        if fname.endswith(".json"):
            with open(os.path.join(here, fname)) as fh:
                s = Scenario.from_dict(json.load(fh))
            out[s.name] = s
    return out


# -- the business-risk end-to-end study --------------------------------------


@dataclass
class RiskStudy:
    exact_worst_case: float
    good_state_label: str
    errorfree_estimate: float
    errorfree_top2_mass: float
    corrected_raw_estimate: float
    corrected_estimate: float
    corrected_top2_mass: float
    calibration_factor: float
    p_hat_g: float
    p_hat_ep: float
    standard_top_folded_bin: int
    histograms: dict
    rows: list[dict]
    metadata: dict


def _risk_unit_channel(spec: GroverSpec, prep: PrepRecipe, errors) -> np.ndarray:
    """2x2 channel (as a 4x4 superoperator on vec(rho)) of one corrected
    kickback unit: reset, preparation, controlled operator, truncated-
    preparation uncompute, ancilla measurement with conditional M^dag, and
    the zero-check Z pair. `errors` lists (stage, matrix, qubits) with stage
    "ep" (before the preparation) or "g" (before the operator)."""
    q = spec.n_qubits
    anc, ctrl = q, q + 1
    n = q + 2
    pre = Circuit(n)
    for mat, qs in [e[1:] for e in errors if e[0] == "ep"]:
        pre.gate(mat, qs, name="err")
    pre.extend(build_ep(PrepRecipe(prep.variant, spec, prep.sign, anc)))
    for mat, qs in [e[1:] for e in errors if e[0] == "g"]:
        pre.gate(mat, qs, name="err")
    pre.extend(build_grover(spec).controlled(ctrl).remapped(
        {j: j for j in range(q)} | {ctrl: ctrl}, n_qubits=n))
    pre.extend(build_ep2(PrepRecipe(prep.variant, spec, prep.sign, anc))
               .inverse())
    post0 = Circuit(n)  # ancilla read 0: undo the model
    post0.extend(spec.model.inverse())
    post1 = Circuit(n)
    zfix = Circuit(n)
    zfix.z(ctrl)
    zfix.z(ctrl, controls=tuple((j, 0) for j in range(q)))

    w = np.zeros((2, 2, 1 << n), dtype=complex)  # [input c, branch b, state]
    for c in (0, 1):
        x = np.zeros(1 << n, dtype=complex)
        x[c << ctrl] = 1.0
        v = pre.apply_to(StateVector(n, x)).amplitudes
        for b in (0, 1):
            proj = v.reshape([2] * n).copy()
            axis = n - 1 - anc
            moved = np.moveaxis(proj, axis, 0)
            moved[1 - b] = 0.0
            vb = proj.reshape(-1)
            vb = (post0 if b == 0 else post1).apply_to(StateVector(n, vb)).amplitudes
            w[c, b] = zfix.apply_to(StateVector(n, vb)).amplitudes
    # channel element E(|c><c'|)[d, d'] = sum_b sum_rest w[c,b][d,rest] conj(w[c',b][d',rest])
    wr = w.reshape(2, 2, 2, -1)  # control axis is the top index bit
    super_op = np.zeros((4, 4), dtype=complex)
    for c in (0, 1):
        for cp in (0, 1):
            block = np.zeros((2, 2), dtype=complex)
            for b in (0, 1):
                block += wr[c, b] @ wr[cp, b].conj().T
            for d in (0, 1):
                for dp in (0, 1):
                    super_op[2 * d + dp, 2 * c + cp] = block[d, dp]
    return super_op


def _risk_unit_errors(noise: NoiseSpec, shot: int, unit: int, q: int,
                      ctrl: int) -> list:
    register = tuple(range(q))
    eligible = register + ((ctrl,) if noise.include_control_qubit else ())
    out = []
    ep = draw_site_error(noise, "EP", eligible, register,
                         site_stream(noise, shot, 2 * unit))
    if ep is not None:
        out.append(("ep",) + ep)
    g = draw_site_error(noise, "G", eligible, register,
                        site_stream(noise, shot, 2 * unit + 1))
    if g is not None:
        out.append(("g",) + g)
    return out


def corrected_parallel_distribution(spec: GroverSpec, prep: PrepRecipe, b: int,
                                    noise: NoiseSpec | None, shot: int = 0
                                    ) -> np.ndarray:
    """Exact readout distribution of one error instantiation of the
    measurement-corrected reinitialization estimator, computed by composing
    per-unit channels on each readout qubit and conjugating the product
    state with the decoding transform."""
    q = spec.n_qubits
    ctrl = q + 1
    qft = build_qft(b).to_unitary()
    rhos = []
    unit = 0
    for j in range(b):
        rho = np.full((2, 2), 0.5, dtype=complex)  # H|0>
        for _ in range(1 << j):
            errors = _risk_unit_errors(noise, shot, unit, q, ctrl) \
                if noise is not None else []
            # control-qubit errors act directly on the readout qubit state
            chan_errors = []
            for stage, mat, qs in errors:
                if qs == (ctrl,):
                    rho = mat @ rho @ mat.conj().T
                else:
                    chan_errors.append((stage, mat, qs))
            super_op = _risk_unit_channel(spec, prep, chan_errors)
            rho = (super_op @ rho.reshape(-1)).reshape(2, 2)
            unit += 1
        rhos.append(rho)
    full = np.array([[1.0 + 0j]])
    for rho in rhos:  # wrap each next qubit as the more significant factor
        full = np.kron(rho, full)
    out = qft @ full @ qft.conj().T
    probs = np.real(np.diag(out)).clip(min=0.0)
    return probs / probs.sum()


def run_risk_model(seed: int = 20257, instantiations: int = 1000,
                   shots: int = 100, errorfree_shots: int = 10000,
                   calibration_shots: int = 6000, b: int = 5,
                   p_error: float = 0.2) -> RiskStudy:
    """The end-to-end business-risk study: exact worst-case probability,
    error-free estimate, noisy corrected estimate with calibration, and the
    standard estimator under the same noise for contrast."""
    model = risk_model()
    # resolve the endianness of the worst-case label |0111> by probability
    state = model.apply_to(StateVector.zero(4))
    candidates = {"0111": 0b0111, "1110": 0b1110}
    label, good = max(candidates.items(),
                      key=lambda kv: state.probability_of(kv[1]))
    spec = GroverSpec(model, {good})
    exact = state.probability_of(good)
    prep = PrepRecipe("approx-no-measure", spec)
    noise = NoiseSpec(p=p_error, p_ep=p_error / 2, kind="X",
                      include_control_qubit=True, seed=seed)

    # (i) error-free corrected run
    probs_free = corrected_parallel_distribution(spec, prep, b, noise=None)
    counts_free = {int(y): int(c) for y, c in
                   enumerate(derive_rng(seed, 0).multinomial(errorfree_shots,
                                                             probs_free)) if c}
    est_free = decode(counts_free, b)

    # (ii) noisy corrected runs
    counts_corr: dict[int, int] = {}
    for r in range(instantiations):
        probs = corrected_parallel_distribution(spec, prep, b, noise, shot=r)
        for y, c in enumerate(derive_rng(seed, 1, r).multinomial(shots, probs)):
            if c:
                counts_corr[int(y)] = counts_corr.get(int(y), 0) + int(c)

    # (iii) calibration: operator and preparation round trips
    cal = calibrate_error(spec, NoiseSpec(p=p_error, p_ep=p_error / 2,
                                          kind="X", seed=seed + 2),
                          shots=calibration_shots, seed=seed + 3, prep=prep)
    est_corr = decode(counts_corr, b, correction_factor=cal.correction_factor)
    est_raw = decode(counts_corr, b)

    # (iv) standard serial estimator under the same noise, for contrast
    counts_std: dict[int, int] = {}
    std_circ = build(EstimatorConfig(
        "serial-qpe", spec, PrepRecipe("superposition-M", spec), b=b))
    from .noise import inject
    std_noise = NoiseSpec(p=p_error, p_ep=p_error / 2, kind="X",
                          include_control_qubit=True, seed=seed + 4)
    for r in range(instantiations):
        noisy, _ = inject(std_circ, std_noise, shot=r)
        probs, _ = final_distribution(noisy)
        for y, c in enumerate(derive_rng(seed, 2, r).multinomial(shots, probs)):
            if c:
                counts_std[int(y)] = counts_std.get(int(y), 0) + int(c)
    est_std = decode(counts_std, b)
    std_top = est_std.y_top[0]

    def top2_mass(est, counts):
        total = sum(counts.values())
        return sum(est.folded[y] for y in est.y_top) / total

    size = 1 << b
    rows = []
    for yf in range(size // 2 + 1):
        rows.append({
            "folded_bin": yf,
            "a_of_bin": float(np.sin(pi * yf / size) ** 2),
            "count_errorfree": est_free.folded.get(yf, 0),
            "count_corrected": est_corr.folded.get(yf, 0),
            "count_standard_noisy": est_std.folded.get(yf, 0),
        })
    meta = {
        "seed": seed, "qubit_ordering": QUBIT_ORDERING, **FORMULA_FLAGS,
        "good_state_label": label, "good_state_index": good,
        "instantiations": instantiations, "shots_per_instantiation": shots,
        "b": b, "p_error": p_error,
    }
    return RiskStudy(
        exact_worst_case=exact,
        good_state_label=label,
        errorfree_estimate=est_free.a_hat,
        errorfree_top2_mass=top2_mass(est_free, counts_free),
        corrected_raw_estimate=est_raw.a_hat,
        corrected_estimate=est_corr.a_hat,
        corrected_top2_mass=top2_mass(est_corr, counts_corr),
        calibration_factor=cal.correction_factor,
        p_hat_g=cal.p_hat_g,
        p_hat_ep=cal.p_hat_ep,
        standard_top_folded_bin=std_top,
        histograms={"errorfree": counts_free, "corrected": counts_corr,
                    "standard_noisy": counts_std},
        rows=rows,
        metadata=meta,
    )
