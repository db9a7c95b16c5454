"""Experiment harness: fast paths vs trajectory simulation, scenario I/O,
CLI plumbing."""
import csv
import json
import os

import numpy as np
import pytest

from phasekick import (
    EstimatorConfig,
    NoiseSpec,
    PrepRecipe,
    final_distribution,
    inject,
    sample_counts,
)
from phasekick.estimators import build, decode
from phasekick.experiments import (
    BudgetReport,
    Scenario,
    corrected_parallel_distribution,
    get_model,
    load_bundled_scenarios,
    parallel_kick_run,
    risk_model,
    run_scenario,
    serial_kick_run,
)
from phasekick.statevec import StateVector


def test_model_registry():
    demo = get_model("demo3")
    assert demo.n_qubits == 3 and demo.good_states == {7}
    sweep = get_model("sweep3")
    assert len(sweep.good_states) == 7
    bell = get_model("bell4:0.1")
    psi = bell.model.apply_to(StateVector.zero(4))
    assert psi.probability_of(0b1111) == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(ValueError):
        get_model("nonsense")


def test_risk_model_exact_probability_and_ordering():
    state = risk_model().apply_to(StateVector.zero(4))
    assert state.probability_of(0b0111) == pytest.approx(0.047, abs=1e-3)
    assert state.probability_of(0b1110) < 1e-12  # the other reading is empty


def test_serial_fast_path_matches_injected_circuit():
    # identical error draws, exact agreement of the outcome-1 probability
    spec = get_model("sweep3")
    noise = NoiseSpec(p=0.3, p_ep=0.0, kind="X", seed=77)
    cfg = EstimatorConfig("lowdepth-serial", spec,
                          PrepRecipe("exact-injection", spec), n_operators=6)
    circ = build(cfg)
    for shot in range(8):
        noisy, log = inject(circ, noise, shot=shot)
        probs, _ = final_distribution(noisy)
        fast = serial_kick_run(spec, 6, noise, shot=shot)
        assert probs[1] == pytest.approx(fast.p1, abs=1e-9), shot


def test_serial_fast_path_matches_circuit_haar_1q():
    spec = get_model("sweep3")
    noise = NoiseSpec(p=0.5, p_ep=0.0, kind="haar-1q", seed=78)
    cfg = EstimatorConfig("lowdepth-serial", spec,
                          PrepRecipe("exact-injection", spec), n_operators=4)
    circ = build(cfg)
    for shot in range(6):
        noisy, _ = inject(circ, noise, shot=shot)
        probs, _ = final_distribution(noisy)
        fast = serial_kick_run(spec, 4, noise, shot=shot)
        assert probs[1] == pytest.approx(fast.p1, abs=1e-9)


def test_parallel_fast_path_matches_reinit_trajectories():
    # the product-of-overlaps shortcut is the measurement-marginalized
    # trajectory average; check it statistically against real trajectories
    spec = get_model("sweep3")
    noise = NoiseSpec(p=0.25, p_ep=0.0, kind="X", seed=79)
    n_ops = 4
    cfg = EstimatorConfig("lowdepth-parallel", spec,
                          PrepRecipe("exact-injection", spec),
                          n_operators=n_ops, reinit=True)
    circ = build(cfg)
    shots = 3000
    for shot_id in (0, 1):
        noisy, _ = inject(circ, noise, shot=shot_id)
        counts = sample_counts(noisy, shots, seed=1000 + shot_id,
                               readout_cbits=circ.readout_cbits)
        fast = parallel_kick_run(spec, n_ops, noise, shot=shot_id,
                                 ep_errors=True)
        sigma = np.sqrt(max(fast.p1 * (1 - fast.p1), 1e-4) / shots)
        assert counts.get(1, 0) / shots == pytest.approx(fast.p1, abs=4 * sigma)


def test_structured_operator_apply_matches_dense():
    from phasekick.experiments import _operator_apply
    from phasekick import build_grover

    rng = np.random.default_rng(9)
    for name in ("demo3", "sweep3", "bell4:0.1", "oneq:0.4"):
        spec = get_model(name)
        apply = _operator_apply(spec)
        dense = build_grover(spec).to_unitary()
        for _ in range(5):
            v = rng.standard_normal(dense.shape[0]) \
                + 1j * rng.standard_normal(dense.shape[0])
            v /= np.linalg.norm(v)
            np.testing.assert_allclose(apply(v), dense @ v, atol=1e-10)


def test_haar_register_action_sampling_statistics():
    # action sampling and full-matrix injection must agree in distribution
    from phasekick.statevec import haar_unitary
    from phasekick.experiments import _haar_action_pair
    rng = np.random.default_rng(5)
    dim = 16
    psi0 = np.zeros(dim, dtype=complex)
    psi0[0] = 1.0
    psi1 = np.zeros(dim, dtype=complex)
    psi1[:2] = [0.6, 0.8]
    want = complex(np.vdot(psi0, psi1))
    overlaps_action = []
    overlaps_matrix = []
    for _ in range(400):
        a0, a1 = _haar_action_pair(psi0, psi1, rng)
        assert complex(np.vdot(a0, a1)) == pytest.approx(want, abs=1e-10)
        overlaps_action.append(abs(a0[0]) ** 2)
        u = haar_unitary(dim, rng)
        overlaps_matrix.append(abs((u @ psi0)[0]) ** 2)
    # the first-coordinate weight of a Haar image has mean 1/dim
    assert np.mean(overlaps_action) == pytest.approx(1 / dim, abs=3 * 0.06 / 20)
    assert np.mean(overlaps_matrix) == pytest.approx(1 / dim, abs=3 * 0.06 / 20)


def test_corrected_channel_matches_trajectories():
    spec = get_model("demo3")
    prep = PrepRecipe("approx-no-measure", spec)
    noise = NoiseSpec(p=0.25, p_ep=0.125, kind="X",
                      include_control_qubit=True, seed=81)
    b = 2
    cfg = EstimatorConfig("reinit-parallel", spec, prep, b=b,
                          correction="measured-ep2")
    circ = build(cfg)
    shots = 4000
    for shot_id in (0, 2):
        probs = corrected_parallel_distribution(spec, prep, b, noise,
                                                shot=shot_id)
        noisy, _ = inject(circ, noise, shot=shot_id)
        counts = sample_counts(noisy, shots, seed=500 + shot_id,
                               readout_cbits=circ.readout_cbits)
        for y in range(1 << b):
            freq = counts.get(y, 0) / shots
            sigma = np.sqrt(max(probs[y] * (1 - probs[y]), 1e-4) / shots)
            assert freq == pytest.approx(probs[y], abs=4 * sigma), (shot_id, y)


def test_corrected_channel_error_free_matches_plain_reinit():
    # without noise the corrected estimator must agree with the plain one
    spec = get_model("demo3")
    prep = PrepRecipe("approx-no-measure", spec)
    b = 3
    probs_chan = corrected_parallel_distribution(spec, prep, b, noise=None)
    cfg = EstimatorConfig("reinit-parallel", spec, prep, b=b,
                          correction="measured-ep2")
    circ = build(cfg)
    shots = 6000
    counts = sample_counts(circ, shots, seed=11,
                           readout_cbits=circ.readout_cbits)
    for y in range(1 << b):
        freq = counts.get(y, 0) / shots
        sigma = np.sqrt(max(probs_chan[y] * (1 - probs_chan[y]), 1e-4) / shots)
        assert freq == pytest.approx(probs_chan[y], abs=4 * sigma), y


def test_hard_gated_scenarios_pass_their_overlays():
    # scenarios with gate "hard" promise observed-vs-analytic agreement
    scenarios = load_bundled_scenarios()
    for name in ("fig-lowdepth-errorfree", "fig-kickback-angles-serial",
                 "fig-kickback-angles-parallel"):
        result = run_scenario(scenarios[name])
        assert scenarios[name].gate == "hard"
        for row in result.rows:
            assert abs(row["z"]) < 3.0, (name, row)
    var = run_scenario(scenarios["fig-kickback-variance"])
    for row in var.rows:
        rel = abs(row["var_parallel_mc"] - row["var_parallel_formula"]) \
            / row["var_parallel_formula"]
        assert rel < 0.05, row


def test_bundled_scenarios_load():
    scenarios = load_bundled_scenarios()
    assert {"fig-lowdepth-errorfree", "fig-parallel-vs-serial",
            "fig-qae-histograms", "fig-intro-kickbacks"} <= set(scenarios)
    for s in scenarios.values():
        assert s.shots >= 1


def test_dry_run_reports_budget_only(tmp_path):
    s = Scenario(name="probe", kind="lowdepth-sweep", model="demo3",
                 sweep=[1, 2], shots=0)
    result = run_scenario(s, out_dir=str(tmp_path))
    assert isinstance(result, BudgetReport)
    assert result.metadata["qubit_demand"] == 4
    assert list(tmp_path.iterdir()) == []


def test_scenario_csv_is_byte_identical(tmp_path):
    s = Scenario(name="tiny", kind="lowdepth-sweep", model="sweep3",
                 sweep=[1, 2, 3], shots=500, repeats=3,
                 noise={"p": 0.2, "p_ep": 0.0, "kind": "X"},
                 params={"family": "serial"}, seed=99)
    run_scenario(s, out_dir=str(tmp_path / "a"), fmt="both")
    run_scenario(s, out_dir=str(tmp_path / "b"), fmt="both")
    for ext in (".csv", ".json", "-errors.json"):
        a = (tmp_path / "a" / ("tiny" + ext)).read_bytes()
        b = (tmp_path / "b" / ("tiny" + ext)).read_bytes()
        assert a == b


def test_scenario_rows_shape_and_columns(tmp_path):
    s = Scenario(name="shape", kind="lowdepth-sweep", model="sweep3",
                 sweep=[1, 2, 3, 4], shots=200, repeats=2,
                 noise={"p": 0.1, "p_ep": 0.0, "kind": "X"},
                 params={"family": "serial"}, seed=3)
    result = run_scenario(s, out_dir=str(tmp_path), fmt="csv")
    assert len(result.rows) == len(s.sweep)  # one aggregate row per sweep value
    csv_path = [p for p in result.paths if p.endswith(".csv")][0]
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    assert {"n_operators", "mean_freq", "analytic", "stderr"} <= set(rows[0])
    log_path = [p for p in result.paths if p.endswith("-errors.json")][0]
    with open(log_path) as fh:
        log = json.load(fh)
    assert log["realized_count"] == len(log["events"])
    assert log["realized_count"] > 0


def test_qae_histogram_scenario(tmp_path):
    s = Scenario(name="hist", kind="qae-histograms", model="demo3",
                 shots=4000, params={"b": 5}, seed=21)
    result = run_scenario(s, out_dir=str(tmp_path), fmt="json")
    with open(result.paths[0]) as fh:
        doc = json.load(fh)
    assert doc["metadata"]["qubit_ordering"].startswith("little-endian")
    assert doc["metadata"]["variance_form"] == "binomial"
    assert len(doc["rows"]) == 32
    assert 0.05 < doc["decoded"]["exact_eigenvector"] < 0.15


def test_cli_subcommands(tmp_path):
    from phasekick.cli import main

    assert main(["analyze-grover", "--model", "demo3"]) == 0
    assert main(["fig", "--list"]) == 0
    assert main(["fig", "no-such-figure"]) == 2
    assert main(["predict", "--kind", "dampened-p1", "--n-max", "5",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "predict-dampened-p1.csv").exists()
    assert main(["run-qae", "--model", "demo3", "--b", "4", "--prep", "exact",
                 "--shots", "400", "--out", str(tmp_path)]) == 0
    assert main(["run-lowdepth-sweep", "--model", "sweep3", "--n-max", "4",
                 "--shots", "300", "--out", str(tmp_path)]) == 0
    assert main(["calibrate-error", "--model", "demo3", "--p", "0.2",
                 "--shots", "300"]) == 0
    # budget overflow surfaces as exit code 2
    assert main(["run-qae", "--model", "bell8:0.05", "--family",
                 "simple-parallel", "--b", "5", "--prep", "exact"]) == 2


def test_fig_scenario_writes_files(tmp_path):
    from phasekick.cli import main

    assert main(["fig", "fig-fidelities", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "fig-fidelities.csv").exists()
    assert (tmp_path / "fig-fidelities.json").exists()
    with open(tmp_path / "fig-fidelities.csv") as fh:
        rows = list(csv.DictReader(fh))
    values = [float(r["overlap_with_measure"]) for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))  # monotone down
    assert all(float(r["overlap_with_measure"]) >= float(r["overlap_no_measure"])
               for r in rows)
