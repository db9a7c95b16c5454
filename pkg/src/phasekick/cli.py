"""Command-line entry points.

    phasekick analyze-grover --model demo3 [--good 7 ...]
    phasekick run-qae --family serial-qpe --model demo3 --b 5 --prep exact
    phasekick run-lowdepth-sweep --model sweep3 --family serial --n-max 13
    phasekick predict --kind serial-kickback --p 0.2 --theta 0.33 --n-max 30
    phasekick calibrate-error --model demo3 --p 0.2 --shots 5000
    phasekick fig <name> | fig --list
    phasekick risk-model [--instantiations 1000 --shots 100]

Common flags: --seed, --shots, --out DIR, --format {csv,json,both}.
Exit codes: 0 on success, 2 on budget/usage errors, 1 on I/O errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analytics import (
    dampened_p1,
    exact_parallel_p1,
    mc_parallel_kickback,
    mc_serial_kickback,
    mc_serial_p1,
    parallel_moments,
    serial_expected_kickback,
    serial_lowdepth_p1,
    walk_forecast,
    mc_persistent_walk,
)
from .eigenprep import PrepRecipe
from .estimators import EstimatorConfig, build, decode
from .grover import analyze
from .noise import NoiseSpec, calibrate_error
from .simulator import derive_rng, sample_counts
from .statevec import SimulationBudgetError
from .experiments import (
    ExperimentResult,
    Scenario,
    get_model,
    load_bundled_scenarios,
    run_risk_model,
    run_scenario,
    write_csv,
    write_json,
)

PREPS = {"exact": "exact-injection", "approx": "approx-no-measure",
         "superposition": "superposition-M"}


def _out_result(result: ExperimentResult, args) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        base = os.path.join(args.out, result.scenario.name)
        if args.format in ("csv", "both"):
            write_csv(base + ".csv", result.rows)
            result.paths.append(base + ".csv")
        if args.format in ("json", "both"):
            write_json(base + ".json", result)
            result.paths.append(base + ".json")
        for p in result.paths:
            print(p)
    else:
        for row in result.rows:
            print(row)


def cmd_analyze_grover(args) -> int:
    spec = get_model(args.model)
    if args.good:
        from .grover import GroverSpec
        spec = GroverSpec(spec.model, set(args.good))
    s = analyze(spec)
    doc = s.as_dict()
    doc["model"] = args.model
    text = json.dumps(doc, indent=1, sort_keys=True)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "grover-spectrum.json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(path)
    else:
        print(text)
    return 0


def cmd_run_qae(args) -> int:
    spec = get_model(args.model)
    prep = PrepRecipe(PREPS[args.prep], spec)
    cfg = EstimatorConfig(args.family, spec, prep, b=args.b,
                          correction=args.correction)
    circ = build(cfg)
    counts = sample_counts(circ, args.shots, seed=args.seed,
                           readout_cbits=circ.readout_cbits)
    est = decode(counts, args.b, correction_factor=args.correction_factor)
    rows = [{"y": y, "count": counts.get(y, 0)} for y in range(1 << args.b)]
    result = ExperimentResult(
        Scenario(name=f"qae-{args.family}-{args.model}", kind="run-qae",
                 model=args.model, shots=args.shots, seed=args.seed),
        rows,
        histograms={"counts": counts},
        decoded={"theta_hat": est.theta_hat, "a_hat": est.a_hat,
                 "y_top": list(est.y_top),
                 "correction_factor": est.correction_factor},
        metadata={"b": args.b, "family": args.family, "prep": args.prep},
    )
    _out_result(result, args)
    print(f"a_hat = {est.a_hat:.6f}")
    return 0


def cmd_run_lowdepth_sweep(args) -> int:
    noise = None
    if args.p > 0:
        noise = {"p": args.p, "p_ep": args.p_ep, "kind": args.kind}
    s = Scenario(
        name=f"lowdepth-{args.family}-{args.model}",
        kind="lowdepth-sweep", model=args.model,
        sweep=list(range(1, args.n_max + 1)), shots=args.shots,
        repeats=args.repeats, noise=noise,
        params={"family": args.family, "ep_errors": args.p_ep > 0},
        seed=args.seed)
    result = run_scenario(s)
    _out_result(result, args)
    return 0


def cmd_predict(args) -> int:
    rows = []
    rng = derive_rng(args.seed, 0)
    for n in range(1, args.n_max + 1):
        if args.kind == "serial-kickback":
            pred = serial_expected_kickback(n, args.p, args.theta)
            oracle = mc_serial_kickback(n, args.p, args.theta, args.samples, rng)
        elif args.kind == "parallel-kickback":
            pred = parallel_moments(n, args.p, args.theta)[0]
            oracle = mc_parallel_kickback(n, args.p, args.theta, args.samples, rng)[0]
        elif args.kind == "dampened-p1":
            pred = dampened_p1(n, args.p, args.theta)
            oracle = exact_parallel_p1(n, args.p, args.theta)
        elif args.kind == "serial-p1":
            pred = serial_lowdepth_p1(n, args.p, args.theta)
            oracle = mc_serial_p1(n, args.p, args.theta, args.samples, rng)
        elif args.kind == "persistent-walk":
            f = walk_forecast(n, args.p, args.theta)
            pred = f.d_tilde
            oracle = mc_persistent_walk(n, args.p, max(args.samples // 100, 100), rng)
        else:
            raise ValueError(f"unknown prediction kind {args.kind!r}")
        rows.append({"N": n, "prediction": pred, "oracle": oracle,
                     "abs_err": abs(pred - oracle)})
    result = ExperimentResult(
        Scenario(name=f"predict-{args.kind}", kind="predict",
                 sweep=list(range(1, args.n_max + 1)), shots=args.samples,
                 seed=args.seed),
        rows, metadata={"p": args.p, "theta": args.theta})
    _out_result(result, args)
    return 0


def cmd_calibrate_error(args) -> int:
    spec = get_model(args.model)
    prep = None
    if len(spec.good_states) == 1:
        prep = PrepRecipe("approx-no-measure", spec)
    rep = calibrate_error(spec, NoiseSpec(p=args.p, p_ep=args.p_ep,
                                          kind=args.kind, seed=args.seed),
                          shots=args.shots, seed=args.seed + 1, prep=prep)
    print(json.dumps({"p_hat_g": rep.p_hat_g, "p_hat_ep": rep.p_hat_ep,
                      "correction_factor": rep.correction_factor},
                     indent=1, sort_keys=True))
    return 0


def cmd_fig(args) -> int:
    scenarios = load_bundled_scenarios()
    if args.list or args.name is None:
        for name in scenarios:
            print(name)
        return 0
    if args.name not in scenarios:
        print(f"unknown figure scenario {args.name!r}", file=sys.stderr)
        return 2
    s = scenarios[args.name]
    if args.seed is not None:
        s.seed = args.seed
    if args.shots is not None:
        s.shots = args.shots
    result = run_scenario(s, out_dir=args.out or ".", fmt=args.format)
    for p in result.paths:
        print(p)
    return 0


def cmd_risk_model(args) -> int:
    study = run_risk_model(seed=args.seed, instantiations=args.instantiations,
                           shots=args.shots_per_instantiation)
    summary = {
        "exact_worst_case": study.exact_worst_case,
        "good_state_label": study.good_state_label,
        "errorfree_estimate": study.errorfree_estimate,
        "errorfree_top2_mass": study.errorfree_top2_mass,
        "corrected_raw_estimate": study.corrected_raw_estimate,
        "corrected_estimate": study.corrected_estimate,
        "corrected_top2_mass": study.corrected_top2_mass,
        "calibration_factor": study.calibration_factor,
        "standard_top_folded_bin": study.standard_top_folded_bin,
    }
    print(json.dumps(summary, indent=1, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "risk-model.csv"), study.rows)
        doc = {"summary": summary, "histograms": study.histograms,
               "metadata": study.metadata}
        with open(os.path.join(args.out, "risk-model.json"), "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(os.path.join(args.out, "risk-model.csv"))
        print(os.path.join(args.out, "risk-model.json"))
    return 0


def _common(p: argparse.ArgumentParser, shots_default=10000):
    p.add_argument("--seed", type=int, default=7949)
    p.add_argument("--shots", type=int, default=shots_default)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json", "both"), default="csv")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="phasekick", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze-grover", help="spectral summary of a model")
    p.add_argument("--model", default="demo3")
    p.add_argument("--good", type=int, nargs="*", default=None)
    _common(p)
    p.set_defaults(fn=cmd_analyze_grover)

    p = sub.add_parser("run-qae", help="one estimation run with decoding")
    p.add_argument("--family", default="serial-qpe")
    p.add_argument("--model", default="demo3")
    p.add_argument("--b", type=int, default=5)
    p.add_argument("--prep", choices=tuple(PREPS), default="exact")
    p.add_argument("--correction", default="none")
    p.add_argument("--correction-factor", type=float, default=1.0)
    _common(p)
    p.set_defaults(fn=cmd_run_qae)

    p = sub.add_parser("run-lowdepth-sweep", help="operator-count sweep")
    p.add_argument("--model", default="sweep3")
    p.add_argument("--family", choices=("serial", "parallel"), default="serial")
    p.add_argument("--n-max", type=int, default=13)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--p-ep", type=float, default=0.0)
    p.add_argument("--kind", default="X")
    _common(p)
    p.set_defaults(fn=cmd_run_lowdepth_sweep)

    p = sub.add_parser("predict", help="closed forms vs sampling oracles")
    p.add_argument("--kind", default="serial-kickback")
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--theta", type=float, default=0.328827220074)
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--samples", type=int, default=10 ** 5)
    _common(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("calibrate-error", help="round-trip error estimation")
    p.add_argument("--model", default="demo3")
    p.add_argument("--p", type=float, default=0.2)
    p.add_argument("--p-ep", type=float, default=None)
    p.add_argument("--kind", default="X")
    _common(p, shots_default=5000)
    p.set_defaults(fn=cmd_calibrate_error)

    p = sub.add_parser("fig", help="run a bundled figure scenario")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--list", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.set_defaults(fn=cmd_fig)

    p = sub.add_parser("risk-model", help="the end-to-end business-risk study")
    p.add_argument("--instantiations", type=int, default=1000)
    p.add_argument("--shots-per-instantiation", type=int, default=100)
    p.add_argument("--seed", type=int, default=20257)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_risk_model)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SimulationBudgetError as err:
        print(f"budget exceeded: {err}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
