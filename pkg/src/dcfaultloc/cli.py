"""Command line: ``dcfaultloc simulate|locate|sweep|estimate``.

Exit codes: 0 success, 1 usage or configuration error, 2 no plateau found,
3 simulation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .config import ConfigError, ScenarioConfig, load_scenario, load_sweep
from .engine import CircuitError, SimulationError
from .estimator import estimation_diagnostics
from .locator import LocatorError, NoPlateauError, NoTriggerError, locate
from .measurement import MeasurementError, NoiseSpec, waveform_from_csv, waveform_to_csv
from .scenarios import ScenarioError
from .study import post_fault_window, remote_estimates, run_case, waveform_for

EXIT_OK, EXIT_CONFIG, EXIT_NO_PLATEAU, EXIT_SIMULATION = 0, 1, 2, 3


def _snr(text):
    if text.strip().lower() in ("inf", "+inf", "none", "off"):
        return math.inf
    return float(text)


def _load_config(args) -> ScenarioConfig:
    cfg = load_scenario(args.config) if getattr(args, "config", None) else ScenarioConfig()
    if getattr(args, "sample_rate", None) is not None:
        cfg = replace(cfg, sample_rate=args.sample_rate)
    if getattr(args, "snr_db", None) is not None or getattr(args, "seed", None) is not None:
        cfg = replace(cfg, noise=NoiseSpec(cfg.noise.snr_db if args.snr_db is None else args.snr_db,
                                           cfg.noise.seed if args.seed is None else args.seed))
    if getattr(args, "window", None) is not None:
        cfg = replace(cfg, locator=replace(cfg.locator, window_samples=args.window))
    return cfg


def _emit(line_obj, out):
    text = json.dumps(line_obj, sort_keys=True, default=_json_default)
    if out in (None, "-"):
        print(text)
    else:
        with open(out, "a") as fh:
            fh.write(text + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def cmd_simulate(args):
    cfg = _load_config(args)
    w = waveform_for(cfg)
    text = waveform_to_csv(w, extra_meta={"fault_kind": cfg.fault.kind, "true_distance_km": repr(cfg.fault.distance_km)})
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _root_trace_csv(trace, path, fingerprint):
    with open(path, "w", newline="") as fh:
        fh.write(f"# fingerprint={fingerprint}\n")
        wr = csv.writer(fh)
        wr.writerow(["t", "root_a", "root_b", "valid", "alpha", "beta"])
        for row in zip(trace.t, trace.root_a, trace.root_b, trace.valid_mask, trace.alpha, trace.beta):
            wr.writerow([f"{row[0]:.15g}", f"{row[1]:.12g}", f"{row[2]:.12g}", int(row[3]),
                         f"{row[4]:.12g}", f"{row[5]:.12g}"])


def cmd_locate(args):
    cfg = _load_config(args)
    if args.waveform:
        w = waveform_from_csv(args.waveform)
        fingerprint = w.fingerprint
    else:
        w = waveform_for(cfg)
        fingerprint = cfg.fingerprint()
    true_d = args.true_distance if args.true_distance is not None else (
        cfg.fault.distance_km if (args.config or not args.waveform) else None)
    record = {"fingerprint": fingerprint, "window_samples": cfg.locator.window_samples,
              "fault_kind": cfg.fault.kind, "D1_km": cfg.topology.D1, "true_distance_km": true_d,
              "error_convention": "percent_error = 100*|d_hat-d|/D1"}
    try:
        res = locate(w, cfg.topology, cfg.fault.kind, cfg.locator, true_distance=true_d)
    except NoPlateauError as exc:
        cand = exc.candidate
        record.update(status="no_plateau", message=str(exc),
                      candidate_estimate_km=None if cand is None else cand.estimate,
                      candidate_duration_s=None if cand is None else cand.duration)
        if args.roots and exc.root_trace is not None:
            _root_trace_csv(exc.root_trace, args.roots, fingerprint)
        _emit(record, args.out)
        return EXIT_NO_PLATEAU
    record.update(status="ok", estimate_km=res.distance_estimate, absolute_error_km=res.absolute_error_km,
                  percent_error=res.percent_error, plateau_start_s=res.plateau.t_start,
                  plateau_end_s=res.plateau.t_end, plateau_duration_s=res.plateau.duration,
                  trigger_time_s=res.trigger_time, samples_used=res.samples_used)
    if args.roots:
        _root_trace_csv(res.root_trace, args.roots, fingerprint)
    _emit(record, args.out)
    return EXIT_OK


_SWEEP_COLUMNS = ["index", "kind", "distance_km", "resistance_ohm", "window", "sample_rate_hz", "snr_db", "seed",
                  "fingerprint", "estimate_km", "absolute_error_km", "percent_error", "plateau_duration_s",
                  "status", "message"]


def _sweep_one(job):
    index, cfg, params = job
    try:
        rep = run_case(cfg)
        row = rep.to_dict()
    except (SimulationError, CircuitError, ScenarioError, LocatorError, MeasurementError, ValueError) as exc:
        row = {"fingerprint": cfg.fingerprint(), "estimate": None, "absolute_error_km": None,
               "percent_error": None, "plateau_duration": None, "status": "failed", "message": str(exc),
               "timing": {}}
    return index, params, row


def sweep_jobs(spec):
    base = spec.base
    grid = itertools.product(spec.kinds, spec.distances, spec.resistances, spec.windows, spec.sample_rates,
                             spec.snr_db, spec.seeds)
    for index, (kind, d, rf, win, fs, snr, seed) in enumerate(grid):
        params = dict(kind=kind, distance_km=d, resistance_ohm=rf, window=win, sample_rate_hz=fs, snr_db=snr,
                      seed=seed)
        try:
            cfg = replace(base, fault=replace(base.fault, kind=kind, distance_km=d, resistance=rf),
                          locator=replace(base.locator, window_samples=win), sample_rate=fs,
                          noise=NoiseSpec(snr, seed))
        except ValueError as exc:
            cfg = exc
        yield index, cfg, params


def cmd_sweep(args):
    spec = load_sweep(args.config)
    if args.window is not None:
        spec.windows = [args.window]
    if args.seed is not None:
        spec.seeds = [args.seed]
    if args.sample_rate is not None:
        spec.sample_rates = [args.sample_rate]
    if args.snr_db is not None:
        spec.snr_db = [args.snr_db]
    print(f"sweep: {spec.size} runs", file=sys.stderr)
    os.makedirs(args.out, exist_ok=True)
    jobs = []
    results = {}
    for index, cfg, params in sweep_jobs(spec):
        if isinstance(cfg, Exception):
            results[index] = (params, {"status": "failed", "message": str(cfg), "timing": {}})
        else:
            jobs.append((index, cfg, params))
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for index, params, row in pool.map(_sweep_one, jobs):
                results[index] = (params, row)
    else:
        for job in jobs:
            index, params, row = _sweep_one(job)
            results[index] = (params, row)

    table = os.path.join(args.out, "sweep.csv")
    lines = os.path.join(args.out, "sweep.jsonl")
    # wall-clock timing lives in its own file so the result files stay byte-identical across reruns
    timings = os.path.join(args.out, "timing.csv")
    with open(table, "w", newline="") as fh, open(lines, "w") as jl, open(timings, "w", newline="") as tf:
        wr = csv.writer(fh)
        wr.writerow(_SWEEP_COLUMNS)
        tw = csv.writer(tf)
        tw.writerow(["index", "fingerprint", "t_simulate_s", "t_locate_s"])
        for index in sorted(results):
            params, row = results[index]
            timing = row.get("timing", {})
            wr.writerow([index, params["kind"], params["distance_km"], params["resistance_ohm"], params["window"],
                         params["sample_rate_hz"], params["snr_db"], params["seed"], row.get("fingerprint", ""),
                         _fmt(row.get("estimate")), _fmt(row.get("absolute_error_km")),
                         _fmt(row.get("percent_error")), _fmt(row.get("plateau_duration")), row.get("status"),
                         row.get("message", "")])
            payload = {"index": index, **params, **{k: v for k, v in row.items() if k != "timing"}}
            payload["snr_db"] = _json_number(payload["snr_db"])
            jl.write(json.dumps(payload, sort_keys=True, default=_json_default) + "\n")
            tw.writerow([index, row.get("fingerprint", ""), _fmt(timing.get("simulate")), _fmt(timing.get("locate"))])
    failed = sum(1 for _, row in results.values() if row.get("status") == "failed")
    print(f"sweep: wrote {len(results)} rows ({failed} failed) to {args.out}", file=sys.stderr)
    return EXIT_OK


def _json_number(x):
    return x if math.isfinite(x) else str(x)


def _fmt(x):
    return "" if x is None else f"{x:.12g}"


def cmd_estimate(args):
    cfg = _load_config(args)
    w = waveform_for(cfg, noisy=False)
    est = remote_estimates(w, cfg.topology, cfg.fault)
    window = post_fault_window(w, args.window_span)
    missing = [ch for ch in est if ch not in w]
    if missing:
        raise MeasurementError(f"waveform lacks validation channels {missing}")
    summary = {}
    cols = {"t": w.time, "i_dc1": w["i_dc1"]}
    for ch, i_hat in est.items():
        diag = estimation_diagnostics(i_hat, w[ch], window)
        summary[ch] = diag.nrmse
        cols[ch] = w[ch]
        cols[ch.replace("i_dc", "i_hat")] = i_hat
        cols[ch.replace("i_dc", "eps")] = diag.epsilon
    buf = io.StringIO()
    buf.write(f"# fingerprint={cfg.fingerprint()}\n")
    for ch, v in summary.items():
        buf.write(f"# nrmse_{ch}={v:.12g}\n")
    buf.write(",".join(cols) + "\n")
    np.savetxt(buf, np.column_stack(list(cols.values())), delimiter=",",
               fmt=["%.15g"] + ["%.12g"] * (len(cols) - 1))
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    print(json.dumps({"fingerprint": cfg.fingerprint(), "nrmse": summary}, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="dcfaultloc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, locate_flags=False):
        sp.add_argument("--config", help="scenario file (key = value)")
        sp.add_argument("--out", help="output path ('-' for stdout)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--sample-rate", type=float, dest="sample_rate")
        sp.add_argument("--snr-db", type=_snr, dest="snr_db")
        sp.add_argument("--window", type=int)
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("simulate", help="simulate a scenario and write the terminal waveform CSV")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("locate", help="locate the fault from a waveform CSV or a scenario file")
    common(sp)
    sp.add_argument("--waveform", help="waveform CSV written by 'simulate'")
    sp.add_argument("--roots", help="also write the per-window root trace CSV here")
    sp.add_argument("--true-distance", type=float, dest="true_distance", help="km, for error reporting")
    sp.set_defaults(func=cmd_locate)

    sp = sub.add_parser("sweep", help="run the cross-product of a sweep file")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("estimate", help="remote-current estimates and their error against simulation")
    common(sp)
    sp.add_argument("--window-span", type=float, default=100e-6, dest="window_span",
                    help="evaluation window after inception (s)")
    sp.set_defaults(func=cmd_estimate)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (SimulationError, CircuitError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except (NoPlateauError, NoTriggerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_PLATEAU
    except (ConfigError, ScenarioError, MeasurementError, LocatorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
