"""Command-line runner: scenario -> trajectories, snapshots, reports.

Subcommands:
    run <scenario.toml>            full run: charge.csv, snapshot_<t>.csv,
                                   conservation.csv, report.json
    converge <scenario.toml> --dt-list 4e-3,2e-3,1e-3,5e-4
                                   dt-refinement study with fitted orders
    check-model <scenario.toml>    admissibility report only
    transform <scenario.toml> --unitary re,im,re,im,re,im,re,im
                                   covariance run in a conjugated frame

Exit codes: 0 ok, 2 config error, 3 solver failure, 4 invariant breach.
Timings go to stdout only; the on-disk artifacts are byte-deterministic for
a fixed scenario and seed.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .charge import ChargeMapInverter, NonConvergence, SingularJacobian, march_charge
from .diagnostics import (
    NonUnitary,
    check_invertibility,
    conservation_series,
    transform_profile,
    transform_representation,
)
from .field import make_domain_datum, snapshot, trace_jump_mean
from .scenario import Scenario, ScenarioError, fmt, load_scenario, write_csv

SCHEMA_VERSION = 1


def build_problem(scenario):
    model = scenario.build_model()
    phi = scenario.build_regular_profile()
    datum = make_domain_datum(model, phi)
    return model, datum


def _complex_pair(z):
    return [float(np.real(z)), float(np.imag(z))]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return _complex_pair(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _write_report(path, report):
    with open(path, "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _boundary_violation(traj, datum, times):
    model = traj.model
    rep = model.representation
    c = model.constants.c
    worst = 0.0
    for t in times:
        jump, mean = trace_jump_mean(traj, datum, t)
        res = 1j * c * (rep.s1 @ jump) - model.source(mean)
        worst = max(worst, float(np.linalg.norm(res) / (1.0 + np.linalg.norm(mean))))
    return worst


def run_scenario(scenario, out_dir=None, quiet=False):
    """Execute a scenario; returns (report, failures)."""
    out_dir = out_dir or scenario.output_dir
    if out_dir is None:
        raise ScenarioError("output.dir", "missing required field")
    os.makedirs(out_dir, exist_ok=True)

    def log(msg):
        if not quiet:
            print(msg)

    model, datum = build_problem(scenario)
    inverter = ChargeMapInverter(model)

    tic = time.perf_counter()
    traj = march_charge(model, datum, scenario.T, scenario.dt, inverter=inverter)
    log(f"charge march: {traj.t.size - 1} steps in {time.perf_counter() - tic:.2f}s")

    write_csv(
        os.path.join(out_dir, "charge.csv"),
        ["t", "re_q1", "im_q1", "re_q2", "im_q2",
         "re_xi1", "im_xi1", "re_xi2", "im_xi2"],
        [
            [t, q[0].real, q[0].imag, q[1].real, q[1].imag,
             xi[0].real, xi[0].imag, xi[1].real, xi[1].imag]
            for t, q, xi in zip(traj.t, traj.q, traj.xi)
        ],
    )

    gmin, gmax, gpts = scenario.snapshot_grid
    x_grid = np.linspace(gmin, gmax, gpts)
    tic = time.perf_counter()
    for t_req in scenario.snapshot_times:
        t = scenario.snap_time(t_req)
        fld = snapshot(traj, datum, x_grid, t)
        write_csv(
            os.path.join(out_dir, f"snapshot_{t:.6g}.csv"),
            ["x", "side", "re_psi1", "im_psi1", "re_psi2", "im_psi2"],
            [
                [x, str(s), p[0].real, p[0].imag, p[1].real, p[1].imag]
                for x, s, p in zip(fld.x, fld.side, fld.psi)
            ],
        )
    if scenario.snapshot_times:
        log(f"{len(scenario.snapshot_times)} snapshot(s) in "
            f"{time.perf_counter() - tic:.2f}s")

    times = scenario.conservation_time_list()
    tic = time.perf_counter()
    report_cons = conservation_series(
        traj, datum, times=times, include_energy=scenario.energy,
        window=scenario.window,
    )
    log(f"conservation series ({times.size} times) in "
        f"{time.perf_counter() - tic:.2f}s")
    header = ["t", "mass"] + (["energy"] if report_cons.energy is not None else [])
    rows = []
    for i, t in enumerate(report_cons.times):
        row = [t, report_cons.mass[i]]
        if report_cons.energy is not None:
            row.append(report_cons.energy[i])
        rows.append(row)
    write_csv(os.path.join(out_dir, "conservation.csv"), header, rows)

    boundary = _boundary_violation(traj, datum, times)
    inv_report = check_invertibility(model, seed=scenario.seed or 20240601)

    max_forcing = float(np.max(np.linalg.norm(traj.forcing, axis=1)))
    residual_limit = 10.0 * inverter.newton_tol * (1.0 + max_forcing)
    checks = scenario.checks
    failures = []
    if float(traj.residuals.max()) > residual_limit:
        failures.append("charge_residual")
    if boundary > checks["boundary_tol"]:
        failures.append("boundary_condition")
    if report_cons.mass_drift > checks["mass_drift_tol"]:
        failures.append("mass_drift")
    if report_cons.energy_drift is not None \
            and report_cons.energy_drift > checks["energy_drift_tol"]:
        failures.append("energy_drift")

    report = {
        "schema_version": SCHEMA_VERSION,
        "model": {"family": scenario.model_family,
                  "params": list(scenario.model_params)},
        "constants": {"hbar": scenario.constants.hbar, "c": scenario.constants.c,
                      "m": scenario.constants.m, "y": scenario.constants.y},
        "run": {"T": scenario.T, "dt": scenario.dt,
                "nodes": int(traj.t.size), "seed": scenario.seed},
        "charge": {
            "max_residual": float(traj.residuals.max()),
            "residual_limit": residual_limit,
            "final_q": [_complex_pair(traj.q[-1][0]), _complex_pair(traj.q[-1][1])],
        },
        "conservation": {
            "times": [float(t) for t in report_cons.times],
            "mass_drift": report_cons.mass_drift,
            "energy_drift": report_cons.energy_drift,
            "tail_bound": report_cons.tail_bound,
        },
        "boundary": {"max_violation": boundary,
                     "tolerance": checks["boundary_tol"]},
        "invertibility": {
            "verdict": inv_report.verdict,
            "method": inv_report.method,
            "note": inv_report.note,
            "witness": inv_report.witness,
            "min_criterion": inv_report.min_criterion,
        },
        "checks": {"passed": not failures, "failures": failures},
    }
    _write_report(os.path.join(out_dir, "report.json"), report)
    return report, failures


def convergence_study(scenario, dt_list, quiet=False, include_drifts=True):
    """March at each dt, compare against the finest, fit the order."""
    dt_list = list(dt_list)
    if len(dt_list) < 3:
        raise ScenarioError("dt-list", "need at least 3 dt values")
    if any(b >= a for a, b in zip(dt_list, dt_list[1:])):
        raise ScenarioError("dt-list", "must be strictly descending")
    model, datum = build_problem(scenario)
    dt_ref = dt_list[-1]
    rows = []
    forcing_ref = None
    ratios = [dt / dt_ref for dt in dt_list]
    nested = all(abs(r - round(r)) < 1e-9 for r in ratios)
    if nested:
        ref_traj = march_charge(model, datum, scenario.T, dt_ref)
        forcing_ref = ref_traj.forcing
    results = {}
    for dt in dt_list:
        if nested and dt != dt_ref:
            step = int(round(dt / dt_ref))
            traj = march_charge(model, datum, scenario.T, dt,
                                forcing=forcing_ref[::step])
        elif nested:
            traj = ref_traj
        else:
            traj = march_charge(model, datum, scenario.T, dt)
        results[dt] = traj
        if not quiet:
            print(f"dt={dt:g}: marched {traj.t.size - 1} steps")
    q_ref = results[dt_ref].q[-1]
    for dt in dt_list:
        err = float(np.linalg.norm(results[dt].q[-1] - q_ref))
        mass_drift = energy_drift = None
        if include_drifts:
            cons = conservation_series(
                results[dt], datum,
                times=np.linspace(0.0, scenario.T, 5),
                include_energy=scenario.energy, window=scenario.window,
            )
            mass_drift = cons.mass_drift
            energy_drift = cons.energy_drift
        rows.append({"dt": dt, "error_qT": err,
                     "mass_drift": mass_drift, "energy_drift": energy_drift})

    def fitted_order(key, skip_last):
        pts = [(r["dt"], r[key]) for r in rows if r[key] is not None]
        if skip_last:
            pts = pts[:-1]
        vals = np.array([v for _, v in pts])
        if len(pts) < 2 or np.max(vals) < 1e-13:
            return None  # exact to machine precision; no order to fit
        if np.any(vals <= 0.0):
            return None
        l_dt = np.log([d for d, _ in pts])
        l_e = np.log(vals)
        return float(np.polyfit(l_dt, l_e, 1)[0])

    orders = {
        "error_qT": fitted_order("error_qT", skip_last=True),
        "mass_drift": fitted_order("mass_drift", skip_last=False),
        "energy_drift": fitted_order("energy_drift", skip_last=False),
    }
    return {"rows": rows, "orders": orders, "dt_reference": dt_ref}


def covariance_run(scenario, u, quiet=False):
    """March a scenario in the standard and in a conjugated frame; the two
    charge trajectories must be related by the frame unitary."""
    model, datum = build_problem(scenario)
    traj = march_charge(model, datum, scenario.T, scenario.dt)

    model_t = transform_representation(model, u)
    phi_t = transform_profile(scenario.build_regular_profile(), u)
    datum_t = make_domain_datum(model_t, phi_t)
    traj_t = march_charge(model_t, datum_t, scenario.T, scenario.dt)

    expected = traj.q @ np.conj(u)  # rows u^dagger q
    deviation = float(np.max(np.linalg.norm(traj_t.q - expected, axis=1)))
    return {
        "deviation": deviation,
        "tolerance": 1e-9,
        "passed": deviation <= 1e-9,
        "unitary": [[_complex_pair(u[i, j]) for j in range(2)] for i in range(2)],
    }


def _parse_unitary(text):
    try:
        vals = [float(v) for v in text.replace(";", ",").split(",")]
    except ValueError:
        raise ScenarioError("--unitary", "expected 8 comma-separated reals") from None
    if len(vals) != 8:
        raise ScenarioError("--unitary", "expected 8 reals (row-major re,im pairs)")
    u = np.array([[vals[0] + 1j * vals[1], vals[2] + 1j * vals[3]],
                  [vals[4] + 1j * vals[5], vals[6] + 1j * vals[7]]])
    return u


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pointdirac",
        description="1-D Dirac dynamics with a point-concentrated nonlinearity",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario and export artifacts")
    p_run.add_argument("scenario")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--quiet", action="store_true")

    p_conv = sub.add_parser("converge", help="dt-refinement study")
    p_conv.add_argument("scenario")
    p_conv.add_argument("--dt-list", required=True,
                        help="comma-separated dt values, descending")
    p_conv.add_argument("--output-dir", default=None)
    p_conv.add_argument("--quiet", action="store_true")

    p_chk = sub.add_parser("check-model", help="admissibility report only")
    p_chk.add_argument("scenario")

    p_tr = sub.add_parser("transform", help="covariance run in a conjugated frame")
    p_tr.add_argument("scenario")
    p_tr.add_argument("--unitary", required=True,
                      help="8 reals: row-major re,im pairs of the 2x2 unitary")
    p_tr.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.command == "run":
            report, failures = run_scenario(scenario, args.output_dir, args.quiet)
            if failures:
                print(f"invariant breach: {', '.join(failures)}", file=sys.stderr)
                return 4
            if not args.quiet:
                print("ok")
            return 0
        if args.command == "converge":
            try:
                dt_list = [float(v) for v in args.dt_list.split(",")]
            except ValueError:
                raise ScenarioError("dt-list", "expected comma-separated numbers") from None
            study = convergence_study(scenario, dt_list, quiet=args.quiet)
            out_dir = args.output_dir or scenario.output_dir
            if out_dir:
                os.makedirs(out_dir, exist_ok=True)
                write_csv(
                    os.path.join(out_dir, "convergence.csv"),
                    ["dt", "error_qT", "mass_drift", "energy_drift"],
                    [
                        [r["dt"], r["error_qT"],
                         "" if r["mass_drift"] is None else fmt(r["mass_drift"]),
                         "" if r["energy_drift"] is None else fmt(r["energy_drift"])]
                        for r in study["rows"]
                    ],
                )
                _write_report(os.path.join(out_dir, "convergence_report.json"), study)
            for r in study["rows"]:
                line = f"dt={r['dt']:.6g} error_qT={r['error_qT']:.6e}"
                if r["mass_drift"] is not None:
                    line += f" mass_drift={r['mass_drift']:.6e}"
                if r["energy_drift"] is not None:
                    line += f" energy_drift={r['energy_drift']:.6e}"
                print(line)
            o = study["orders"]
            print("fitted orders: "
                  + ", ".join(f"{k}={v:.3f}" if v is not None else f"{k}=exact"
                              for k, v in o.items()))
            return 0
        if args.command == "check-model":
            model = scenario.build_model()
            rep = check_invertibility(model, seed=scenario.seed or 20240601)
            print(json.dumps(_jsonable({
                "family": scenario.model_family,
                "verdict": rep.verdict,
                "method": rep.method,
                "note": rep.note,
                "witness": rep.witness,
                "min_criterion": rep.min_criterion,
            }), indent=2, sort_keys=True))
            return 0 if rep.verdict == "pass" else 4
        if args.command == "transform":
            u = _parse_unitary(args.unitary)
            result = covariance_run(scenario, u, quiet=args.quiet)
            print(json.dumps(_jsonable(result), indent=2, sort_keys=True))
            return 0 if result["passed"] else 4
    except (ScenarioError, NonUnitary) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (NonConvergence, SingularJacobian) as err:
        where = "" if err.time_index is None else f" at time index {err.time_index}"
        print(f"solver failure{where}: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
