"""Command-line harness: analysis checks, batch simulation runs, preset listing.

`verify` runs the frequency-domain checks only; `run` performs them, then
integrates the scenario, writes trace/metric/response files into the output
directory, and gates its exit status on every enabled check.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DclinkError
from .inner import verify_inner_closure
from .lti import dc_gain, freq_response, log_grid
from .network import (
    equivalence_max_error,
    reduce_to_equivalent,
    sharing_bound,
    t_tilde_1,
    t_tilde_2,
)
from .outer import (
    build_generalized_plant,
    dc_gain_formulas,
    evaluate_controller,
    list_presets,
    load_preset,
    tracking_error_bounds,
)
from .scenario import NetworkScenario, parse_scenario, resolve_scenario_path
from .sim import simulate, steady_state_metrics, voltage_band_fraction

SHARE_RATIO_TOL = 0.02      # absolute, centralized steady-state sharing
INNER_CLOSURE_TOL = 1e-9
EQUIVALENCE_TOL = 1e-8
DC_IDENTITY_TOL = 1e-9


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: measured {self.measured:.6g} (limit {self.limit:.6g})"


class Report:
    def __init__(self):
        self.checks: list[Check] = []
        self.info: dict = {}

    def add(self, name: str, measured: float, limit: float, passed=None):
        ok = bool(measured <= limit) if passed is None else bool(passed)
        c = Check(name, ok, float(measured), float(limit))
        self.checks.append(c)
        print(c.line())

    def note(self, key: str, value):
        self.info[key] = value

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "measured": c.measured,
                    "limit": c.limit,
                }
                for c in self.checks
            ],
            "info": self.info,
            "all_passed": self.all_passed,
        }


def _analysis_checks(sc: NetworkScenario, report: Report) -> None:
    net = sc.net
    for k, unit in enumerate(net.units):
        err = verify_inner_closure(unit.params.L, unit.design)
        report.add(f"inner_closure_unit_{k + 1}", err, INNER_CLOSURE_TOL)

    for t, gammas in net.share.breakpoints:
        err = equivalence_max_error(net, gammas=gammas)
        report.add(f"equivalence_gamma_at_{t:g}s", err, EQUIVALENCE_TOL)

    eq = reduce_to_equivalent(net)
    gains = eq.dc_gains()
    formulas = dc_gain_formulas(net.ctrl, net.nominal.dprime)
    report.add("dc_gain_t_vref_v", abs(gains["t_vref_v"] - 1.0), DC_IDENTITY_TOL)
    report.add(
        "dc_gain_t_iref_v",
        abs(gains["t_iref_v"] - formulas["t_iref_v"]),
        DC_IDENTITY_TOL,
    )
    report.add("dc_gain_gv_s", abs(gains["gv_s"] - formulas["gv_s"]), DC_IDENTITY_TOL)

    t1 = abs(dc_gain(t_tilde_1(net)))
    t2 = abs(dc_gain(t_tilde_2(net)))
    report.add("t_tilde_1_dc", t1, 1.0)
    report.add("t_tilde_2_dc", t2, 1.0)
    report.note("droop_slope_t_iref_v_dc", gains["t_iref_v"])

    iref0 = sc.mode.iref if not sc.mode.centralized else sc.load.base_power / 250.0
    report.note(
        "e1_bound_centralized_V",
        tracking_error_bounds(net.ctrl, net.nominal.dprime, iref0, iref0, True),
    )
    report.note(
        "e1_bound_decentralized_V",
        tracking_error_bounds(net.ctrl, net.nominal.dprime, iref0, iref0, False),
    )

    if sc.preset is not None:
        plant = build_generalized_plant(
            net.nominal_gc(), net.nominal_gv(), net.nominal.dprime,
            net.ctrl.eta, sc.preset.weights,
        )
        res = evaluate_controller(plant, net.ctrl)
        report.add(
            "weighted_loop_stable",
            0.0 if res["stable"] else 1.0,
            0.0,
            passed=res["stable"] and np.isfinite(res["closed_weighted_norm"]),
        )
        report.note("closed_weighted_norm", res["closed_weighted_norm"])


def _write_freq_table(sc: NetworkScenario, out_dir: Path) -> None:
    eq = reduce_to_equivalent(sc.net)
    om = log_grid(1e-1, 1e6, 400)
    mags = {
        "t_vref_v": np.abs(freq_response(eq.t_vref_v, om).values),
        "t_iref_v": np.abs(freq_response(eq.t_iref_v, om).values),
        "gv_s": np.abs(freq_response(eq.gv_s, om).values),
    }
    with open(out_dir / "freq_response.csv", "w") as fh:
        fh.write("omega_rad_s,mag_t_vref_v,mag_t_iref_v,mag_gv_s\n")
        for i, w in enumerate(om):
            fh.write(
                f"{w:.17g},{mags['t_vref_v'][i]:.17g},"
                f"{mags['t_iref_v'][i]:.17g},{mags['gv_s'][i]:.17g}\n"
            )


def _simulation_checks(sc: NetworkScenario, report: Report, out_dir: Path) -> None:
    trace = simulate(
        sc.net, sc.load, sc.noise, sc.mode,
        horizon=sc.horizon, dt=sc.dt, log_every=sc.log_every,
    )
    trace.to_csv(out_dir / "trace.csv")
    eq = reduce_to_equivalent(sc.net)
    t_iref0 = dc_gain(eq.t_iref_v)
    gvs0 = dc_gain(eq.gv_s)

    windows = sc.windows or ((max(sc.horizon - 2.0, 0.0), sc.horizon),)
    metrics_out = []
    for w_idx, window in enumerate(windows):
        met = steady_state_metrics(trace, window, square_freq=sc.load.square_freq)
        tag = f"w{w_idx + 1}_{window[0]:g}-{window[1]:g}s"
        gammas = np.array(sc.net.share.gamma_at(0.5 * (window[0] + window[1])))
        if sc.mode.centralized:
            worst = float(np.max(np.abs(met["share_ratios"] - gammas)))
            report.add(f"share_ratios_{tag}", worst, SHARE_RATIO_TOL)
            mask = (trace.t >= window[0]) & (trace.t <= window[1])
            mean_iref = float(trace.iref[mask].mean())
            bound = tracking_error_bounds(
                sc.net.ctrl, sc.net.nominal.dprime, mean_iref, mean_iref, True
            )
            report.add(f"e1_centralized_bound_{tag}", met["e1_dc"], bound)
        # sharing-bound soundness for every pair, with a 3-sigma allowance for
        # sensor noise computed from the spread of the windowed gap series
        mask = (trace.t >= window[0]) & (trace.t <= window[1])
        n = int(mask.sum())
        for k in range(sc.net.m):
            for l in range(k + 1, sc.net.m):
                gap = met["scaled_current_gap"][k, l]
                bound = sharing_bound(
                    sc.net, k, l, met["abs_e1_mean"],
                    at_time=0.5 * (window[0] + window[1]),
                )
                scaled = trace.i_out[mask] / np.maximum(trace.gamma[mask], 1e-12)
                series = np.abs(scaled[:, k] - scaled[:, l])
                allowance = 3.0 * float(series.std()) / max(np.sqrt(n), 1.0)
                report.add(
                    f"sharing_bound_{k + 1}{l + 1}_{tag}", gap, bound + allowance
                )
        pred_offset = t_iref0 * (
            (sc.mode.iref if not sc.mode.centralized else
             float(trace.iload[mask].mean())) - float(trace.iload[mask].mean())
        ) - gvs0 * float(trace.iload[mask].mean())
        metrics_out.append(
            {
                "window": list(window),
                "V_mean": met["V_mean"],
                "V_p2p": met["V_p2p"],
                "V_p2p_steady": met["V_p2p_steady"],
                "share_ratios": list(map(float, met["share_ratios"])),
                "scaled_current_gap": met["scaled_current_gap"].tolist(),
                "e1_mean": met["e1_mean"],
                "abs_e1_mean": met["abs_e1_mean"],
                "sat_fraction": met["sat_fraction"],
                "band_violation_fraction": voltage_band_fraction(trace, window),
                "predicted_dc_offset_V": float(pred_offset),
                "measured_dc_offset_V": met["V_mean"] - trace.vref,
            }
        )
    report.note("windows", metrics_out)


def cmd_run(args) -> int:
    sc = parse_scenario(resolve_scenario_path(args.scenario))
    sc = _apply_overrides(sc, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = Report()
    try:
        _analysis_checks(sc, report)
        _write_freq_table(sc, out_dir)
        _simulation_checks(sc, report, out_dir)
    except DclinkError as exc:
        print(f"[FAIL] {type(exc).__name__}: {exc}")
        (out_dir / "metrics.json").write_text(
            json.dumps({"error": str(exc), "all_passed": False}, indent=2)
        )
        return 1
    (out_dir / "metrics.json").write_text(json.dumps(report.as_dict(), indent=2))
    print(f"outputs written to {out_dir}")
    return 0 if report.all_passed else 1


def _apply_overrides(sc: NetworkScenario, args) -> NetworkScenario:
    from dataclasses import replace

    from .sim import NoiseModel, SimMode

    changes = {}
    if args.mode:
        if args.mode == "centralized":
            changes["mode"] = SimMode.central()
        else:
            iref = args.iref if args.iref is not None else sc.mode.iref
            changes["mode"] = SimMode.decentral(iref)
    elif args.iref is not None:
        changes["mode"] = SimMode.decentral(args.iref) if not sc.mode.centralized \
            else sc.mode
    if args.dt is not None:
        changes["dt"] = args.dt
    if args.horizon is not None:
        changes["horizon"] = args.horizon
    if args.seed is not None:
        changes["noise"] = NoiseModel(
            sc.noise.dc_offsets, sc.noise.relative_noise, seed=args.seed
        )
    return replace(sc, **changes) if changes else sc


def cmd_verify(args) -> int:
    sc = parse_scenario(resolve_scenario_path(args.scenario))
    report = Report()
    try:
        _analysis_checks(sc, report)
    except DclinkError as exc:
        print(f"[FAIL] {type(exc).__name__}: {exc}")
        return 1
    return 0 if report.all_passed else 1


def cmd_presets(args) -> int:
    if args.action != "list":
        print("usage: dclink presets list", file=sys.stderr)
        return 2
    from .scenario import builtin_scenarios

    print("controller presets:")
    for name in list_presets():
        p = load_preset(name)
        print(f"  {name}: eta={p.controllers.eta}, "
              f"nominal L={p.nominal.L:g} H, C={p.nominal.C:g} F")
    print("bundled scenarios:")
    for name in builtin_scenarios():
        print(f"  {name}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dclink",
        description="Parallel DC-DC converter network analysis and simulation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="verify, simulate, and write outputs")
    p_run.add_argument("scenario")
    p_run.add_argument("--mode", choices=["centralized", "decentralized"])
    p_run.add_argument("--iref", type=float, help="decentralized reference current [A]")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--dt", type=float, help="integration step [s]")
    p_run.add_argument("--seed", type=int, help="noise seed override")
    p_run.add_argument("--horizon", type=float, help="simulation horizon [s]")
    p_run.set_defaults(func=cmd_run)

    p_ver = sub.add_parser("verify", help="frequency-domain checks only")
    p_ver.add_argument("scenario")
    p_ver.set_defaults(func=cmd_verify)

    p_pre = sub.add_parser("presets", help="preset registry")
    p_pre.add_argument("action", choices=["list"])
    p_pre.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DclinkError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
