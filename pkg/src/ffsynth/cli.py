"""Command line front end: scaled-schedule synthesis and verification.

Subcommands walk one pipeline to increasing depth:

  reference    solve and export the reference trajectory
  map          sample the phase residual, extract branches and gaps
  synthesize   plan the travel path, optimize bridges, emit the control
  verify       re-integrate every arm and score it against the target
  sta          eigenstate-following pipeline (requires scenario: sta)
  device       map the reference sweep onto the flux axis
  full         verify plus the device mapping

Exit codes: 0 success, 2 configuration problem, 3 synthesis or
construction failure, 4 verified fidelity below the required floor.

All outputs are deterministic: rerunning a config produces byte-identical
tables and summaries.  Numbers are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .analysis import trajectory_shift_analysis, verify_control
from .config import ConfigError, RunConfig, load_config
from .device import (
    FluxRangeError,
    TransmonSpec,
    coupling_strength,
    default_transmon_spec,
    ecc_for_coupling,
    flux_schedule_for,
    rwa_emulation_map,
    transmon_frequency,
)
from .drives import CosineSweepSpec, default_step_count, solve_reference
from .dynamics import TimeGrid, TwoLevelState
from .ffst import (
    LN_BETA_FLOOR,
    ControlSchedule,
    FfstPhaseModel,
    SynthesisError,
    alpha_scaled_control,
    build_magnification,
    detect_phase_gaps,
    extract_scts,
    naive_control,
    synthesize_control,
)
from .itt import (
    ConstructionError,
    OptimizerError,
    default_bridge_settings,
    optimize_virtual_trajectory,
    plan_through_gaps,
    plan_with_crossings,
)
from .sta import (
    StaPhaseModel,
    adiabatic_target,
    extract_sta_branches,
    synthesize_sta_control,
)
from .zerocurves import branch_touch_times, detect_gaps

DEPTH = {
    "reference": 0,
    "map": 1,
    "synthesize": 2,
    "verify": 3,
    "sta": 3,
    "device": 0,
    "full": 3,
}

SETTINGS_KIND = {
    "accelerate": "accelerate",
    "decelerate": "decelerate",
    "sta": "sta",
    "reference-only": "accelerate",
    "device-map": "accelerate",
}


def _write_table(path: str, header: list[str], columns) -> None:
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(
        path,
        data,
        fmt="%.17g",
        delimiter="\t",
        header="\t".join(header),
        comments="",
    )


def _write_summary(path: str, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _branch_record(b) -> dict:
    return {
        "id": b.branch_id,
        "t_start": float(b.t_start),
        "t_end": float(b.t_end),
        "start_phase": float(b.start_phase),
        "end_phase": float(b.end_phase),
        "full_span": bool(b.spans_full_domain()),
        "connected": bool(b.is_connected()),
    }


def _write_branches(path: str, scts) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("branch\tt\tf2\n")
        for b in scts:
            tt = b.times[b.valid]
            ff = b.f2_canonical[b.valid]
            for t, f in zip(tt, ff):
                fh.write("%s\t%.17g\t%.17g\n" % (b.branch_id, t, f))


def _write_beta_table(path: str, model, t_final: float) -> None:
    times = np.linspace(0.0, t_final, 501)
    phases = -np.pi + 2.0 * np.pi * np.arange(512) / 512
    c, d, phi0 = model.sine_params(times)
    beta = c[:, None] - d[:, None] * np.sin(phases[None, :] + phi0[:, None])
    ln_beta = np.log(np.maximum(np.abs(beta), LN_BETA_FLOOR))
    tcol = np.repeat(times, len(phases))
    pcol = np.tile(phases, len(times))
    _write_table(path, ["t", "f2", "ln_abs_beta"], [tcol, pcol, ln_beta.ravel()])


def _write_shift_table(path: str, series) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t\toverlap_x\toverlap_y\tdominant\n")
        for t, ox, oy, dom in zip(
            series.times, series.overlap_x, series.overlap_y, series.dominant
        ):
            fh.write("%.17g\t%.17g\t%.17g\t%s\n" % (t, ox, oy, dom))


def _drive_as_control(drive, label: str) -> ControlSchedule:
    dw = np.asarray(drive.delta_omega, dtype=float)
    return ControlSchedule(
        grid=drive.grid,
        delta_omega=dw,
        derivative=np.gradient(dw, drive.grid.h, edge_order=2),
        coupling=np.asarray(drive.coupling, dtype=float),
        delta_omega_mid=drive.delta_omega_mid,
        coupling_mid=drive.coupling_mid,
        label=label,
    )


def _bridge_settings(cfg: RunConfig, t_final: float):
    settings = default_bridge_settings(SETTINGS_KIND[cfg.scenario], t_final)
    overrides = {}
    if cfg.width_bounds is not None:
        overrides["width_bounds"] = cfg.width_bounds
    if cfg.center_slack is not None:
        overrides["center_slack"] = cfg.center_slack
    if cfg.bridge_mode is not None:
        overrides["mode"] = cfg.bridge_mode
    if cfg.amp_max is not None:
        overrides["amp_max"] = cfg.amp_max
    return replace(settings, **overrides) if overrides else settings


def _build_plan(cfg: RunConfig, scts, gaps, t_final: float):
    if cfg.plan_kind == "auto":
        return plan_through_gaps(scts, gaps, t_final)
    labeled = {b.branch_id: b for b in scts if b.spans_full_domain()}
    if "X" not in labeled or "Y" not in labeled:
        raise ConstructionError(
            f"crossing plan {cfg.plan_kind!r} needs the two full-span "
            "branches X and Y, which this run does not have"
        )
    touches = branch_touch_times(labeled["X"], labeled["Y"])
    if not touches:
        raise ConstructionError("no corridor found between the X and Y branches")
    if cfg.plan_kind == "vt-a":
        times = [touches[len(touches) // 2]]
    elif cfg.plan_kind == "vt-b":
        times = list(touches)
    else:
        times = sorted({min(touches, key=lambda c: abs(c - t)) for t in cfg.crossing_times})
    return plan_with_crossings(scts, times, t_final)


def _device_section(cfg: RunConfig, sweep_control, primary_control, out_dir: str):
    dev = cfg.device
    base = default_transmon_spec(dev.g_ghz)
    ej_max = base.ej_max if dev.ej_max is None else dev.ej_max
    ej_fixed = base.ej_fixed if dev.ej_fixed is None else dev.ej_fixed
    ec = base.ec if dev.ec is None else dev.ec
    asym = base.d if dev.d is None else dev.d
    if dev.ecc is not None:
        ecc = dev.ecc
    elif (dev.ej_max, dev.ej_fixed, dev.ec) == (None, None, None):
        ecc = base.ecc
    else:
        ecc = ecc_for_coupling(ej_max, ej_fixed, ec, ec, dev.g_ghz)
    spec = TransmonSpec(ej_max=ej_max, ej_fixed=ej_fixed, ec=ec, ecc=ecc, d=asym)

    wave = flux_schedule_for(sweep_control, spec, omega2=dev.omega2, g_phys=dev.g_ghz)
    _write_table(
        os.path.join(out_dir, "device_reference.tsv"),
        ["t_ns", "flux"],
        [wave.grid.times, wave.flux],
    )
    rwa = rwa_emulation_map(sweep_control)
    section = {
        "band_ghz": [
            float(transmon_frequency(spec.ej_max * spec.d, spec.ec)),
            float(transmon_frequency(spec.ej_max, spec.ec)),
        ],
        "omega2_ghz": float(
            dev.omega2
            if dev.omega2 is not None
            else transmon_frequency(spec.ej_fixed, spec.ec)
        ),
        "coupling_ghz": float(coupling_strength(spec)),
        "duration_ns": float(wave.grid.t_end),
        "flux_range": [float(np.min(wave.flux)), float(np.max(wave.flux))],
        "spec": {
            "ej_max": float(spec.ej_max),
            "ej_fixed": float(spec.ej_fixed),
            "ec": float(spec.ec),
            "ecc": float(spec.ecc),
            "d": float(spec.d),
            "g_ghz": float(dev.g_ghz),
        },
        "rwa": {k: (float(v) if isinstance(v, (int, float)) else v)
                for k, v in rwa.metadata.items()},
    }
    if primary_control is not None:
        try:
            cwave = flux_schedule_for(
                primary_control, spec, omega2=dev.omega2, g_phys=dev.g_ghz
            )
            _write_table(
                os.path.join(out_dir, "device_control.tsv"),
                ["t_ns", "flux"],
                [cwave.grid.times, cwave.flux],
            )
            section["control_map"] = {
                "feasible": True,
                "flux_range": [float(np.min(cwave.flux)), float(np.max(cwave.flux))],
            }
        except FluxRangeError as exc:
            section["control_map"] = {"feasible": False, "reason": str(exc)}
    return section


def run_single(
    cfg: RunConfig,
    t_final: float,
    out_dir: str,
    depth: int,
    do_device: bool,
    stage: str,
) -> dict:
    """One scenario at one duration; writes tables and returns the summary."""
    os.makedirs(out_dir, exist_ok=True)
    summary: dict = {
        "schema_version": cfg.schema_version,
        "stage": stage,
        "scenario": cfg.scenario,
        "t_ref": float(cfg.t_ref),
        "t_final": float(t_final),
        "delta_omega0": float(cfg.delta_omega0),
    }
    is_sta = cfg.scenario == "sta"
    if cfg.scenario == "device-map":
        depth = 0

    # reference stage: the trajectory everything else is scored against
    if is_sta:
        sweep = CosineSweepSpec(cfg.delta_omega0, t_final)
        n_ref = cfg.reference_steps or default_step_count(t_final)
        sta_model = StaPhaseModel(sweep)
        ref = solve_reference(
            sweep, TimeGrid(0.0, t_final, n_ref), initial=sta_model.initial_state()
        )
    else:
        sweep = CosineSweepSpec(cfg.delta_omega0, cfg.t_ref)
        n_ref = cfg.reference_steps or default_step_count(cfg.t_ref)
        sta_model = None
        ref = solve_reference(sweep, TimeGrid(0.0, cfg.t_ref, n_ref))
    _write_table(
        os.path.join(out_dir, "populations_reference.tsv"),
        ["t", "p1", "p2"],
        [ref.grid.times, ref.populations()[:, 0], ref.populations()[:, 1]],
    )
    p1_end, p2_end = ref.final_state.populations()
    summary["reference"] = {
        "n_steps": int(ref.grid.n_steps),
        "final_populations": [float(p1_end), float(p2_end)],
        "norm_drift": float(np.max(np.abs(ref.norms() - 1.0))),
    }

    prof = None
    model = None
    scts: list = []
    gaps: list = []
    if depth >= 1:
        n_ctrl = cfg.control_steps or default_step_count(t_final)
        grid_c = TimeGrid(0.0, t_final, n_ctrl)
        if is_sta:
            model = sta_model
            scts = extract_sta_branches(model, n_scan=cfg.scan_points)
            gaps = detect_gaps(model, scts, n_scan=cfg.scan_points)
        else:
            prof = build_magnification(cfg.t_ref, grid_c)
            model = FfstPhaseModel(ref, prof)
            scts = extract_scts(ref, prof, n_scan=cfg.scan_points)
            gaps = detect_phase_gaps(ref, prof, scts, n_scan=cfg.scan_points)
        _write_beta_table(os.path.join(out_dir, "beta_map.tsv"), model, t_final)
        _write_branches(os.path.join(out_dir, "branches.tsv"), scts)
        summary["branches"] = [_branch_record(b) for b in scts]
        summary["gaps"] = [
            {"t_start": float(g.t_start), "t_end": float(g.t_end), "width": float(g.width)}
            for g in gaps
        ]

    control = None
    if depth >= 2:
        plan = _build_plan(cfg, scts, gaps, t_final)
        settings = _bridge_settings(cfg, t_final)
        if plan.n_bridges == 0 and cfg.bridge_mode is None:
            # with nothing to bridge, follow the planned branch directly
            settings = replace(settings, mode="local")
        vt, cost = optimize_virtual_trajectory(
            plan,
            model,
            grid_c,
            settings,
            init=cfg.bridge_init,
            n_cost=cfg.cost_points,
        )
        if is_sta:
            control = synthesize_sta_control(vt, model, grid_c, label="sta")
            alpha_nodes = np.ones_like(grid_c.times)
            lam_nodes = grid_c.times
        else:
            control = synthesize_control(vt, ref, prof, label="itt")
            alpha_nodes = prof.alpha_at(grid_c.times)
            lam_nodes = prof.lambda_at(grid_c.times)
        _write_table(
            os.path.join(out_dir, "control.tsv"),
            ["t", "delta_omega", "derivative", "coupling", "f2", "alpha", "lambda"],
            [
                grid_c.times,
                control.delta_omega,
                control.derivative,
                control.coupling,
                vt.f2,
                alpha_nodes,
                lam_nodes,
            ],
        )
        summary["plan"] = {
            "kind": cfg.plan_kind,
            "branches": [b.branch_id for b in plan.branches],
            "crossings": [[float(lo), float(hi)] for lo, hi in plan.crossings],
        }
        summary["bridges"] = [
            {"center": c, "width": w, "amplitude": a} for c, w, a in vt.bridge_params
        ]
        summary["cost"] = {
            "integrated_residual": float(cost.integrated_residual),
            "per_gap_residual": [float(v) for v in cost.per_gap_residual],
            "evaluations": int(cost.evaluations),
        }
        summary["bridge_mode"] = settings.mode

    if depth >= 3:
        if is_sta:
            initial = sta_model.initial_state()
            target = adiabatic_target(sweep, grid_c).state
            arms = [control]
            if "unmodified" in cfg.baselines:
                arms.append(synthesize_sta_control(None, sta_model, grid_c, label="unmodified"))
        else:
            initial = TwoLevelState(1.0 + 0.0j, 0.0j)
            target = ref.final_state
            arms = [control]
            if "naive" in cfg.baselines:
                arms.append(naive_control(ref, prof))
            if "alpha-scaled" in cfg.baselines:
                arms.append(alpha_scaled_control(ref, prof))
        fidelities = {}
        primary_report = None
        for arm in arms:
            report = verify_control(arm, initial, target, label=arm.label)
            if primary_report is None:
                primary_report = report
            fidelities[arm.label] = float(report.fidelity)
            _write_table(
                os.path.join(out_dir, f"populations_{arm.label}.tsv"),
                ["t", "p1", "p2"],
                [
                    arm.grid.times,
                    report.population_series[:, 0],
                    report.population_series[:, 1],
                ],
            )
        summary["fidelities"] = fidelities
        summary["target_populations"] = [float(v) for v in target.populations()]

        labeled = {b.branch_id for b in scts}
        if not is_sta and {"X", "Y"} <= labeled:
            series = trajectory_shift_analysis(
                primary_report.trajectory, scts, ref, prof
            )
            _write_shift_table(os.path.join(out_dir, "shifts.tsv"), series)
            summary["shift_analysis"] = {
                "count": int(series.shift_count),
                "times": [float(t) for t in series.shift_times],
            }

        floor = cfg.require_fidelity
        if floor is not None:
            primary = fidelities[control.label]
            summary["require_fidelity"] = float(floor)
            summary["fidelity_ok"] = bool(primary >= floor)

    if do_device:
        sweep_control = _drive_as_control(ref.drive, "reference")
        summary["device"] = _device_section(cfg, sweep_control, control, out_dir)

    _write_summary(os.path.join(out_dir, "summary.json"), summary)
    return summary


def run_pipeline(cfg: RunConfig, out_dir: str, stage: str, threads: int) -> dict:
    """Fan a sweep out over t_final values; single runs write in place."""
    depth = DEPTH[stage]
    do_device = stage in ("device", "full") or (
        cfg.scenario == "device-map" and stage != "reference"
    )
    if len(cfg.t_final) == 1:
        return run_single(cfg, cfg.t_final[0], out_dir, depth, do_device, stage)

    os.makedirs(out_dir, exist_ok=True)
    runs: dict[str, dict] = {}
    errors: list[tuple[float, Exception]] = []

    def one(tf: float) -> tuple[float, dict]:
        sub = os.path.join(out_dir, "tf-%g" % tf)
        return tf, run_single(cfg, tf, sub, depth, do_device, stage)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = {tf: pool.submit(one, tf) for tf in cfg.t_final}
        for tf in cfg.t_final:
            try:
                _, summary = futures[tf].result()
                runs["%g" % tf] = summary
            except Exception as exc:
                errors.append((tf, exc))
    if errors:
        raise errors[0][1]

    aggregate = {
        "schema_version": cfg.schema_version,
        "stage": stage,
        "scenario": cfg.scenario,
        "sweep": ["%g" % tf for tf in cfg.t_final],
        "runs": runs,
    }
    _write_summary(os.path.join(out_dir, "summary.json"), aggregate)
    return aggregate


def _collect_fidelity_ok(summary: dict) -> bool:
    if "runs" in summary:
        return all(_collect_fidelity_ok(s) for s in summary["runs"].values())
    return bool(summary.get("fidelity_ok", True))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffsynth",
        description="Synthesize and verify time-scaled detuning schedules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("reference", "solve and export the reference trajectory"),
        ("map", "sample the phase residual and extract branches"),
        ("synthesize", "optimize the travel path and emit the control"),
        ("verify", "re-integrate every arm and score it"),
        ("sta", "eigenstate-following pipeline (scenario: sta)"),
        ("device", "map the reference sweep onto the flux axis"),
        ("full", "verify plus the device mapping"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument(
            "--require-fidelity",
            type=float,
            default=None,
            help="fail with exit code 4 if the primary arm scores below this",
        )
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker threads for sweep fan-out",
        )
        p.add_argument(
            "--seed-free",
            action="store_true",
            help="assert that the run consumes no random numbers",
        )
    return parser


def _np_random_fingerprint():
    kind, keys, pos, has_gauss, gauss = np.random.get_state()
    return kind, keys.tobytes(), pos, has_gauss, gauss


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2

    if args.command == "sta" and cfg.scenario != "sta":
        print(
            f"the sta subcommand needs scenario: sta, got {cfg.scenario!r}",
            file=sys.stderr,
        )
        return 2
    if args.require_fidelity is not None:
        if not (0.0 < args.require_fidelity <= 1.0):
            print("--require-fidelity must be in (0, 1]", file=sys.stderr)
            return 2
        cfg = replace(cfg, require_fidelity=args.require_fidelity)

    out_dir = args.out if args.out is not None else cfg.out_dir

    if args.seed_free:
        py_state = random.getstate()
        np_state = _np_random_fingerprint()

    try:
        summary = run_pipeline(cfg, out_dir, args.command, args.threads)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (SynthesisError, ConstructionError, OptimizerError, FluxRangeError) as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return 3

    if args.seed_free:
        if random.getstate() != py_state or _np_random_fingerprint() != np_state:
            print("seed-free assertion failed: RNG state changed", file=sys.stderr)
            return 1

    print(f"wrote {os.path.join(out_dir, 'summary.json')}")
    for key in ("fidelities",):
        if key in summary:
            for label, value in sorted(summary[key].items()):
                print(f"  {label}: {value:.6f}")
    if "runs" in summary:
        for tf, s in sorted(summary["runs"].items(), key=lambda kv: float(kv[0])):
            for label, value in sorted(s.get("fidelities", {}).items()):
                print(f"  t_final={tf} {label}: {value:.6f}")

    if not _collect_fidelity_ok(summary):
        print("fidelity below the required floor", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
