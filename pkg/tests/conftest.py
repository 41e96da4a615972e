"""Shared pipeline fixtures.

The end-to-end bundles are expensive (each one optimizes bridges and
re-integrates several controls), so they are built once per session and
shared by the module tests and the acceptance gate.
"""

from __future__ import annotations

from dataclasses import replace
from types import SimpleNamespace

import pytest

from ffsynth import (
    CosineSweepSpec,
    FfstPhaseModel,
    StaPhaseModel,
    TimeGrid,
    TwoLevelState,
    adiabatic_target,
    alpha_scaled_control,
    branch_touch_times,
    build_magnification,
    default_bridge_settings,
    default_step_count,
    detect_gaps,
    detect_phase_gaps,
    extract_scts,
    extract_sta_branches,
    naive_control,
    optimize_virtual_trajectory,
    plan_through_gaps,
    plan_with_crossings,
    solve_reference,
    synthesize_control,
    synthesize_sta_control,
    verify_control,
)


@pytest.fixture(scope="session")
def reference():
    """Canonical cosine-sweep trajectory: amplitude 30, duration 1."""
    return solve_reference(CosineSweepSpec(30.0, 1.0))


def _scaling_bundle(reference, t_final: float, plan_kind: str, settings_kind: str):
    grid = TimeGrid(0.0, t_final, default_step_count(t_final))
    prof = build_magnification(1.0, grid)
    model = FfstPhaseModel(reference, prof)
    scts = extract_scts(reference, prof)
    gaps = detect_phase_gaps(reference, prof, scts)
    touches = []
    if plan_kind == "auto":
        plan = plan_through_gaps(scts, gaps, t_final)
    else:
        labeled = {b.branch_id: b for b in scts}
        touches = branch_touch_times(labeled["X"], labeled["Y"])
        times = [touches[len(touches) // 2]] if plan_kind == "vt-a" else touches
        plan = plan_with_crossings(scts, times, t_final)
    settings = default_bridge_settings(settings_kind, t_final)
    vt, cost = optimize_virtual_trajectory(plan, model, grid, settings)
    control = synthesize_control(vt, reference, prof, label="itt")
    initial = TwoLevelState(1.0 + 0.0j, 0.0j)
    target = reference.final_state
    report = verify_control(control, initial, target)
    return SimpleNamespace(
        t_final=t_final,
        grid=grid,
        prof=prof,
        model=model,
        scts=scts,
        gaps=gaps,
        touches=touches,
        plan=plan,
        settings=settings,
        vt=vt,
        cost=cost,
        control=control,
        initial=initial,
        target=target,
        report=report,
    )


@pytest.fixture(scope="session")
def decel_a(reference):
    """Slowdown to T_F = 1.1 with a single median-corridor crossing."""
    return _scaling_bundle(reference, 1.1, "vt-a", "decelerate")


@pytest.fixture(scope="session")
def decel_b(reference):
    """Slowdown to T_F = 1.1 crossing at every corridor."""
    return _scaling_bundle(reference, 1.1, "vt-b", "decelerate")


@pytest.fixture(scope="session")
def accel(reference):
    """Speedup to T_F = 0.9 chaining across the root-free gaps."""
    return _scaling_bundle(reference, 0.9, "auto", "accelerate")


@pytest.fixture(scope="session")
def decel_baselines(reference, decel_a):
    naive = verify_control(
        naive_control(reference, decel_a.prof), decel_a.initial, decel_a.target
    )
    scaled = verify_control(
        alpha_scaled_control(reference, decel_a.prof), decel_a.initial, decel_a.target
    )
    return SimpleNamespace(naive=naive, alpha_scaled=scaled)


@pytest.fixture(scope="session")
def accel_baselines(reference, accel):
    naive = verify_control(
        naive_control(reference, accel.prof), accel.initial, accel.target
    )
    scaled = verify_control(
        alpha_scaled_control(reference, accel.prof), accel.initial, accel.target
    )
    return SimpleNamespace(naive=naive, alpha_scaled=scaled)


def _sta_bundle(duration: float):
    sweep = CosineSweepSpec(30.0, duration)
    model = StaPhaseModel(sweep)
    grid = TimeGrid(0.0, duration, default_step_count(duration))
    branches = extract_sta_branches(model)
    gaps = detect_gaps(model, branches)
    plan = plan_through_gaps(branches, gaps, duration)
    settings = default_bridge_settings("sta", duration)
    if plan.n_bridges == 0:
        settings = replace(settings, mode="local")
    vt, cost = optimize_virtual_trajectory(plan, model, grid, settings)
    control = synthesize_sta_control(vt, model, grid, label="sta")
    unmodified = synthesize_sta_control(None, model, grid, label="unmodified")
    initial = model.initial_state()
    target = adiabatic_target(sweep, grid).state
    report = verify_control(control, initial, target)
    report_unmodified = verify_control(unmodified, initial, target)
    return SimpleNamespace(
        duration=duration,
        sweep=sweep,
        model=model,
        grid=grid,
        branches=branches,
        gaps=gaps,
        plan=plan,
        settings=settings,
        vt=vt,
        cost=cost,
        control=control,
        unmodified=unmodified,
        initial=initial,
        target=target,
        report=report,
        report_unmodified=report_unmodified,
    )


@pytest.fixture(scope="session")
def sta30():
    return _sta_bundle(30.0)


@pytest.fixture(scope="session")
def sta20():
    return _sta_bundle(20.0)


@pytest.fixture(scope="session")
def sta10():
    return _sta_bundle(10.0)
