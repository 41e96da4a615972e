"""Travel plans, bridge assembly, endpoint pinning, and the search."""

from __future__ import annotations

import numpy as np
import pytest

from ffsynth import (
    BridgeSettings,
    ConstructionError,
    OptimizerError,
    TravelPlan,
    build_virtual_trajectory,
    default_bridge_params,
    default_bridge_settings,
    itt_cost,
    optimize_virtual_trajectory,
    plan_through_gaps,
    plan_with_crossings,
    wrap_phase,
)


class TestBridgeSettings:
    def test_defaults_per_kind(self):
        dec = default_bridge_settings("decelerate", 1.1)
        acc = default_bridge_settings("accelerate", 0.9)
        sta = default_bridge_settings("sta", 20.0)
        assert dec.mode == "local" and acc.mode == "local"
        assert sta.mode == "detached"
        assert dec.width_bounds == (0.01, 0.05)
        assert sta.width_bounds[1] == 20.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            default_bridge_settings("sideways", 1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            BridgeSettings(width_bounds=(0.05, 0.01), center_slack=0.1)
        with pytest.raises(ValueError):
            BridgeSettings(width_bounds=(0.01, 0.05), center_slack=0.0)
        with pytest.raises(ValueError):
            BridgeSettings(width_bounds=(0.01, 0.05), center_slack=0.1, mode="x")


class TestPlans:
    def test_chain_spans_all_gaps(self, accel):
        plan = accel.plan
        assert plan.n_bridges == len(accel.gaps) == 3
        assert len(plan.branches) == 4
        assert plan.branches[0].t_start < 0.02 * accel.t_final
        for (lo, hi), gap in zip(plan.crossings, accel.gaps):
            assert lo == gap.t_start and hi == gap.t_end

    def test_crossing_plan_alternates(self, decel_b):
        ids = [b.branch_id for b in decel_b.plan.branches]
        assert ids == ["X", "Y", "X", "Y"]
        assert all(lo == hi for lo, hi in decel_b.plan.crossings)

    def test_crossing_plan_needs_two_full_span(self, accel):
        with pytest.raises(ConstructionError, match="full-span"):
            plan_with_crossings(accel.scts, [0.5], accel.t_final)

    def test_crossing_inside_domain(self, decel_a):
        with pytest.raises(ConstructionError, match="inside"):
            plan_with_crossings(decel_a.scts, [1.2], decel_a.t_final)

    def test_branch_bridge_count_coupled(self, decel_a):
        labeled = {b.branch_id: b for b in decel_a.scts}
        with pytest.raises(ConstructionError, match="branch"):
            TravelPlan(
                branches=(labeled["X"],), crossings=((0.9, 0.9),), t_final=1.1
            )

    def test_chain_requires_start_branch(self, decel_a):
        with pytest.raises(ConstructionError, match="t = 0"):
            plan_through_gaps([], [], decel_a.t_final)


class TestDefaultParams:
    def test_crossing_start_amplitude(self, decel_a):
        params = default_bridge_params(decel_a.plan, decel_a.settings)
        assert len(params) == 1
        center, width, amp = params[0]
        assert center == pytest.approx(decel_a.plan.crossings[0][0])
        assert width == 0.02  # zero-width crossing gets the fixed seed
        x, y = decel_a.plan.branches
        expected = wrap_phase(y.values_at(center) - x.values_at(center))
        assert amp == pytest.approx(float(expected))

    def test_gap_start_amplitude(self, accel):
        params = default_bridge_params(accel.plan, accel.settings)
        for (center, width, amp), gap, nxt, prev in zip(
            params, accel.gaps, accel.plan.branches[1:], accel.plan.branches[:-1]
        ):
            assert center == pytest.approx(gap.midpoint)
            assert width == pytest.approx(0.5 * gap.width)
            assert amp == pytest.approx(
                float(wrap_phase(nxt.start_phase - prev.end_phase))
            )

    def test_detached_starts_at_zero(self, sta20):
        params = default_bridge_params(sta20.plan, sta20.settings)
        assert params[0][2] == 0.0


class TestVirtualTrajectory:
    def test_endpoints_exactly_zero(self, decel_a, decel_b, accel, sta20):
        for bundle in (decel_a, decel_b, accel, sta20):
            assert bundle.vt.f2[0] == 0.0
            assert bundle.vt.f2[-1] == 0.0

    def test_lift_wraps_to_canonical(self, decel_a):
        vt = decel_a.vt
        assert np.allclose(wrap_phase(vt.f2_lift), vt.f2, atol=1e-12)

    def test_values_at_matches_grid_samples(self, decel_a):
        vt = decel_a.vt
        again = vt.values_at(vt.grid.times)
        assert np.array_equal(again, vt.f2_lift)

    def test_segments_tile_the_run(self, accel):
        segs = accel.vt.segments
        assert segs[0][0][0] == 0.0
        assert segs[-1][0][1] == pytest.approx(accel.t_final)
        for (a, b), _ in segs:
            assert a <= b
        for ((_, b), _), ((a2, _), _) in zip(segs[:-1], segs[1:]):
            assert a2 == pytest.approx(b)
        names = [name for _, name in segs]
        assert sum(name.startswith("bridge-") for name in names) == 3

    def test_amplitude_bound_enforced(self, decel_a):
        big = [(0.9, 0.02, 20.0)]
        with pytest.raises(ConstructionError, match="unreachable"):
            build_virtual_trajectory(
                decel_a.plan, big, decel_a.grid, decel_a.settings
            )

    def test_param_count_checked(self, decel_a):
        with pytest.raises(ConstructionError, match="parameters"):
            build_virtual_trajectory(
                decel_a.plan, [(0.9, 0.02, 0.1)] * 2, decel_a.grid, decel_a.settings
            )


class TestOptimizer:
    def test_never_worse_than_the_seed(self, decel_a):
        seed = default_bridge_params(decel_a.plan, decel_a.settings)
        vt0 = build_virtual_trajectory(
            decel_a.plan, seed, decel_a.grid, decel_a.settings
        )
        start = itt_cost(vt0, decel_a.model).integrated_residual
        assert decel_a.cost.integrated_residual <= start + 1e-12

    def test_deterministic(self, decel_a):
        vt2, cost2 = optimize_virtual_trajectory(
            decel_a.plan, decel_a.model, decel_a.grid, decel_a.settings
        )
        assert vt2.bridge_params == decel_a.vt.bridge_params
        assert cost2.integrated_residual == decel_a.cost.integrated_residual

    def test_evaluation_budget(self, decel_a, decel_b, accel, sta20, sta10):
        for bundle in (decel_a, decel_b, accel, sta20, sta10):
            assert 0 < bundle.cost.evaluations <= 2000

    def test_no_bridges_returns_branch_path(self, sta30):
        assert sta30.cost.evaluations == 0
        branch = sta30.plan.branches[0]
        mid_t = np.array([15.0])
        assert sta30.vt.values_at(mid_t)[0] == pytest.approx(
            float(branch.values_at(mid_t)[0]), abs=0.05
        )

    def test_per_gap_decomposition(self, accel):
        report = accel.cost
        assert len(report.per_gap_residual) == 3
        assert all(v >= 0 for v in report.per_gap_residual)
        assert sum(report.per_gap_residual) <= report.integrated_residual + 1e-12

    def test_nan_seed_raises(self, decel_a):
        with pytest.raises(OptimizerError, match="non-finite"):
            optimize_virtual_trajectory(
                decel_a.plan,
                decel_a.model,
                decel_a.grid,
                decel_a.settings,
                init=[(np.nan, 0.02, 0.1)],
            )

    def test_init_length_checked(self, decel_a):
        with pytest.raises(ConstructionError, match="initial parameters"):
            optimize_virtual_trajectory(
                decel_a.plan,
                decel_a.model,
                decel_a.grid,
                decel_a.settings,
                init=[(0.9, 0.02, 0.1)] * 3,
            )
