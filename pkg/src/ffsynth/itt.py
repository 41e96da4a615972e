"""Inter-trajectory travel: splicing zero-curve branches across gaps.

A virtual trajectory follows speed-controlled branches where they exist
and crosses gaps (or deliberate branch crossings) through Gaussian-bump
bridges.  Each bridge has three parameters (center, width, amplitude);
the bump rides on a monotone erf connector between the incoming and
outgoing branch lifts, with outgoing lifts re-aligned by whole turns so
the connector never sweeps a spurious 2 pi.  A final linear ramp pins
f2(0) = f2(T_F) = 0 exactly; the ramp is bounded by the branch sampling
resolution and is fidelity-neutral.

Bridge parameters are chosen by minimizing the integrated residual
|beta| along the path with a deterministic Nelder-Mead simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .dynamics import TimeGrid
from .zerocurves import TWO_PI, Gap, SpeedControlledTrajectory, wrap_phase

#: Largest admissible bridge amplitude, in radians.
AMP_MAX = 4.0 * np.pi

#: Fraction of the run duration within which a branch must start to
#: count as a continuation candidate.
CONTINUATION_WINDOW = 0.02


class ConstructionError(RuntimeError):
    """Raised when a virtual trajectory cannot be assembled."""


class OptimizerError(RuntimeError):
    """Raised when the bridge-parameter search produces a bad cost."""


@dataclass(frozen=True)
class BridgeSettings:
    """Bounds and family selection for the bridge builder.

    ``mode`` is "local" for the windowed branch-blend family or
    "detached" for a bump anchored to zero over the whole run (used when
    no branch reaches the domain edges near phase zero).
    """

    width_bounds: tuple[float, float]
    center_slack: float
    mode: str = "local"
    amp_max: float = AMP_MAX

    def __post_init__(self) -> None:
        lo, hi = self.width_bounds
        if not (0.0 < lo < hi):
            raise ValueError("width_bounds must satisfy 0 < lower < upper")
        if self.center_slack <= 0.0:
            raise ValueError("center_slack must be positive")
        if self.mode not in ("local", "detached"):
            raise ValueError(f"mode must be 'local' or 'detached', got {self.mode!r}")


def default_bridge_settings(kind: str, t_final: float) -> BridgeSettings:
    """Per-scenario bridge bounds.

    Deceleration crossings are narrow touches, acceleration gaps are
    wider, and the detached family needs room up to the full duration.
    """
    if kind == "decelerate":
        return BridgeSettings(width_bounds=(0.01, 0.05), center_slack=0.05)
    if kind == "accelerate":
        return BridgeSettings(width_bounds=(0.005, 0.2), center_slack=0.08)
    if kind == "sta":
        return BridgeSettings(
            width_bounds=(0.05, t_final),
            center_slack=t_final / 4.0,
            mode="detached",
        )
    raise ValueError(f"unknown bridge-settings kind {kind!r}")


@dataclass(frozen=True)
class TravelPlan:
    """Ordered branches to follow and the regions bridged between them.

    ``crossings`` holds one (lo, hi) interval per bridge; a deliberate
    crossing between coexisting branches has lo == hi.  The plan always
    has one more branch than bridges.
    """

    branches: tuple[SpeedControlledTrajectory, ...]
    crossings: tuple[tuple[float, float], ...]
    t_final: float

    def __post_init__(self) -> None:
        if len(self.branches) != len(self.crossings) + 1:
            raise ConstructionError(
                f"plan visits {len(self.branches)} branches but has "
                f"{len(self.crossings)} bridges; need exactly one more "
                f"branch than bridges"
            )

    @property
    def n_bridges(self) -> int:
        return len(self.crossings)


def plan_through_gaps(
    scts: list[SpeedControlledTrajectory],
    gaps: list[Gap],
    t_final: float,
) -> TravelPlan:
    """Default chain across root-free gaps.

    Starts on the branch nearest phase zero at t ~ 0; after each gap it
    continues on the branch starting at the gap's right edge whose far
    endpoint is nearest zero modulo 2 pi, breaking ties by the smallest
    phase travel.
    """
    window = CONTINUATION_WINDOW * t_final
    starters = [b for b in scts if b.t_start < window]
    if not starters:
        raise ConstructionError("no branch starts near t = 0")
    chain = [min(starters, key=lambda b: abs(wrap_phase(b.start_phase)))]
    for gap in gaps:
        cands = [
            b
            for b in scts
            if b is not chain[-1] and abs(b.t_start - gap.t_end) < window
        ]
        if not cands:
            raise ConstructionError(
                f"no branch continues after the gap ending at t = {gap.t_end:.6g}"
            )
        chain.append(
            min(
                cands,
                key=lambda b: (
                    round(abs(wrap_phase(b.end_phase)), 3),
                    abs(b.end_phase - b.start_phase),
                ),
            )
        )
    crossings = tuple((g.t_start, g.t_end) for g in gaps)
    return TravelPlan(branches=tuple(chain), crossings=crossings, t_final=t_final)


def plan_with_crossings(
    scts: list[SpeedControlledTrajectory],
    crossing_times: list[float],
    t_final: float,
) -> TravelPlan:
    """Alternate between two coexisting full-span branches.

    Requires exactly two branches covering the whole run (the X and Y
    trajectories); the path starts on X and swaps at every crossing.
    """
    full = [b for b in scts if b.spans_full_domain()]
    if len(full) != 2:
        raise ConstructionError(
            f"crossing plans need exactly 2 full-span branches, found {len(full)}"
        )
    by_end = sorted(full, key=lambda b: abs(wrap_phase(b.end_phase)))
    y, x = by_end[0], by_end[1]
    times = sorted(float(c) for c in crossing_times)
    if any(not (0.0 < c < t_final) for c in times):
        raise ConstructionError("crossing times must lie strictly inside the run")
    branches = tuple(x if i % 2 == 0 else y for i in range(len(times) + 1))
    crossings = tuple((c, c) for c in times)
    return TravelPlan(branches=branches, crossings=crossings, t_final=t_final)


def default_bridge_params(
    plan: TravelPlan, settings: BridgeSettings
) -> list[tuple[float, float, float]]:
    """Deterministic starting parameters for the bridge search.

    Center at the gap midpoint; width at half the gap length (a fixed
    0.02 for zero-width crossings); amplitude at the wrapped phase
    difference between the branches being joined.  The detached family
    starts from zero amplitude since its bump is not anchored to branch
    endpoints.
    """
    init = []
    for i, (lo, hi) in enumerate(plan.crossings):
        center = 0.5 * (lo + hi)
        width = 0.5 * (hi - lo) if hi > lo else 0.02
        if settings.mode == "detached":
            amp = 0.0
        elif hi > lo:
            amp = float(
                wrap_phase(plan.branches[i + 1].start_phase - plan.branches[i].end_phase)
            )
        else:
            amp = float(
                wrap_phase(
                    plan.branches[i + 1].values_at(center)
                    - plan.branches[i].values_at(center)
                )
            )
        init.append((center, width, amp))
    return init


def _flatten_params(params) -> np.ndarray:
    arr = np.asarray(params, dtype=float).reshape(-1)
    if arr.size % 3 != 0:
        raise ValueError("bridge parameters come in (center, width, amplitude) triples")
    return arr


def _assemble_lift(
    t_eval: np.ndarray,
    plan: TravelPlan,
    params: np.ndarray,
    settings: BridgeSettings,
) -> np.ndarray:
    """Raw spliced lift before endpoint pinning.  Total in its inputs:
    widths and centers outside bounds are clamped, never rejected, so
    the simplex search sees a flat (not discontinuous) landscape there.
    """
    t_f = plan.t_final
    sig_lo, sig_hi = settings.width_bounds

    if settings.mode == "detached":
        f = np.zeros_like(t_eval)
        for i in range(plan.n_bridges):
            c, sig, amp = params[3 * i : 3 * i + 3]
            sig = min(max(abs(sig), sig_lo), sig_hi)
            glo, ghi = plan.crossings[i]
            gc = 0.5 * (glo + ghi)
            c = min(max(c, gc - settings.center_slack), gc + settings.center_slack)
            g = np.exp(-((t_eval - c) ** 2) / (2.0 * sig**2))
            g0 = np.exp(-(c**2) / (2.0 * sig**2))
            g1 = np.exp(-((t_f - c) ** 2) / (2.0 * sig**2))
            f = f + amp * (g - (g0 + (g1 - g0) * t_eval / t_f))
        return f

    branches = plan.branches
    f = branches[0].values_at(t_eval)
    cur_shift = 0.0
    for i, (glo, ghi) in enumerate(plan.crossings):
        c, sig, amp = params[3 * i : 3 * i + 3]
        sig = min(max(abs(sig), sig_lo), sig_hi)
        gc = 0.5 * (glo + ghi)
        c = min(max(c, gc - settings.center_slack), gc + settings.center_slack)
        lo = max(0.0, min(c - 3.0 * sig, glo))
        hi = min(t_f, max(c + 3.0 * sig, ghi))
        # realign the outgoing branch by whole turns at the gap center
        fin_c = branches[i].values_at(gc) + cur_shift
        fout_c = branches[i + 1].values_at(gc)
        out_shift = -TWO_PI * np.round((fout_c - fin_c) / TWO_PI)

        z_lo = erf((lo - c) / (np.sqrt(2.0) * sig))
        z_hi = erf((hi - c) / (np.sqrt(2.0) * sig))
        w = np.clip(
            (erf((t_eval - c) / (np.sqrt(2.0) * sig)) - z_lo) / (z_hi - z_lo), 0.0, 1.0
        )
        w = np.where(t_eval <= lo, 0.0, np.where(t_eval >= hi, 1.0, w))

        g = np.exp(-((t_eval - c) ** 2) / (2.0 * sig**2))
        g_lo = np.exp(-((lo - c) ** 2) / (2.0 * sig**2))
        g_hi = np.exp(-((hi - c) ** 2) / (2.0 * sig**2))
        base = g_lo + (g_hi - g_lo) * (t_eval - lo) / (hi - lo)
        bump = np.where((t_eval > lo) & (t_eval < hi), g - base, 0.0)

        fi = branches[i].values_at(t_eval) + cur_shift
        fo = branches[i + 1].values_at(t_eval) + out_shift
        blend = fi * (1.0 - w) + fo * w + amp * bump
        f = np.where(t_eval <= lo, f, blend)
        cur_shift = out_shift
    return f


def _effective_params(
    plan: TravelPlan, params: np.ndarray, settings: BridgeSettings
) -> list[tuple[float, float, float]]:
    sig_lo, sig_hi = settings.width_bounds
    out = []
    for i in range(plan.n_bridges):
        c, sig, amp = params[3 * i : 3 * i + 3]
        sig = min(max(abs(sig), sig_lo), sig_hi)
        gc = 0.5 * (plan.crossings[i][0] + plan.crossings[i][1])
        c = min(max(c, gc - settings.center_slack), gc + settings.center_slack)
        out.append((float(c), float(sig), float(amp)))
    return out


def _bridge_windows(
    plan: TravelPlan, params: np.ndarray, settings: BridgeSettings
) -> list[tuple[float, float]]:
    if settings.mode == "detached":
        return [(0.0, plan.t_final)] * plan.n_bridges
    windows = []
    for (c, sig, _), (glo, ghi) in zip(
        _effective_params(plan, params, settings), plan.crossings
    ):
        lo = max(0.0, min(c - 3.0 * sig, glo))
        hi = min(plan.t_final, max(c + 3.0 * sig, ghi))
        windows.append((lo, hi))
    return windows


@dataclass(frozen=True, eq=False)
class VirtualTrajectory:
    """A spliced phase path sampled on a grid.

    ``f2`` is the canonical path (wrapped, with pi and -pi identified);
    ``f2_lift`` is the continuous unwrapped lift used for
    differentiation.  Both endpoints of ``f2`` are exactly zero.
    ``segments`` lists (time interval, source id) in order, where the
    source is a branch id or "bridge-<k>".
    """

    grid: TimeGrid
    f2: np.ndarray
    f2_lift: np.ndarray
    segments: tuple[tuple[tuple[float, float], str], ...]
    bridge_params: tuple[tuple[float, float, float], ...]

    _plan: TravelPlan = field(default=None, repr=False)
    _raw_params: np.ndarray = field(default=None, repr=False)
    _settings: BridgeSettings = field(default=None, repr=False)
    _ramp: tuple[float, float] = field(default=(0.0, 0.0), repr=False)

    def values_at(self, t) -> np.ndarray:
        """Continuous lift at arbitrary times, endpoint ramp included."""
        t = np.asarray(t, dtype=float)
        f = _assemble_lift(t, self._plan, self._raw_params, self._settings)
        e0, e1 = self._ramp
        return f - (e0 + (e1 - e0) * t / self._plan.t_final)


def build_virtual_trajectory(
    plan: TravelPlan,
    params,
    grid: TimeGrid,
    settings: BridgeSettings,
) -> VirtualTrajectory:
    """Assemble and endpoint-pin the spliced path on ``grid``.

    The pinning ramp removes the wrapped residuals of the raw lift at
    t = 0 and t = T_F (each bounded by the branch scan resolution), so
    the canonical path is exactly zero at both ends.
    """
    p = _flatten_params(params)
    if len(p) != 3 * plan.n_bridges:
        raise ConstructionError(
            f"expected {3 * plan.n_bridges} bridge parameters, got {len(p)}"
        )
    for i in range(plan.n_bridges):
        amp = p[3 * i + 2]
        if abs(amp) > settings.amp_max:
            raise ConstructionError(
                f"bridge {i} amplitude {amp:.4g} exceeds the bound "
                f"{settings.amp_max:.4g}; endpoints unreachable"
            )

    t = grid.times
    raw = _assemble_lift(t, plan, p, settings)
    e0 = float(wrap_phase(raw[0]))
    e1 = float(wrap_phase(raw[-1]))
    lift = raw - (e0 + (e1 - e0) * t / plan.t_final)
    if abs(wrap_phase(lift[0])) > 1e-9 or abs(wrap_phase(lift[-1])) > 1e-9:
        raise ConstructionError("endpoint pinning failed to reach phase zero")
    canonical = wrap_phase(lift)
    canonical[0] = 0.0
    canonical[-1] = 0.0

    windows = _bridge_windows(plan, p, settings)
    segments: list[tuple[tuple[float, float], str]] = []
    cursor = 0.0
    for i, (lo, hi) in enumerate(windows):
        if lo > cursor:
            segments.append(((cursor, lo), plan.branches[i].branch_id))
        segments.append(((max(lo, cursor), hi), f"bridge-{i}"))
        cursor = hi
    if cursor < plan.t_final:
        segments.append(((cursor, plan.t_final), plan.branches[-1].branch_id))

    return VirtualTrajectory(
        grid=grid,
        f2=canonical,
        f2_lift=lift,
        segments=tuple(segments),
        bridge_params=tuple(_effective_params(plan, p, settings)),
        _plan=plan,
        _raw_params=p,
        _settings=settings,
        _ramp=(e0, e1),
    )


@dataclass(frozen=True)
class IttCostReport:
    """Integrated path residual and its decomposition over bridges."""

    integrated_residual: float
    per_gap_residual: tuple[float, ...]
    evaluations: int

    def __post_init__(self) -> None:
        if not (self.integrated_residual >= 0.0):
            raise ValueError("integrated residual must be non-negative")


def itt_cost(
    vt: VirtualTrajectory,
    model,
    n_cost: int = 4000,
    evaluations: int = 1,
) -> IttCostReport:
    """Trapezoidal integral of |beta| along the path.

    ``model`` is any phase-residual model (FFST or eigenstate-following)
    exposing ``sine_params``.  The per-gap component restricts the same
    quadrature to each bridge window.
    """
    plan = vt._plan
    tt = np.linspace(0.0, plan.t_final, n_cost + 1)
    c, d, phi0 = model.sine_params(tt)
    f = vt.values_at(tt)
    absbeta = np.abs(c - d * np.sin(f + phi0))
    total = float(np.trapezoid(absbeta, tt))
    per_gap = []
    for lo, hi in _bridge_windows(plan, vt._raw_params, vt._settings):
        mask = (tt >= lo) & (tt <= hi)
        per_gap.append(float(np.trapezoid(absbeta[mask], tt[mask])))
    return IttCostReport(
        integrated_residual=total,
        per_gap_residual=tuple(per_gap),
        evaluations=evaluations,
    )


def optimize_virtual_trajectory(
    plan: TravelPlan,
    model,
    grid: TimeGrid,
    settings: BridgeSettings,
    init=None,
    n_cost: int = 4000,
    maxfev: int = 2000,
    xatol: float = 1e-6,
) -> tuple[VirtualTrajectory, IttCostReport]:
    """Minimize the integrated residual over bridge parameters.

    Deterministic Nelder-Mead with an explicit initial simplex; the
    default start follows ``default_bridge_params``.  A plan with no
    bridges returns the (pinned) branch path unchanged.
    """
    from scipy.optimize import minimize

    if plan.n_bridges == 0:
        vt = build_virtual_trajectory(plan, [], grid, settings)
        return vt, itt_cost(vt, model, n_cost=n_cost, evaluations=0)

    if init is None:
        init = default_bridge_params(plan, settings)
    p0 = _flatten_params(init)
    if len(p0) != 3 * plan.n_bridges:
        raise ConstructionError(
            f"expected {3 * plan.n_bridges} initial parameters, got {len(p0)}"
        )

    tt = np.linspace(0.0, plan.t_final, n_cost + 1)
    c, d, phi0 = model.sine_params(tt)
    t_f = plan.t_final
    detached = settings.mode == "detached"
    evals = [0]

    def cost(p: np.ndarray) -> float:
        evals[0] += 1
        raw = _assemble_lift(tt, plan, p, settings)
        e0 = wrap_phase(raw[0])
        e1 = wrap_phase(raw[-1])
        f = raw - (e0 + (e1 - e0) * tt / t_f)
        value = float(np.trapezoid(np.abs(c - d * np.sin(f + phi0)), tt))
        if not np.isfinite(value):
            raise OptimizerError(
                f"non-finite cost at bridge parameters {np.array2string(p)}"
            )
        return value

    sig_lo, sig_hi = settings.width_bounds
    simplex = [p0]
    for j in range(len(p0)):
        q = p0.copy()
        kind = j % 3
        if kind == 0:
            q[j] += t_f / 8.0 if detached else 0.25 * sig_hi
        elif kind == 1:
            q[j] += t_f / 8.0 if detached else 0.5 * (sig_hi - sig_lo)
        else:
            q[j] += -0.9 if detached else 0.3
        simplex.append(q)

    res = minimize(
        cost,
        p0,
        method="Nelder-Mead",
        options={
            "initial_simplex": np.asarray(simplex),
            "xatol": xatol,
            "fatol": 1e-12,
            "maxfev": maxfev,
        },
    )
    vt = build_virtual_trajectory(plan, res.x, grid, settings)
    report = itt_cost(vt, model, n_cost=n_cost, evaluations=evals[0])
    return vt, report
