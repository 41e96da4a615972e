"""Zero curves of sinusoidal phase residuals.

Both control-synthesis engines in this package reduce the condition
"the second-level population follows the prescribed dynamics" to a
residual of the common form

    residual(t, f) = C(t) - D(t) * sin(f + phi0(t)),   D >= 0,

whose zero set in the (t, f) plane consists of curves ("branches").
This module solves the residual for f in closed form, links per-time
roots into continuous branches, and detects the time intervals where no
root exists.

Phases are canonicalized to [-pi, pi); pi and -pi label the same
physical point because the residual is 2*pi periodic in f.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

#: Below this residual amplitude D the residual is flat in f: every phase
#: is a root when C vanishes as well, and no phase is when it does not.
DEGENERATE_FLOOR = 1e-12

#: Largest phase step (radians) the branch linker will follow between
#: consecutive scan samples.
LINKING_THRESHOLD = 0.2


def wrap_phase(x):
    """Map angles to the canonical interval [-pi, pi)."""
    return (np.asarray(x) + np.pi) % TWO_PI - np.pi


class PhaseResidualModel(Protocol):
    """Anything that exposes the sinusoidal residual of a scenario."""

    t_final: float

    def sine_params(self, t): ...

    def residual(self, t, f): ...


@dataclass(frozen=True)
class PhaseRoots:
    """Roots of the residual at one time.

    ``degenerate`` marks times where the residual vanishes identically
    (every phase is a root); ``singular`` marks times where the amplitude
    D vanishes but the offset C does not, so no phase can be a root.
    """

    t: float
    roots: tuple[float, ...]
    degenerate: bool = False
    singular: bool = False


def sine_roots(c: float, d: float, phi0: float) -> PhaseRoots:
    """Solve C = D sin(f + phi0) for f in [-pi, pi).

    Returns zero, one, or two roots.  The pair collapses to a single root
    when |C/D| sits within 1e-12 of 1, and to none when |C/D| > 1.
    """
    if d < DEGENERATE_FLOOR:
        if abs(c) <= DEGENERATE_FLOOR:
            return PhaseRoots(t=np.nan, roots=(), degenerate=True)
        return PhaseRoots(t=np.nan, roots=(), singular=True)
    s = c / d
    if abs(s) > 1.0 + 1e-12:
        return PhaseRoots(t=np.nan, roots=())
    s = min(1.0, max(-1.0, s))
    x1 = float(wrap_phase(np.arcsin(s) - phi0))
    if abs(abs(s) - 1.0) < 1e-12:
        return PhaseRoots(t=np.nan, roots=(x1,))
    x2 = float(wrap_phase(np.pi - np.arcsin(s) - phi0))
    return PhaseRoots(t=np.nan, roots=(x1, x2))


@dataclass
class SpeedControlledTrajectory:
    """One continuous zero curve f(t) of the residual.

    ``f2`` holds the unwrapped lift of the curve on the scan grid (nan
    where the branch does not exist) and ``valid`` the existence mask.
    The lift is continuous; its canonical image may jump by 2*pi.
    """

    times: np.ndarray
    f2: np.ndarray
    valid: np.ndarray
    branch_id: str

    _interp: object = field(default=None, repr=False, compare=False)

    @property
    def t_start(self) -> float:
        return float(self.times[self.valid][0])

    @property
    def t_end(self) -> float:
        return float(self.times[self.valid][-1])

    @property
    def start_phase(self) -> float:
        return float(self.f2[self.valid][0])

    @property
    def end_phase(self) -> float:
        return float(self.f2[self.valid][-1])

    @property
    def f2_canonical(self) -> np.ndarray:
        out = np.full_like(self.f2, np.nan)
        out[self.valid] = wrap_phase(self.f2[self.valid])
        return out

    def travel(self) -> float:
        """Net phase distance covered by the lift."""
        return abs(self.end_phase - self.start_phase)

    def spans_full_domain(self, coverage: float = 0.99) -> bool:
        span = self.times[-1] - self.times[0]
        return (self.t_end - self.t_start) >= coverage * span

    def is_connected(self, tol: float = 0.05) -> bool:
        """True when the lift starts and ends at phase 0.

        The test is on the unwrapped lift: a curve that returns to 0 only
        modulo 2*pi has wound around the cylinder and is not counted as
        connecting the endpoints.
        """
        full = self.times[-1] - self.times[0]
        if (self.t_start - self.times[0]) > 0.01 * full:
            return False
        if (self.times[-1] - self.t_end) > 0.01 * full:
            return False
        return abs(self.start_phase) < tol and abs(self.end_phase) < tol

    def values_at(self, t) -> np.ndarray:
        """Lift values at arbitrary times, clamped to the valid span."""
        if self._interp is None:
            from scipy.interpolate import PchipInterpolator

            tv = self.times[self.valid]
            fv = self.f2[self.valid]
            self._interp = PchipInterpolator(tv, fv)
        return self._interp(np.clip(t, self.t_start, self.t_end))


def link_branches(
    model: PhaseResidualModel,
    n_scan: int = 16_000,
    threshold: float = LINKING_THRESHOLD,
    min_samples: int = 6,
) -> list[SpeedControlledTrajectory]:
    """Scan the residual over time and link roots into branches.

    At each scan sample the closed-form roots are claimed by the active
    branches through a globally nearest-first pairing; roots left over
    found new branches, and branches left without a root terminate.
    Branch lifts grow by wrapped increments so each stays continuous even
    while its canonical image crosses the -pi/pi seam.
    """
    t = np.linspace(0.0, model.t_final, n_scan + 1)
    cs, ds, phis = model.sine_params(t)
    active: list[dict] = []
    done: list[dict] = []

    for k in range(n_scan + 1):
        rts = sine_roots(float(cs[k]), float(ds[k]), float(phis[k]))
        if rts.degenerate:
            # every phase is a root here; branches pass through untouched
            continue
        roots = rts.roots
        pairs = []
        for bi, br in enumerate(active):
            for ri, v in enumerate(roots):
                pairs.append((abs(float(wrap_phase(v - br["last"]))), bi, ri))
        pairs.sort()
        taken_b: set[int] = set()
        taken_r: set[int] = set()
        for dist, bi, ri in pairs:
            if bi in taken_b or ri in taken_r or dist >= threshold:
                continue
            taken_b.add(bi)
            taken_r.add(ri)
            br = active[bi]
            br["ks"].append(k)
            br["fs"].append(br["fs"][-1] + float(wrap_phase(roots[ri] - br["last"])))
            br["last"] = br["fs"][-1]
        survivors = []
        for bi, br in enumerate(active):
            (survivors if bi in taken_b else done).append(br)
        for ri, v in enumerate(roots):
            if ri not in taken_r:
                survivors.append({"ks": [k], "fs": [v], "last": v})
        active = survivors

    done.extend(active)

    out: list[SpeedControlledTrajectory] = []
    for br in done:
        if len(br["ks"]) < min_samples:
            continue
        f2 = np.full(n_scan + 1, np.nan)
        valid = np.zeros(n_scan + 1, dtype=bool)
        ks = np.asarray(br["ks"], dtype=int)
        f2[ks] = br["fs"]
        valid[ks] = True
        out.append(
            SpeedControlledTrajectory(times=t, f2=f2, valid=valid, branch_id="")
        )
    out.sort(key=lambda b: (b.t_start, b.start_phase))
    for i, b in enumerate(out):
        b.branch_id = f"B{i}"

    # canonical X/Y labels for the two-branch full-span geometry: Y is the
    # branch whose canonical end phase is nearer 0
    full = [b for b in out if b.spans_full_domain()]
    if len(out) == 2 and len(full) == 2:
        a, b = sorted(out, key=lambda s: abs(float(wrap_phase(s.end_phase))))
        a.branch_id = "Y"
        b.branch_id = "X"
    return out


@dataclass(frozen=True)
class Gap:
    """Maximal time interval where the residual has no root."""

    t_start: float
    t_end: float
    left_branch: str | None
    right_branch: str | None
    left_phase: float
    right_phase: float

    @property
    def width(self) -> float:
        return self.t_end - self.t_start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.t_start + self.t_end)

    @property
    def phase_difference(self) -> float:
        return float(wrap_phase(self.right_phase - self.left_phase))


def detect_gaps(
    model: PhaseResidualModel,
    branches: Sequence[SpeedControlledTrajectory],
    n_scan: int = 16_000,
) -> list[Gap]:
    """Maximal intervals not covered by any branch.

    Degenerate samples (residual identically zero) count as covered, so a
    vanishing product of reference amplitudes does not open a gap.  Each
    gap records the nearest branch phase on both sides.
    """
    t = np.linspace(0.0, model.t_final, n_scan + 1)
    cs, ds, phis = model.sine_params(t)
    covered = ds < DEGENERATE_FLOOR
    for br in branches:
        covered |= (t >= br.t_start - 1e-12) & (t <= br.t_end + 1e-12)

    def nearest(side_t: float, before: bool) -> tuple[str | None, float]:
        best: tuple[float, str, float] | None = None
        for br in branches:
            if before and br.t_end <= side_t + 1e-12:
                cand = (side_t - br.t_end, br.branch_id, br.end_phase)
            elif not before and br.t_start >= side_t - 1e-12:
                cand = (br.t_start - side_t, br.branch_id, br.start_phase)
            else:
                continue
            if best is None or cand[0] < best[0]:
                best = cand
        if best is None:
            return None, np.nan
        return best[1], best[2]

    gaps: list[Gap] = []
    k = 0
    n = n_scan + 1
    while k < n:
        if covered[k]:
            k += 1
            continue
        j = k
        while j < n and not covered[j]:
            j += 1
        lo = t[k - 1] if k > 0 else t[0]
        hi = t[j] if j < n else t[-1]
        lb, lp = nearest(lo, before=True)
        rb, rp = nearest(hi, before=False)
        gaps.append(
            Gap(
                t_start=float(lo),
                t_end=float(hi),
                left_branch=lb,
                right_branch=rb,
                left_phase=float(lp),
                right_phase=float(rp),
            )
        )
        k = j
    return gaps


def branch_touch_times(
    x: SpeedControlledTrajectory,
    y: SpeedControlledTrajectory,
    separation_threshold: float = 1.2,
    n_scan: int = 16_000,
) -> list[float]:
    """Times where two full-span branches approach each other.

    Local minima of the canonical phase separation below the threshold
    mark the narrow corridors where travel between the branches is cheap.
    """
    t0 = max(x.t_start, y.t_start)
    t1 = min(x.t_end, y.t_end)
    t = np.linspace(t0, t1, n_scan + 1)
    sep = np.abs(wrap_phase(x.values_at(t) - y.values_at(t)))
    out = []
    span = t1 - t0
    for k in range(1, n_scan):
        if (
            sep[k] < sep[k - 1]
            and sep[k] <= sep[k + 1]
            and sep[k] < separation_threshold
            and (t[k] - t0) > 0.05 * span
        ):
            out.append(float(t[k]))
    return out
