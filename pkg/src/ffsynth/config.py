"""Run configuration: YAML ingestion with strict, complete validation.

Configs are plain YAML with a declared schema version.  Parsing either
returns a fully validated RunConfig or raises ConfigError carrying every
problem found (unknown keys, type mismatches, domain violations), each
tagged with the dotted path of the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

SCHEMA_VERSION = 1

SCENARIOS = ("accelerate", "decelerate", "sta", "reference-only", "device-map")
PLAN_KINDS = ("auto", "vt-a", "vt-b", "times")
EXPORT_FORMATS = ("tsv", "json")
BASELINES = {
    "accelerate": ("naive", "alpha-scaled"),
    "decelerate": ("naive", "alpha-scaled"),
    "sta": ("unmodified",),
    "reference-only": (),
    "device-map": (),
}
BRIDGE_MODES = ("local", "detached")


class ConfigError(ValueError):
    """All validation problems of one parse, joined and listed."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__(
            "invalid configuration:\n" + "\n".join(f"  - {e}" for e in errors)
        )


@dataclass(frozen=True)
class DeviceConfig:
    """Physical-mapping inputs; None falls back to the nominal device."""

    g_ghz: float = 0.009
    ej_max: float | None = None
    ej_fixed: float | None = None
    ec: float | None = None
    ecc: float | None = None
    d: float | None = None
    omega2: float | None = None


@dataclass(frozen=True)
class RunConfig:
    """Validated inputs for one pipeline invocation."""

    scenario: str
    t_ref: float
    t_final: tuple[float, ...]
    delta_omega0: float
    reference_steps: int | None
    control_steps: int | None
    scan_points: int
    cost_points: int
    plan_kind: str
    crossing_times: tuple[float, ...]
    width_bounds: tuple[float, float] | None
    center_slack: float | None
    bridge_mode: str | None
    amp_max: float | None
    bridge_init: tuple[tuple[float, float, float], ...] | None
    baselines: tuple[str, ...]
    require_fidelity: float | None
    out_dir: str
    formats: tuple[str, ...]
    device: DeviceConfig
    schema_version: int = SCHEMA_VERSION


class _Checker:
    """Accumulates errors while pulling typed values out of the mapping."""

    def __init__(self) -> None:
        self.errors: list[str] = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append(f"{path}: {message}")

    def expect_mapping(self, value, path: str) -> dict:
        if value is None:
            return {}
        if not isinstance(value, dict):
            self.fail(path, f"expected a mapping, got {type(value).__name__}")
            return {}
        return value

    def reject_unknown(self, mapping: dict, allowed, path: str) -> None:
        for key in mapping:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else str(key), "unknown key")

    def number(self, mapping, key, path, default=None, required=False, positive=False):
        if key not in mapping or mapping[key] is None:
            if required:
                self.fail(f"{path}{key}", "required field missing")
            return default
        v = mapping[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{path}{key}", f"expected a number, got {type(v).__name__}")
            return default
        if positive and v <= 0:
            self.fail(f"{path}{key}", f"must be positive, got {v}")
            return default
        return float(v)

    def integer(self, mapping, key, path, default=None, minimum=None):
        if key not in mapping or mapping[key] is None:
            return default
        v = mapping[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{path}{key}", f"expected an integer, got {type(v).__name__}")
            return default
        if minimum is not None and v < minimum:
            self.fail(f"{path}{key}", f"must be at least {minimum}, got {v}")
            return default
        return v

    def text(self, mapping, key, path, default=None, required=False, choices=None):
        if key not in mapping or mapping[key] is None:
            if required:
                self.fail(f"{path}{key}", "required field missing")
            return default
        v = mapping[key]
        if not isinstance(v, str):
            self.fail(f"{path}{key}", f"expected a string, got {type(v).__name__}")
            return default
        if choices is not None and v not in choices:
            self.fail(f"{path}{key}", f"must be one of {list(choices)}, got {v!r}")
            return default
        return v


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"document is not valid YAML: {exc}"]) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(["top level must be a mapping"])

    chk = _Checker()
    chk.reject_unknown(
        doc,
        {
            "schema_version",
            "scenario",
            "t_ref",
            "t_final",
            "delta_omega0",
            "grid",
            "crossing_plan",
            "bridge",
            "baselines",
            "require_fidelity",
            "output",
            "device",
        },
        "",
    )

    version = chk.integer(doc, "schema_version", "", default=None)
    if version is None and "schema_version" not in chk.errors:
        chk.fail("schema_version", "required field missing")
    elif version is not None and version != SCHEMA_VERSION:
        chk.fail(
            "schema_version",
            f"this build understands version {SCHEMA_VERSION}, got {version}",
        )

    scenario = chk.text(doc, "scenario", "", required=True, choices=SCENARIOS)
    t_ref = chk.number(doc, "t_ref", "", default=1.0, positive=True)
    delta_omega0 = chk.number(doc, "delta_omega0", "", default=30.0)

    t_final_raw = doc.get("t_final")
    t_final: tuple[float, ...]
    if t_final_raw is None:
        if scenario in ("sta", "accelerate", "decelerate"):
            chk.fail("t_final", f"required for scenario {scenario!r}")
        t_final = (t_ref,) if t_ref else (1.0,)
    elif isinstance(t_final_raw, (int, float)) and not isinstance(t_final_raw, bool):
        t_final = (float(t_final_raw),)
    elif isinstance(t_final_raw, list) and t_final_raw:
        vals = []
        for i, v in enumerate(t_final_raw):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                chk.fail(f"t_final[{i}]", f"expected a number, got {type(v).__name__}")
            else:
                vals.append(float(v))
        t_final = tuple(vals) if vals else (1.0,)
    else:
        chk.fail("t_final", "expected a number or a non-empty list of numbers")
        t_final = (1.0,)
    for i, v in enumerate(t_final):
        if v <= 0:
            chk.fail(f"t_final[{i}]", f"must be positive, got {v}")

    grid = chk.expect_mapping(doc.get("grid"), "grid")
    chk.reject_unknown(
        grid, {"reference_steps", "control_steps", "scan_points", "cost_points"}, "grid"
    )
    reference_steps = chk.integer(grid, "reference_steps", "grid.", minimum=100)
    control_steps = chk.integer(grid, "control_steps", "grid.", minimum=100)
    scan_points = chk.integer(grid, "scan_points", "grid.", default=16_000, minimum=100)
    cost_points = chk.integer(grid, "cost_points", "grid.", default=4_000, minimum=100)

    plan = chk.expect_mapping(doc.get("crossing_plan"), "crossing_plan")
    chk.reject_unknown(plan, {"kind", "times"}, "crossing_plan")
    default_kind = "vt-a" if scenario == "decelerate" else "auto"
    plan_kind = chk.text(
        plan, "kind", "crossing_plan.", default=default_kind, choices=PLAN_KINDS
    )
    times_raw = plan.get("times")
    crossing_times: tuple[float, ...] = ()
    if times_raw is not None:
        if not isinstance(times_raw, list):
            chk.fail("crossing_plan.times", "expected a list of times")
        else:
            vals = []
            for i, v in enumerate(times_raw):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    chk.fail(
                        f"crossing_plan.times[{i}]",
                        f"expected a number, got {type(v).__name__}",
                    )
                else:
                    vals.append(float(v))
            crossing_times = tuple(vals)
    if plan_kind == "times" and not crossing_times:
        chk.fail("crossing_plan.times", "required when kind is 'times'")
    if plan_kind != "times" and crossing_times:
        chk.fail("crossing_plan.times", f"not allowed when kind is {plan_kind!r}")

    bridge = chk.expect_mapping(doc.get("bridge"), "bridge")
    chk.reject_unknown(
        bridge, {"width_bounds", "center_slack", "mode", "amp_max", "init"}, "bridge"
    )
    width_bounds = None
    wb_raw = bridge.get("width_bounds")
    if wb_raw is not None:
        if (
            not isinstance(wb_raw, list)
            or len(wb_raw) != 2
            or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in wb_raw
            )
        ):
            chk.fail("bridge.width_bounds", "expected [lower, upper] numbers")
        elif not (0 < wb_raw[0] < wb_raw[1]):
            chk.fail("bridge.width_bounds", "must satisfy 0 < lower < upper")
        else:
            width_bounds = (float(wb_raw[0]), float(wb_raw[1]))
    center_slack = chk.number(bridge, "center_slack", "bridge.", positive=True)
    bridge_mode = chk.text(bridge, "mode", "bridge.", choices=BRIDGE_MODES)
    amp_max = chk.number(bridge, "amp_max", "bridge.", positive=True)
    bridge_init = None
    init_raw = bridge.get("init")
    if init_raw is not None:
        if not isinstance(init_raw, list):
            chk.fail("bridge.init", "expected a list of [center, width, amplitude]")
        else:
            triples = []
            for i, item in enumerate(init_raw):
                if (
                    not isinstance(item, list)
                    or len(item) != 3
                    or any(
                        isinstance(v, bool) or not isinstance(v, (int, float))
                        for v in item
                    )
                ):
                    chk.fail(
                        f"bridge.init[{i}]",
                        "expected [center, width, amplitude] numbers",
                    )
                else:
                    triples.append(tuple(float(v) for v in item))
            bridge_init = tuple(triples) if triples else None

    baselines_raw = doc.get("baselines")
    allowed_baselines = BASELINES.get(scenario or "", ())
    if baselines_raw is None:
        baselines = allowed_baselines
    elif not isinstance(baselines_raw, list):
        chk.fail("baselines", "expected a list of baseline names")
        baselines = ()
    else:
        names = []
        for i, v in enumerate(baselines_raw):
            if not isinstance(v, str):
                chk.fail(f"baselines[{i}]", f"expected a string, got {type(v).__name__}")
            elif v not in allowed_baselines:
                chk.fail(
                    f"baselines[{i}]",
                    f"not available for scenario {scenario!r}; "
                    f"allowed: {list(allowed_baselines)}",
                )
            else:
                names.append(v)
        baselines = tuple(names)

    require_fidelity = chk.number(doc, "require_fidelity", "")
    if require_fidelity is not None and not (0.0 < require_fidelity <= 1.0):
        chk.fail("require_fidelity", f"must be in (0, 1], got {require_fidelity}")

    output = chk.expect_mapping(doc.get("output"), "output")
    chk.reject_unknown(output, {"directory", "formats"}, "output")
    out_dir = chk.text(output, "directory", "output.", default="out")
    formats_raw = output.get("formats")
    if formats_raw is None:
        formats = EXPORT_FORMATS
    elif not isinstance(formats_raw, list):
        chk.fail("output.formats", "expected a list")
        formats = EXPORT_FORMATS
    else:
        fmts = []
        for i, v in enumerate(formats_raw):
            if not isinstance(v, str) or v not in EXPORT_FORMATS:
                chk.fail(
                    f"output.formats[{i}]", f"must be one of {list(EXPORT_FORMATS)}"
                )
            else:
                fmts.append(v)
        formats = tuple(fmts) if fmts else EXPORT_FORMATS

    dev = chk.expect_mapping(doc.get("device"), "device")
    chk.reject_unknown(
        dev, {"g_ghz", "ej_max", "ej_fixed", "ec", "ecc", "d", "omega2"}, "device"
    )
    device = DeviceConfig(
        g_ghz=chk.number(dev, "g_ghz", "device.", default=0.009, positive=True),
        ej_max=chk.number(dev, "ej_max", "device.", positive=True),
        ej_fixed=chk.number(dev, "ej_fixed", "device.", positive=True),
        ec=chk.number(dev, "ec", "device.", positive=True),
        ecc=chk.number(dev, "ecc", "device.", positive=True),
        d=chk.number(dev, "d", "device.", positive=True),
        omega2=chk.number(dev, "omega2", "device.", positive=True),
    )

    if chk.errors:
        raise ConfigError(chk.errors)

    return RunConfig(
        scenario=scenario,
        t_ref=t_ref,
        t_final=t_final,
        delta_omega0=delta_omega0,
        reference_steps=reference_steps,
        control_steps=control_steps,
        scan_points=scan_points,
        cost_points=cost_points,
        plan_kind=plan_kind,
        crossing_times=crossing_times,
        width_bounds=width_bounds,
        center_slack=center_slack,
        bridge_mode=bridge_mode,
        amp_max=amp_max,
        bridge_init=bridge_init,
        baselines=baselines,
        require_fidelity=require_fidelity,
        out_dir=out_dir,
        formats=formats,
        device=device,
        schema_version=SCHEMA_VERSION,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a config file."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
