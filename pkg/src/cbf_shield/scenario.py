"""Scenario file parsing and validation.

Scenarios are JSON with top-level sections ``road``, ``ego``, ``planner``,
``background``, ``ogm``, ``sim``, ``filter``. Validation failures raise
:class:`ScenarioError` naming the offending section and key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .barrier import BarrierParams
from .geometry import BoundingBox
from .perception import ConversionConfig, OccupancyGrid, load_grid, parse_grid, rasterize_boxes
from .planner import PlannerParams
from .road import RoadModel, frenet_to_cartesian, FrenetState
from .safety_filter import FilterConfig
from .vehicle import ControlLimits, VehicleGeometry, VehicleState

MODES = ("none", "obstacles_only", "full")
BEHAVIORS = ("constant", "brake_at", "cut_in_at", "merge_ramp")


class ScenarioError(ValueError):
    """Scenario validation failure; message names the section."""


@dataclass(frozen=True)
class BackgroundSpec:
    """Open-loop script for one background vehicle, expressed in road coordinates.

    Numeric fields may carry per-seed jitter (uniform +- value) via the
    matching ``*_jitter`` key in the scenario file.
    """

    vehicle_id: str
    behavior: str
    s0: float
    d0: float
    v0: float
    length: float = 4.6
    width: float = 1.9
    t_trigger: float | None = 0.0      # None = never fires on time
    trigger_gap: float | None = None   # may also fire on |s - s_ego| <= gap
    decel: float = 6.0                 # brake_at
    accel: float = 0.0                 # speed ramp after trigger (merge)
    lateral_speed: float = 1.2         # cut_in_at / merge_ramp
    d_target: float = 0.0
    v_min: float = 0.0
    jitter: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StaticObstacleSpec:
    box: BoundingBox
    in_ogm: bool = True
    physical: bool = True


@dataclass(frozen=True)
class OgmFixture:
    """Static occupancy input: an explicit grid and/or boxes rasterized into one."""

    grid: OccupancyGrid | None
    boxes: tuple[StaticObstacleSpec, ...]
    origin: tuple[float, float] | None = None
    resolution: float = 0.2
    n_cols: int = 0
    n_rows: int = 0

    def build_grid(self) -> OccupancyGrid:
        if self.grid is not None:
            return self.grid
        return rasterize_boxes([s.box for s in self.boxes if s.in_ogm], self.origin,
                               self.resolution, self.n_cols, self.n_rows)

    def physical_boxes(self) -> list[BoundingBox]:
        return [s.box for s in self.boxes if s.physical]


@dataclass(frozen=True)
class ScenarioSpec:
    road: RoadModel
    ego0: VehicleState
    geometry: VehicleGeometry
    planner: PlannerParams
    background: tuple[BackgroundSpec, ...]
    ogm: OgmFixture | None
    duration: float
    dt: float
    seed: int
    mode: str
    filter_config: FilterConfig


def _require(section: dict, section_name: str, key: str):
    if key not in section:
        raise ScenarioError(f"section '{section_name}': missing '{key}'")
    return section[key]


def _num(section: dict, section_name: str, key: str, default=None) -> float:
    if key not in section:
        if default is None:
            raise ScenarioError(f"section '{section_name}': missing '{key}'")
        return default
    v = section[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ScenarioError(f"section '{section_name}': '{key}' must be a finite number")
    return float(v)


def _build_road(section: dict) -> RoadModel:
    d_min = _num(section, "road", "d_min")
    d_max = _num(section, "road", "d_max")
    if "waypoints" in section:
        pts = np.asarray(section["waypoints"], dtype=float)
    elif "preset" in section:
        preset = section["preset"]
        kind = _require(preset, "road.preset", "kind")
        spacing = _num(preset, "road.preset", "spacing", 2.0)
        if kind == "straight":
            length = _num(preset, "road.preset", "length")
            n = max(int(length / spacing) + 1, 2)
            xs = np.linspace(0.0, length, n)
            pts = np.stack([xs, np.zeros_like(xs)], axis=1)
        elif kind == "arc":
            radius = _num(preset, "road.preset", "radius")
            angle = _num(preset, "road.preset", "angle")
            lead_in = _num(preset, "road.preset", "lead_in", 0.0)
            n = max(int(abs(radius * angle) / spacing) + 1, 8)
            th = np.linspace(0.0, angle, n)
            sign = 1.0 if angle >= 0 else -1.0
            xs = radius * np.sin(np.abs(th))
            ys = sign * radius * (1.0 - np.cos(th))
            pts = np.stack([xs + lead_in, ys], axis=1)
            if lead_in > 0.0:
                n_lead = max(int(lead_in / spacing), 1)
                lead = np.stack([np.linspace(0.0, lead_in, n_lead, endpoint=False),
                                 np.zeros(n_lead)], axis=1)
                pts = np.vstack([lead, pts])
        else:
            raise ScenarioError(f"section 'road.preset': unknown kind {kind!r}")
    else:
        raise ScenarioError("section 'road': missing 'waypoints' or 'preset'")
    try:
        return RoadModel(pts, d_min, d_max)
    except ValueError as exc:
        raise ScenarioError(f"section 'road': {exc}") from exc


def _build_ego(section: dict, road: RoadModel) -> tuple[VehicleState, VehicleGeometry]:
    g = section.get("geometry", {})
    geometry = VehicleGeometry(
        wheelbase=_num(g, "ego.geometry", "wheelbase", 2.8),
        rear_wheelbase=_num(g, "ego.geometry", "rear_wheelbase", 1.4),
        body_length=_num(g, "ego.geometry", "body_length", 4.6),
        body_width=_num(g, "ego.geometry", "body_width", 1.9),
    )
    v = _num(section, "ego", "v")
    if "s" in section:
        fs = FrenetState(s=_num(section, "ego", "s"), d=_num(section, "ego", "d", 0.0),
                         v=v, mu=_num(section, "ego", "mu", 0.0))
        state = frenet_to_cartesian(fs, road)
    else:
        state = VehicleState(x_g=_num(section, "ego", "x"), y_g=_num(section, "ego", "y"),
                             v=v, phi=_num(section, "ego", "phi", 0.0))
    return state, geometry


def _build_background(entries, road: RoadModel) -> tuple[BackgroundSpec, ...]:
    if not isinstance(entries, list):
        raise ScenarioError("section 'background': must be a list")
    out = []
    for i, e in enumerate(entries):
        name = f"background[{i}]"
        behavior = _require(e, name, "behavior")
        if behavior not in BEHAVIORS:
            raise ScenarioError(f"section '{name}': unknown behavior {behavior!r}")
        jitter = {k[:-len("_jitter")]: float(v) for k, v in e.items() if k.endswith("_jitter")}
        out.append(BackgroundSpec(
            vehicle_id=str(e.get("id", f"bv{i}")),
            behavior=behavior,
            s0=_num(e, name, "s0"),
            d0=_num(e, name, "d0", 0.0),
            v0=_num(e, name, "v0"),
            length=_num(e, name, "length", 4.6),
            width=_num(e, name, "width", 1.9),
            t_trigger=(None if ("t_trigger" in e and e["t_trigger"] is None)
                       else _num(e, name, "t_trigger", 0.0)),
            trigger_gap=(float(e["trigger_gap"]) if e.get("trigger_gap") is not None else None),
            decel=_num(e, name, "decel", 6.0),
            accel=_num(e, name, "accel", 0.0),
            lateral_speed=_num(e, name, "lateral_speed", 1.2),
            d_target=_num(e, name, "d_target", 0.0),
            v_min=_num(e, name, "v_min", 0.0),
            jitter=jitter,
        ))
    ids = [b.vehicle_id for b in out]
    if len(set(ids)) != len(ids):
        raise ScenarioError("section 'background': vehicle ids must be unique")
    return tuple(out)


def _build_ogm(section: dict | None, base_dir: Path) -> OgmFixture | None:
    if section is None:
        return None
    boxes = []
    for i, e in enumerate(section.get("boxes", [])):
        name = f"ogm.boxes[{i}]"
        boxes.append(StaticObstacleSpec(
            box=BoundingBox(_num(e, name, "x"), _num(e, name, "y"),
                            _num(e, name, "l"), _num(e, name, "w"),
                            _num(e, name, "theta", 0.0)),
            in_ogm=bool(e.get("in_ogm", True)),
            physical=bool(e.get("physical", True)),
        ))
    grid = None
    if "file" in section:
        path = base_dir / section["file"]
        if not path.exists():
            raise ScenarioError(f"section 'ogm': grid file not found: {path}")
        grid = load_grid(path)
    elif "rows" in section:
        origin = _require(section, "ogm", "origin")
        res = _num(section, "ogm", "resolution")
        rows = section["rows"]
        text = ("ogm v1\n"
                f"origin {origin[0]} {origin[1]}\n"
                f"resolution {res}\n"
                f"size {len(rows[0])} {len(rows)}\n" + "\n".join(rows) + "\n")
        grid = parse_grid(text)
    if grid is None:
        if not boxes:
            raise ScenarioError("section 'ogm': needs 'file', 'rows', or 'boxes'")
        origin = _require(section, "ogm", "origin")
        res = _num(section, "ogm", "resolution", 0.2)
        size = _require(section, "ogm", "size")
        return OgmFixture(grid=None, boxes=tuple(boxes),
                          origin=(float(origin[0]), float(origin[1])),
                          resolution=res, n_cols=int(size[0]), n_rows=int(size[1]))
    # explicit grid: rasterized boxes may still add physical geometry
    rastered = [s.box for s in boxes if s.in_ogm]
    if rastered:
        extra = rasterize_boxes(rastered, (grid.origin_x, grid.origin_y),
                                grid.resolution, grid.n_cols, grid.n_rows)
        grid = OccupancyGrid(grid.origin_x, grid.origin_y, grid.resolution,
                             grid.n_cols, grid.n_rows, grid.cells | extra.cells)
    return OgmFixture(grid=grid, boxes=tuple(boxes))


def _build_filter(section: dict) -> FilterConfig:
    # fall back to the library defaults so scenario files stay minimal
    name = "filter"
    dflt = FilterConfig()
    bp, lm = dflt.barrier, dflt.limits
    barrier = BarrierParams(
        c_safe=_num(section, name, "c_safe", bp.c_safe),
        lon_margin=_num(section, name, "lon_margin", bp.lon_margin),
        lat_margin=_num(section, name, "lat_margin", bp.lat_margin),
        alpha1=_num(section, name, "alpha1", bp.alpha1),
        alpha2=_num(section, name, "alpha2", bp.alpha2),
        beta=_num(section, name, "beta", bp.beta),
        gamma=_num(section, name, "gamma", bp.gamma),
    )
    limits = ControlLimits(
        a_min=_num(section, name, "a_min", lm.a_min),
        a_max=_num(section, name, "a_max", lm.a_max),
        steer_min=_num(section, name, "steer_min", lm.steer_min),
        steer_max=_num(section, name, "steer_max", lm.steer_max),
    )
    conv = section.get("conversion", {})
    conversion = ConversionConfig(
        coverage_fraction=_num(conv, "filter.conversion", "coverage_fraction",
                               dflt.conversion.coverage_fraction),
        linkage_factor=_num(conv, "filter.conversion", "linkage_factor",
                            dflt.conversion.linkage_factor),
    )
    q_diag = section.get("q_diag", [dflt.q_accel, dflt.q_steer])
    if (not isinstance(q_diag, list)) or len(q_diag) != 2:
        raise ScenarioError("section 'filter': 'q_diag' must be [q_accel, q_steer]")
    return FilterConfig(
        barrier=barrier,
        limits=limits,
        geometry=dflt.geometry,  # replaced by the ego geometry by the caller
        risk_radius=_num(section, name, "risk_radius", dflt.risk_radius),
        h_activation=_num(section, name, "h_activation", dflt.h_activation),
        q_accel=float(q_diag[0]),
        q_steer=float(q_diag[1]),
        heading_frozen=bool(section.get("heading_frozen", dflt.heading_frozen)),
        conversion=conversion,
    )


def parse_scenario(data: dict, base_dir: Path | None = None) -> ScenarioSpec:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    base_dir = base_dir or Path(".")
    for key in ("road", "ego", "planner", "sim"):
        if key not in data:
            raise ScenarioError(f"section '{key}': missing")

    road = _build_road(data["road"])
    ego0, geometry = _build_ego(data["ego"], road)
    planner = PlannerParams(
        v_target=_num(data["planner"], "planner", "v_target"),
        k_speed=_num(data["planner"], "planner", "k_speed", 0.8),
        lookahead_gain=_num(data["planner"], "planner", "lookahead_gain", 0.8),
        min_lookahead=_num(data["planner"], "planner", "min_lookahead", 4.0),
        max_lookahead=_num(data["planner"], "planner", "max_lookahead", 25.0),
    )
    background = _build_background(data.get("background", []), road)
    ogm = _build_ogm(data.get("ogm"), base_dir)

    sim = data["sim"]
    duration = _num(sim, "sim", "duration")
    dt = _num(sim, "sim", "dt", 0.02)
    if duration <= 0.0 or dt <= 0.0:
        raise ScenarioError("section 'sim': duration and dt must be positive")
    mode = sim.get("mode", "full")
    if mode not in MODES:
        raise ScenarioError(f"section 'sim': mode must be one of {MODES}, got {mode!r}")
    seed = sim.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("section 'sim': seed must be an integer")

    filter_config = _build_filter(data.get("filter", {}))
    filter_config = FilterConfig(
        barrier=filter_config.barrier, limits=filter_config.limits, geometry=geometry,
        risk_radius=filter_config.risk_radius, h_activation=filter_config.h_activation,
        q_accel=filter_config.q_accel, q_steer=filter_config.q_steer,
        heading_frozen=filter_config.heading_frozen, conversion=filter_config.conversion)

    return ScenarioSpec(road=road, ego0=ego0, geometry=geometry, planner=planner,
                        background=background, ogm=ogm, duration=duration, dt=dt,
                        seed=seed, mode=mode, filter_config=filter_config)


def load_scenario(path) -> ScenarioSpec:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}: invalid JSON: {exc.msg}") from exc
    return parse_scenario(data, base_dir=path.parent)


def override_spec(spec: ScenarioSpec, mode: str | None = None, seed: int | None = None,
                  dt: float | None = None, heading_frozen: bool | None = None) -> ScenarioSpec:
    """Copy of the spec with CLI-level overrides applied."""
    fc = spec.filter_config
    if heading_frozen is not None and heading_frozen != fc.heading_frozen:
        fc = FilterConfig(barrier=fc.barrier, limits=fc.limits, geometry=fc.geometry,
                          risk_radius=fc.risk_radius, h_activation=fc.h_activation,
                          q_accel=fc.q_accel, q_steer=fc.q_steer,
                          heading_frozen=heading_frozen, conversion=fc.conversion)
    new_mode = mode if mode is not None else spec.mode
    if new_mode not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}, got {new_mode!r}")
    return ScenarioSpec(
        road=spec.road, ego0=spec.ego0, geometry=spec.geometry, planner=spec.planner,
        background=spec.background, ogm=spec.ogm, duration=spec.duration,
        dt=dt if dt is not None else spec.dt,
        seed=seed if seed is not None else spec.seed,
        mode=new_mode, filter_config=fc)
