"""Closed-loop scenario engine.

Each tick: scripted background vehicles advance open-loop, the risk-blind
planner proposes a control, the revision layer modifies it per the ablation
mode, the ego integrates, and everything is recorded. Collision events are
contiguous overlap intervals against physical obstacle geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .barrier import CoincidentCentersError, ObstacleState, eval_h, lon_lat_distance
from .geometry import BoundingBox, rect_overlap, wrap_angle
from .planner import PurePursuitPlanner
from .road import FrenetState, project_to_frenet
from .safety_filter import SafetyFilter
from .scenario import BackgroundSpec, ScenarioSpec
from .vehicle import ControlInput, VehicleState, step


@dataclass
class TickRecord:
    t: float
    ego: VehicleState
    frenet: FrenetState
    u_o: ControlInput
    u: ControlInput
    status: str
    revised: bool
    n_supplementary: int
    active: tuple[str, ...]
    h: dict[str, float]
    h_f: dict[str, float]
    obstacles: dict[str, ObstacleState]
    events: tuple[str, ...] = ()


@dataclass
class CollisionEvent:
    tag: str
    start_tick: int
    end_tick: int
    t_impact: float
    penetration: float
    at_fault: bool | None = None


@dataclass
class SimulationTrace:
    spec: ScenarioSpec
    mode: str
    seed: int
    records: list[TickRecord] = field(default_factory=list)
    events: list[CollisionEvent] = field(default_factory=list)

    @property
    def obstacle_tags(self) -> list[str]:
        return list(self.records[0].obstacles.keys()) if self.records else []


@dataclass(frozen=True)
class Metrics:
    collision_count: int
    at_fault_collision_count: int
    min_h: float
    max_abs_lateral_offset: float
    revision_tick_fraction: float
    completion: bool


class _Script:
    """Open-loop background vehicle in road coordinates."""

    def __init__(self, spec: BackgroundSpec, rng: np.random.Generator):
        p = {}
        for key, amp in spec.jitter.items():
            p[key] = rng.uniform(-amp, amp)
        self.spec = spec
        self.s = spec.s0 + p.get("s0", 0.0)
        self.d = spec.d0 + p.get("d0", 0.0)
        self.speed = max(spec.v0 + p.get("v0", 0.0), 0.0)
        self.t_trigger = (None if spec.t_trigger is None
                          else max(spec.t_trigger + p.get("t_trigger", 0.0), 0.0))
        self.d_target = spec.d_target + p.get("d_target", 0.0)
        self.triggered = False
        self.d_dot = 0.0

    def maybe_trigger(self, t: float, ego_s: float):
        if self.triggered:
            return
        if self.t_trigger is not None and t >= self.t_trigger:
            self.triggered = True
        elif self.spec.trigger_gap is not None:
            if abs(self.s - ego_s) <= self.spec.trigger_gap:
                self.triggered = True

    def advance(self, t: float, dt: float, ego_s: float, road):
        sp = self.spec
        self.maybe_trigger(t, ego_s)
        self.d_dot = 0.0
        if sp.behavior == "brake_at" and self.triggered:
            self.speed = max(self.speed - sp.decel * dt, sp.v_min)
        elif sp.behavior in ("cut_in_at", "merge_ramp") and self.triggered:
            if sp.accel != 0.0:
                self.speed = max(self.speed + sp.accel * dt, sp.v_min)
            delta = self.d_target - self.d
            if abs(delta) > 1e-9:
                move = math.copysign(min(sp.lateral_speed * dt, abs(delta)), delta)
                self.d += move
                self.d_dot = move / dt
        # arc progress scaled so the physical forward speed equals `speed`
        denom = 1.0 - self.d * road.curvature_at(self.s)
        self.s += self.speed / max(denom, 0.1) * dt

    def world_state(self, road) -> ObstacleState:
        p, ang = road.frenet_to_world(self.s, self.d)
        heading = ang + (math.atan2(self.d_dot, self.speed) if self.speed > 0.05 else 0.0)
        tx, ty = math.cos(ang), math.sin(ang)
        nx, ny = -ty, tx
        vx = tx * self.speed + nx * self.d_dot
        vy = ty * self.speed + ny * self.d_dot
        box = BoundingBox(float(p[0]), float(p[1]), self.spec.length, self.spec.width,
                          wrap_angle(heading))
        return ObstacleState(box=box, vx=vx, vy=vy)


def detect_collision(ego_box: BoundingBox, obstacle_boxes: list[BoundingBox]) -> tuple[bool, float]:
    """Overlap flag plus the deepest penetration over the given boxes."""
    depth = 0.0
    hit = False
    for box in obstacle_boxes:
        d = rect_overlap(ego_box, box)
        if d is not None:
            hit = True
            depth = max(depth, d)
    return hit, depth


def run_scenario(spec: ScenarioSpec) -> SimulationTrace:
    rng = np.random.default_rng(spec.seed)
    scripts = [_Script(b, rng) for b in spec.background]
    road = spec.road
    planner = PurePursuitPlanner(road, spec.geometry, spec.planner)
    shield = SafetyFilter(spec.filter_config)
    limits = spec.filter_config.limits
    params = spec.filter_config.barrier

    grid = spec.ogm.build_grid() if spec.ogm is not None else None
    static_boxes: list[tuple[str, BoundingBox]] = []
    if spec.ogm is not None:
        static_boxes = [(f"static{i}", box) for i, box in enumerate(spec.ogm.physical_boxes())]

    use_grid = grid if spec.mode in ("obstacles_only", "full") else None
    use_road = road if spec.mode == "full" else None

    trace = SimulationTrace(spec=spec, mode=spec.mode, seed=spec.seed)
    ego = spec.ego0
    n_ticks = int(round(spec.duration / spec.dt))
    open_overlap: dict[str, CollisionEvent] = {}

    for k in range(n_ticks):
        t = k * spec.dt
        fs = project_to_frenet(ego, road)
        for sc in scripts:
            sc.maybe_trigger(t, fs.s)

        obstacles = {sc.spec.vehicle_id: sc.world_state(road) for sc in scripts}
        for tag, box in static_boxes:
            obstacles[tag] = ObstacleState(box=box, vx=0.0, vy=0.0)
        vector_obstacles = [obstacles[sc.spec.vehicle_id] for sc in scripts]

        u_o = planner.propose(ego)
        if spec.mode == "none":
            u = limits.clamp(u_o)
            status, revised, active, n_supp = "none", False, (), 0
            h_f: dict[str, float] = {}
        else:
            result = shield.revise(ego, vector_obstacles, u_o, grid=use_grid, road=use_road)
            u = result.u
            status, revised, active = result.status, result.revised, result.active
            n_supp = result.n_supplementary
            h_f = {}
            for i, sc in enumerate(scripts):
                if f"ob{i}" in result.h_f_values:
                    h_f[sc.spec.vehicle_id] = result.h_f_values[f"ob{i}"]
            supp = [v for tag2, v in result.h_f_values.items() if tag2.startswith("ogm")]
            if supp:
                h_f["ogm_min"] = min(supp)

        h_true: dict[str, float] = {}
        for tag, ob in obstacles.items():
            try:
                h_true[tag] = eval_h(ego, ob, spec.geometry, params)
            except CoincidentCentersError:
                h_true[tag] = -params.c_safe

        ego_box = ego.body_box(spec.geometry)
        events_now: list[str] = []
        for tag, ob in obstacles.items():
            depth = rect_overlap(ego_box, ob.box)
            if depth is not None:
                if tag not in open_overlap:
                    ev = CollisionEvent(tag=tag, start_tick=k, end_tick=k,
                                        t_impact=t, penetration=depth)
                    open_overlap[tag] = ev
                    trace.events.append(ev)
                    events_now.append(f"collision:{tag}")
                else:
                    ev = open_overlap[tag]
                    ev.end_tick = k
                    ev.penetration = max(ev.penetration, depth)
            elif tag in open_overlap:
                del open_overlap[tag]

        trace.records.append(TickRecord(
            t=t, ego=ego, frenet=fs, u_o=u_o, u=u, status=status, revised=revised,
            n_supplementary=n_supp, active=active, h=h_true, h_f=h_f,
            obstacles=obstacles, events=tuple(events_now)))

        ego = step(ego, u, spec.geometry, spec.dt)
        for sc in scripts:
            sc.advance(t, spec.dt, fs.s, road)

    for ev in trace.events:
        ev.at_fault = classify_fault(trace, ev)
    return trace


def classify_fault(trace: SimulationTrace, event: CollisionEvent) -> bool:
    """At-fault test: ego's front face made contact AND the other party did not
    laterally intrude into the ego's lane band during the final second.

    Documented conservative heuristic; lateral intrusion is detected from the
    intruder's own lateral displacement and its lateral speed at contact.
    """
    rec = trace.records[event.start_tick]
    ob = rec.obstacles[event.tag]
    geom = trace.spec.geometry
    road = trace.spec.road

    d_lon, _ = lon_lat_distance(rec.ego, ob)
    front_contact = d_lon > 0.4 * geom.body_length
    if not front_contact:
        return False

    window = int(round(1.0 / trace.spec.dt))
    start = trace.records[max(0, event.start_tick - window)]
    ob_start = start.obstacles.get(event.tag)
    if ob_start is None:
        return True

    _, d_other_imp, ang_imp, _ = road.project(ob.box.x, ob.box.y)
    _, d_other_0, _, _ = road.project(ob_start.box.x, ob_start.box.y)
    d_ego_imp = rec.frenet.d
    d_ego_0 = start.frenet.d

    gap_then = abs(d_other_0 - d_ego_0)
    gap_now = abs(d_other_imp - d_ego_imp)
    other_moved = abs(d_other_imp - d_other_0)
    intruded = (gap_then - gap_now > 0.2) and (other_moved > 0.3)

    nx, ny = -math.sin(ang_imp), math.cos(ang_imp)
    v_lat = ob.vx * nx + ob.vy * ny
    toward_ego = math.copysign(1.0, d_ego_imp - d_other_imp) * v_lat
    fast_lateral = toward_ego > 0.5

    return not (intruded or fast_lateral)


def compute_metrics(trace: SimulationTrace) -> Metrics:
    if not trace.records:
        raise ValueError("empty trace")
    min_h = math.inf
    max_d = 0.0
    revised = 0
    for rec in trace.records:
        if rec.h:
            min_h = min(min_h, min(rec.h.values()))
        max_d = max(max_d, abs(rec.frenet.d))
        revised += 1 if rec.revised else 0
    return Metrics(
        collision_count=len(trace.events),
        at_fault_collision_count=sum(1 for e in trace.events if e.at_fault),
        min_h=min_h if math.isfinite(min_h) else math.nan,
        max_abs_lateral_offset=max_d,
        revision_tick_fraction=revised / len(trace.records),
        completion=not trace.events,
    )
