import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cbf_shield import (BarrierParams, ControlLimits, RoadModel,
                        VehicleGeometry)

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


@pytest.fixture
def geom() -> VehicleGeometry:
    return VehicleGeometry(wheelbase=2.8, rear_wheelbase=1.4,
                           body_length=4.6, body_width=1.9)


@pytest.fixture
def params() -> BarrierParams:
    return BarrierParams()


@pytest.fixture
def limits() -> ControlLimits:
    return ControlLimits(a_min=-6.0, a_max=2.5, steer_min=-0.45, steer_max=0.45)


@pytest.fixture
def straight_road() -> RoadModel:
    xs = np.linspace(0.0, 400.0, 201)
    return RoadModel(np.stack([xs, np.zeros_like(xs)], axis=1), d_min=-3.5, d_max=3.5)


@pytest.fixture
def arc_road() -> RoadModel:
    th = np.linspace(0.0, 1.6, 120)
    pts = np.stack([50.0 * np.sin(th), 50.0 * (1.0 - np.cos(th))], axis=1)
    return RoadModel(pts, d_min=-3.5, d_max=3.5)


def scenario_path(name: str) -> Path:
    return SCENARIO_DIR / name
