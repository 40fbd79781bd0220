import math

import numpy as np
import pytest

from rdwsim.environment import SpaceMap, build_physical_space
from rdwsim.geometry import Polygon, Vec2
from rdwsim.redirection import Pose, UserState


@pytest.fixture(scope="session")
def e1():
    return build_physical_space("e1")


@pytest.fixture(scope="session")
def e2():
    return build_physical_space("e2")


@pytest.fixture(scope="session")
def e3():
    return build_physical_space("e3")


@pytest.fixture(scope="session")
def e4():
    return build_physical_space("e4")


def square_space(half: float, kind: str = "physical", nav_radius: float = 0.5) -> SpaceMap:
    poly = Polygon([Vec2(-half, -half), Vec2(half, -half), Vec2(half, half), Vec2(-half, half)])
    return SpaceMap(poly, (), kind, nav_radius)


def make_state(vpos=(0.0, 0.0), vh=0.0, ppos=(0.0, 0.0), ph=0.0,
               dv=0.0, dtheta=0.0, body_radius=0.5) -> UserState:
    return UserState(
        Pose(Vec2(*vpos), vh), Pose(Vec2(*ppos), ph),
        1.0, math.pi / 2.0, body_radius, dv, dtheta,
    )


def random_scene(rng: np.random.Generator):
    """Random rectangular room with a few random convex-ish obstacles."""
    half = float(rng.uniform(3.0, 8.0))
    boundary = Polygon([Vec2(-half, -half), Vec2(half, -half), Vec2(half, half), Vec2(-half, half)])
    obstacles = []
    for _ in range(int(rng.integers(0, 4))):
        for _attempt in range(50):
            cx, cy = rng.uniform(-half + 1.5, half - 1.5, 2)
            w, h = rng.uniform(0.3, 1.2, 2)
            poly = Polygon([
                Vec2(cx - w, cy - h), Vec2(cx + w, cy - h),
                Vec2(cx + w, cy + h), Vec2(cx - w, cy + h),
            ])
            try:
                SpaceMap(boundary, obstacles + [poly], "physical")
            except ValueError:
                continue
            obstacles.append(poly)
            break
    return SpaceMap(boundary, obstacles, "physical")
