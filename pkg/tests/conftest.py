import numpy as np
import pytest

import crossfield as cf

FOUR_HOLE_CENTERS = [(0.6, 0.0), (-0.6, 0.0), (0.0, 0.6), (0.0, -0.6)]


@pytest.fixture(scope="session")
def disk_h003():
    return cf.preset_domain("disk", target_edge_length=0.03, r=1.0)


@pytest.fixture(scope="session")
def disk_h002():
    return cf.preset_domain("disk", target_edge_length=0.02, r=1.0)


@pytest.fixture(scope="session")
def disk_coarse():
    return cf.preset_domain("disk", target_edge_length=0.1, r=1.0)


@pytest.fixture(scope="session")
def square_mesh():
    return cf.preset_domain("polygon", target_edge_length=0.2, points="square")


@pytest.fixture(scope="session")
def four_holes():
    return [
        cf.HoleSpec(center=c, radius=0.1, degree=1) for c in FOUR_HOLE_CENTERS
    ]


@pytest.fixture(scope="session")
def solved_four_holes(disk_h003, four_holes):
    est = cf.CrossFieldSolver(holes=four_holes, space="CR")
    est.fit(disk_h003)
    return est


def quarter_disk_points(n_arc=40):
    """Unit quarter disk as a polygon with a fine arc polyline."""
    pts = [(0.0, 0.0), (1.0, 0.0)]
    for i in range(1, n_arc):
        t = (np.pi / 2) * i / n_arc
        pts.append((float(np.cos(t)), float(np.sin(t))))
    pts.append((0.0, 1.0))
    return pts
