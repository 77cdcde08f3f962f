import numpy as np
import pytest

from navmap.core import GridSpec, Pose, Trajectory

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def spec10():
    return GridSpec(0.1, (0.0, 0.0), 10, 10)


def straight_trajectory(x0, x1, y, z, n):
    xs = np.linspace(x0, x1, n)
    return Trajectory(np.arange(n, dtype=float), [Pose.from_xyz_yaw((x, y, z), 0.0) for x in xs])


def plane_points(x0, x1, y0, y1, z, step=0.1):
    """Voxel-centre style lattice on a horizontal plane."""
    xs = np.arange(x0, x1 + 1e-9, step)
    ys = np.arange(y0, y1 + 1e-9, step)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), np.full(X.size, z)])
