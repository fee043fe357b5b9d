import numpy as np
import pytest

from hdg_shapeopt.geometry import (BackgroundMesh, Circle, DomainShape, box_shape,
                                   classify_elements)
from hdg_shapeopt.hdg import HdgConfig
from hdg_shapeopt.transfer import build_transfer_map

UNIT_BOX = (0.0, 0.0, 1.0, 1.0)


def discretize(shape, bbox, n, k=1):
    cfg = HdgConfig(k=k)
    mesh = classify_elements(BackgroundMesh.from_cells(bbox, n), shape)
    tm = build_transfer_map(mesh, shape, cfg.edge_points)
    return mesh, tm, cfg


@pytest.fixture
def fitted_square():
    return box_shape(UNIT_BOX)


@pytest.fixture
def small_disk():
    """Unfitted disk that keeps 8 background triangles."""
    return DomainShape((Circle((0.0, 0.0), 0.45, hole=False, dirichlet=True),)), (-0.5, -0.5, 0.5, 0.5)


def poly(coeffs):
    """Polynomial ``sum c_ij x^i y^j`` with its gradient and Laplacian."""
    def u(x):
        return sum(c * x[..., 0] ** i * x[..., 1] ** j for (i, j), c in coeffs.items())

    def grad(x):
        gx = sum(c * i * x[..., 0] ** max(i - 1, 0) * x[..., 1] ** j
                 for (i, j), c in coeffs.items() if i)
        gy = sum(c * j * x[..., 0] ** i * x[..., 1] ** max(j - 1, 0)
                 for (i, j), c in coeffs.items() if j)
        return np.stack([gx + 0 * x[..., 0], gy + 0 * x[..., 0]], axis=-1)

    def lap(x):
        out = 0 * x[..., 0]
        for (i, j), c in coeffs.items():
            if i >= 2:
                out = out + c * i * (i - 1) * x[..., 0] ** (i - 2) * x[..., 1] ** j
            if j >= 2:
                out = out + c * j * (j - 1) * x[..., 0] ** i * x[..., 1] ** (j - 2)
        return out

    return u, grad, lap


def random_poly(rng, k):
    return {(i, d - i): rng.normal() for d in range(k + 1) for i in range(d + 1)}


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one summary line per acceptance criterion."""
    def record(criterion, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
