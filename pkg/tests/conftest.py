"""Pytest configuration and shared fixtures."""

import json
from pathlib import Path

import numpy as np
import pytest

from statman.models.manifold_models import ModelSpec
from statman.services.model_service import builtin_chart
from statman.services.structure_service import Chart, symmetric_grid
from statman.utils.jets import AffineField, ConstantField
from statman.utils.sampling import sample_points

MANIFOLD_DIR = Path(__file__).resolve().parent.parent / "manifolds"


@pytest.fixture
def manifold_dir():
    """Directory holding the sample manifold files."""
    return MANIFOLD_DIR


@pytest.fixture
def test_settings(monkeypatch):
    """Override settings for testing."""
    monkeypatch.setenv("STATMAN_THREADS", "1")
    monkeypatch.setenv("STATMAN_LOG_LEVEL", "WARNING")
    return None


@pytest.fixture
def steep_cubic_file(tmp_path):
    """Half-plane metric with C_111 = x2 on a thin strip near x2 = 0."""
    path = tmp_path / "steep.json"
    path.write_text(
        json.dumps(
            {
                "schema": "statman/1",
                "name": "steep-cubic",
                "dim": 2,
                "custom": {
                    "metric": [["1/x2^2", "0"], ["0", "1/x2^2"]],
                    "cubic": [{"indices": [1, 1, 1], "expr": "x2"}],
                },
                "box": [[-1.0, 1.0], [0.004, 0.006]],
            }
        ),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def sphere_chart():
    """Unit sphere in (theta, phi)."""
    return builtin_chart(ModelSpec(family="sphere", params={"radius": 1.0}))


@pytest.fixture
def hyperbolic_chart():
    """Poincare half-plane."""
    return builtin_chart(ModelSpec(family="hyperbolic"))


@pytest.fixture
def normal_chart():
    """Fisher geometry of the normal family in (mu, sigma)."""
    return builtin_chart(ModelSpec(family="normal_fisher"))


@pytest.fixture
def gamma_chart():
    """Fisher geometry of the gamma family in (shape, rate)."""
    return builtin_chart(ModelSpec(family="gamma_fisher", params={"chart": "shape_rate"}))


@pytest.fixture
def gamma_natural_chart():
    """Fisher geometry of the gamma family in natural parameters."""
    return builtin_chart(ModelSpec(family="gamma_fisher", params={"chart": "natural"}))


@pytest.fixture
def flat_cubic_chart():
    """Euclidean plane with constant cubic form C_111 = 2."""
    return builtin_chart(ModelSpec(family="flat_with_cubic"))


@pytest.fixture
def euclidean3_chart():
    """Flat three-space."""
    return builtin_chart(ModelSpec(family="euclidean"), dim=3)


def chart_points(chart: Chart, count: int = 5, seed: int = 0) -> np.ndarray:
    """Sample points inside a chart's default box."""
    return sample_points(chart.box, count, seed)


def make_cubic_chart(cubic_entries, dim: int, label: str = "random") -> Chart:
    """Chart with identity metric and the given cubic fields on sorted 0-based indices."""
    one = ConstantField(1.0)
    zero = ConstantField(0.0)
    return Chart(
        dim=dim,
        coords=tuple(f"x{i}" for i in range(1, dim + 1)),
        metric_field=symmetric_grid({(i, i): one for i in range(dim)}, dim, 2, zero),
        cubic_field=symmetric_grid(cubic_entries, dim, 3, zero),
        label=label,
        box=tuple((-1.0, 1.0) for _ in range(dim)),
    )


def random_constant_chart(rng: np.random.Generator, dim: int) -> Chart:
    """Identity metric with a random constant totally symmetric cubic form."""
    entries = {}
    for i in range(dim):
        for j in range(i, dim):
            for k in range(j, dim):
                entries[(i, j, k)] = ConstantField(rng.uniform(-1.0, 1.0))
    return make_cubic_chart(entries, dim, "random-constant")


def random_affine_chart(rng: np.random.Generator, dim: int, scale: float = 0.5) -> Chart:
    """Identity metric with a cubic form depending linearly on the coordinates."""
    entries = {}
    for i in range(dim):
        for j in range(i, dim):
            for k in range(j, dim):
                entries[(i, j, k)] = AffineField(
                    rng.uniform(-1.0, 1.0), scale * rng.uniform(-1.0, 1.0, size=dim)
                )
    return make_cubic_chart(entries, dim, "random-affine")
