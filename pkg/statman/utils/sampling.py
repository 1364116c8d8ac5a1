"""Deterministic quasi-random sample points inside a coordinate box."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy.stats import qmc

from statman.config import settings
from statman.exceptions import ParamError

logger = logging.getLogger(__name__)

Box = Sequence[Tuple[float, float]]
T = TypeVar("T")


def validate_box(box: Box) -> Tuple[np.ndarray, np.ndarray]:
    """Return lower and upper bounds, requiring lo < hi on every axis."""
    bounds = np.asarray(box, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ParamError(f"Box must be a list of [lo, hi] pairs, got shape {bounds.shape}")
    lower, upper = bounds[:, 0], bounds[:, 1]
    if not np.all(np.isfinite(bounds)) or np.any(lower >= upper):
        raise ParamError("Box needs finite bounds with lo < hi", {"box": bounds.tolist()})
    return lower, upper


def sample_points(box: Box, count: int, seed: int = 0) -> np.ndarray:
    """
    Scrambled Halton points in a box.

    Args:
        box: One (lo, hi) pair per coordinate
        count: Number of points
        seed: Sampler seed; equal seeds give equal points

    Returns:
        Array of shape (count, dim)
    """
    if count < 1:
        raise ParamError(f"Point count must be positive, got {count}")
    lower, upper = validate_box(box)
    sampler = qmc.Halton(d=lower.shape[0], scramble=True, seed=seed)
    points = qmc.scale(sampler.random(count), lower, upper)
    logger.debug(f"Sampled {count} points in {lower.shape[0]}-d box with seed {seed}")
    return points


def sweep(
    func: Callable[[np.ndarray], T],
    points: Sequence[np.ndarray],
    threads: Optional[int] = None,
) -> List[T]:
    """Apply ``func`` to each point, in order, optionally on a thread pool."""
    threads = settings.threads if threads is None else threads
    if threads <= 1 or len(points) <= 1:
        return [func(p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, points))
