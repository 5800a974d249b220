from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import ShapeError

Box = List[Tuple[float, float]]


def default_box(dimension: int, half_width: float = 1.0) -> Box:
    """[-w, w]^m."""
    return [(-half_width, half_width)] * dimension


def validate_box(box: Sequence[Sequence[float]], dimension: Optional[int] = None) -> Box:
    bounds = [(float(lo), float(hi)) for lo, hi in box]
    if dimension is not None and len(bounds) != dimension:
        raise ShapeError(f"sampling box has {len(bounds)} intervals, expected {dimension}")
    for lo, hi in bounds:
        if not lo < hi:
            raise ValueError(f"sampling interval [{lo}, {hi}] is empty")
    return bounds


def sample_points(box: Sequence[Sequence[float]], n: int, rng: np.random.Generator) -> np.ndarray:
    """n points drawn uniformly from the box, shape (n, m)."""
    bounds = np.array(validate_box(box))
    return rng.uniform(bounds[:, 0], bounds[:, 1], size=(n, len(bounds)))
