"""Points, balls, and Haar sampling on simply connected nilpotent groups.

The group is identified with its algebra via exponential coordinates of
the first kind; Haar measure is Lebesgue measure there.  Følner sets are
anisotropic coordinate boxes scaled by the filtration weights (equivalently,
balls of the max quasi-norm), which admit exact uniform sampling; the
rounded `quasiball` shape uses an even-exponent homogeneous gauge and
rejection from the bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm

import numpy as np

from . import rng
from .algebra import LieAlgebra
from .bch import group_law


@dataclass(frozen=True)
class GroupPoint:
    """A group element, stored as the coordinates of its logarithm."""

    algebra: LieAlgebra
    coords: tuple

    def __post_init__(self):
        if len(self.coords) != self.algebra.dim:
            raise ValueError("coordinate count does not match algebra dimension")

    def __iter__(self):
        return iter(self.coords)


def point(alg: LieAlgebra, coords) -> GroupPoint:
    return GroupPoint(alg, tuple(coords))


def origin(alg: LieAlgebra) -> GroupPoint:
    return GroupPoint(alg, (0,) * alg.dim)


def bch_multiply(x: GroupPoint, y: GroupPoint) -> GroupPoint:
    if x.algebra is not y.algebra:
        raise ValueError("cannot multiply points of different groups")
    return GroupPoint(x.algebra, tuple(group_law(x.algebra).multiply(x.coords, y.coords)))


def inverse(x: GroupPoint) -> GroupPoint:
    return GroupPoint(x.algebra, tuple(-c for c in x.coords))


def left_frame(g: GroupPoint):
    """Matrix whose columns are the left-invariant frame fields at g."""
    return group_law(g.algebra).frame_at(g.coords)


def dilate(r, g: GroupPoint) -> GroupPoint:
    return GroupPoint(g.algebra, tuple(group_law(g.algebra).dilate(r, g.coords)))


def quasi_norm(g: GroupPoint, weights: tuple[int, ...] | None = None) -> float:
    """max_i |c_i|^(1/w_i); scales linearly under the dilations delta_r."""
    w = weights if weights is not None else g.algebra.weights
    return max((abs(float(c)) ** (1.0 / wi) for c, wi in zip(g.coords, w)), default=0.0)


def quasi_norm_batch(alg: LieAlgebra, coords: np.ndarray) -> np.ndarray:
    w = np.array(alg.weights, dtype=float)
    return np.max(np.abs(coords) ** (1.0 / w[:, None]), axis=0)


@dataclass(frozen=True)
class BallSpec:
    """Følner set specification: radius and shape ('box' or 'quasiball')."""

    radius: float
    shape: str = "box"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        if self.shape not in ("box", "quasiball"):
            raise ValueError(f"unknown ball shape {self.shape!r}")


def homogeneous_gauge_batch(alg: LieAlgebra, coords: np.ndarray) -> np.ndarray:
    """Smooth homogeneous gauge (sum_i |c_i|^(2M/w_i))^(1/2M), M = lcm of weights."""
    m = lcm(*alg.weights)
    w = np.array(alg.weights, dtype=float)
    return np.sum(np.abs(coords) ** (2.0 * m / w[:, None]), axis=0) ** (1.0 / (2 * m))


def box_volume(alg: LieAlgebra, radius: float) -> float:
    """Exact Haar volume of the weighted box: 2^n R^Q."""
    return 2.0 ** alg.dim * float(radius) ** alg.homogeneous_dimension


def sample_ball_coords(
    alg: LieAlgebra, spec: BallSpec, count: int, seed: int, tags: tuple = ()
) -> np.ndarray:
    """Uniform Haar samples as a (dim, count) float array, deterministic in seed.

    Box samples are drawn directly; quasiball samples by rejection from the
    bounding box (still exact, since Haar measure is Lebesgue measure here).
    """
    if count <= 0:
        raise ValueError("sample count must be positive")
    gen = rng.stream(seed, "ball", spec.shape, float(spec.radius), tags)
    scale = np.array([float(spec.radius) ** w for w in alg.weights])[:, None]
    if spec.shape == "box":
        return gen.uniform(-1.0, 1.0, size=(alg.dim, count)) * scale
    accepted = []
    have = 0
    while have < count:
        batch = gen.uniform(-1.0, 1.0, size=(alg.dim, max(count, 1024))) * scale
        keep = batch[:, homogeneous_gauge_batch(alg, batch) <= spec.radius]
        accepted.append(keep)
        have += keep.shape[1]
    return np.concatenate(accepted, axis=1)[:, :count]


def sample_ball(
    alg: LieAlgebra, spec: BallSpec, count: int, seed: int
) -> list[GroupPoint]:
    coords = sample_ball_coords(alg, spec, count, seed)
    return [GroupPoint(alg, tuple(coords[:, i])) for i in range(count)]


def estimate_ball_volume(
    alg: LieAlgebra, spec: BallSpec, count: int = 20000, seed: int = 0
) -> float:
    """Haar volume of the ball; exact for boxes, Monte Carlo for quasiballs."""
    if spec.shape == "box":
        return box_volume(alg, spec.radius)
    gen = rng.stream(seed, "ballvol", spec.shape, float(spec.radius))
    scale = np.array([float(spec.radius) ** w for w in alg.weights])[:, None]
    batch = gen.uniform(-1.0, 1.0, size=(alg.dim, count)) * scale
    inside = homogeneous_gauge_batch(alg, batch) <= spec.radius
    return float(np.mean(inside)) * box_volume(alg, spec.radius)
