"""Separated point nets on the unit sphere.

A net with separation eps/2 is the candidate grid for the guessed estimators
in the parameter-elimination algorithm. True maximality over the continuum is
replaced by maximality over a dense seeded candidate pool; the pool size is
recorded on the net so the coverage property stays reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import greedy_pack
from .errors import GuardExceededError, NormBoundError, ValidationError
from .model import NORM_TOL

POOL_CAP = 10 ** 6
POOL_FACTOR = 200


@dataclass(frozen=True)
class CoveringNet:
    """Unit vectors in s dimensions with pairwise distance >= separation."""

    points: np.ndarray        # (m, s)
    separation: float         # = eps/2
    s: int
    candidate_pool_size: int

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != self.s:
            raise ValidationError("net points must be (m, s)")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > NORM_TOL):
            raise NormBoundError("net points must be unit vectors")
        eps = 2.0 * self.separation
        if pts.shape[0] > (4.0 / eps + 1.0) ** self.s:
            raise ValidationError("net size exceeds the packing bound")
        if pts.shape[0] > 1:
            gram = pts @ pts.T
            sq = np.maximum(np.add.outer(norms ** 2, norms ** 2) - 2 * gram, 0.0)
            np.fill_diagonal(sq, np.inf)
            if np.sqrt(sq.min()) < self.separation:
                raise ValidationError("net points closer than the separation")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def size_bound(self) -> float:
        return (4.0 / (2.0 * self.separation) + 1.0) ** self.s


def sphere_pool(s: int, size: int, seed: int) -> np.ndarray:
    """Deterministic pool of uniform unit vectors (normalized Gaussians)."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(size, s))
    norms = np.linalg.norm(pts, axis=1)
    # a zero draw is impossible in practice; regenerate defensively
    while np.any(norms == 0.0):
        bad = norms == 0.0
        pts[bad] = rng.normal(size=(int(bad.sum()), s))
        norms = np.linalg.norm(pts, axis=1)
    return pts / norms[:, None]


def default_pool_size(s: int, epsilon: float) -> int:
    raw = POOL_FACTOR * (4.0 / epsilon + 1.0) ** s
    return int(min(raw, POOL_CAP))


def build_separated_net(s: int, epsilon: float, seed: int,
                        pool_size: int | None = None) -> CoveringNet:
    """Greedy packing over a seeded sphere pool, acceptance in pool order.

    Accepts a candidate iff its distance to every accepted point is >= eps/2;
    the result is separated exactly and maximal relative to the pool. An
    explicit pool_size above the 1e6 cap is refused (beyond desk scale);
    the default size 200*(4/eps+1)^s is clamped to the cap.
    """
    if s < 1:
        raise ValidationError(f"dimension s must be >= 1, got {s}")
    if not (0.0 < epsilon <= 2.0):
        raise ValidationError(f"epsilon must be in (0, 2], got {epsilon}")
    if pool_size is None:
        pool_size = default_pool_size(s, epsilon)
    elif pool_size > POOL_CAP:
        raise GuardExceededError(
            f"pool size {pool_size} exceeds the desk-scale cap {POOL_CAP}")
    pool = sphere_pool(s, pool_size, seed)
    accepted = greedy_pack(pool, epsilon / 2.0)
    return CoveringNet(points=pool[accepted], separation=epsilon / 2.0,
                       s=s, candidate_pool_size=pool_size)


def nearest_net_point(net: CoveringNet, x) -> np.ndarray:
    """Net point minimizing the distance to x; lowest index on ties."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.s,):
        raise ValidationError(f"query point must have shape ({net.s},)")
    if net.size == 0:
        raise ValidationError("net is empty")
    d2 = np.einsum("ij,ij->i", net.points - x, net.points - x)
    return net.points[int(np.argmin(d2))]


def include_point(net: CoveringNet, v) -> CoveringNet:
    """Net containing v exactly, dropping points within eps/2 of it.

    Lets a harness plant a known parameter restriction so that its family is
    represented in the grid exactly. If v already is a net point the net is
    returned unchanged; otherwise v is appended after evicting its
    too-close neighbours, preserving all separation invariants.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (net.s,):
        raise ValidationError(f"point must have shape ({net.s},)")
    if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
        raise NormBoundError("inserted point must be a unit vector")
    exact = np.all(net.points == v, axis=1)
    if exact.any():
        return net
    dists = np.linalg.norm(net.points - v, axis=1)
    keep = dists >= net.separation
    points = np.vstack([net.points[keep], v])
    return CoveringNet(points=points, separation=net.separation,
                       s=net.s, candidate_pool_size=net.candidate_pool_size)
