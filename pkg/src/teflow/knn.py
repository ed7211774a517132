"""Exact nearest-neighbour search and ball counting under the max norm.

All distances are Chebyshev (L-infinity). Queries may be a member index,
in which case that point is excluded from its own neighbourhood by index
(duplicate coordinates still count as neighbours), or a raw coordinate
vector, in which case nothing is excluded. Results are exact: the k-d tree
backend must agree with brute force to the last bit, which holds because
max-norm distances involve no arithmetic beyond subtraction, absolute
value, and maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError

__all__ = [
    "PointSet", "ChebyshevIndex", "build_index",
    "kth_neighbor_distance", "count_within",
    "brute_kth_neighbor_distance", "brute_count_within",
    "chebyshev_distances",
]


@dataclass(frozen=True)
class PointSet:
    """Immutable (n, d) float64 point cloud."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise DataError("point set must be a non-empty (n, d) array")
        if not np.isfinite(pts).all():
            raise DataError("point set contains non-finite coordinates")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class ChebyshevIndex:
    """Spatial index over a PointSet answering exact max-norm queries."""

    def __init__(self, point_set: PointSet):
        self.point_set = point_set
        self._tree = cKDTree(point_set.points)

    @property
    def n(self) -> int:
        return self.point_set.n

    def _resolve(self, query) -> tuple[np.ndarray, int | None]:
        """Return (coordinates, member index or None)."""
        if isinstance(query, (int, np.integer)):
            i = int(query)
            if not 0 <= i < self.n:
                raise DataError(f"member index {i} out of range 0..{self.n - 1}")
            return self.point_set.points[i], i
        q = np.asarray(query, dtype=np.float64).reshape(-1)
        if q.shape[0] != self.point_set.dim:
            raise DataError(
                f"query has {q.shape[0]} coordinates, point set has"
                f" {self.point_set.dim}"
            )
        if not np.isfinite(q).all():
            raise DataError("query contains non-finite coordinates")
        return q, None

    def kth_neighbor_distance(self, query, k: int) -> float:
        """Max-norm distance to the k-th nearest point.

        For a member-index query the point itself is excluded, so k must
        be at most n - 1; for a coordinate query all n points compete.
        Ties in distance cannot change the returned value.
        """
        q, self_idx = self._resolve(query)
        capacity = self.n - 1 if self_idx is not None else self.n
        if not 1 <= k <= capacity:
            raise DataError(f"k={k} out of range 1..{capacity}")
        if self_idx is not None:
            # The self point contributes exactly one zero distance, so the
            # k-th neighbour excluding it is the (k+1)-th smallest overall.
            dists, _ = self._tree.query(q, k=k + 1, p=np.inf)
            return float(np.asarray(dists).reshape(-1)[k])
        dists, _ = self._tree.query(q, k=k, p=np.inf)
        return float(np.asarray(dists).reshape(-1)[k - 1])

    def kth_neighbor_distances(self, k: int) -> np.ndarray:
        """kth_neighbor_distance for every member point at once."""
        if not 1 <= k <= self.n - 1:
            raise DataError(f"k={k} out of range 1..{self.n - 1}")
        dists, _ = self._tree.query(self.point_set.points, k=k + 1, p=np.inf)
        return dists[:, k].astype(np.float64, copy=False)

    def count_within(self, query, radius: float, strict: bool = True) -> int:
        """Number of points inside the max-norm ball around the query.

        strict=True counts distance < radius (open ball), strict=False
        counts distance <= radius. A member-index query never counts
        itself.
        """
        radius = float(radius)
        if not (np.isfinite(radius) and radius >= 0.0):
            raise DataError(f"radius must be finite and >= 0, got {radius!r}")
        q, self_idx = self._resolve(query)
        r = _shrink(radius) if strict else radius
        if r < 0.0:
            return 0
        count = int(self._tree.query_ball_point(q, r, p=np.inf, return_length=True))
        if self_idx is not None and (0.0 < radius if strict else True):
            count -= 1  # the self point always sits at distance zero
        return count

    def counts_within(self, radii: np.ndarray, strict: bool = True) -> np.ndarray:
        """count_within for every member point with per-point radii."""
        radii = np.asarray(radii, dtype=np.float64)
        if radii.shape != (self.n,):
            raise DataError("need one radius per member point")
        r = _shrink(radii) if strict else radii
        counts = self._tree.query_ball_point(
            self.point_set.points, r, p=np.inf, return_length=True
        ).astype(np.int64)
        inside = radii > 0.0 if strict else np.ones_like(radii, dtype=bool)
        return counts - inside.astype(np.int64)


def _shrink(radius):
    """Largest representable value strictly below radius, so that
    'distance < radius' can be answered with a closed-ball query."""
    return np.nextafter(radius, -np.inf)


def build_index(points) -> ChebyshevIndex:
    """Build a max-norm spatial index over an (n, d) array or PointSet."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    return ChebyshevIndex(ps)


def chebyshev_distances(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Max-norm distance from one query vector to every row of points."""
    diff = np.abs(np.asarray(points, dtype=np.float64)
                  - np.asarray(query, dtype=np.float64))
    return diff.max(axis=1)


def brute_kth_neighbor_distance(points, query, k: int) -> float:
    """Plain sort-based reference for kth_neighbor_distance."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    pts = ps.points
    if isinstance(query, (int, np.integer)):
        i = int(query)
        d = chebyshev_distances(pts, pts[i])
        d = np.delete(d, i)
    else:
        d = chebyshev_distances(pts, np.asarray(query, dtype=np.float64))
    if not 1 <= k <= len(d):
        raise DataError(f"k={k} out of range 1..{len(d)}")
    return float(np.sort(d)[k - 1])


def brute_count_within(points, query, radius: float, strict: bool = True) -> int:
    """Plain comparison-based reference for count_within."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    pts = ps.points
    if isinstance(query, (int, np.integer)):
        i = int(query)
        d = np.delete(chebyshev_distances(pts, pts[i]), i)
    else:
        d = chebyshev_distances(pts, np.asarray(query, dtype=np.float64))
    return int((d < radius).sum() if strict else (d <= radius).sum())
