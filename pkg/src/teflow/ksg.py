"""Nearest-neighbour information estimators and transfer entropy.

Everything here works in nats on max-norm balls. The common scheme: find
the distance to the K-th nearest neighbour of each sample in the joint
space, then count neighbours strictly inside that radius in each marginal
space, and turn the counts into digamma terms. Counting is open-ball and
self-excluding throughout, and the count arguments get the +1 convention.

Per-observation (local) values are first-class: every estimate carries the
vector of local contributions whose arithmetic mean is exactly the global
value, so pointwise information flow can be used as a feature series.

Two interchangeable engines back the computations. A dense pairwise-matrix
engine is fastest for short series and makes surrogate permutations cheap
(a row/column gather instead of a new distance pass); a k-d tree engine
scales to long series. Both produce bit-identical results, which the test
suite asserts.

Exact duplicate points can collapse a neighbour radius to zero, which the
estimators refuse to average over. The documented cure is jitter(): add
seeded uniform noise of amplitude 1e-8 times the series scale before
estimating. The selection pipeline applies it automatically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import knn
from .errors import DataError, DegenerateDataError, NumericError

__all__ = [
    "digamma", "jitter", "EmbeddingConfig", "EmbeddedPanel", "embed",
    "ksg_entropy", "KsgEstimate", "ksg_mutual_info", "ksg_conditional_mi",
    "TeEstimate", "transfer_entropy", "transfer_entropy_embedded",
    "prepared_embedding", "TePlan",
]

_EULER_GAMMA = 0.5772156649015329

# Above this many embedded samples the k-d tree engine takes over from the
# dense pairwise-matrix engine.
MATRIX_ENGINE_MAX_N = 700

# Largest dense block (elements) materialized when evaluating surrogate
# permutations in bulk.
_BLOCK_ELEMENTS = 2_500_000

_JITTER_SCALE = 1e-8


def digamma(x):
    """Digamma function for real x > 0, elementwise, to 1e-10.

    Small arguments are shifted up with psi(x) = psi(x + 1) - 1/x until
    x >= 6, where the asymptotic series in 1/x^2 converges past 1e-10.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (not np.isfinite(arr).all() or np.any(arr <= 0.0)):
        raise ValueError("digamma needs finite x > 0")
    v = np.atleast_1d(arr).copy()
    shift = np.zeros_like(v)
    while True:
        mask = v < 6.0
        if not mask.any():
            break
        shift[mask] -= 1.0 / v[mask]
        v[mask] += 1.0
    u = 1.0 / (v * v)
    series = -u * (1.0 / 12.0 - u * (1.0 / 120.0 - u * (
        1.0 / 252.0 - u * (1.0 / 240.0 - u * (1.0 / 132.0)))))
    result = np.log(v) - 0.5 / v + series + shift
    if arr.ndim == 0:
        return float(result[0])
    return result.reshape(arr.shape)


def _digamma_int_table(max_n: int) -> np.ndarray:
    """table[m] = digamma(m) for integer m in 1..max_n (table[0] is NaN).

    psi(m) = -gamma + H_{m-1}, with the harmonic numbers accumulated once;
    this is what the counting estimators index into.
    """
    table = np.empty(max_n + 1, dtype=np.float64)
    table[0] = np.nan
    harmonics = np.zeros(max_n, dtype=np.float64)
    if max_n > 1:
        harmonics[1:] = np.cumsum(1.0 / np.arange(1, max_n, dtype=np.float64))
    table[1:] = harmonics - _EULER_GAMMA
    return table


def jitter(series: np.ndarray, seed: int, scale: float = _JITTER_SCALE) -> np.ndarray:
    """Break exact ties by adding seeded uniform noise of amplitude
    scale times the population standard deviation."""
    s = np.asarray(series, dtype=np.float64)
    std = float(np.std(s))
    if std == 0.0:
        raise NumericError("cannot jitter a constant series")
    rng = np.random.default_rng(seed)
    amp = scale * std
    return s + rng.uniform(-amp, amp, size=s.shape)


@dataclass(frozen=True)
class EmbeddingConfig:
    """Embedding orders and neighbour count for one estimate.

    k: target history length, l: source history length, K: number of
    nearest neighbours defining the joint radius.
    """

    k: int
    l: int
    K: int

    def __post_init__(self):
        for name in ("k", "l", "K"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise DataError(f"EmbeddingConfig.{name} must be an integer >= 1")


@dataclass(frozen=True)
class EmbeddedPanel:
    """Delay-embedded sample rows for one (target, source) pair.

    Row i pairs the next target value with the k most recent target values
    and the l most recent source values available at that time:
    next_target[i] against target_past[i] = (x_t, ..., x_{t-k+1}) and
    source_past[i] = (y_t, ..., y_{t-l+1}).
    """

    next_target: np.ndarray
    target_past: np.ndarray
    source_past: np.ndarray
    config: EmbeddingConfig

    def __post_init__(self):
        nt = np.asarray(self.next_target, dtype=np.float64)
        tp = np.asarray(self.target_past, dtype=np.float64)
        sp = np.asarray(self.source_past, dtype=np.float64)
        n = nt.shape[0]
        if nt.ndim != 1 or tp.shape != (n, self.config.k) \
                or sp.shape != (n, self.config.l):
            raise DataError("embedded blocks have inconsistent shapes")
        object.__setattr__(self, "next_target", nt)
        object.__setattr__(self, "target_past", tp)
        object.__setattr__(self, "source_past", sp)

    @property
    def n_effective(self) -> int:
        return self.next_target.shape[0]

    def with_source_rows(self, order: np.ndarray) -> "EmbeddedPanel":
        """Same panel with source_past rows rearranged as whole tuples."""
        order = np.asarray(order)
        if sorted(order.tolist()) != list(range(self.n_effective)):
            raise DataError("order must be a permutation of the row indices")
        return EmbeddedPanel(self.next_target, self.target_past,
                             self.source_past[order], self.config)


def embed(target: np.ndarray, source: np.ndarray,
          config: EmbeddingConfig) -> EmbeddedPanel:
    """Delay-embed a target/source series pair.

    The number of rows is len(target) - max(k, l); it must leave at least
    K + 1 samples so a K-th neighbour exists after self-exclusion.
    """
    x = np.asarray(target, dtype=np.float64)
    y = np.asarray(source, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DataError("target and source must be 1-d series of equal length")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("series contain non-finite values")
    k, l, K = config.k, config.l, config.K
    m = max(k, l)
    n_eff = len(x) - m
    if n_eff < K + 1:
        raise DataError(
            f"series of length {len(x)} leaves {n_eff} embedded rows for"
            f" k={k}, l={l}; need at least K+1={K + 1}"
        )
    idx = np.arange(m - 1, len(x) - 1)
    target_past = np.stack([x[idx - j] for j in range(k)], axis=1)
    source_past = np.stack([y[idx - j] for j in range(l)], axis=1)
    return EmbeddedPanel(x[idx + 1], target_past, source_past, config)


def _as_points(a, name: str) -> np.ndarray:
    pts = np.asarray(a, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DataError(f"{name} must be (n, d) with n >= 2")
    if not np.isfinite(pts).all():
        raise DataError(f"{name} contains non-finite values")
    return pts


def _check_K(K: int, n: int) -> None:
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= n - 1:
        raise DataError(f"K={K} out of range 1..{n - 1} for {n} samples")


def _degenerate(eps) -> DegenerateDataError:
    return DegenerateDataError(
        "a K-th neighbour radius is exactly zero (duplicate points);"
        " apply teflow.ksg.jitter to the inputs and re-run"
    )


def ksg_entropy(points, K: int) -> float:
    """Differential entropy (nats) from K-th neighbour radii:
    psi(N) - psi(K) + (d / N) * sum(log eps_i), where eps_i is twice the
    max-norm distance to the K-th neighbour of sample i."""
    pts = _as_points(points, "points")
    n, d = pts.shape
    _check_K(K, n)
    index = knn.build_index(pts)
    radii = index.kth_neighbor_distances(K)
    if np.any(radii == 0.0):
        raise _degenerate(radii)
    return float(digamma(n) - digamma(K) + d * np.mean(np.log(2.0 * radii)))


@dataclass(frozen=True)
class KsgEstimate:
    """A global information value with its per-sample local decomposition."""

    value: float
    local_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        locals_arr = np.asarray(self.local_values, dtype=np.float64)
        object.__setattr__(self, "local_values", locals_arr)
        if abs(float(np.mean(locals_arr)) - self.value) > 1e-10:
            raise NumericError("local values do not average to the global value")


def _pairwise_chebyshev(pts: np.ndarray) -> np.ndarray:
    """Dense (n, n) max-norm distance matrix, built one dimension at a
    time to avoid an (n, n, d) temporary."""
    out = np.abs(pts[:, None, 0] - pts[None, :, 0])
    for j in range(1, pts.shape[1]):
        np.maximum(out, np.abs(pts[:, None, j] - pts[None, :, j]), out=out)
    return out


def _mi_locals_matrix(dx, dy, K, table):
    d_joint = np.maximum(dx, dy)
    eps = np.partition(d_joint, K, axis=1)[:, K]
    if np.any(eps <= 0.0):
        raise _degenerate(eps)
    e = eps[:, None]
    n_x = (dx < e).sum(axis=1) - 1
    n_y = (dy < e).sum(axis=1) - 1
    n = dx.shape[0]
    # Summing the two count terms before subtracting keeps the estimate
    # bitwise symmetric in (x, y): float addition commutes.
    return (table[K] + table[n]) - (table[n_x + 1] + table[n_y + 1])


def _mi_locals_tree(x2, y2, K, table):
    n = x2.shape[0]
    joint = knn.build_index(np.hstack([x2, y2]))
    eps = joint.kth_neighbor_distances(K)
    if np.any(eps == 0.0):
        raise _degenerate(eps)
    n_x = knn.build_index(x2).counts_within(eps)
    n_y = knn.build_index(y2).counts_within(eps)
    return (table[K] + table[n]) - (table[n_x + 1] + table[n_y + 1])


def ksg_mutual_info(x, y, K: int) -> KsgEstimate:
    """Mutual information I(X; Y) in nats by joint-ball neighbour counting:
    psi(K) + psi(N) - mean[psi(n_x + 1) + psi(n_y + 1)]."""
    x2 = _as_points(x, "x")
    y2 = _as_points(y, "y")
    if x2.shape[0] != y2.shape[0]:
        raise DataError("x and y must have the same number of samples")
    n = x2.shape[0]
    _check_K(K, n)
    table = _digamma_int_table(n + 1)
    if n <= MATRIX_ENGINE_MAX_N:
        locals_arr = _mi_locals_matrix(
            _pairwise_chebyshev(x2), _pairwise_chebyshev(y2), K, table)
    else:
        locals_arr = _mi_locals_tree(x2, y2, K, table)
    return KsgEstimate(float(np.mean(locals_arr)), locals_arr)


def _cmi_locals_block(d_xz, d_z, dy_block, K, table):
    """Local conditional-MI values for a stack of source-distance matrices.

    d_xz and d_z are fixed (n, n) matrices; dy_block is (s, n, n), one
    source matrix per evaluation. Returns (s, n) locals.
    """
    d_joint = np.maximum(d_xz[None, :, :], dy_block)
    eps = np.partition(d_joint, K, axis=2)[:, :, K]
    if np.any(eps <= 0.0):
        raise _degenerate(eps)
    e = eps[:, :, None]
    in_z = d_z[None, :, :] < e
    n_z = in_z.sum(axis=2) - 1
    n_xz = (d_xz[None, :, :] < e).sum(axis=2) - 1
    n_yz = ((dy_block < e) & in_z).sum(axis=2) - 1
    return table[K] - table[n_xz + 1] - table[n_yz + 1] + table[n_z + 1]


def _cmi_locals_tree(xz_index, z_index, joint_pts, yz_pts, K, table):
    joint = knn.build_index(joint_pts)
    eps = joint.kth_neighbor_distances(K)
    if np.any(eps == 0.0):
        raise _degenerate(eps)
    n_xz = xz_index.counts_within(eps)
    n_z = z_index.counts_within(eps)
    n_yz = knn.build_index(yz_pts).counts_within(eps)
    return table[K] - table[n_xz + 1] - table[n_yz + 1] + table[n_z + 1]


def ksg_conditional_mi(x, y, z, K: int) -> KsgEstimate:
    """Conditional mutual information I(X; Y | Z) in nats:
    psi(K) - mean[psi(n_xz + 1) + psi(n_yz + 1) - psi(n_z + 1)]."""
    x2 = _as_points(x, "x")
    y2 = _as_points(y, "y")
    z2 = _as_points(z, "z")
    n = x2.shape[0]
    if y2.shape[0] != n or z2.shape[0] != n:
        raise DataError("x, y, z must have the same number of samples")
    _check_K(K, n)
    table = _digamma_int_table(n + 1)
    if n <= MATRIX_ENGINE_MAX_N:
        dx = _pairwise_chebyshev(x2)
        dz = _pairwise_chebyshev(z2)
        d_xz = np.maximum(dx, dz)
        dy = _pairwise_chebyshev(y2)
        locals_arr = _cmi_locals_block(d_xz, dz, dy[None, :, :], K, table)[0]
    else:
        xz_index = knn.build_index(np.hstack([x2, z2]))
        z_index = knn.build_index(z2)
        locals_arr = _cmi_locals_tree(
            xz_index, z_index, np.hstack([x2, z2, y2]), np.hstack([y2, z2]),
            K, table)
    return KsgEstimate(float(np.mean(locals_arr)), locals_arr)


@dataclass(frozen=True)
class TeEstimate:
    """Transfer entropy from one source series to one target series.

    global_te is the estimate in nats; local_te holds one value per
    embedded row (negative entries are legitimate and mark misinformative
    observations); their mean reproduces global_te to 1e-10 by
    construction.
    """

    global_te: float
    local_te: np.ndarray = field(repr=False)
    n_effective: int = 0
    config: EmbeddingConfig = None

    def __post_init__(self):
        locals_arr = np.asarray(self.local_te, dtype=np.float64)
        object.__setattr__(self, "local_te", locals_arr)
        if locals_arr.shape != (self.n_effective,):
            raise DataError("local_te length must equal n_effective")
        if abs(float(np.mean(locals_arr)) - self.global_te) > 1e-10:
            raise NumericError("local TE does not average to global TE")


class TePlan:
    """Reusable state for estimating transfer entropy on one embedded
    panel and on many source-row permutations of it.

    The neighbour count K is supplied per call, so one plan (one set of
    distance matrices or spatial indexes) serves every K over the same
    embedding. The permutation evaluations are exactly equivalent to
    re-running the estimator on panel.with_source_rows(order); the dense
    engine just reaches the same numbers by gathering the precomputed
    source distance matrix instead of recomputing it.
    """

    def __init__(self, panel: EmbeddedPanel, use_matrix: bool | None = None):
        self.panel = panel
        n = panel.n_effective
        self._table = _digamma_int_table(n + 1)
        if use_matrix is None:
            use_matrix = n <= MATRIX_ENGINE_MAX_N
        self.use_matrix = use_matrix
        x2 = panel.next_target[:, None]
        z2 = panel.target_past
        y2 = panel.source_past
        if use_matrix:
            dz = _pairwise_chebyshev(z2)
            self._d_z = dz
            self._d_xz = np.maximum(_pairwise_chebyshev(x2), dz)
            self._d_y = _pairwise_chebyshev(y2)
        else:
            self._xz_index = knn.build_index(np.hstack([x2, z2]))
            self._z_index = knn.build_index(z2)
            self._x2, self._z2 = x2, z2

    def _resolve_K(self, K: int | None) -> int:
        K = self.panel.config.K if K is None else int(K)
        _check_K(K, self.panel.n_effective)
        return K

    def _locals_for_order(self, order: np.ndarray | None, K: int) -> np.ndarray:
        if self.use_matrix:
            dy = self._d_y if order is None \
                else self._d_y[np.ix_(order, order)]
            return _cmi_locals_block(
                self._d_xz, self._d_z, dy[None, :, :], K, self._table)[0]
        sp = self.panel.source_past if order is None \
            else self.panel.source_past[order]
        return _cmi_locals_tree(
            self._xz_index, self._z_index,
            np.hstack([self._x2, self._z2, sp]), np.hstack([sp, self._z2]),
            K, self._table)

    def observed(self, K: int | None = None) -> TeEstimate:
        K = self._resolve_K(K)
        locals_arr = self._locals_for_order(None, K)
        cfg = self.panel.config
        if K != cfg.K:
            cfg = EmbeddingConfig(cfg.k, cfg.l, K)
        return TeEstimate(float(np.mean(locals_arr)), locals_arr,
                          self.panel.n_effective, cfg)

    def permuted_global(self, order: np.ndarray, K: int | None = None) -> float:
        K = self._resolve_K(K)
        return float(np.mean(self._locals_for_order(np.asarray(order), K)))

    def permuted_globals(self, orders: np.ndarray,
                         K: int | None = None) -> np.ndarray:
        """Global TE for each permutation in an (s, n) stack of row orders."""
        orders = np.asarray(orders)
        K = self._resolve_K(K)
        s, n = orders.shape
        if not self.use_matrix:
            return np.array([self.permuted_global(o, K) for o in orders])
        block = max(1, min(s, _BLOCK_ELEMENTS // (n * n)))
        out = np.empty(s, dtype=np.float64)
        for a in range(0, s, block):
            b = min(a + block, s)
            gathered = self._d_y[orders[a:b, :, None], orders[a:b, None, :]]
            locals_blk = _cmi_locals_block(
                self._d_xz, self._d_z, gathered, K, self._table)
            out[a:b] = locals_blk.mean(axis=1)
        return out


def transfer_entropy_embedded(panel: EmbeddedPanel,
                              use_matrix: bool | None = None) -> TeEstimate:
    """Transfer entropy of an already-embedded panel: the conditional
    mutual information between the next target value and the source past,
    given the target past."""
    return TePlan(panel, use_matrix=use_matrix).observed()


def prepared_embedding(target, source, config: EmbeddingConfig,
                       jitter_seed=None) -> EmbeddedPanel:
    """Standardize, optionally jitter, and delay-embed a series pair.

    Both series are divided by their population standard deviation, which
    leaves transfer entropy untouched (conditional mutual information
    ignores per-variable rescaling) but keeps max-norm balls comparable
    across dimensions and makes estimates invariant under positive
    rescaling of the inputs. With jitter_seed set (an int or a
    SeedSequence), seeded tie-breaking noise is added after scaling.
    """
    x = np.asarray(target, dtype=np.float64)
    y = np.asarray(source, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise DataError("target and source must be 1-d series of equal length")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DataError("series contain non-finite values")
    sx = float(np.std(x))
    sy = float(np.std(y))
    if sx == 0.0 or sy == 0.0:
        raise NumericError("transfer entropy needs non-constant series")
    x = x / sx
    y = y / sy
    if jitter_seed is not None:
        if not isinstance(jitter_seed, np.random.SeedSequence):
            jitter_seed = np.random.SeedSequence(jitter_seed)
        child = jitter_seed.spawn(2)
        x = jitter(x, child[0], _JITTER_SCALE)
        y = jitter(y, child[1], _JITTER_SCALE)
    return embed(x, y, config)


def transfer_entropy(target, source, config: EmbeddingConfig,
                     jitter_seed: int | None = None) -> TeEstimate:
    """Transfer entropy (nats) from a source series to a target series.

    Series are standardized before embedding (see prepared_embedding);
    duplicate-heavy inputs raise DegenerateDataError unless jitter_seed
    provides seeded tie-breaking noise.
    """
    panel = prepared_embedding(target, source, config, jitter_seed)
    return transfer_entropy_embedded(panel)
