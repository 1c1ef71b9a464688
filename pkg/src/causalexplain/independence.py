"""Entropy, mutual information and (conditional) independence tests.

The nearest-neighbour estimators work in the max-norm with exact brute-force
neighbour search (points are scanned outward along the first coordinate, so
the worst case stays O(N^2)); the kernels are isolated so a spatial index could
replace them without touching the estimators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from . import _rng
from ._special import digamma, normal_two_sided_p
from .data import Dataset, correlation
from .errors import (ConstantColumnError, InsufficientSamplesError, SingularityError,
                     ValidationError)

MI_CAP = -0.5 * math.log(1e-15)
DEFAULT_K = 3
DEFAULT_N_PERM = 199
DEFAULT_ALPHA = 0.05
K_PERM = 5


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    p_value: float
    independent: bool
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError(f"p-value {self.p_value} outside [0, 1]")
        if self.independent != (self.p_value > self.alpha):
            raise ValidationError("independent must equal p_value > alpha")


def decide(statistic, p_value, alpha) -> CiTestResult:
    p = min(1.0, max(0.0, float(p_value)))
    return CiTestResult(float(statistic), p, p > alpha, float(alpha))


def entropy_discrete(samples) -> float:
    """Plug-in Shannon entropy in nats of the empirical distribution."""
    values = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples)
    if values.size == 0:
        raise ValidationError("entropy needs at least one sample")
    _, counts = np.unique(values, return_counts=True, axis=0 if values.ndim > 1 else None)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def gaussian_mi_from_r(r: float) -> tuple[float, bool]:
    """-0.5 ln(1 - r^2), capped at -0.5 ln(1e-15); the flag reports the cap."""
    one_minus = 1.0 - r * r
    if one_minus <= 1e-15:
        return MI_CAP, True
    return -0.5 * math.log1p(-r * r), False


def gaussian_mi(ds: Dataset, x: str, y: str) -> float:
    """Mutual information of two columns assuming joint Gaussianity."""
    return gaussian_mi_from_r(correlation(ds.column(x), ds.column(y)))[0]


# -- nearest-neighbour kernels ------------------------------------------------

@numba.njit(cache=True)
def _kth_radius_sorted(sp, k):
    # sp sorted by column 0; scanning outward stops once the column-0 gap
    # alone exceeds the current k-th best, so the search stays exact
    n, d = sp.shape
    out = np.empty(n)
    best = np.empty(k)
    for i in range(n):
        for m in range(k):
            best[m] = np.inf
        for direction in (1, -1):
            j = i + direction
            while 0 <= j < n:
                if abs(sp[j, 0] - sp[i, 0]) >= best[k - 1]:
                    break
                dist = 0.0
                for c in range(d):
                    v = abs(sp[i, c] - sp[j, c])
                    if v > dist:
                        dist = v
                if dist < best[k - 1]:
                    m = k - 1
                    while m > 0 and best[m - 1] > dist:
                        best[m] = best[m - 1]
                        m -= 1
                    best[m] = dist
                j += direction
        out[i] = best[k - 1]
    return out


@numba.njit(cache=True)
def _count_within_sorted(sp, radius):
    n, d = sp.shape
    out = np.zeros(n, np.int64)
    for i in range(n):
        r = radius[i]
        cnt = 0
        for direction in (1, -1):
            j = i + direction
            while 0 <= j < n:
                if abs(sp[j, 0] - sp[i, 0]) >= r:
                    break
                inside = True
                for c in range(1, d):
                    if abs(sp[i, c] - sp[j, c]) >= r:
                        inside = False
                        break
                if inside:
                    cnt += 1
                j += direction
        out[i] = cnt
    return out


def _kth_radius(pts, k):
    """Max-norm distance from each point to its k-th nearest other point."""
    order = np.argsort(pts[:, 0], kind="stable")
    out = np.empty(pts.shape[0])
    out[order] = _kth_radius_sorted(np.ascontiguousarray(pts[order]), k)
    return out


def _count_within(pts, radius):
    """Number of other points strictly closer than ``radius[i]`` in the max-norm."""
    order = np.argsort(pts[:, 0], kind="stable")
    out = np.empty(pts.shape[0], np.int64)
    out[order] = _count_within_sorted(np.ascontiguousarray(pts[order]),
                                      np.ascontiguousarray(radius[order]))
    return out


@numba.njit(cache=True)
def _nearest(pts, m):
    # indices of the m nearest points to each point, itself included first
    n, d = pts.shape
    idx = np.empty((n, m), np.int64)
    best = np.empty(m)
    who = np.empty(m, np.int64)
    for i in range(n):
        for q in range(m):
            best[q] = np.inf
            who[q] = -1
        for j in range(n):
            dist = 0.0
            if j != i:
                for c in range(d):
                    v = abs(pts[i, c] - pts[j, c])
                    if v > dist:
                        dist = v
            else:
                dist = -1.0
            if dist < best[m - 1]:
                q = m - 1
                while q > 0 and best[q - 1] > dist:
                    best[q] = best[q - 1]
                    who[q] = who[q - 1]
                    q -= 1
                best[q] = dist
                who[q] = j
        for q in range(m):
            idx[i, q] = who[q]
    return idx


def _prepare(v: np.ndarray, transform: str, seed: int, role) -> np.ndarray:
    """Standardize or rank-transform a column, then add tie-breaking jitter."""
    v = np.asarray(v, dtype=np.float64)
    if transform == "standardize":
        sd = v.std()
        if not sd > 0:
            raise ConstantColumnError("kNN estimators need non-constant columns")
        t = (v - v.mean()) / sd
    elif transform == "rank":
        t = np.empty(v.shape[0])
        t[np.argsort(v, kind="stable")] = np.arange(v.shape[0], dtype=np.float64)
        t = (t - t.mean()) / t.std()
    else:
        raise ValidationError(f"unknown transform {transform!r}")
    gen = _rng.generator(_rng.derive_seed(seed, "jitter", role))
    return t + 1e-10 * t.std() * _rng.standard_normal(gen, t.shape[0])


def _columns(ds: Dataset, names, transform, seed, role):
    names = list(names)
    if not names:
        return np.zeros((ds.n_rows, 0))
    return np.column_stack([_prepare(ds.column(c), transform, seed, f"{role}{i}")
                            for i, c in enumerate(names)])


def _ksg(xs, ys, k):
    n = xs.shape[0]
    joint = np.ascontiguousarray(np.hstack([xs, ys]))
    eps = _kth_radius(joint, k)
    nx = _count_within(np.ascontiguousarray(xs), eps)
    ny = _count_within(np.ascontiguousarray(ys), eps)
    return float(digamma(k) + digamma(n) - np.mean(digamma(nx + 1.0) + digamma(ny + 1.0)))


def _fp_cmi(xs, ys, zs, k):
    if zs.shape[1] == 0:
        return _ksg(xs, ys, k)
    eps = _kth_radius(np.ascontiguousarray(np.hstack([xs, ys, zs])), k)
    nxz = _count_within(np.ascontiguousarray(np.hstack([xs, zs])), eps)
    nyz = _count_within(np.ascontiguousarray(np.hstack([ys, zs])), eps)
    nz = _count_within(np.ascontiguousarray(zs), eps)
    return float(digamma(k) - np.mean(digamma(nxz + 1.0) + digamma(nyz + 1.0)
                                      - digamma(nz + 1.0)))


def _check_k(n, k):
    if k < 1 or n <= k:
        raise InsufficientSamplesError(f"need N > k >= 1, got N={n}, k={k}")


def ksg_mi(ds: Dataset, x: str, y: str, k: int = DEFAULT_K, *, seed: int = 0,
           transform: str = "standardize", clamp: bool = True) -> float:
    """Kraskov-Stoegbauer-Grassberger estimate (first variant) in nats.

    ``transform="rank"`` replaces values by ranks first, which makes the
    estimate exactly invariant under strictly increasing maps. The raw
    estimate can dip below zero; ``clamp=False`` returns it unclamped.
    """
    _check_k(ds.n_rows, k)
    est = _ksg(_columns(ds, [x], transform, seed, "x"), _columns(ds, [y], transform, seed, "y"), k)
    return max(est, 0.0) if clamp else est


def mi_perm_test(ds: Dataset, x: str, y: str, k: int = DEFAULT_K, n_perm: int = DEFAULT_N_PERM,
                 seed: int = 0, alpha: float = DEFAULT_ALPHA,
                 transform: str = "standardize") -> CiTestResult:
    """Permutation test of independence with the KSG statistic.

    p = (1 + #{permuted >= observed}) / (1 + n_perm), each permutation of y's
    rows drawn from its own derived seed.
    """
    if n_perm < 19:
        raise ValidationError("n_perm must be at least 19")
    _check_k(ds.n_rows, k)
    xs = _columns(ds, [x], transform, seed, "x")
    ys = _columns(ds, [y], transform, seed, "y")
    observed = _ksg(xs, ys, k)
    exceed = 0
    for r in range(n_perm):
        perm = _rng.generator(_rng.derive_seed(seed, "perm", r)).permutation(ds.n_rows)
        if _ksg(xs, ys[perm], k) >= observed:
            exceed += 1
    return decide(observed, (1 + exceed) / (1 + n_perm), alpha)


def fisher_z_ci(ds: Dataset, x: str, y: str, cond: Sequence[str] = (),
                alpha: float = DEFAULT_ALPHA) -> CiTestResult:
    """Fisher z test of zero partial correlation of x and y given cond."""
    cond = [c for c in cond]
    n = ds.n_rows
    dof = n - len(cond) - 3
    if dof < 1:
        raise InsufficientSamplesError(f"{n} rows are too few for {len(cond)} conditioning columns")
    m = ds.matrix([x, y, *cond])
    m = m - m.mean(axis=0)
    cov = m.T @ m
    sd = np.sqrt(np.diag(cov))
    if np.any(sd <= 0):
        raise ConstantColumnError("Fisher z needs non-constant columns")
    corr = cov / np.outer(sd, sd)
    if len(cond) == 0:
        rho = float(corr[0, 1])
    else:
        if np.linalg.cond(corr) > 1e12:
            raise SingularityError("correlation matrix is numerically singular")
        prec = np.linalg.inv(corr)
        rho = float(-prec[0, 1] / math.sqrt(prec[0, 0] * prec[1, 1]))
    rho = max(-1.0 + 1e-15, min(1.0 - 1e-15, rho))
    z = math.atanh(rho)
    stat = math.sqrt(dof) * abs(z)
    return decide(stat, normal_two_sided_p(stat), alpha)


@numba.njit(cache=True)
def _restricted_shuffle(neighbors, order, keys):
    n, m = neighbors.shape
    perm = np.empty(n, np.int64)
    used = np.zeros(n, np.bool_)
    for i in order:
        cand = neighbors[i][np.argsort(keys[i])]
        j = cand[0]
        for q in range(m):
            if not used[cand[q]]:
                j = cand[q]
                break
        perm[i] = j
        used[j] = True
    return perm


def _local_permutation(neighbors, gen):
    """Runge-style restricted shuffle: rows, visited in random order, each take
    a random not-yet-used neighbour (any neighbour once all are used)."""
    n, m = neighbors.shape
    order = gen.permutation(n)
    keys = gen.random((n, m))
    return _restricted_shuffle(neighbors, order, keys)


def cmi_knn(ds: Dataset, x: str, y: str, cond: Sequence[str] = (), k: int = DEFAULT_K,
            n_perm: int = DEFAULT_N_PERM, seed: int = 0, alpha: float = DEFAULT_ALPHA,
            transform: str = "standardize") -> CiTestResult:
    """Frenzel-Pompe conditional MI with a local-permutation p-value.

    Null samples shuffle y among the ``K_PERM`` nearest neighbours of each row
    in the conditioning space (a full shuffle when ``cond`` is empty).
    """
    cond = list(cond)
    n = ds.n_rows
    if n <= 10 * k:
        raise InsufficientSamplesError(f"cmi_knn needs N > 10k, got N={n}, k={k}")
    if n_perm < 1:
        raise ValidationError("n_perm must be >= 1")
    xs = _columns(ds, [x], transform, seed, "x")
    ys = _columns(ds, [y], transform, seed, "y")
    zs = _columns(ds, cond, transform, seed, "z")
    observed = _fp_cmi(xs, ys, zs, k)
    neighbors = _nearest(np.ascontiguousarray(zs), min(K_PERM, n)) if cond else None
    exceed = 0
    for r in range(n_perm):
        gen = _rng.generator(_rng.derive_seed(seed, "local-perm", r))
        perm = gen.permutation(n) if neighbors is None else _local_permutation(neighbors, gen)
        if _fp_cmi(xs, ys[perm], zs, k) >= observed:
            exceed += 1
    return decide(observed, (1 + exceed) / (1 + n_perm), alpha)


class FisherZ:
    """CI-test contract: ``test(ds, x, y, cond, alpha) -> CiTestResult``."""

    name = "fisher-z"

    def __call__(self, ds, x, y, cond, alpha):
        return fisher_z_ci(ds, x, y, cond, alpha)


class CmiKnn:
    """kNN conditional MI test; each call seeds itself from the tested triple."""

    name = "cmi-knn"

    def __init__(self, k: int = DEFAULT_K, n_perm: int = DEFAULT_N_PERM, seed: int = 0):
        self.k = k
        self.n_perm = n_perm
        self.seed = seed

    def __call__(self, ds, x, y, cond, alpha):
        s = _rng.derive_seed(self.seed, "cmi", x, y, *cond)
        return cmi_knn(ds, x, y, cond, self.k, self.n_perm, s, alpha)
