"""OLS with cluster-robust covariance, bias-model specifications, VIF and
the Mann-Whitney U test."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

RANK_TOL = 1e-10


class RankError(np.linalg.LinAlgError):
    def __init__(self, message: str, columns: Sequence[str] = ()):
        self.columns = list(columns)
        super().__init__(message)


class ClusterError(ValueError):
    pass


# ---------------------------------------------------------------------------
# model specifications

@dataclass(frozen=True)
class DesignSpec:
    model_id: str
    columns: tuple[str, ...]


M1 = DesignSpec("M1", ("const", "n_obs", "temporal_occupancy"))
M2 = DesignSpec("M2", M1.columns + ("max_gap_min", "pct_high_acc", "burstiness"))
M3 = DesignSpec("M3", M2.columns + ("n_obs_sq", "temporal_occupancy_sq"))
MODELS = {spec.model_id: spec for spec in (M1, M2, M3)}


@dataclass
class RegressionResult:
    model_id: str
    terms: list[str]
    beta: np.ndarray
    residuals: np.ndarray
    cov_clustered: np.ndarray
    se: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    r_squared: float
    n: int
    k: int
    n_clusters: int
    correction: str
    dropped_rows: int = 0
    vif: dict = field(default_factory=dict)

    def table(self) -> list[dict]:
        return [
            {"term": t, "coefficient": float(b), "clustered_se": float(s),
             "t": float(tv), "p": float(p)}
            for t, b, s, tv, p in zip(self.terms, self.beta, self.se, self.t_stats, self.p_values)
        ]


# ---------------------------------------------------------------------------
# OLS

def _check_rank(X: np.ndarray, names: Optional[Sequence[str]]):
    sv_u, s, vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[-1] < RANK_TOL * s[0]:
        null = vt[s < RANK_TOL * s[0]] if s.size else np.eye(X.shape[1])
        involved = np.flatnonzero(np.any(np.abs(null) > 1e-6, axis=0))
        labels = [names[i] if names is not None else f"x{i}" for i in involved]
        raise RankError(f"design matrix is rank deficient; involved columns: {labels}", labels)


def fit_ols(X, y, names: Optional[Sequence[str]] = None):
    """Least-squares fit through a QR decomposition.

    Returns ``(beta, residuals)``. Raises :class:`RankError` when the
    smallest singular value of ``X`` is below ``1e-10`` times the largest.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if n <= k:
        raise ValueError(f"need more observations than regressors (n={n}, k={k})")
    _check_rank(X, names)
    q, r = np.linalg.qr(X)
    beta = np.linalg.solve(r, q.T @ y)
    return beta, y - X @ beta


def _xtx_inv(X: np.ndarray) -> np.ndarray:
    _, r = np.linalg.qr(X)
    r_inv = np.linalg.solve(r, np.eye(r.shape[0]))
    return r_inv @ r_inv.T


def clustered_covariance(X, residuals, clusters, correction: str = "CR1") -> np.ndarray:
    """Cluster-robust sandwich ``c (X'X)^-1 (sum_g X_g'e_g e_g'X_g) (X'X)^-1``.

    ``c`` is 1 for CR0 and ``G/(G-1) * (n-1)/(n-k)`` for CR1.
    """
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, k = X.shape
    clusters = np.asarray(clusters)
    if clusters.shape[0] != n:
        raise ClusterError("one cluster id per row is required")
    ids, inverse = np.unique(clusters, return_inverse=True)
    G = ids.size
    if G < 2:
        raise ClusterError(f"at least 2 clusters required, got {G}")

    scores = np.zeros((G, k))
    np.add.at(scores, inverse, X * e[:, None])
    meat = scores.T @ scores
    bread = _xtx_inv(X)
    cov = bread @ meat @ bread
    cov = (cov + cov.T) / 2
    return cov * correction_factor(correction, n, k, G)


def correction_factor(correction: str, n: int, k: int, G: int) -> float:
    if correction == "CR0":
        return 1.0
    if correction == "CR1":
        return (G / (G - 1)) * ((n - 1) / (n - k))
    raise ValueError(f"unknown correction {correction!r}")


def hc0_covariance(X, residuals) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    bread = _xtx_inv(X)
    return bread @ (X.T * e**2) @ X @ bread


# ---------------------------------------------------------------------------
# bias models

def _regressor_value(rec, name: str) -> Optional[float]:
    m = rec.metrics
    if name == "const":
        return 1.0
    if name == "n_obs":
        return float(m.n_observations)
    if name == "temporal_occupancy":
        return float(m.temporal_occupancy)
    if name == "max_gap_min":
        return float(m.max_record_gap_min)
    if name == "pct_high_acc":
        return float(m.pct_high_accuracy)
    if name == "burstiness":
        return None if m.burstiness is None else float(m.burstiness)
    if name == "n_obs_sq":
        return float(m.n_observations) ** 2
    if name == "temporal_occupancy_sq":
        return float(m.temporal_occupancy) ** 2
    raise KeyError(name)


def build_design(records, spec: DesignSpec):
    """Design matrix, response and cluster ids; rows with missing regressors are dropped.

    Returns ``(X, y, clusters, dropped)``.
    """
    rows, ys, groups = [], [], []
    dropped = 0
    for rec in records:
        row = [_regressor_value(rec, c) for c in spec.columns]
        if any(v is None for v in row):
            dropped += 1
            continue
        rows.append(row)
        ys.append(float(rec.bias))
        groups.append(rec.parent_day_key)
    X = np.array(rows, dtype=float).reshape(len(rows), len(spec.columns))
    return X, np.array(ys, dtype=float), np.array(groups, dtype=object), dropped


def fit_bias_model(records, spec: DesignSpec = M1, correction: str = "CR1") -> RegressionResult:
    """Regress stay-count bias on quality metrics with clustered errors.

    Clusters are parent days. p-values come from a t distribution with
    ``G - 1`` degrees of freedom.
    """
    X, y, clusters, dropped = build_design(records, spec)
    if X.shape[0] == 0:
        raise ValueError(f"{spec.model_id}: all rows dropped for missing regressors")
    beta, resid = fit_ols(X, y, names=spec.columns)
    cov = clustered_covariance(X, resid, clusters, correction)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    G = len(set(clusters.tolist()))
    p = 2 * sps.t.sf(np.abs(t), df=G - 1)
    sst = float(((y - y.mean()) ** 2).sum())
    ssr = float((resid**2).sum())
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    names = list(spec.columns)
    non_const = [i for i, c in enumerate(names) if c != "const"]
    vifs = {}
    if len(non_const) >= 2:
        vifs = dict(zip([names[i] for i in non_const], map(float, vif(X[:, non_const]))))
    return RegressionResult(
        model_id=spec.model_id, terms=names, beta=beta, residuals=resid,
        cov_clustered=cov, se=se, t_stats=t, p_values=p, r_squared=r2,
        n=X.shape[0], k=X.shape[1], n_clusters=G, correction=correction,
        dropped_rows=dropped, vif=vifs,
    )


def vif(X) -> np.ndarray:
    """Variance inflation factors for the columns of ``X`` (no intercept column).

    Each column is regressed on the others plus an intercept;
    ``VIF_j = 1 / (1 - R^2_j)``. Perfect collinearity gives ``inf``.
    """
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    if k < 2:
        raise ValueError("VIF needs at least two regressors")
    out = np.empty(k)
    for j in range(k):
        y = X[:, j]
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        try:
            _, resid = fit_ols(others, y)
        except RankError:
            out[j] = np.inf
            continue
        sst = ((y - y.mean()) ** 2).sum()
        if sst == 0:
            out[j] = np.inf
            continue
        r2 = 1.0 - (resid**2).sum() / sst
        out[j] = np.inf if r2 >= 1.0 - 1e-12 else 1.0 / (1.0 - r2)
    return out


# ---------------------------------------------------------------------------
# Mann-Whitney U

@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    z: float
    p_value: float
    method: str

    def __iter__(self):
        return iter((self.u, self.z, self.p_value))


EXACT_MAX_N = 8


def _exact_pvalue(a: np.ndarray, b: np.ndarray, u_obs: float) -> float:
    """Two-sided permutation p-value of U over all relabellings of the pooled sample."""
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    n_a, n_b = a.size, b.size
    mu = n_a * n_b / 2.0
    offset = n_a * (n_a + 1) / 2.0
    dev_obs = abs(u_obs - mu) - 1e-9
    hits = total = 0
    for idx in itertools.combinations(range(pooled.size), n_a):
        u = ranks[list(idx)].sum() - offset
        total += 1
        if abs(u - mu) >= dev_obs:
            hits += 1
    return hits / total


def mann_whitney_u(a, b, method: str = "auto") -> MannWhitneyResult:
    """Mann-Whitney U for sample ``a`` against ``b``.

    U is computed from midranks over the pooled sample. ``z`` uses the
    tie-corrected variance. The two-sided p-value uses the normal
    approximation with a 0.5 continuity correction, except that under
    ``method="auto"`` samples with both sizes at most 8 use the exact
    permutation distribution (ties included).
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n_a, n_b = a.size, b.size
    if n_a < 1 or n_b < 1:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    u_a = float(ranks[:n_a].sum() - n_a * (n_a + 1) / 2.0)
    mu = n_a * n_b / 2.0
    n = n_a + n_b
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float((counts**3 - counts).sum())
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return MannWhitneyResult(u_a, 0.0, 1.0, "degenerate")
    sigma = math.sqrt(var)
    z = (u_a - mu) / sigma

    if method == "exact" or (method == "auto" and max(n_a, n_b) <= EXACT_MAX_N):
        return MannWhitneyResult(u_a, z, _exact_pvalue(a, b, u_a), "exact")
    if method not in ("auto", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    zc = max(abs(u_a - mu) - 0.5, 0.0) / sigma
    p = min(1.0, 2.0 * float(sps.norm.sf(zc)))
    return MannWhitneyResult(u_a, z, p, "asymptotic")
