"""Evaluation: signal reconstruction error and a paired significance test.

The SRE of an abundance estimate is ``10 log10(||A||_F^2 / ||A - Ahat||_F^2)``
in dB, with ``+inf`` as the documented sentinel for an exact estimate.  The
paired test is a one-tailed (left) Wilcoxon signed-rank test on x - y: it
rejects when the x values sit significantly below the y values.  Zero
differences are dropped, ties get average ranks, and the null distribution
is exact up to 12 effective pairs (normal approximation with continuity
correction above that).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .exceptions import DimensionError, InsufficientDataError, ParameterError
from .tensor_ops import as_tensor3
from .ultra import forward_model

__all__ = ["MetricReport", "WilcoxonResult", "sre", "per_endmember_sre",
           "reconstruction_rmse", "metric_report",
           "wilcoxon_signed_rank_one_tailed"]

EXACT_MAX_N = 12


@dataclass
class MetricReport:
    """SRE in dB, reconstruction RMSE, and per-endmember SRE values."""

    sre_db: float
    rmse: float
    per_endmember_sre: np.ndarray


@dataclass
class WilcoxonResult:
    statistic: float
    p_value: float
    n_effective: int
    reject_at_alpha: bool


def _sq_norm(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x.ravel(), x.ravel()))


def sre(A_true, A_est):
    """Signal reconstruction error of an estimate, in dB.

    Returns ``+inf`` when the estimate matches the reference exactly.  A
    zero reference leaves the metric undefined and raises.
    """
    A_true = np.asarray(A_true, dtype=np.float64)
    A_est = np.asarray(A_est, dtype=np.float64)
    if A_true.shape != A_est.shape:
        raise DimensionError(
            f"shape mismatch: reference {A_true.shape} vs estimate {A_est.shape}"
        )
    ref = _sq_norm(A_true)
    if ref == 0.0:
        raise ParameterError("reference tensor is zero: SRE undefined")
    err = _sq_norm(A_true - A_est)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(ref / err)


def per_endmember_sre(A_true, A_est):
    """SRE of each mode-3 slice separately.

    Slices follow the same formula and sentinel as :func:`sre`; a slice
    with a zero reference yields ``nan`` instead of raising.
    """
    A_true = as_tensor3(A_true, name="reference")
    A_est = as_tensor3(A_est, name="estimate")
    if A_true.shape != A_est.shape:
        raise DimensionError(
            f"shape mismatch: reference {A_true.shape} vs estimate {A_est.shape}"
        )
    out = np.empty(A_true.shape[2])
    for r in range(A_true.shape[2]):
        ref = _sq_norm(A_true[:, :, r])
        err = _sq_norm(A_true[:, :, r] - A_est[:, :, r])
        if ref == 0.0:
            out[r] = math.nan
        elif err == 0.0:
            out[r] = math.inf
        else:
            out[r] = 10.0 * math.log10(ref / err)
    return out


def reconstruction_rmse(cube, M, A):
    """Root-mean-square residual between the cube and the model fit."""
    cube = as_tensor3(cube, name="cube")
    resid = cube - forward_model(A, M)
    return math.sqrt(_sq_norm(resid) / resid.size)


def metric_report(A_true, A_est, cube, M):
    """Bundle SRE, RMSE, and per-endmember SRE for one estimate."""
    return MetricReport(
        sre_db=sre(A_true, A_est),
        rmse=reconstruction_rmse(cube, M, A_est),
        per_endmember_sre=per_endmember_sre(A_true, A_est),
    )


def _exact_left_p(ranks, w_plus):
    """P(W+ <= w_plus) by enumerating subset sums of the rank vector.

    Average ranks are half-integers, so everything is doubled and counted
    with an integer subset-sum table; the result is exact.
    """
    r2 = np.rint(2.0 * np.asarray(ranks)).astype(np.int64)
    total = int(r2.sum())
    ways = np.zeros(total + 1, dtype=np.int64)
    ways[0] = 1
    for r in r2:
        shifted = np.zeros_like(ways)
        shifted[r:] = ways[:-r]
        ways = ways + shifted
    w2 = int(round(2.0 * w_plus))
    w2 = min(max(w2, -1), total)
    return float(ways[: w2 + 1].sum()) / 2.0 ** len(r2)


def _approx_left_p(ranks, w_plus):
    """Normal approximation with continuity correction and tie correction."""
    n = len(ranks)
    mu = n * (n + 1) / 4.0
    _, counts = np.unique(np.asarray(ranks), return_counts=True)
    tie_term = float(((counts.astype(np.float64) ** 3) - counts).sum()) / 48.0
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (w_plus - mu + 0.5) / math.sqrt(sigma2)
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def wilcoxon_signed_rank_one_tailed(x, y, alpha=0.05):
    """Paired one-tailed test of whether the x values sit below the y values.

    Works on the differences ``d = x - y``: zero differences are dropped,
    the remaining ``|d|`` get average ranks, and the statistic is the rank
    sum of the positive differences.  Small shifts of x below y give a
    small statistic; the returned p-value is the left-tail probability
    ``P(W+ <= statistic)`` under the symmetric null.  Fewer than 5 nonzero
    differences leave the test meaningless and raise.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"paired vectors differ in length: {x.size} vs {y.size}")
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    d = x - y
    if not np.all(np.isfinite(d)):
        raise ParameterError("non-finite paired differences")
    d = d[d != 0.0]
    n = d.size
    if n < 5:
        raise InsufficientDataError(
            f"only {n} nonzero difference(s); need at least 5"
        )
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0.0].sum())
    if n <= EXACT_MAX_N:
        p = _exact_left_p(ranks, w_plus)
    else:
        p = _approx_left_p(ranks, w_plus)
    p = min(max(p, 0.0), 1.0)
    return WilcoxonResult(statistic=w_plus, p_value=p, n_effective=n,
                          reject_at_alpha=p <= alpha)
