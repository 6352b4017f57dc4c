"""Fully constrained least squares: nonnegative, sum-to-one abundances.

Solves, independently per pixel,

    min_a ||r - M a||^2   s.t.   sum(a) = 1,  a >= 0

with an active-set method: the sum-to-one constraint is kept as a hard
equality in every subproblem (never a penalty) and nonnegativity is
handled by support iteration, Lawson-Hanson style.  Pixels are processed
in vectorized batches grouped by their current support, so a whole image
costs a handful of small batched solves; results are identical to running
the single-pixel solver per fiber.

The regularized variant  min ||r - M a||^2 + lam ||a - q||^2  is handled
by stacking ``sqrt(lam) * I`` under `M` and ``sqrt(lam) * q`` under `r`
and solving the plain problem.
"""

import warnings

import numpy as np

from .exceptions import DimensionError, NumericalError, ParameterError

__all__ = ["check_endmembers", "fcls_pixel", "regularized_fcls_pixel",
           "fcls_map", "regularized_fcls_map"]

DEFAULT_TOL = 1e-9


def check_endmembers(M, strict=False):
    """Validate an endmember matrix `M` of shape (bands, endmembers).

    Negative entries or fewer bands than endmembers draw a warning (or an
    error with ``strict=True``); non-finite entries always fail.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[1] < 1:
        raise DimensionError(f"endmember matrix must be 2-D (L x R), got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ParameterError("endmember matrix contains non-finite entries")
    problems = []
    if np.any(M < 0):
        problems.append("negative reflectances")
    if M.shape[0] < M.shape[1]:
        problems.append(f"fewer bands ({M.shape[0]}) than endmembers ({M.shape[1]})")
    for p in problems:
        if strict:
            raise ParameterError(f"endmember matrix: {p}")
        warnings.warn(f"endmember matrix: {p}", stacklevel=2)
    return M


def _solve_kkt(gram_s, rhs):
    """Solve the equality-constrained normal equations for one support.

    ``gram_s`` is the support submatrix of M^T M; `rhs` stacks per-pixel
    vectors [M^T r | 1].  Returns (alphas, multipliers).
    """
    s = gram_s.shape[0]
    kkt = np.empty((s + 1, s + 1))
    kkt[:s, :s] = gram_s
    kkt[:s, s] = 1.0
    kkt[s, :s] = 1.0
    kkt[s, s] = 0.0
    try:
        sol = np.linalg.solve(kkt, rhs.T).T
        if not np.all(np.isfinite(sol)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        sol = rhs @ np.linalg.pinv(kkt, rcond=1e-12).T
    return sol[:, :s], sol[:, s]


def fcls_map(R_rows, M, tol=DEFAULT_TOL):
    """Simplex-constrained least squares for a batch of pixels.

    Parameters
    ----------
    R_rows : ndarray, shape (P, L)
        One observed spectrum per row.
    M : ndarray, shape (L, R)
    tol : float
        KKT tolerance: dual multipliers may be violated by at most `tol`.

    Returns
    -------
    ndarray, shape (P, R)
        Per-pixel minimizers; entries are exactly nonnegative and each row
        sums to one up to solver precision.
    """
    R_rows = np.asarray(R_rows, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if R_rows.ndim != 2 or M.ndim != 2:
        raise DimensionError("fcls_map expects 2-D inputs")
    if R_rows.shape[1] != M.shape[0]:
        raise DimensionError(
            f"pixel length {R_rows.shape[1]} does not match band count {M.shape[0]}"
        )
    if not np.all(np.isfinite(R_rows)) or not np.all(np.isfinite(M)):
        raise ParameterError("non-finite values in solver input")
    if not tol > 0:
        raise ParameterError(f"tol must be > 0, got {tol}")

    P = R_rows.shape[0]
    R = M.shape[1]
    gram = M.T @ M
    C = R_rows @ M  # per-pixel M^T r, one row each

    x = np.full((P, R), 1.0 / R)
    passive = np.ones((P, R), dtype=bool)
    done = np.zeros(P, dtype=bool)
    ones_col = np.ones((P, 1))

    max_rounds = 100 + 20 * R
    for _ in range(max_rounds):
        if done.all():
            break
        idx_open = np.flatnonzero(~done)
        masks, inverse = np.unique(passive[idx_open], axis=0, return_inverse=True)
        for g in range(masks.shape[0]):
            mask = masks[g]
            I = idx_open[inverse == g]
            # The support never empties: a singleton support is always
            # feasible (a = 1) and backtracking spares positive entries.
            S = np.flatnonzero(mask)
            rhs = np.concatenate([C[I][:, S], ones_col[: I.size]], axis=1)
            z_s, nu = _solve_kkt(gram[np.ix_(S, S)], rhs)

            feasible = z_s.min(axis=1) > 0.0
            I_feas = I[feasible]
            if I_feas.size:
                zf = np.zeros((I_feas.size, R))
                zf[:, S] = z_s[feasible]
                x[I_feas] = zf
                act = ~mask
                if not act.any():
                    done[I_feas] = True
                else:
                    # Dual check on the active set: w = G x - M^T r + nu.
                    w = zf @ gram - C[I_feas] + nu[feasible, None]
                    w_act = w[:, act]
                    worst = w_act.min(axis=1)
                    ok = worst >= -tol
                    done[I_feas[ok]] = True
                    bad = I_feas[~ok]
                    if bad.size:
                        j_local = np.argmin(w_act[~ok], axis=1)
                        j = np.flatnonzero(act)[j_local]
                        passive[bad, j] = True

            I_inf = I[~feasible]
            if I_inf.size:
                # Backtrack from the current feasible point toward z until
                # the first coordinate hits zero; retire it from the support.
                zf = np.zeros((I_inf.size, R))
                zf[:, S] = z_s[~feasible]
                xi = x[I_inf]
                shrink = (zf <= 0.0) & passive[I_inf]
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratios = np.where(shrink, xi / (xi - zf), np.inf)
                t = ratios.min(axis=1)
                xn = xi + t[:, None] * (zf - xi)
                hit = shrink & (ratios <= t[:, None])
                xn[hit] = 0.0
                x[I_inf] = xn
                pas = passive[I_inf]
                pas[hit] = False
                passive[I_inf] = pas
    if not done.all():
        coords = np.flatnonzero(~done)[:8]
        err = NumericalError(
            f"active-set solver did not converge for {np.count_nonzero(~done)} "
            f"pixel(s), first indices {coords.tolist()}"
        )
        err.pixel_indices = coords.tolist()
        raise err
    return x


def fcls_pixel(r, M, tol=DEFAULT_TOL):
    """Abundance vector for a single pixel.

    Returns ``argmin ||r - M a||^2`` over the unit simplex; the dual
    (KKT) conditions hold within `tol` at the returned point.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1:
        raise DimensionError(f"pixel must be a vector, got ndim={r.ndim}")
    return fcls_map(r[None, :], M, tol=tol)[0]


def regularized_fcls_map(R_rows, M, Q_rows, lam, tol=DEFAULT_TOL):
    """Batched version of :func:`regularized_fcls_pixel` (rows of `Q_rows` are the priors)."""
    if lam < 0:
        raise ParameterError(f"regularization weight must be >= 0, got {lam}")
    if lam == 0.0:
        return fcls_map(R_rows, M, tol=tol)
    R_rows = np.asarray(R_rows, dtype=np.float64)
    Q_rows = np.asarray(Q_rows, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    if Q_rows.shape != (R_rows.shape[0], M.shape[1]):
        raise DimensionError(
            f"prior rows have shape {Q_rows.shape}, expected "
            f"{(R_rows.shape[0], M.shape[1])}"
        )
    root = np.sqrt(lam)
    M_aug = np.vstack([M, root * np.eye(M.shape[1])])
    R_aug = np.concatenate([R_rows, root * Q_rows], axis=1)
    return fcls_map(R_aug, M_aug, tol=tol)


def regularized_fcls_pixel(r, M, q, lam, tol=DEFAULT_TOL):
    """Simplex least squares with a quadratic pull toward the prior `q`.

    Solves ``argmin ||r - M a||^2 + lam ||a - q||^2`` on the unit simplex
    by augmentation: `M` is stacked with ``sqrt(lam) * I`` and `r` with
    ``sqrt(lam) * q``.  With ``lam == 0`` this is exactly
    :func:`fcls_pixel` (same code path).
    """
    r = np.asarray(r, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if r.ndim != 1 or q.ndim != 1:
        raise DimensionError("pixel and prior must be vectors")
    return regularized_fcls_map(r[None, :], M, q[None, :], lam, tol=tol)[0]
