"""Alternating solver: regularized abundance estimation with a low-rank prior.

The estimate minimizes

    J(A, Q) = 1/2 sum_pixels ||r - M a||^2  +  lam/2 ||A - Q||_F^2

over simplex-constrained abundance tensors `A` and unconstrained rank-K
prior tensors `Q`, by block coordinate descent: the A-step solves a
regularized simplex least-squares problem per pixel, the Q-step fits a
rank-K CPD to the current abundances.  Warm-starting each Q-step from the
previous factors makes the recorded objective nonincreasing; with
``lambda_a == 0`` the problem decouples and the result is exactly the
plain FCLS map.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .cpd import CpdFactors, CpdOptions, cpd_als, reconstruct
from .exceptions import DimensionError, NumericalError, ParameterError
from .fcls import fcls_map, regularized_fcls_map
from .tensor_ops import as_tensor3, mode_k_product

__all__ = ["UltraConfig", "RunReport", "check_abundances", "forward_model",
           "evaluate_cost", "a_step", "q_step", "ultra"]


@dataclass
class UltraConfig:
    """Knobs for :func:`ultra`.

    ``lambda_a`` weighs the pull toward the low-rank prior and ``rank_q``
    is the prior's CPD rank.  ``cpd_opts`` may override the ALS controls;
    its rank is always replaced by ``rank_q``.
    """

    lambda_a: float
    rank_q: int
    outer_max_iters: int = 50
    outer_rel_tol: float = 1e-5
    fcls_tol: float = 1e-9
    seed: int = 0
    cpd_opts: CpdOptions | None = None

    def validate(self):
        if self.lambda_a < 0:
            raise ParameterError(f"lambda_a must be >= 0, got {self.lambda_a}")
        if self.rank_q < 1:
            raise ParameterError(f"rank_q must be >= 1, got {self.rank_q}")
        if self.outer_max_iters < 1:
            raise ParameterError("outer_max_iters must be >= 1")
        if not self.outer_rel_tol > 0 or not self.fcls_tol > 0:
            raise ParameterError("tolerances must be > 0")

    def effective_cpd_opts(self):
        opts = self.cpd_opts or CpdOptions(rank=self.rank_q, seed=self.seed)
        return opts.replace(rank=self.rank_q)


@dataclass
class RunReport:
    """Per-run record: objective trajectory, timings, termination."""

    objective_history: list = field(default_factory=list)
    j_after_a_step: list = field(default_factory=list)
    a_step_seconds: list = field(default_factory=list)
    q_step_seconds: list = field(default_factory=list)
    cpd_fit_history: list = field(default_factory=list)
    iterations: int = 0
    termination: str = ""
    total_seconds: float = 0.0

    def to_dict(self):
        return {
            "objective_history": list(self.objective_history),
            "j_after_a_step": list(self.j_after_a_step),
            "a_step_seconds": list(self.a_step_seconds),
            "q_step_seconds": list(self.q_step_seconds),
            "cpd_fit_history": list(self.cpd_fit_history),
            "iterations": self.iterations,
            "termination": self.termination,
            "total_seconds": self.total_seconds,
        }


def check_abundances(A, neg_slack=1e-9, sum_slack=1e-8):
    """Assert the simplex invariants of an abundance tensor.

    Every entry must exceed ``-neg_slack`` and every mode-3 fiber must sum
    to one within ``sum_slack``.
    """
    A = as_tensor3(A, name="abundances")
    low = float(A.min(initial=0.0))
    if low < -neg_slack:
        raise NumericalError(f"abundance entry {low} below -{neg_slack}")
    sums = A.sum(axis=2)
    worst = float(np.abs(sums - 1.0).max(initial=0.0))
    if worst > sum_slack:
        raise NumericalError(f"abundance fiber sum off by {worst} (> {sum_slack})")
    return A


def forward_model(A, M):
    """Noise-free cube implied by abundances `A` and endmembers `M`.

    Pixel ``(i, j)`` of the result is ``M @ A[i, j, :]``; this is the
    mode-3 product of `A` with `M`.
    """
    return mode_k_product(A, M, 3)


def _check_problem(cube, M):
    cube = as_tensor3(cube, name="cube")
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"endmember matrix must be 2-D, got shape {M.shape}")
    if cube.shape[2] != M.shape[0]:
        raise DimensionError(
            f"cube has {cube.shape[2]} bands but endmember matrix has "
            f"{M.shape[0]} rows (shape {M.shape})"
        )
    return cube, M


def evaluate_cost(cube, M, A, Q, lambda_a):
    """Objective value: half squared residual plus the weighted prior term."""
    cube, M = _check_problem(cube, M)
    A = as_tensor3(A, name="abundances")
    Q = as_tensor3(Q, name="prior")
    if A.shape != (cube.shape[0], cube.shape[1], M.shape[1]) or Q.shape != A.shape:
        raise DimensionError(
            f"abundance/prior shapes {A.shape}/{Q.shape} do not match cube "
            f"{cube.shape} and endmembers {M.shape}"
        )
    resid = cube - forward_model(A, M)
    fit = 0.5 * float(np.einsum("ijk,ijk->", resid, resid))
    if lambda_a == 0.0:
        return fit
    dq = A - Q
    return fit + 0.5 * lambda_a * float(np.einsum("ijk,ijk->", dq, dq))


def a_step(cube, M, Q, cfg):
    """Update the abundances with the prior held fixed.

    Solves the regularized simplex least-squares problem for every pixel
    fiber independently.  Solver failures are re-raised with the pixel
    coordinates attached.
    """
    cube, M = _check_problem(cube, M)
    Q = as_tensor3(Q, name="prior")
    n1, n2, L = cube.shape
    R = M.shape[1]
    if Q.shape != (n1, n2, R):
        raise DimensionError(f"prior shape {Q.shape} does not match {(n1, n2, R)}")
    try:
        rows = regularized_fcls_map(
            cube.reshape(n1 * n2, L), M, Q.reshape(n1 * n2, R),
            cfg.lambda_a, tol=cfg.fcls_tol,
        )
    except NumericalError as err:
        pixels = [divmod(i, n2) for i in getattr(err, "pixel_indices", [])]
        raise NumericalError(f"A-step failed at pixel(s) {pixels}: {err}") from err
    return rows.reshape(n1, n2, R)


def q_step(A, rank, cpd_opts=None):
    """Best rank-`rank` tensor for the current abundances.

    Returns the reconstruction of a CPD fitted to `A`; its squared
    distance to `A` never exceeds ``||A||_F^2``.
    """
    A = as_tensor3(A, name="abundances")
    opts = (cpd_opts or CpdOptions(rank=rank)).replace(rank=rank)
    factors, _ = cpd_als(A, opts)
    return reconstruct(factors)


def ultra(cube, M, cfg, A0=None, Q0=None):
    """Alternating minimization of the regularized unmixing objective.

    Parameters
    ----------
    cube : ndarray, shape (n1, n2, L)
        Observed image.
    M : ndarray, shape (L, R)
        Endmember matrix (known a priori).
    cfg : UltraConfig
    A0 : ndarray, optional
        Starting abundances; defaults to the plain FCLS map.
    Q0 : ndarray or CpdFactors, optional
        Starting prior; defaults to a rank-``cfg.rank_q`` fit of `A0`.
        Passing factors keeps the warm-start chain intact; passing a raw
        tensor forces a cold CPD on the first iteration, which can bump
        the objective once (noted in the report only through its history).

    Returns
    -------
    (abundances, prior, report) : (ndarray, ndarray, RunReport)
        The recorded objective history is nonincreasing (up to solver
        tolerance) when the Q-steps are warm-started, which is the
        default.
    """
    cube, M = _check_problem(cube, M)
    if not np.all(np.isfinite(cube)) or not np.all(np.isfinite(M)):
        raise ParameterError("non-finite values in unmixing input")
    cfg.validate()
    n1, n2, L = cube.shape
    R = M.shape[1]
    lam = cfg.lambda_a
    opts = cfg.effective_cpd_opts()
    report = RunReport()
    t_start = time.perf_counter()

    if A0 is None:
        A = fcls_map(cube.reshape(n1 * n2, L), M, tol=cfg.fcls_tol).reshape(n1, n2, R)
    else:
        A = as_tensor3(A0, name="A0")
        if A.shape != (n1, n2, R):
            raise DimensionError(f"A0 shape {A.shape} does not match {(n1, n2, R)}")

    factors = None
    if Q0 is None:
        if lam > 0.0:
            factors, fit = cpd_als(A, opts)
            report.cpd_fit_history.extend(fit)
            Q = reconstruct(factors)
        else:
            Q = np.zeros((n1, n2, R))
    elif isinstance(Q0, CpdFactors):
        factors = Q0
        Q = reconstruct(factors)
    else:
        Q = as_tensor3(Q0, name="Q0")
        if Q.shape != (n1, n2, R):
            raise DimensionError(f"Q0 shape {Q.shape} does not match {(n1, n2, R)}")

    report.objective_history.append(evaluate_cost(cube, M, A, Q, lam))

    termination = "max_outer_iters"
    for it in range(1, cfg.outer_max_iters + 1):
        t0 = time.perf_counter()
        A = a_step(cube, M, Q, cfg)
        report.a_step_seconds.append(time.perf_counter() - t0)
        report.j_after_a_step.append(evaluate_cost(cube, M, A, Q, lam))

        t0 = time.perf_counter()
        if lam > 0.0:
            factors, fit = cpd_als(A, opts.replace(init=factors))
            report.cpd_fit_history.extend(fit)
            Q = reconstruct(factors)
            j = evaluate_cost(cube, M, A, Q, lam)
        else:
            j = report.j_after_a_step[-1]
        report.q_step_seconds.append(time.perf_counter() - t0)

        report.objective_history.append(j)
        report.iterations = it
        prev = report.objective_history[-2]
        if abs(prev - j) <= cfg.outer_rel_tol * max(prev, 1e-300):
            termination = "converged"
            break

    report.termination = termination
    report.total_seconds = time.perf_counter() - t_start
    return A, Q, report
