"""Rank-K canonical polyadic decomposition of order-3 tensors via ALS.

A decomposition is stored in normalized form: every factor column has unit
Euclidean norm and the scale sits in a nonnegative weight vector, sorted
nonincreasing.  Only the reconstructed tensor matters downstream, so the
usual sign/permutation ambiguity of the factors is left unresolved beyond
that ordering.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, ParameterError
from .tensor_ops import as_tensor3, unfold

__all__ = ["CpdFactors", "CpdOptions", "khatri_rao", "normalize_factors",
           "reconstruct", "cpd_als"]

# Relative singular-value cutoff when inverting a (possibly rank-deficient)
# Khatri-Rao Gram matrix.
_GRAM_RCOND = 1e-12


@dataclass
class CpdFactors:
    """Weights plus unit-column factor matrices of a rank-K decomposition.

    Attributes
    ----------
    weights : ndarray, shape (K,)
        Nonnegative, sorted nonincreasing.
    z1, z2, z3 : ndarray, shape (Nk, K)
        Factor matrices with unit-norm columns.  Treat instances as
        immutable; they are safe to share.
    """

    weights: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray

    @property
    def rank(self):
        return self.weights.shape[0]


@dataclass
class CpdOptions:
    """ALS controls.

    ``init`` is either ``None`` (seeded random start) or a
    :class:`CpdFactors` whose shapes must match the tensor being
    decomposed (warm start).
    """

    rank: int
    max_iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 0
    init: CpdFactors | None = None

    def validate(self):
        if self.rank < 1:
            raise ParameterError(f"CPD rank must be >= 1, got {self.rank}")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ParameterError(f"rel_tol must be > 0, got {self.rel_tol}")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)


def khatri_rao(A, B):
    """Column-wise Kronecker product.

    Column ``i`` of the result is ``kron(A[:, i], B[:, i])``, with the `B`
    index varying fastest, matching the ordering of
    :func:`ultra_unmix.tensor_ops.unfold`.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionError("khatri_rao expects two matrices")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(
            f"khatri_rao needs equal column counts, got {A.shape} and {B.shape}"
        )
    m, K = A.shape
    n = B.shape[0]
    return (A[:, None, :] * B[None, :, :]).reshape(m * n, K)


def normalize_factors(a1, a2, a3):
    """Absorb column scales into weights and sort them nonincreasing.

    The reconstructed tensor is unchanged.  All-zero columns get weight 0
    and are replaced by the first unit basis vector so the unit-norm
    invariant still holds.
    """
    mats = [np.array(a, dtype=np.float64) for a in (a1, a2, a3)]
    K = mats[0].shape[1]
    if any(m.ndim != 2 or m.shape[1] != K for m in mats):
        raise DimensionError("factor matrices must share one column count")
    weights = np.ones(K)
    for m in mats:
        norms = np.linalg.norm(m, axis=0)
        zero = norms == 0.0
        if np.any(zero):
            m[:, zero] = 0.0
            m[0, zero] = 1.0
            norms = np.where(zero, 1.0, norms)
            weights = np.where(zero, 0.0, weights)
        m /= norms
        weights = weights * norms
    order = np.argsort(-weights, kind="stable")
    return CpdFactors(weights[order], *(m[:, order] for m in mats))


def reconstruct(f):
    """Dense tensor represented by `f`: sum of weighted rank-1 outer products."""
    K = f.weights.shape[0]
    if any(z.ndim != 2 or z.shape[1] != K for z in (f.z1, f.z2, f.z3)):
        raise DimensionError("factor shapes inconsistent with weight count")
    return np.einsum("r,ir,jr,kr->ijk", f.weights, f.z1, f.z2, f.z3)


def _init_factors(T, opts):
    dims = T.shape
    if opts.init is not None:
        f = opts.init
        shapes = (f.z1.shape, f.z2.shape, f.z3.shape)
        if any(s != (d, opts.rank) for s, d in zip(shapes, dims)):
            raise DimensionError(
                f"warm-start factor shapes {shapes} do not match tensor "
                f"dims {dims} at rank {opts.rank}"
            )
        # Carry the weights on mode 1; it is re-solved first anyway.
        return [f.z1 * f.weights, f.z2.copy(), f.z3.copy()]
    rng = np.random.default_rng(opts.seed)
    mats = []
    for d in dims:
        m = rng.standard_normal((d, opts.rank))
        norms = np.linalg.norm(m, axis=0)
        norms[norms == 0.0] = 1.0
        mats.append(m / norms)
    return mats


def cpd_als(T, opts):
    """Alternating least squares for the rank-`opts.rank` decomposition of `T`.

    Parameters
    ----------
    T : ndarray, shape (n1, n2, n3)
    opts : CpdOptions

    Returns
    -------
    factors : CpdFactors
    fit_history : list of float
        Squared Frobenius residual after each full sweep; nonincreasing up
        to rounding.  Sweeps stop when the relative change of the residual
        drops below ``opts.rel_tol`` or after ``opts.max_iters`` sweeps.

    Notes
    -----
    Each block update solves its least-squares subproblem exactly (through
    a truncated pseudo-inverse of the Khatri-Rao Gram matrix), so the
    residual cannot increase between sweeps.  An all-zero tensor yields
    zero weights and a `[0.0]` history.
    """
    T = as_tensor3(T)
    opts.validate()
    norm2 = float(np.einsum("ijk,ijk->", T, T))
    if norm2 == 0.0:
        factors = normalize_factors(*_init_factors(T, opts.replace(init=None)))
        return CpdFactors(np.zeros(opts.rank), factors.z1, factors.z2, factors.z3), [0.0]

    mats = _init_factors(T, opts)
    unfoldings = [unfold(T, k) for k in (1, 2, 3)]
    others = {0: (1, 2), 1: (0, 2), 2: (0, 1)}

    fit_history = []
    prev = None
    for _ in range(opts.max_iters):
        for k in range(3):
            i, j = others[k]
            kr = khatri_rao(mats[i], mats[j])
            gram = (mats[i].T @ mats[i]) * (mats[j].T @ mats[j])
            mats[k] = unfoldings[k] @ kr @ np.linalg.pinv(gram, rcond=_GRAM_RCOND)
        recon = np.einsum("ir,jr,kr->ijk", *mats)
        diff = T - recon
        cur = float(np.einsum("ijk,ijk->", diff, diff))
        fit_history.append(cur)
        if prev is not None and abs(prev - cur) <= opts.rel_tol * max(prev, 1e-300):
            break
        prev = cur

    return normalize_factors(*mats), fit_history
