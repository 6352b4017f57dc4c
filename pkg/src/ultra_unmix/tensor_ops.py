"""Dense order-3 tensor algebra.

Storage convention
------------------
An order-3 tensor with dimensions ``(n1, n2, n3)`` is a C-contiguous
``float64`` :class:`numpy.ndarray` of that shape.  In memory the mode-3
fibers are contiguous, then the mode-2 index advances, then the mode-1
index, i.e. entry ``T[i, j, k]`` sits at flat offset ``(i*n2 + j)*n3 + k``.

Modes are numbered 1, 2, 3 in every public signature (``mode=1`` is the
first axis).  The mode-k unfolding ``unfold(T, k)`` has ``T.shape[k-1]``
rows, and its columns enumerate the remaining two modes in their original
order with the *later* mode varying fastest (plain C-order reshape).  This
same ordering is assumed by :func:`ultra_unmix.cpd.khatri_rao`, so that

    unfold(outer3(a, b, c), 1) == outer(a, kron(b, c))

holds exactly.  ``fold`` inverts ``unfold`` bit-exactly.
"""

import numpy as np

from .exceptions import DimensionError, ParameterError

__all__ = [
    "as_tensor3",
    "outer3",
    "mode_k_product",
    "multilinear_product",
    "contract_mode3_ones",
    "unfold",
    "fold",
    "frobenius_norm",
]


def as_tensor3(T, name="tensor"):
    """Coerce `T` to a float64 order-3 array, raising on wrong rank."""
    T = np.ascontiguousarray(T, dtype=np.float64)
    if T.ndim != 3:
        raise DimensionError(f"{name} must be an order-3 array, got ndim={T.ndim}")
    return T


def _check_mode(k):
    if k not in (1, 2, 3):
        raise ParameterError(f"mode index must be 1, 2 or 3, got {k!r}")
    return k - 1


def outer3(a, b, c):
    """Outer product of three vectors.

    Returns the ``(len(a), len(b), len(c))`` tensor with entries
    ``a[i] * b[j] * c[k]``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    for name, v in (("a", a), ("b", b), ("c", c)):
        if v.ndim != 1:
            raise DimensionError(f"{name} must be a vector, got ndim={v.ndim}")
        if v.size == 0:
            raise DimensionError(f"{name} must be nonempty")
    return np.einsum("i,j,k->ijk", a, b, c)


def mode_k_product(T, B, k):
    """Multiply every mode-`k` fiber of `T` by the matrix `B`.

    Parameters
    ----------
    T : ndarray, shape (n1, n2, n3)
    B : ndarray, shape (m, nk)
        Must have as many columns as `T` has entries along mode `k`.
    k : int
        Mode index in {1, 2, 3}.

    Returns
    -------
    ndarray
        Same shape as `T` except mode `k` is replaced by ``B.shape[0]``.
    """
    T = as_tensor3(T)
    B = np.asarray(B, dtype=np.float64)
    axis = _check_mode(k)
    if B.ndim != 2:
        raise DimensionError(f"B must be a matrix, got ndim={B.ndim}")
    if B.shape[1] != T.shape[axis]:
        raise DimensionError(
            f"mode-{k} product needs B with {T.shape[axis]} columns, got {B.shape}"
        )
    # Contract over mode k, then restore the axis to its position.
    out = np.tensordot(T, B, axes=([axis], [1]))
    return np.ascontiguousarray(np.moveaxis(out, -1, axis))


def multilinear_product(T, B1, B2, B3):
    """Apply mode-1, mode-2 and mode-3 products in succession.

    The result is independent of the application order.
    """
    out = mode_k_product(T, B1, 1)
    out = mode_k_product(out, B2, 2)
    return mode_k_product(out, B3, 3)


def contract_mode3_ones(T):
    """Sum over mode 3, dropping the resulting singleton dimension.

    Equivalent to the mode-3 product with the all-ones row vector followed
    by a squeeze; for abundance tensors this yields the per-pixel
    coefficient sums.
    """
    T = as_tensor3(T)
    return T.sum(axis=2)


def unfold(T, k):
    """Mode-`k` matricization with C-order column enumeration.

    Row ``i`` holds the mode-`k` fibers at index ``i``; columns enumerate
    the remaining modes with the later mode varying fastest (see module
    docstring).
    """
    T = as_tensor3(T)
    axis = _check_mode(k)
    return np.ascontiguousarray(np.moveaxis(T, axis, 0).reshape(T.shape[axis], -1))


def fold(M, dims, k):
    """Inverse of :func:`unfold`: rebuild the ``dims`` tensor from its mode-`k` unfolding."""
    M = np.asarray(M, dtype=np.float64)
    axis = _check_mode(k)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise DimensionError(f"dims must have length 3, got {dims}")
    rest = tuple(d for i, d in enumerate(dims) if i != axis)
    if M.ndim != 2 or M.shape[0] != dims[axis] or M.shape[1] != rest[0] * rest[1]:
        raise DimensionError(
            f"cannot fold matrix of shape {M.shape} into dims {dims} at mode {k}"
        )
    return np.ascontiguousarray(np.moveaxis(M.reshape((dims[axis],) + rest), 0, axis))


def frobenius_norm(T):
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(T, dtype=np.float64)))
