"""Emulation of a two-roundoff arithmetic model on top of IEEE binary32/64.

Expensive high-dimensional kernels are routed through a coarse floating-point
format (binary32) while everything else runs in a fine format (binary64).
Three policies are provided: everything coarse, everything fine, and the
mixed model where only the designated coarse kernels lose precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

U_BINARY32 = 2.0**-24
U_BINARY64 = 2.0**-53


@dataclass(frozen=True)
class PrecisionPolicy:
    """A (u_crs, u_fine) pair realized as numpy dtypes per operation class."""

    mode: str  # "f32" | "f64" | "mixed"
    coarse_dtype: np.dtype
    fine_dtype: np.dtype
    u_crs: float
    u_fine: float

    def __post_init__(self):
        if self.u_fine > self.u_crs:
            raise ValueError("u_fine must not exceed u_crs")

    def __repr__(self):
        return f"PrecisionPolicy({self.mode!r})"


UNIFIED32 = PrecisionPolicy("f32", np.dtype(np.float32), np.dtype(np.float32),
                            U_BINARY32, U_BINARY32)
UNIFIED64 = PrecisionPolicy("f64", np.dtype(np.float64), np.dtype(np.float64),
                            U_BINARY64, U_BINARY64)
MIXED32_64 = PrecisionPolicy("mixed", np.dtype(np.float32), np.dtype(np.float64),
                             U_BINARY32, U_BINARY64)

_POLICIES = {"f32": UNIFIED32, "f64": UNIFIED64, "mixed": MIXED32_64}


def policy_from_name(name: str) -> PrecisionPolicy:
    try:
        return _POLICIES[name]
    except KeyError:
        raise ValueError(f"unknown precision policy {name!r}; "
                         f"expected one of {sorted(_POLICIES)}") from None


def round_coarse(x):
    """Round a finite value (or array) to nearest-even binary32.

    The result is returned in float64 so it can flow back into the working
    format unchanged. Overflow to binary32 infinity raises.
    """
    with np.errstate(over="ignore"):
        out = np.float32(x)
    if not np.all(np.isfinite(out)) and np.all(np.isfinite(np.float64(x))):
        raise OverflowError("value overflows binary32")
    return np.float64(out)


def gemv_rounded(A, x, y=None, alpha=1.0, beta=0.0, dtype=np.float32):
    """Compute beta*y + alpha*A@x with every elementary op rounded to `dtype`.

    Operands are cast to `dtype` first, each multiply and add rounds, and the
    accumulation runs left to right over the columns of A, so the result is
    bit-identical to a scalar loop in the same order.
    """
    dtype = np.dtype(dtype)
    A = np.asarray(A)
    x = np.asarray(x)
    if A.ndim != 2 or A.shape[1] != x.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, x is {x.shape}")
    A_c = A.astype(dtype, copy=False)
    x_c = x.astype(dtype, copy=False)
    alpha_c = dtype.type(alpha)
    beta_c = dtype.type(beta)
    if y is None:
        acc = np.zeros(A.shape[0], dtype=dtype)
    else:
        acc = beta_c * np.asarray(y).astype(dtype, copy=False)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(A.shape[1]):
            acc = acc + (alpha_c * A_c[:, j]) * x_c[j]
    if not np.all(np.isfinite(acc)):
        raise OverflowError(f"overflow in {dtype} gemv accumulation")
    return acc


def gemv_coarse(A, x, y=None, alpha=1.0, beta=0.0):
    """binary32 variant of `gemv_rounded` (the u_crs projection kernel)."""
    return gemv_rounded(A, x, y=y, alpha=alpha, beta=beta, dtype=np.float32)
