"""Gram-Schmidt factorizers: the sketched (randomized) process and the
classical CGS/MGS/CGS2 baselines, plus sketched least-squares solvers and
the computable stability certificates.

The randomized process orthonormalizes with respect to the sketched inner
product <Theta., Theta.>: projection coefficients come from a small k x i
least-squares problem on sketches, the expensive n-dimensional projection
update runs at the coarse roundoff, and everything else runs fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .precision import MIXED32_64, UNIFIED64, PrecisionPolicy
from .sketch import SketchOperator

__all__ = [
    "GsVariant", "LsqSolver", "HOUSEHOLDER_QR", "SKETCHED_MGS",
    "richardson", "QrFactors", "StabilityCertificate", "BreakdownError",
    "RgsState", "ClassicalGsState", "rgs_factorize", "sketched_lsq",
    "classical_factorize",
    "certificates", "loss_of_orthogonality",
]

# A column whose sketched norm falls below this multiple of u_crs*||p_i||
# cannot be meaningfully normalized; fail loudly instead of dividing.
BREAKDOWN_FACTOR = 10.0


class BreakdownError(RuntimeError):
    """Vanishing projection residual at a given (1-based) column index."""

    def __init__(self, column: int, r_ii: float, tol: float):
        super().__init__(f"breakdown at column {column}: "
                         f"r_ii={r_ii:.3e} <= tol={tol:.3e}")
        self.column = column
        self.r_ii = r_ii
        self.tol = tol


class GsVariant(Enum):
    CGS = "cgs"
    MGS = "mgs"
    CGS2 = "cgs2"
    RGS = "rgs"


@dataclass(frozen=True)
class LsqSolver:
    """Solver used for the sketched projection coefficients.

    method: "householder" (incrementally updated Householder QR),
    "richardson" (normal-equation iteration exploiting near-orthonormality),
    or "smgs" (modified Gram-Schmidt on the sketched vectors).
    """

    method: str = "householder"
    iterations: int = 4

    def __post_init__(self):
        if self.method not in ("householder", "richardson", "smgs"):
            raise ValueError(f"unknown least-squares method {self.method!r}")
        if self.method == "richardson" and self.iterations < 1:
            raise ValueError("richardson needs at least one iteration")


HOUSEHOLDER_QR = LsqSolver("householder")
SKETCHED_MGS = LsqSolver("smgs")


def richardson(iterations: int = 4) -> LsqSolver:
    return LsqSolver("richardson", iterations)


@dataclass
class QrFactors:
    """Q (n x m), upper-triangular R (m x m); for the randomized process also
    the sketches S = Theta@Q and P = Theta@W, and optionally the certification
    sketches Phi@Q and Phi@W."""

    Q: np.ndarray
    R: np.ndarray
    S: np.ndarray | None = None
    P: np.ndarray | None = None
    S_phi: np.ndarray | None = None
    P_phi: np.ndarray | None = None


@dataclass
class StabilityCertificate:
    """Computable a-posteriori stability data for a sketched factorization."""

    delta_m: float
    delta_tilde_m: float
    cond_S: float
    omega: float | None = None
    omega_bar: float | None = None
    omega_bar_w: float | None = None
    omega_bar_margin: float | None = None
    omega_bar_w_margin: float | None = None
    margin_precondition_ok: bool | None = None
    # Practical advisory value (observed ~2x overestimation); never applied
    # silently.
    omega_bar_halved: float | None = None

    def passes_gate(self) -> bool:
        """The Delta_m, Delta~_m <= 0.1 hypothesis of the stability theorem."""
        return self.delta_m <= 0.1 and self.delta_tilde_m <= 0.1

    def sigma_enclosure(self, eps: float, u_crs: float) -> tuple[float, float]:
        """Implied [sigma_min, sigma_max] enclosure for the computed Q."""
        lo = (1.0 + eps)**-0.5 * (1.0 - self.delta_m - 0.1 * u_crs)
        hi = (1.0 - eps)**-0.5 * (1.0 + self.delta_m + 0.1 * u_crs)
        return lo, hi


class _IncrementalHouseholderQR:
    """QR of a tall matrix grown one column at a time.

    Reflectors are stored and applied in the given dtype, so running this in
    float32 emulates a unified low-precision solve. Appending column i costs
    O(k*i); solving applies the stored reflectors and back-substitutes.
    """

    def __init__(self, k: int, dtype):
        self.k = k
        self.dtype = np.dtype(dtype)
        self.vs: list[np.ndarray] = []   # Householder vectors, v[0] adjusted
        self.vnorm2: list[float] = []
        self.Rcols: list[np.ndarray] = []

    @property
    def ncols(self) -> int:
        return len(self.vs)

    def _apply_reflectors(self, z: np.ndarray) -> np.ndarray:
        for v, vn2 in zip(self.vs, self.vnorm2):
            i0 = self.k - v.shape[0]
            tail = z[i0:]
            tail -= (self.dtype.type(2.0) * (v @ tail) / vn2) * v
        return z

    def append(self, col) -> None:
        z = np.asarray(col, dtype=self.dtype).copy()
        if z.shape != (self.k,):
            raise ValueError("column length mismatch")
        i = self.ncols
        if i >= self.k:
            raise ValueError("cannot append more columns than rows")
        z = self._apply_reflectors(z)
        x = z[i:].copy()
        normx = np.linalg.norm(x)
        alpha = -np.copysign(normx, x[0]) if x[0] != 0 else -normx
        v = x
        v[0] -= alpha
        vn2 = float(v @ v)
        if vn2 == 0.0:  # exactly zero tail: column already in span
            v = np.zeros_like(x)
            v[0] = 1.0
            vn2 = 1.0
        rcol = np.empty(i + 1, dtype=self.dtype)
        rcol[:i] = z[:i]
        rcol[i] = alpha
        self.vs.append(v)
        self.vnorm2.append(vn2)
        self.Rcols.append(rcol)

    def triangular(self) -> np.ndarray:
        i = self.ncols
        R = np.zeros((i, i), dtype=self.dtype)
        for j, c in enumerate(self.Rcols):
            R[:j + 1, j] = c
        return R

    def solve(self, p) -> np.ndarray:
        """Least-squares solution against the appended columns."""
        i = self.ncols
        if i == 0:
            return np.zeros(0, dtype=self.dtype)
        z = self._apply_reflectors(np.asarray(p, dtype=self.dtype).copy())
        R = self.triangular()
        diag = np.abs(np.diag(R))
        if np.min(diag) < 1e-8 * max(np.max(diag), 1.0):
            raise np.linalg.LinAlgError("sketched basis numerically rank deficient")
        return scipy.linalg.solve_triangular(R, z[:i], lower=False)


def sketched_lsq(S_prev, p, solver: LsqSolver = HOUSEHOLDER_QR) -> np.ndarray:
    """Solve min_y ||S_prev y - p|| with the configured small solver."""
    S_prev = np.asarray(S_prev)
    p = np.asarray(p, dtype=S_prev.dtype if S_prev.size else np.float64)
    k, i = S_prev.shape if S_prev.ndim == 2 else (S_prev.shape[0], 1)
    S_prev = S_prev.reshape(k, i)
    if i == 0:
        return np.zeros(0, dtype=p.dtype)
    if solver.method == "householder":
        qr = _IncrementalHouseholderQR(k, S_prev.dtype)
        for j in range(i):
            qr.append(S_prev[:, j])
        return qr.solve(p)
    _check_lsq_rank(S_prev)
    if solver.method == "richardson":
        y = np.zeros(i, dtype=p.dtype)
        for _ in range(solver.iterations):
            y = y + S_prev.T @ (p - S_prev @ y)
        return y
    # smgs: one sweep of modified Gram-Schmidt of p against the columns
    work = p.copy()
    y = np.empty(i, dtype=p.dtype)
    for j in range(i):
        s = S_prev[:, j]
        y[j] = (s @ work) / (s @ s)
        work = work - y[j] * s
    return y


def _check_lsq_rank(S_prev) -> None:
    sv = np.linalg.svd(np.asarray(S_prev, dtype=np.float64), compute_uv=False)
    if sv[-1] < 1e-8:
        raise np.linalg.LinAlgError("sketched basis numerically rank deficient")


class RgsState:
    """Streaming state of the randomized factorizer; one column per `push`.

    Exposed so a Krylov iteration can generate w_{i+1} = A q_i between steps.
    Arrays grow in place; `factors()` returns views trimmed to the current
    column count.
    """

    def __init__(self, theta: SketchOperator, policy: PrecisionPolicy = MIXED32_64,
                 solver: LsqSolver = HOUSEHOLDER_QR, phi: SketchOperator | None = None,
                 capacity: int = 16, breakdown_factor: float = BREAKDOWN_FACTOR):
        self.theta = theta
        self.policy = policy
        self.solver = solver
        self.phi = phi
        # breakdown_factor = 0 disables the guard: benchmark protocols push
        # through numerically singular columns the way the solver would.
        self.breakdown_factor = breakdown_factor
        if phi is not None and (phi.n != theta.n):
            raise ValueError("certification sketch has mismatched ambient dimension")
        n, k = theta.n, theta.k
        self.m = 0
        self._Q = np.zeros((n, capacity), dtype=policy.coarse_dtype)
        self._R = np.zeros((capacity, capacity))
        self._S = np.zeros((k, capacity), dtype=policy.fine_dtype)
        self._P = np.zeros((k, capacity), dtype=policy.fine_dtype)
        if phi is not None:
            self._S_phi = np.zeros((phi.k, capacity), dtype=policy.fine_dtype)
            self._P_phi = np.zeros((phi.k, capacity), dtype=policy.fine_dtype)
        self._qr = (_IncrementalHouseholderQR(k, policy.fine_dtype)
                    if solver.method == "householder" else None)

    # trimmed views --------------------------------------------------------
    @property
    def Q(self):
        return self._Q[:, :self.m]

    @property
    def R(self):
        return self._R[:self.m, :self.m]

    @property
    def S(self):
        return self._S[:, :self.m]

    @property
    def P(self):
        return self._P[:, :self.m]

    def _grow(self):
        cap = self._Q.shape[1]
        if self.m < cap:
            return
        new = 2 * cap
        self._Q = np.concatenate(
            [self._Q, np.zeros((self._Q.shape[0], cap), dtype=self._Q.dtype)], axis=1)
        R = np.zeros((new, new))
        R[:cap, :cap] = self._R
        self._R = R
        for name in ("_S", "_P", "_S_phi", "_P_phi"):
            arr = getattr(self, name, None)
            if arr is not None:
                setattr(self, name, np.concatenate(
                    [arr, np.zeros((arr.shape[0], cap), dtype=arr.dtype)], axis=1))

    def push(self, w) -> float:
        """Run one iteration on the next column; returns the diagonal r_ii."""
        self._grow()
        i = self.m  # zero-based index of the new column
        policy = self.policy
        fine = policy.fine_dtype
        w64 = np.asarray(w, dtype=np.float64)
        if w64.shape != (self.theta.n,):
            raise ValueError("column length mismatch")

        p = self.theta.apply(w64).astype(fine)               # Step 1 (u_fine)
        if self.phi is not None:
            self._P_phi[:, i] = self.phi.apply(w64).astype(fine)

        if i == 0:
            r_col = np.zeros(0, dtype=fine)
            qp = w64.astype(policy.coarse_dtype)
            sp = p.copy()
        else:
            if self._qr is not None:                          # Step 2 (u_fine)
                r_col = self._qr.solve(p)
            else:
                r_col = sketched_lsq(self._S[:, :i], p, self.solver)
            # Step 3 (u_crs): q' = w - Q_{i-1} r, native arithmetic in the
            # coarse format (hardware binary32 BLAS under the mixed policy)
            crs = policy.coarse_dtype
            qp = w64.astype(crs) - self._Q[:, :i] @ r_col.astype(crs)
            sp = self.theta.apply(qp.astype(np.float64)).astype(fine)  # Step 4

        r_ii = float(np.sqrt(np.sum(sp.astype(fine) * sp)))   # Step 5 (u_fine)
        p_norm = float(np.linalg.norm(p))
        tol = self.breakdown_factor * policy.u_crs * p_norm
        if r_ii <= tol:
            raise BreakdownError(i + 1, r_ii, tol)

        self._S[:, i] = sp / fine.type(r_ii)                  # Step 6 (u_fine)
        self._Q[:, i] = (qp.astype(np.float64) / r_ii).astype(policy.coarse_dtype)
        self._P[:, i] = p
        self._R[:i, i] = r_col.astype(np.float64)
        self._R[i, i] = r_ii
        if self.phi is not None:
            self._S_phi[:, i] = (self.phi.apply(qp.astype(np.float64)) / r_ii
                                 ).astype(fine)
        if self._qr is not None:
            self._qr.append(self._S[:, i])
        self.m += 1
        return r_ii

    def factors(self) -> QrFactors:
        f = QrFactors(Q=self.Q.copy(), R=self.R.copy(),
                      S=self.S.copy(), P=self.P.copy())
        if self.phi is not None:
            f.S_phi = self._S_phi[:, :self.m].copy()
            f.P_phi = self._P_phi[:, :self.m].copy()
        return f


def rgs_factorize(W, theta: SketchOperator, policy: PrecisionPolicy = MIXED32_64,
                  solver: LsqSolver = HOUSEHOLDER_QR, with_certificate: bool = True,
                  phi: SketchOperator | None = None,
                  breakdown_factor: float = BREAKDOWN_FACTOR):
    """Randomized Gram-Schmidt QR of the columns of W.

    Returns (QrFactors, StabilityCertificate or None). W may be an n x m
    array or any iterable of n-vectors (columns are consumed in order).
    """
    if isinstance(W, np.ndarray):
        if W.ndim != 2:
            raise ValueError("W must be a matrix")
        n, m = W.shape
        if not (theta.k >= m and n >= m >= 1):
            raise ValueError(f"need k >= m and n >= m >= 1, got "
                             f"k={theta.k}, n={n}, m={m}")
        columns = (W[:, j] for j in range(m))
    else:
        columns = iter(W)
    state = RgsState(theta, policy, solver, phi=phi,
                     breakdown_factor=breakdown_factor)
    for w in columns:
        state.push(w)
    factors = state.factors()
    cert = certificates(factors) if with_certificate else None
    return factors, cert


def classical_factorize(W, variant: GsVariant, policy: PrecisionPolicy = UNIFIED64,
                        breakdown_factor: float = BREAKDOWN_FACTOR) -> QrFactors:
    """CGS / MGS / CGS2 baseline factorization.

    All high-dimensional operations run at the coarse roundoff (the classical
    baselines are single-precision throughout under the mixed policy).
    """
    W = np.asarray(W)
    if W.ndim != 2:
        raise ValueError("W must be a matrix")
    n, m = W.shape
    if not n >= m >= 1:
        raise ValueError("need n >= m >= 1")
    state = ClassicalGsState(n, variant, policy, capacity=m,
                             breakdown_factor=breakdown_factor)
    for i in range(m):
        state.push(W[:, i])
    return QrFactors(Q=state.Q.copy(), R=state.R.copy())


class ClassicalGsState:
    """Streaming CGS/MGS/CGS2, one column per `push`.

    Fixing `capacity` up front makes runs bit-identical to a batch
    factorization of the same columns (growing the backing array changes the
    BLAS leading dimension, which can change low-order bits).
    """

    def __init__(self, n: int, variant: GsVariant, policy: PrecisionPolicy,
                 capacity: int = 16, breakdown_factor: float = BREAKDOWN_FACTOR):
        if variant not in (GsVariant.CGS, GsVariant.MGS, GsVariant.CGS2):
            raise ValueError(f"classical Gram-Schmidt got {variant}")
        self.variant = variant
        self.policy = policy
        self.breakdown_factor = breakdown_factor
        self.n = n
        self.m = 0
        self._Q = np.zeros((n, capacity), dtype=policy.coarse_dtype)
        self._R = np.zeros((capacity, capacity))

    @property
    def Q(self):
        return self._Q[:, :self.m]

    @property
    def R(self):
        return self._R[:self.m, :self.m]

    def _grow(self):
        cap = self._Q.shape[1]
        if self.m < cap:
            return
        self._Q = np.concatenate(
            [self._Q, np.zeros((self.n, cap), dtype=self._Q.dtype)], axis=1)
        R = np.zeros((2 * cap, 2 * cap))
        R[:cap, :cap] = self._R
        self._R = R

    def push(self, w) -> float:
        self._grow()
        i = self.m
        dtype = self.policy.coarse_dtype
        w = np.asarray(w).astype(dtype)
        if w.shape != (self.n,):
            raise ValueError("column length mismatch")
        Q = self._Q[:, :i]
        if i == 0:
            qp = w.copy()
            r_col = np.zeros(0)
        elif self.variant is GsVariant.CGS:
            r_col = Q.T @ w
            qp = w - Q @ r_col
        elif self.variant is GsVariant.MGS:
            qp = w.copy()
            r_col = np.zeros(i, dtype=dtype)
            for j in range(i):
                r_col[j] = Q[:, j] @ qp
                qp = qp - r_col[j] * Q[:, j]
        else:  # CGS2: classical projector applied twice
            r1 = Q.T @ w
            q1 = w - Q @ r1
            r2 = Q.T @ q1
            qp = q1 - Q @ r2
            r_col = r1.astype(np.float64) + r2.astype(np.float64)
        r_ii = float(np.linalg.norm(qp))
        tol = self.breakdown_factor * self.policy.u_crs * float(np.linalg.norm(w))
        if r_ii <= tol:
            raise BreakdownError(i + 1, r_ii, tol)
        self._Q[:, i] = qp / dtype.type(r_ii)
        if i:
            self._R[:i, i] = np.asarray(r_col, dtype=np.float64)
        self._R[i, i] = r_ii
        self.m += 1
        return r_ii


def certificates(factors: QrFactors) -> StabilityCertificate:
    """Delta_m, Delta~_m and cond(S) of a sketched factorization, in binary64."""
    if factors.S is None or factors.P is None:
        raise ValueError("certificates need the sketches S and P (randomized factors)")
    S = factors.S.astype(np.float64)
    P = factors.P.astype(np.float64)
    R = factors.R
    m = S.shape[1]
    delta_m = float(np.linalg.norm(np.eye(m) - S.T @ S))
    delta_tilde = float(np.linalg.norm(P - S @ R) / np.linalg.norm(P))
    sv = np.linalg.svd(S, compute_uv=False)
    cond_s = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return StabilityCertificate(delta_m=delta_m, delta_tilde_m=delta_tilde,
                                cond_S=cond_s)


def loss_of_orthogonality(Q) -> float:
    """||I - Q^T Q||_F in binary64, whatever the storage format of Q."""
    Q = np.asarray(Q, dtype=np.float64)
    m = Q.shape[1]
    return float(np.linalg.norm(np.eye(m) - Q.T @ Q))
