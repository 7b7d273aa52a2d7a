"""Dense linear-algebra kernels for small Gaussian-dynamics problems.

All routines are pure functions on plain numpy arrays: polar and
square-root factorisations, exact propagation of the covariance flow
dV/dt = A V + V A^T + B, and the corresponding steady-state solve.
The matrices involved are small (tens of rows), so simplicity wins over
asymptotics: the steady state is obtained from the Kronecker-product
linear system and the propagation integral from a single block matrix
exponential, which is exact for the linear flow up to expm accuracy.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
from scipy.linalg import expm

DEFAULT_TOL = 1e-10


class NotHurwitzError(ValueError):
    """Raised when a drift matrix has eigenvalues with nonnegative real part."""

    def __init__(self, offending: np.ndarray):
        self.offending = np.asarray(offending)
        listing = ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in self.offending)
        super().__init__(
            f"drift matrix is not Hurwitz; offending eigenvalue(s): {listing}"
        )


def _as_square(mat, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(mat)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def polar_decompose(mat) -> tuple[np.ndarray, np.ndarray]:
    """Factor a nonsingular square matrix as M = R @ U.

    R is the hermitian positive-definite factor sqrt(M M^dag) and U is
    unitary.  Both are computed from the SVD M = W diag(s) Z^dag as
    R = W diag(s) W^dag and U = W Z^dag, which is stable even for the
    nearly-unitary inputs this package produces.

    Raises ValueError if M is singular (the unitary factor is then not
    unique).
    """
    m = _as_square(mat, "polar input")
    w, s, zh = np.linalg.svd(m)
    if s[-1] <= s[0] * m.shape[0] * np.finfo(float).eps:
        raise ValueError(
            "polar factor undefined: matrix is singular "
            f"(smallest singular value {s[-1]:.3e})"
        )
    unitary = w @ zh
    hermitian = (w * s) @ w.conj().T
    hermitian = (hermitian + hermitian.conj().T) / 2
    return hermitian, unitary


def sqrtm_spd(mat, *, sym_tol: float = 1e-10) -> np.ndarray:
    """Symmetric square root of a symmetric positive-definite real matrix."""
    m = _as_square(mat, "sqrtm input")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > sym_tol * scale:
        raise ValueError("sqrtm_spd requires a symmetric matrix")
    vals, vecs = np.linalg.eigh((m + m.T) / 2)
    if vals[0] <= 0.0:
        raise ValueError(
            f"matrix is not positive definite (smallest eigenvalue {vals[0]:.3e})"
        )
    root = (vecs * np.sqrt(vals)) @ vecs.T
    return (root + root.T) / 2


def eigenvalues(mat) -> np.ndarray:
    """Eigenvalues of a square matrix, as a complex array (unordered multiset)."""
    return np.linalg.eigvals(_as_square(mat))


def hurwitz_violations(drift) -> np.ndarray:
    """Eigenvalues of `drift` that obstruct a steady state (empty if Hurwitz).

    Real parts above -1e-12 relative to the spectral scale count as
    violations: they are either genuinely non-dissipative directions or
    rounding residue of structurally zero eigenvalues, and in both cases a
    steady-state solve is ill-posed.
    """
    ev = eigenvalues(drift)
    scale = float(np.abs(ev).max()) if ev.size else 0.0
    return ev[ev.real >= -1e-12 * max(scale, 1e-300)]


# Per-exponential horizon bound: the [[A, B], [0, -A^T]] trick loses
# accuracy (and eventually overflows, the lower block being anti-stable)
# when ||A|| t is large.  Longer intervals use the steady-state identity
# for Hurwitz drifts and exact chunk composition otherwise.
_KERNEL_HORIZON = 4.0


def _vanloan_kernel(a, b, dt):
    n = a.shape[0]
    blk = np.zeros((2 * n, 2 * n))
    blk[:n, :n] = a * dt
    blk[:n, n:] = b * dt
    blk[n:, n:] = -a.T * dt
    f = expm(blk)
    e = f[:n, :n]
    q = f[:n, n:] @ e.T
    return e, (q + q.T) / 2


def transition_kernel(drift, diffusion, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Affine one-step update (E, Q) such that V -> E V E^T + Q after time dt.

    E = exp(A dt) and Q = int_0^dt exp(A s) B exp(A^T s) ds.  Short steps
    come from a single exponential of the block matrix [[A, B], [0, -A^T]];
    long dissipative steps use the exact identity
    Q = V_inf - E V_inf E^T with V_inf the steady-state covariance, and
    long non-dissipative steps compose short exact pieces.
    """
    a = _as_square(drift, "drift")
    b = _as_square(diffusion, "diffusion")
    if a.shape != b.shape:
        raise ValueError(f"drift {a.shape} and diffusion {b.shape} shapes differ")
    if dt < 0:
        raise ValueError(f"time must be nonnegative, got {dt}")
    n = a.shape[0]
    if dt == 0:
        return np.eye(n), np.zeros((n, n))
    norm = float(np.abs(a).sum(axis=1).max())
    chunks = max(1, int(np.ceil(norm * dt / _KERNEL_HORIZON)))
    if chunks == 1:
        return _vanloan_kernel(a, b, dt)
    # The steady-state identity Q = V_inf - E V_inf E^T is exact and cheap,
    # but only numerically sound when every mode decays appreciably within
    # dt (otherwise marginal modes make V_inf huge or undefined and the
    # difference cancels catastrophically).
    slowest = float(np.max(np.linalg.eigvals(a).real))
    if slowest < 0 and -slowest * dt >= 1e-2:
        steady = solve_lyapunov(a, b)
        e = expm(a * dt)
        q = steady - e @ steady @ e.T
        return e, (q + q.T) / 2
    e_piece, q_piece = _vanloan_kernel(a, b, dt / chunks)
    e, q = e_piece, q_piece
    for _ in range(chunks - 1):
        q = e_piece @ q @ e_piece.T + q_piece
        q = (q + q.T) / 2
        e = e_piece @ e
    return e, q


def propagate_lyapunov(cov0, drift, diffusion, t: float) -> np.ndarray:
    """Evolve dV/dt = A V + V A^T + B for a time t >= 0 starting from cov0.

    Returns exp(A t) V0 exp(A^T t) + int_0^t exp(A s) B exp(A^T s) ds,
    symmetrised.  No stability assumption on A is needed.
    """
    v0 = _as_square(cov0, "initial covariance")
    a = _as_square(drift, "drift")
    if v0.shape != a.shape:
        raise ValueError(f"covariance {v0.shape} and drift {a.shape} shapes differ")
    scale = max(1.0, float(np.abs(v0).max()))
    if np.abs(v0 - v0.T).max() > 1e-8 * scale:
        raise ValueError("initial covariance must be symmetric")
    e, q = transition_kernel(drift, diffusion, t)
    v = e @ v0 @ e.T + q
    return (v + v.T) / 2


def solve_lyapunov(drift, diffusion, *, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Steady-state covariance solving A V + V A^T + B = 0 for Hurwitz A.

    Solved through the Kronecker-product linear system, which is perfectly
    adequate at the dimensions used here.  Raises NotHurwitzError (naming
    the offending eigenvalues) when A has spectrum touching the closed
    right half-plane, and RuntimeError if the residual exceeds `tol`.
    """
    a = _as_square(drift, "drift")
    b = _as_square(diffusion, "diffusion")
    if a.shape != b.shape:
        raise ValueError(f"drift {a.shape} and diffusion {b.shape} shapes differ")
    bad = hurwitz_violations(a)
    if bad.size:
        raise NotHurwitzError(bad)
    n = a.shape[0]
    lhs = np.kron(np.eye(n), a) + np.kron(a, np.eye(n))
    lu = scipy.linalg.lu_factor(lhs)
    v = scipy.linalg.lu_solve(lu, -b.reshape(-1, order="F")).reshape((n, n), order="F")
    v = (v + v.T) / 2
    # tol is absolute for order-unity rates and relative for physical ones
    bound = tol * max(1.0, float(np.abs(b).max()))
    residual = np.inf
    for _ in range(3):  # iterative refinement handles stiff spectra
        defect = a @ v + v @ a.T + b
        residual = float(np.abs(defect).max())
        if residual <= bound:
            return v
        delta = scipy.linalg.lu_solve(lu, -defect.reshape(-1, order="F"))
        v = v + delta.reshape((n, n), order="F")
        v = (v + v.T) / 2
    residual = float(np.abs(a @ v + v @ a.T + b).max())
    if residual > bound:
        raise RuntimeError(
            f"steady-state residual {residual:.3e} exceeds tolerance {tol:.1e}"
        )
    return v
