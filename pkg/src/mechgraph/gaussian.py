"""Gaussian states over labelled bosonic modes, symplectic maps, and metrics.

Conventions used throughout the package (hbar = 1): quadratures are
q = (b^dag + b)/sqrt(2) and p = i(b^dag - b)/sqrt(2); vectors and
covariance matrices are ordered (q_1 .. q_M, p_1 .. p_M); the vacuum
covariance is identity/2.  States are immutable value objects validated
at construction, so anything that exists as a GaussianState is symmetric
and physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

VACUUM_VARIANCE = 0.5
PHYSICALITY_TOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block symplectic form [[0, 1], [-1, 0]] for qqpp-ordered quadratures."""
    if n_modes < 1:
        raise ValueError(f"need at least one mode, got {n_modes}")
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def physicality_deficit(cov) -> float:
    """Smallest eigenvalue of cov + i*Sigma/2; >= 0 (up to tolerance) iff physical."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    herm = cov + 0.5j * symplectic_form(n)
    return float(np.linalg.eigvalsh(herm).min())


def default_labels(n_modes: int) -> tuple[str, ...]:
    return tuple(f"mode-{i + 1}" for i in range(n_modes))


@dataclass(frozen=True)
class GaussianState:
    """Zero-or-nonzero-mean Gaussian state of len(labels) modes.

    mean has length 2M, cov is 2M x 2M, both in (q.., p..) ordering.
    """

    labels: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        labels = tuple(self.labels)
        if len(labels) != len(set(labels)):
            raise ValueError(f"mode labels must be unique, got {labels}")
        m = len(labels)
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (2 * m,):
            raise ValueError(f"mean shape {mean.shape} does not match {m} modes")
        if cov.shape != (2 * m, 2 * m):
            raise ValueError(f"covariance shape {cov.shape} does not match {m} modes")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("state has non-finite entries")
        scale = max(1.0, float(np.abs(cov).max()))
        if np.abs(cov - cov.T).max() > 1e-9 * scale:
            raise ValueError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        deficit = physicality_deficit(cov)
        if deficit < -PHYSICALITY_TOL:
            raise ValueError(
                f"unphysical covariance: min eig(V + i Sigma/2) = {deficit:.3e}"
            )
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}; have {self.labels}") from None


def vacuum(n_modes: int, labels: tuple[str, ...] | None = None) -> GaussianState:
    """Vacuum state: zero mean, covariance identity/2."""
    labels = default_labels(n_modes) if labels is None else tuple(labels)
    return GaussianState(labels, np.zeros(2 * n_modes), VACUUM_VARIANCE * np.eye(2 * n_modes))


def thermal(occupations, labels: tuple[str, ...] | None = None) -> GaussianState:
    """Product thermal state with variance (nbar_j + 1/2) on each quadrature."""
    occ = np.asarray(occupations, dtype=float)
    if occ.ndim != 1 or occ.size < 1:
        raise ValueError("occupations must be a nonempty 1-d sequence")
    if np.any(occ < 0):
        raise ValueError(f"occupations must be nonnegative, got {occ.tolist()}")
    variances = np.concatenate([occ + VACUUM_VARIANCE, occ + VACUUM_VARIANCE])
    labels = default_labels(occ.size) if labels is None else tuple(labels)
    return GaussianState(labels, np.zeros(2 * occ.size), np.diag(variances))


def _keep_indices(state: GaussianState, keep) -> list[int]:
    indices = []
    for item in keep:
        if isinstance(item, str):
            indices.append(state.index_of(item))
        else:
            idx = int(item)
            if not 0 <= idx < state.n_modes:
                raise KeyError(f"mode index {idx} out of range for {state.n_modes} modes")
            indices.append(idx)
    if not indices:
        raise ValueError("must keep at least one mode")
    if len(set(indices)) != len(indices):
        raise ValueError("duplicate modes in keep list")
    return indices


def partial_trace(state: GaussianState, keep) -> GaussianState:
    """Reduced state on the given modes (labels or integer indices, in order)."""
    indices = _keep_indices(state, keep)
    m = state.n_modes
    rows = indices + [m + i for i in indices]
    labels = tuple(state.labels[i] for i in indices)
    return GaussianState(labels, state.mean[rows], state.cov[np.ix_(rows, rows)])


def purity(state: GaussianState) -> float:
    """Tr rho^2 = 1/sqrt(det(2 V))."""
    det = np.linalg.det(2.0 * state.cov)
    if det <= 0:
        raise ValueError(f"covariance determinant {det:.3e} is not positive")
    return float(1.0 / math.sqrt(det))


def fidelity_to_pure_target(
    target: GaussianState,
    state: GaussianState,
    *,
    mean_tol: float = 1e-9,
    purity_tol: float = 1e-6,
) -> float:
    """Uhlmann fidelity of `state` against a pure zero-mean Gaussian `target`.

    For a pure target the fidelity reduces to the overlap
    1/sqrt(det(V_target + V)); it equals 1 exactly when the covariances
    coincide.  Both states must be zero-mean and have the same number of
    modes, and the target must be pure to within `purity_tol`.
    """
    if target.n_modes != state.n_modes:
        raise ValueError(
            f"mode count mismatch: target has {target.n_modes}, state has {state.n_modes}"
        )
    if np.abs(target.mean).max() > mean_tol or np.abs(state.mean).max() > mean_tol:
        raise ValueError("fidelity is implemented for zero-mean states only")
    if abs(purity(target) - 1.0) > purity_tol:
        raise ValueError(f"target state is not pure (purity {purity(target):.8f})")
    det = np.linalg.det(target.cov + state.cov)
    value = 1.0 / math.sqrt(det)
    return float(min(max(value, 0.0), 1.0))


def fidelity_from_covariances(target_cov, cov, *, clip: bool = True) -> float:
    """Overlap 1/sqrt(det(V_t + V)) on raw covariances (no validation).

    Fast path for inner loops; callers are responsible for the pure-target
    and zero-mean preconditions that `fidelity_to_pure_target` enforces.
    With clip=False the raw value is returned (it may exceed 1 by rounding).
    """
    det = np.linalg.det(np.asarray(target_cov) + np.asarray(cov))
    value = 1.0 / math.sqrt(det)
    if clip:
        value = min(max(value, 0.0), 1.0)
    return float(value)


def symplectic_from_unitary(unitary, *, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal symplectic matrix realising c = U b on qqpp quadratures.

    With X = Re U and Y = Im U the action on (q, p) is
    S = [[X, -Y], [Y, X]]; S is symplectic and orthogonal because U is
    unitary.
    """
    u = np.asarray(unitary, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitary must be square, got shape {u.shape}")
    gram = u.conj().T @ u
    if np.abs(gram - np.eye(u.shape[0])).max() > tol:
        raise ValueError("input matrix is not unitary to tolerance")
    x, y = u.real, u.imag
    return np.block([[x, -y], [y, x]])


@dataclass(frozen=True)
class SqueezingSpec:
    """Consistent triple of squeezing measures.

    r is the blue/red sideband amplitude ratio in [0, 1), xi = atanh(r)
    the squeezing parameter, and db = 10*log10(e^(2 xi)) the level in
    decibels.
    """

    r: float
    xi: float
    db: float

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError(f"squeeze ratio r must lie in [0, 1), got {self.r}")
        if abs(math.atanh(self.r) - self.xi) > 1e-12 * max(1.0, abs(self.xi)):
            raise ValueError("inconsistent (r, xi) pair")
        if abs(20.0 * self.xi * math.log10(math.e) - self.db) > 1e-12 * max(1.0, abs(self.db)):
            raise ValueError("inconsistent (xi, db) pair")

    @classmethod
    def from_r(cls, r: float) -> "SqueezingSpec":
        if not 0.0 <= r < 1.0:
            raise ValueError(f"squeeze ratio r must lie in [0, 1), got {r}")
        xi = math.atanh(r)
        return cls(r=float(r), xi=xi, db=20.0 * xi * math.log10(math.e))

    @classmethod
    def from_xi(cls, xi: float) -> "SqueezingSpec":
        if xi < 0:
            raise ValueError(f"squeezing parameter must be nonnegative, got {xi}")
        return cls(r=math.tanh(xi), xi=float(xi), db=20.0 * xi * math.log10(math.e))

    @classmethod
    def from_db(cls, db: float) -> "SqueezingSpec":
        if db < 0:
            raise ValueError(f"squeezing level in dB must be nonnegative, got {db}")
        xi = db * math.log(10.0) / 20.0
        return cls(r=math.tanh(xi), xi=xi, db=float(db))
