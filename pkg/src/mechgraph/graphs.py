"""Graph catalogue, the adjacency-to-unitary construction, and target states.

The target Gaussian graph state for an adjacency matrix A is built from
the polar decomposition -(i*I + A) = R U: the unitary factor U defines
collective modes whose q quadratures are squeezed, and the covariance of
the target is V = S^T diag(e^(-2 xi) I, e^(2 xi) I) S / 2 with S the
symplectic matrix of U.  Quality of any candidate state is certified by
the nullifier combinations p - A q, whose covariance for the exact target
is (e^(-2 xi)/2)(I + A^2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .gaussian import GaussianState, SqueezingSpec, symplectic_from_unitary
from .numerics import polar_decompose

_BUILTIN_ALIASES = {
    "linear": "linear",
    "path": "linear",
    "square": "square",
    "ring": "square",
    "cycle": "square",
    "dual-rail": "dual-rail",
    "dualrail": "dual-rail",
    "ladder": "dual-rail",
    "edgeless": "edgeless",
    "empty": "edgeless",
}

BUILTIN_GRAPH_NAMES = ("linear", "square", "dual-rail", "edgeless")


def validate_adjacency(adjacency, *, tol: float = 1e-12) -> np.ndarray:
    """Check an adjacency matrix (square, symmetric, zero diagonal, real).

    Returns the validated float array; raises ValueError with row/column
    diagnostics otherwise.
    """
    arr = np.asarray(adjacency, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"adjacency must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("adjacency has non-finite entries")
    asym = np.abs(arr - arr.T)
    if asym.max() > tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise ValueError(
            f"adjacency is not symmetric: entry ({i}, {j}) = {arr[i, j]!r} "
            f"but ({j}, {i}) = {arr[j, i]!r}"
        )
    diag = np.abs(np.diag(arr))
    if diag.max() > tol:
        i = int(np.argmax(diag))
        raise ValueError(f"adjacency must have zero diagonal: entry ({i}, {i}) = {arr[i, i]!r}")
    return arr


def builtin_graph(name: str, n_nodes: int) -> np.ndarray:
    """Adjacency matrix of a named unit-weight topology.

    Supported names (with aliases): 'linear' (path), 'square' (ring /
    cycle, n >= 3), 'dual-rail' (ladder: two parallel rails of n/2 nodes
    joined rung-by-rung, n even) and 'edgeless'.
    """
    key = _BUILTIN_ALIASES.get(name.strip().lower())
    if key is None:
        raise ValueError(f"unknown graph name {name!r}; supported: {BUILTIN_GRAPH_NAMES}")
    if n_nodes < 1:
        raise ValueError(f"need at least one node, got {n_nodes}")
    adj = np.zeros((n_nodes, n_nodes))
    if key == "linear":
        for i in range(n_nodes - 1):
            adj[i, i + 1] = adj[i + 1, i] = 1.0
    elif key == "square":
        if n_nodes < 3:
            raise ValueError(f"ring graph needs at least 3 nodes, got {n_nodes}")
        for i in range(n_nodes):
            j = (i + 1) % n_nodes
            adj[i, j] = adj[j, i] = 1.0
    elif key == "dual-rail":
        if n_nodes % 2 or n_nodes < 2:
            raise ValueError(f"dual-rail graph needs an even node count >= 2, got {n_nodes}")
        half = n_nodes // 2
        for i in range(half - 1):
            adj[i, i + 1] = adj[i + 1, i] = 1.0
            adj[half + i, half + i + 1] = adj[half + i + 1, half + i] = 1.0
        for i in range(half):
            adj[i, half + i] = adj[half + i, i] = 1.0
    return adj


def load_adjacency(path) -> np.ndarray:
    """Load an adjacency matrix from a JSON (nested list) or plain-text file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
        arr = np.asarray(data, dtype=float)
    else:
        rows = [line.split() for line in text.splitlines() if line.strip()]
        try:
            arr = np.asarray(rows, dtype=float)
        except ValueError as exc:
            raise ValueError(f"{path}: could not parse numeric matrix: {exc}") from exc
    try:
        return validate_adjacency(arr)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def graph_unitary(adjacency) -> np.ndarray:
    """Unitary polar factor U of -(i*I + A) for a valid adjacency matrix A."""
    adj = validate_adjacency(adjacency)
    n = adj.shape[0]
    _, unitary = polar_decompose(-(1j * np.eye(n) + adj))
    return unitary


def target_covariance(adjacency, squeezing: SqueezingSpec) -> np.ndarray:
    """Covariance of the pure graph state for the given adjacency and squeezing."""
    unitary = graph_unitary(adjacency)
    symp = symplectic_from_unitary(unitary)
    n = unitary.shape[0]
    diag = np.concatenate(
        [np.full(n, np.exp(-2.0 * squeezing.xi)), np.full(n, np.exp(2.0 * squeezing.xi))]
    )
    cov = 0.5 * symp.T @ np.diag(diag) @ symp
    return (cov + cov.T) / 2


def nullifier_covariance(adjacency, cov) -> np.ndarray:
    """Covariance of the nullifier vector n = p - A q under the state `cov`."""
    adj = validate_adjacency(adjacency)
    cov = np.asarray(cov, dtype=float)
    n = adj.shape[0]
    if cov.shape != (2 * n, 2 * n):
        raise ValueError(
            f"covariance shape {cov.shape} does not match {n}-node adjacency"
        )
    proj = np.hstack([-adj, np.eye(n)])
    out = proj @ cov @ proj.T
    return (out + out.T) / 2


def mech_labels(n_nodes: int) -> tuple[str, ...]:
    return tuple(f"mech-{i + 1}" for i in range(n_nodes))


@dataclass(frozen=True)
class GraphTarget:
    """Bundle of everything derived from (adjacency, squeezing).

    unitary is the polar factor of -(i*I + A), symplectic its quadrature
    representation, covariance the pure target state.
    """

    adjacency: np.ndarray
    squeezing: SqueezingSpec
    unitary: np.ndarray
    symplectic: np.ndarray
    covariance: np.ndarray

    @classmethod
    def build(cls, adjacency, squeezing: SqueezingSpec) -> "GraphTarget":
        adj = validate_adjacency(adjacency).copy()  # frozen below; never the caller's buffer
        unitary = graph_unitary(adj)
        symp = symplectic_from_unitary(unitary)
        n = adj.shape[0]
        diag = np.concatenate(
            [np.full(n, np.exp(-2.0 * squeezing.xi)), np.full(n, np.exp(2.0 * squeezing.xi))]
        )
        cov = 0.5 * symp.T @ np.diag(diag) @ symp
        cov = (cov + cov.T) / 2
        for arr in (adj, unitary, symp, cov):
            arr.setflags(write=False)
        return cls(adjacency=adj, squeezing=squeezing, unitary=unitary,
                   symplectic=symp, covariance=cov)

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def state(self) -> GaussianState:
        """The target as a validated Gaussian state on mech-1..mech-N."""
        n = self.n_nodes
        return GaussianState(mech_labels(n), np.zeros(2 * n), self.covariance)

    def nullifier_spectrum(self) -> np.ndarray:
        """Eigenvalues of the target's nullifier covariance, ascending."""
        return np.linalg.eigvalsh(nullifier_covariance(self.adjacency, self.covariance))
