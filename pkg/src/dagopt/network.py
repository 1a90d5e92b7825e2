"""Mixing-matrix construction and validation.

The mixing matrix W has w_ij = edge_weight > 0 on edges, zero off-network,
and w_ii = -sum_{j in N_i} w_ij, so both row and column sums vanish and
I + W is doubly stochastic whenever edge_weight * max_degree <= 1.  Its
eigenvalues must satisfy -1 < delta_m <= ... <= delta_2 < delta_1 = 0 with
a simple zero eigenvalue (connected network).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DisconnectedTopology, InfeasibleDegree, SpectralViolation

_SPECTRAL_TOL = 1e-9
_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Topology:
    """Undirected simple graph over m agents."""

    m: int
    edges: tuple[tuple[int, int], ...]  # sorted (i, j) with i < j
    descriptor: str = "explicit"

    def __post_init__(self):
        for i, j in self.edges:
            if not (0 <= i < j < self.m):
                raise ValueError(f"bad edge ({i}, {j}) for m={self.m}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")

    @property
    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.m)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def is_connected(self) -> bool:
        if self.m == 0:
            return False
        adj = self.adjacency
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.m


@dataclass(frozen=True)
class WeightMatrix:
    """Dense m x m mixing matrix with its spectral certificate."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(default=None)  # sorted decreasing
    w_hat: float = field(default=None)  # min_i |w_ii|

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    def diag(self) -> np.ndarray:
        return np.diag(self.matrix)

    def offdiag(self) -> np.ndarray:
        W = self.matrix.copy()
        np.fill_diagonal(W, 0.0)
        return W


def ring_topology(m: int) -> Topology:
    if m < 3:
        raise ValueError("ring needs m >= 3")
    edges = tuple(sorted((i, (i + 1) % m) if i < (i + 1) % m else ((i + 1) % m, i) for i in range(m)))
    return Topology(m, edges, "ring")


def complete_topology(m: int) -> Topology:
    edges = tuple((i, j) for i in range(m) for j in range(i + 1, m))
    return Topology(m, edges, "complete")


def generate_k_regular(m: int, k: int, seed: int) -> Topology:
    """Random k-regular simple connected graph via the pairing model.

    Stubs are shuffled and paired; draws with self-loops, multi-edges, or a
    disconnected result are rejected and retried (bounded retries)."""
    if m * k % 2 != 0:
        raise InfeasibleDegree(f"m*k must be even, got m={m}, k={k}")
    if not (0 < k < m):
        raise InfeasibleDegree(f"need 0 < k < m, got m={m}, k={k}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    for _ in range(1000):
        stubs = np.repeat(np.arange(m), k)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        edges = set()
        ok = True
        for a, b in pairs:
            a, b = int(a), int(b)
            if a == b:
                ok = False
                break
            e = (a, b) if a < b else (b, a)
            if e in edges:
                ok = False
                break
            edges.add(e)
        if not ok:
            continue
        top = Topology(m, tuple(sorted(edges)), f"{k}-regular")
        if top.is_connected():
            return top
    raise InfeasibleDegree(f"could not generate a simple connected {k}-regular graph on {m} vertices")


def build_weight_matrix(topology: Topology, edge_weight: float) -> WeightMatrix:
    """Uniform-weight mixing matrix for a connected topology.

    Requires edge_weight * max_degree < 1 so that 1 + w_ii > 0."""
    if not topology.is_connected():
        raise DisconnectedTopology(f"topology on {topology.m} agents is not connected")
    if not (edge_weight > 0):
        raise ValueError("edge_weight must be > 0")
    m = topology.m
    W = np.zeros((m, m))
    for i, j in topology.edges:
        W[i, j] = edge_weight
        W[j, i] = edge_weight
    np.fill_diagonal(W, -W.sum(axis=1))
    eig = np.sort(np.linalg.eigvalsh(W))[::-1]
    if eig[-1] <= -1.0 + _SPECTRAL_TOL:
        raise SpectralViolation(f"smallest eigenvalue {eig[-1]:.12g} <= -1 (tolerance {_SPECTRAL_TOL})")
    if m > 1 and eig[1] >= -_SPECTRAL_TOL:
        raise SpectralViolation(f"second-largest eigenvalue {eig[1]:.12g} is not strictly negative")
    w_hat = float(np.min(np.abs(np.diag(W)))) if m > 1 else 0.0
    return WeightMatrix(matrix=W, eigenvalues=eig, w_hat=w_hat)


@dataclass(frozen=True)
class Certificate:
    ok: bool
    delta2: float | None
    violations: tuple[str, ...]


def validate_assumption2(W: np.ndarray | WeightMatrix) -> Certificate:
    """Check row/column sums, support symmetry and the eigenvalue band.

    Returns a structured certificate; never raises on a bad matrix."""
    A = W.matrix if isinstance(W, WeightMatrix) else np.asarray(W, dtype=float)
    violations: list[str] = []
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return Certificate(False, None, ("matrix is not square",))
    m = A.shape[0]
    row = np.abs(A.sum(axis=1)).max()
    col = np.abs(A.sum(axis=0)).max()
    if row > _SUM_TOL:
        violations.append(f"W1 = 0 violated: max |row sum| = {row:.3e}")
    if col > _SUM_TOL:
        violations.append(f"1'W = 0' violated: max |column sum| = {col:.3e}")
    off = A.copy()
    np.fill_diagonal(off, 0.0)
    if np.any(off < 0):
        violations.append("negative off-diagonal entry")
    if np.any((off > 0) != (off.T > 0)):
        violations.append("support is not symmetric")
    # eigenvalue band (-1, 0] with a simple zero eigenvalue
    sym = np.allclose(A, A.T, atol=1e-12)
    eig = np.sort(np.linalg.eigvalsh(A) if sym else np.real(np.linalg.eigvals(A)))[::-1]
    if abs(eig[0]) > _SPECTRAL_TOL:
        violations.append(f"largest eigenvalue {eig[0]:.3e} != 0")
    if eig[-1] <= -1.0 + _SPECTRAL_TOL:
        violations.append(f"smallest eigenvalue {eig[-1]:.6g} <= -1")
    delta2 = float(eig[1]) if m > 1 else None
    if m > 1 and eig[1] >= -_SPECTRAL_TOL:
        violations.append("zero eigenvalue is not simple (delta_2 >= 0)")
    if violations:
        return Certificate(False, delta2, tuple(violations))
    return Certificate(True, delta2, ())


# ---------------------------------------------------------------------------
# I/O
# ---------------------------------------------------------------------------


def save_edgelist(topology: Topology, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# m {topology.m}\n")
        for i, j in topology.edges:
            fh.write(f"{i} {j}\n")


def load_edgelist(path) -> Topology:
    """Edge-list text file: one 'i j' pair per line, 0-indexed.

    An optional '# m <count>' header pins the vertex count; otherwise it is
    inferred as max index + 1."""
    edges = []
    m = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "m":
                    m = int(parts[1])
                continue
            a, b = line.split()
            i, j = int(a), int(b)
            if i == j:
                raise ValueError(f"self-loop {i} {j}")
            edges.append((min(i, j), max(i, j)))
    if not edges:
        raise ValueError("empty edge list")
    if m is None:
        m = max(max(e) for e in edges) + 1
    return Topology(m, tuple(sorted(set(edges))), "explicit")


def save_weight_csv(W: WeightMatrix, path) -> None:
    np.savetxt(path, W.matrix, delimiter=",", fmt="%.17g")
