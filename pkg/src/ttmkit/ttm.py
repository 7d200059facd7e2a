"""
Transfer tensors on a homogeneous time lattice.

Given dynamical maps ``E_k`` with ``rho(k dt) = E_k rho(0)`` the transfer
tensors are defined recursively by

    T_1 = E_1,    T_k = E_k - sum_{j=1}^{k-1} T_j E_{k-j},

so that the state obeys the exact discrete convolution

    rho(t_k) = sum_{j=1}^{k} T_j rho(t_{k-j}).

When the maps come from a projected semigroup, ``E_k = P U^k P``, the tensors
also have the closed form ``T_k = P U Q (Q U Q)^(k-2) Q U P`` for ``k >= 2``,
and ``T_k(t/k) k^2/t^2`` tends to the Nakajima-Zwanzig memory kernel
``K(t) = P L Q exp(Q L Q t) Q L P`` as ``k`` grows.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numpy import ndarray

from ttmkit.numlin import as_cmatrix, expm, frobenius


def _as_stack(mats, name: str) -> ndarray:
    if isinstance(mats, ndarray) and mats.ndim == 1:
        mats = mats.reshape(-1, 1, 1)
    try:
        A = np.array([np.atleast_2d(np.asarray(m, dtype=complex))
                      for m in mats])
    except ValueError as err:
        raise ValueError(f"{name}: dimension mismatch within series") from err
    if A.ndim != 3 or A.shape[0] < 1:
        raise ValueError(f"{name}: need at least one matrix")
    if A.shape[1] != A.shape[2]:
        raise ValueError(f"{name}: matrices must be square, got {A.shape[1:]}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name}: non-finite entries")
    return A


@dataclass(frozen=True)
class MapSeries:
    """Dynamical maps ``E_1..E_N`` sampled every ``dt`` (``E_0 = 1`` implied).

    ``maps`` may be given as any sequence of square matrices, or as a 1-D
    sequence of scalars for a scalar channel.
    """
    dt: float
    maps: ndarray

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive and finite")
        object.__setattr__(self, "maps", _as_stack(self.maps, "maps"))
        self.maps.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.maps.shape[1]

    def __len__(self) -> int:
        return self.maps.shape[0]

    def times(self) -> ndarray:
        return self.dt * np.arange(1, len(self) + 1)


@dataclass(frozen=True)
class TensorSeries:
    """Transfer tensors ``T_1..T_N`` on the lattice with step ``dt``."""
    dt: float
    tensors: ndarray

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive and finite")
        object.__setattr__(self, "tensors", _as_stack(self.tensors, "tensors"))
        self.tensors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.tensors.shape[1]

    def __len__(self) -> int:
        return self.tensors.shape[0]


@dataclass(frozen=True)
class ProjectorPair:
    """A projector ``P`` on the relevant variables and ``Q = 1 - P``."""
    P: ndarray
    Q: ndarray

    def __post_init__(self):
        P = as_cmatrix(self.P, "P")
        Q = as_cmatrix(self.Q, "Q")
        if P.shape != Q.shape:
            raise ValueError("P and Q must share dimension")
        eye = np.eye(P.shape[0])
        tol = 1e-12 * max(1.0, frobenius(P))
        if (frobenius(P @ P - P) > tol or frobenius(P + Q - eye) > tol
                or frobenius(P @ Q) > tol or frobenius(Q @ P) > tol):
            raise ValueError("P, Q do not form a complementary projector pair")
        P.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)

    @classmethod
    def from_p(cls, P) -> "ProjectorPair":
        P = as_cmatrix(P, "P")
        return cls(P, np.eye(P.shape[0]) - P)

    @classmethod
    def leading(cls, dim: int, n_relevant: int = 1) -> "ProjectorPair":
        """Projector onto the first ``n_relevant`` coordinates."""
        P = np.diag([1.0] * n_relevant + [0.0] * (dim - n_relevant))
        return cls.from_p(P)

    @property
    def dim(self) -> int:
        return self.P.shape[0]


def extract(maps: MapSeries) -> TensorSeries:
    """Transfer tensors from a series of dynamical maps."""
    E = maps.maps
    n = E.shape[0]
    T = np.zeros_like(E)
    T[0] = E[0]
    for k in range(1, n):
        # sum_{j=1}^{k} T_j E_{k+1-j}, zero-based: T[0..k-1] with E[k-1..0]
        T[k] = E[k] - np.einsum("jab,jbc->ac", T[:k], E[k - 1::-1])
    return TensorSeries(maps.dt, T)


def reconstruct(tensors: TensorSeries) -> MapSeries:
    """Inverse of :func:`extract`: ``E_k = sum_{j=1}^{k} T_j E_{k-j}``."""
    T = tensors.tensors
    n, d, _ = T.shape
    E = np.zeros_like(T)
    hist = np.concatenate([np.eye(d, dtype=complex)[None], E])
    for k in range(1, n + 1):
        hist[k] = np.einsum("jab,jbc->ac", T[:k], hist[k - 1::-1])
    return MapSeries(tensors.dt, hist[1:])


def propagate(tensors: TensorSeries, initial, steps: int,
              memory_cutoff: Optional[int] = None) -> ndarray:
    """
    Propagate a state with the transfer-tensor convolution.

    Parameters
    ----------
    tensors : TensorSeries
        Tensors ``T_1..T_N``; tensors beyond ``N`` are taken as zero.
    initial : array_like
        Initial state vector of length ``tensors.dim``.
    steps : int
        Number of steps to take.
    memory_cutoff : int or None
        Keep only ``T_1..T_M``. ``None`` keeps every available tensor.

    Returns
    -------
    ndarray
        Complex array of shape ``(steps + 1, dim)``; row 0 is ``initial``.
    """
    rho0 = np.atleast_1d(np.asarray(initial, dtype=complex))
    if rho0.shape != (tensors.dim,):
        raise ValueError(f"initial state has length {rho0.size}, "
                         f"expected {tensors.dim}")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    depth = len(tensors)
    if memory_cutoff is not None:
        if memory_cutoff < 1:
            raise ValueError("memory cutoff must be >= 1")
        depth = min(depth, memory_cutoff)
    T = tensors.tensors[:depth]
    traj = np.zeros((steps + 1, tensors.dim), dtype=complex)
    traj[0] = rho0
    for k in range(1, steps + 1):
        m = min(k, depth)
        traj[k] = np.einsum("jab,jb->a", T[:m], traj[k - m:k][::-1])
    return traj


def transfer_tensor_projected(U, pq: ProjectorPair, k: int) -> ndarray:
    """``P U P`` for ``k = 1``, else ``P U Q (Q U Q)^(k-2) Q U P``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    U = as_cmatrix(U, "U")
    if U.shape != pq.P.shape:
        raise ValueError("U and projectors must share dimension")
    P, Q = pq.P, pq.Q
    if k == 1:
        return P @ U @ P
    QUQ = Q @ U @ Q
    return P @ U @ Q @ np.linalg.matrix_power(QUQ, k - 2) @ Q @ U @ P


def nz_kernel(L, pq: ProjectorPair, t: float) -> ndarray:
    """Nakajima-Zwanzig memory kernel ``P L Q exp(Q L Q t) Q L P``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    L = as_cmatrix(L, "L")
    P, Q = pq.P, pq.Q
    QLQ = Q @ L @ Q
    return P @ L @ Q @ (Q @ expm(QLQ, t) @ Q) @ Q @ L @ P


def continuum_limit_error(L, pq: ProjectorPair, t: float, k: int) -> float:
    """``|| T_k(t/k) (k/t)^2 - K(t) ||_F`` with ``T_k`` built from ``exp(L t/k)``."""
    if not t > 0:
        raise ValueError("t must be > 0")
    if k < 2:
        raise ValueError("k must be >= 2")
    U = expm(L, t / k)
    Tk = transfer_tensor_projected(U, pq, k)
    return frobenius(Tk * (k / t) ** 2 - nz_kernel(L, pq, t))


def markovian_defect(maps: MapSeries) -> List[float]:
    """Frobenius norms ``||T_k||`` for ``k >= 2``; all zero for a semigroup."""
    if len(maps) < 2:
        raise ValueError("need at least two maps")
    T = extract(maps).tensors
    return [frobenius(Tk) for Tk in T[1:]]


def semigroup_series(E1, dt: float, n: int) -> MapSeries:
    """The Markovian series ``E_k = E1^k``, ``k = 1..n``."""
    E1 = np.atleast_2d(np.asarray(E1, dtype=complex))
    maps = [E1]
    for _ in range(n - 1):
        maps.append(maps[-1] @ E1)
    return MapSeries(dt, maps)


def projected_series(U, pq: ProjectorPair, dt: float, n: int) -> MapSeries:
    """``E_k = P U^k P`` for ``k = 1..n``."""
    U = as_cmatrix(U, "U")
    maps = []
    Uk = np.eye(U.shape[0], dtype=complex)
    for _ in range(n):
        Uk = Uk @ U
        maps.append(pq.P @ Uk @ pq.P)
    return MapSeries(dt, maps)


def apply_maps(maps: MapSeries, initial) -> ndarray:
    """Exact trajectory ``E_k rho0``, including ``rho0`` as row 0."""
    rho0 = np.atleast_1d(np.asarray(initial, dtype=complex))
    return np.concatenate([rho0[None], maps.maps @ rho0])

