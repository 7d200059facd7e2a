"""
Resonant Jaynes-Cummings atom in a lossy cavity, truncated to one photon.

With the cavity starting in vacuum only three states take part,
``|e> = |up,0>``, ``|i> = |down,1>`` and ``|g> = |down,0>``. The master
equation

    d mu/dt = -i [H, mu] + kappa (a mu a^+ - {a^+ a, mu}/2),
    H = g (|e><i| + |i><e|),   a = |g><i|,

splits into two sectors:

* coherence sector ``(c_eg, c_ig)`` with generator ``liouvillian_B``; the
  atomic coherence obeys ``c(t) = Ec(t) c(0)``;
* population sector ``(dp, Im c_ei, dp', 1)`` with the affine generator
  ``liouvillian_A``; here ``dp = p_up - p_down`` and ``dp' = p_i - p_g``.

All scalar closed forms are written in terms of the coherence eigenrates
``kappa_pm = -kappa/4 +- sqrt((kappa/4)^2 - g^2)``. They are evaluated in
complex arithmetic; near the critical point ``kappa = 4 g`` the analytic
limits are used instead.

Note the ``-i`` on the commutator: it is what gives ``dc_eg/dt = -i g c_ig``.
"""

import cmath
import enum
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np
from numpy import ndarray

from ttmkit import ttm
from ttmkit.numlin import expm

EPS_DEG = 1e-9
REAL_TOL = 1e-12

BASIS = ("e", "i", "g")


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be real came out with a sizeable imaginary part."""


class DegenerateSpectrumError(ValueError):
    """Closed-form projectors do not exist for a degenerate spectrum."""


@dataclass(frozen=True)
class ModelParams:
    g: float
    kappa: float

    def __post_init__(self):
        g, kappa = float(self.g), float(self.kappa)
        if not (np.isfinite(g) and g > 0):
            raise ValueError(f"g must be positive and finite, got {self.g}")
        if not (np.isfinite(kappa) and kappa >= 0):
            raise ValueError(f"kappa must be non-negative and finite, got {self.kappa}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "kappa", kappa)

    @property
    def ratio(self) -> float:
        """``r = kappa / 4g``."""
        return self.kappa / (4.0 * self.g)

    @property
    def omega(self) -> float:
        """Oscillation frequency ``g sqrt(1 - r^2)`` (underdamped), else 0."""
        r = self.ratio
        return float(self.g * np.sqrt(1.0 - r * r)) if r < 1 else 0.0

    @classmethod
    def from_ratio(cls, g: float, r: float) -> "ModelParams":
        return cls(g, 4.0 * g * r)


class Regime(enum.Enum):
    UNDERDAMPED = "Underdamped"
    CRITICALLY_DAMPED = "CriticallyDamped"
    OVERDAMPED = "Overdamped"

    def __str__(self):
        return self.value


class RegimeInfo(NamedTuple):
    kind: Regime
    r: float


def regime(params: ModelParams) -> RegimeInfo:
    r = params.ratio
    if abs(r - 1.0) <= EPS_DEG:
        kind = Regime.CRITICALLY_DAMPED
    elif r < 1.0:
        kind = Regime.UNDERDAMPED
    else:
        kind = Regime.OVERDAMPED
    return RegimeInfo(kind, r)


class EigenratesB(NamedTuple):
    kappa_plus: complex
    kappa_minus: complex


def eigenrates(params: ModelParams) -> EigenratesB:
    """Roots of ``x^2 + kappa x / 2 + g^2 = 0``, ``+`` branch first."""
    q = params.kappa / 4.0
    s = cmath.sqrt(q * q - params.g ** 2)
    return EigenratesB(-q + s, -q - s)


def is_degenerate(params: ModelParams) -> bool:
    kp, km = eigenrates(params)
    return abs(kp - km) < EPS_DEG * params.g


# -- generators ---------------------------------------------------------------

def liouvillian_B(params: ModelParams) -> ndarray:
    g, k = params.g, params.kappa
    return np.array([[0.0, -1j * g],
                     [-1j * g, -k / 2]], dtype=complex)


def liouvillian_A(params: ModelParams) -> ndarray:
    g, k = params.g, params.kappa
    return np.array([[0.0, -4 * g, 0.0, 0.0],
                     [3 * g / 4, -k / 2, -g / 2, g / 4],
                     [k / 2, 2 * g, -k, -k / 2],
                     [0.0, 0.0, 0.0, 0.0]], dtype=complex)


def _ket(label: str) -> ndarray:
    v = np.zeros(3, dtype=complex)
    v[BASIS.index(label)] = 1.0
    return v


def vec_index(row: str, col: str) -> int:
    """Position of ``|row><col|`` in the row-major vectorization."""
    return 3 * BASIS.index(row) + BASIS.index(col)


def lindbladian_full(params: ModelParams) -> ndarray:
    """
    9x9 generator on ``vec(mu)``, row-major over ``(e, i, g)``.

    With row-major stacking ``vec(A X B) = (A kron B^T) vec(X)``.
    """
    e, i, gk = _ket("e"), _ket("i"), _ket("g")
    H = params.g * (np.outer(e, i) + np.outer(i, e))
    a = np.outer(gk, i)
    n = a.conj().T @ a
    I3 = np.eye(3)
    L = -1j * (np.kron(H, I3) - np.kron(I3, H.T))
    L += params.kappa * (np.kron(a, a.conj())
                         - 0.5 * np.kron(n, I3) - 0.5 * np.kron(I3, n.T))
    return L


SECTOR_LABELS = ("dp", "Im c_ei", "dp'", "trace", "Re c_ei",
                 "c_eg", "c_ig", "c_ge", "c_gi")


def sector_transform() -> ndarray:
    """
    Change of coordinates ``y = S vec(mu)`` that exposes the sectors.

    ``y`` is ordered as ``SECTOR_LABELS``: the four population coordinates of
    ``liouvillian_A`` (with the trace in place of the constant 1), then
    ``Re c_ei``, then the coherence pair and its conjugate pair.
    """
    S = np.zeros((9, 9), dtype=complex)
    ee, ii, gg = vec_index("e", "e"), vec_index("i", "i"), vec_index("g", "g")
    ei, ie = vec_index("e", "i"), vec_index("i", "e")
    S[0, [ee, ii, gg]] = [1, -1, -1]
    S[1, ei], S[1, ie] = -0.5j, 0.5j
    S[2, [ii, gg]] = [1, -1]
    S[3, [ee, ii, gg]] = 1
    S[4, ei], S[4, ie] = 0.5, 0.5
    for row, (r, c) in enumerate([("e", "g"), ("i", "g"), ("g", "e"), ("g", "i")]):
        S[5 + row, vec_index(r, c)] = 1
    return S


def decoupled_generator(params: ModelParams) -> ndarray:
    """``L_A (+) [-kappa/2] (+) L_B (+) conj(L_B)``, the sector form of the 9x9 generator."""
    blocks = [liouvillian_A(params), np.array([[-params.kappa / 2]]),
              liouvillian_B(params), liouvillian_B(params).conj()]
    D = np.zeros((9, 9), dtype=complex)
    pos = 0
    for b in blocks:
        n = b.shape[0]
        D[pos:pos + n, pos:pos + n] = b
        pos += n
    return D


# -- reduced atom ---------------------------------------------------------------

@dataclass(frozen=True)
class AtomState:
    p_up: float
    p_down: float
    c: complex

    @classmethod
    def from_density(cls, mu) -> "AtomState":
        """Reduce a 3x3 density matrix over ``(e, i, g)`` to the atom."""
        mu = np.asarray(mu)
        return cls(float(mu[0, 0].real), float((mu[1, 1] + mu[2, 2]).real),
                   complex(mu[0, 2]))

    @classmethod
    def from_vector(cls, x) -> "AtomState":
        """From ``(p_up, p_down, Re c, Im c)``."""
        x = np.real_if_close(np.asarray(x))
        return cls(float(np.real(x[0])), float(np.real(x[1])),
                   complex(np.real(x[2]), np.real(x[3])))

    def as_vector(self) -> ndarray:
        return np.array([self.p_up, self.p_down, self.c.real, self.c.imag])

    def embed(self) -> ndarray:
        """Atom state times cavity vacuum, as a 3x3 matrix over ``(e, i, g)``."""
        mu = np.zeros((3, 3), dtype=complex)
        mu[0, 0], mu[2, 2] = self.p_up, self.p_down
        mu[0, 2], mu[2, 0] = self.c, np.conj(self.c)
        return mu

    def is_physical(self, tol: float = 1e-12) -> bool:
        return (abs(self.p_up + self.p_down - 1) <= tol
                and -tol <= self.p_up <= 1 + tol
                and -tol <= self.p_down <= 1 + tol
                and abs(self.c) ** 2 <= self.p_up * self.p_down + 1e-9)


@dataclass(frozen=True)
class PopulationVector:
    delta_p: float
    c_ei_imag: float
    delta_p_prime: float
    unit: float = 1.0

    def __post_init__(self):
        if self.unit != 1.0:
            raise ValueError("unit component must be exactly 1")
        if not np.all(np.isfinite([self.delta_p, self.c_ei_imag, self.delta_p_prime])):
            raise ValueError("population vector must be finite")

    @classmethod
    def from_atom(cls, state: AtomState) -> "PopulationVector":
        # cavity in vacuum: p_i = 0, c_ei = 0
        return cls(state.p_up - state.p_down, 0.0, -state.p_down)

    def as_array(self) -> ndarray:
        return np.array([self.delta_p, self.c_ei_imag, self.delta_p_prime, self.unit])


def _embedding() -> ndarray:
    J = np.zeros((9, 4), dtype=complex)
    J[vec_index("e", "e"), 0] = 1
    J[vec_index("g", "g"), 1] = 1
    J[vec_index("e", "g"), [2, 3]] = [1, 1j]
    J[vec_index("g", "e"), [2, 3]] = [1, -1j]
    return J


def _readout() -> ndarray:
    R = np.zeros((4, 9), dtype=complex)
    R[0, vec_index("e", "e")] = 1
    R[1, [vec_index("i", "i"), vec_index("g", "g")]] = 1
    R[2, [vec_index("e", "g"), vec_index("g", "e")]] = [0.5, 0.5]
    R[3, [vec_index("e", "g"), vec_index("g", "e")]] = [-0.5j, 0.5j]
    return R


def atom_map(params: ModelParams, t: float) -> ndarray:
    """
    Reduced dynamical map on ``(p_up, p_down, Re c, Im c)`` at time ``t``.

    Built from the full 9x9 propagator with the cavity starting in vacuum.
    The map is linear in these coordinates, so no affine slot is needed.
    """
    M = _readout() @ expm(lindbladian_full(params), t) @ _embedding()
    return _real(M, "atom map")


# -- scalar closed forms ------------------------------------------------------

def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise ValueError("t must be finite and >= 0")
    return t


def _real(z, what: str):
    z = np.asarray(z)
    if np.iscomplexobj(z):
        bad = np.abs(z.imag) > REAL_TOL * np.maximum(1.0, np.abs(z.real))
        if np.any(bad):
            worst = float(np.max(np.abs(z.imag)))
            raise NumericalConsistencyError(
                f"{what}: imaginary residue {worst:.3e} exceeds tolerance")
        z = z.real
    return z if z.ndim else float(z)


def Ec(params: ModelParams, t):
    """Coherence map ``(k+ e^{k- t} - k- e^{k+ t}) / (k+ - k-)``."""
    t = _check_t(t)
    if is_degenerate(params):
        q = params.kappa / 4
        return _real(np.exp(-q * t) * (1 + q * t), "Ec")
    kp, km = eigenrates(params)
    return _real((kp * np.exp(km * t) - km * np.exp(kp * t)) / (kp - km), "Ec")


def Kc(params: ModelParams, t):
    """Coherence memory kernel ``-g^2 exp(-kappa t / 2)``."""
    t = _check_t(t)
    val = -params.g ** 2 * np.exp(-params.kappa * t / 2)
    return val if np.ndim(val) else float(val)


def _ratio_term(params: ModelParams, t):
    """``(e^{k- t} - e^{k+ t}) / (k+ - k-)`` as a complex value."""
    if is_degenerate(params):
        return -t * np.exp(-params.kappa * t / 4) + 0j
    kp, km = eigenrates(params)
    return (np.exp(km * t) - np.exp(kp * t)) / (kp - km)


def T2c(params: ModelParams, t):
    """Second coherence transfer tensor ``-(g (e^{k- t} - e^{k+ t}) / (k+ - k-))^2``."""
    t = _check_t(t)
    return _real(-(params.g * _ratio_term(params, t)) ** 2, "T2c")


def f_ratio(params: ModelParams, t):
    """``(k+ e^{k+ t} - k- e^{k- t}) / (k+ - k-)``, the ratio ``T_{k+1,c} / T_{k,c}``."""
    t = _check_t(t)
    if is_degenerate(params):
        q = params.kappa / 4
        return _real(np.exp(-q * t) * (1 - q * t), "f_ratio")
    kp, km = eigenrates(params)
    return _real((kp * np.exp(kp * t) - km * np.exp(km * t)) / (kp - km), "f_ratio")


def Tkc(params: ModelParams, t, k: int):
    """Coherence transfer tensor ``T_{k,c}(t) = T_{2,c}(t) f(t)^(k-2)`` for ``k >= 2``."""
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    return T2c(params, t) * f_ratio(params, t) ** (int(k) - 2)


def Ep(params: ModelParams, t):
    """Population-inversion map ``Ec^2 + T2c / 2``."""
    return Ec(params, t) ** 2 + 0.5 * T2c(params, t)


def Kp(params: ModelParams, t):
    """
    Population memory kernel.

    ``Kc(t) ((k+ - 2k-) e^{k- t} - (k- - 2k+) e^{k+ t}) / (k+ - k-)``, which
    equals ``Kc (Ec + 2 f_ratio)``.
    """
    t = _check_t(t)
    if is_degenerate(params):
        q = params.kappa / 4
        factor = _real(np.exp(-q * t) * (3 - q * t), "Kp")
    else:
        kp, km = eigenrates(params)
        factor = _real(((kp - 2 * km) * np.exp(km * t)
                        - (km - 2 * kp) * np.exp(kp * t)) / (kp - km), "Kp")
    return Kc(params, t) * factor


def T2p(params: ModelParams, t):
    """Second population transfer tensor ``3/2 T2c Ep + T3c Ec + T4c / 2``."""
    t = _check_t(t)
    return (1.5 * T2c(params, t) * Ep(params, t)
            + Tkc(params, t, 3) * Ec(params, t)
            + 0.5 * Tkc(params, t, 4))


def Tkp(params: ModelParams, dt: float, kmax: int) -> ndarray:
    """
    Population transfer tensors ``T_{1,p} .. T_{kmax,p}`` at step ``dt``.

    No closed form is used beyond ``Ep``: the tensors come from
    :func:`ttmkit.ttm.extract` applied to sampled ``Ep(k dt)``.
    """
    if kmax < 1:
        raise ValueError("kmax must be >= 1")
    samples = Ep(params, dt * np.arange(1, kmax + 1))
    T = ttm.extract(ttm.MapSeries(dt, np.atleast_1d(samples))).tensors
    return T[:, 0, 0].real


# -- eigensystems ---------------------------------------------------------------

Eigensystem = List[Tuple[complex, ndarray]]


def _require_distinct(params: ModelParams, values, what: str):
    vals = list(values)
    for a in range(len(vals)):
        for b in range(a + 1, len(vals)):
            if abs(vals[a] - vals[b]) < EPS_DEG * params.g:
                raise DegenerateSpectrumError(
                    f"{what}: eigenvalues {vals[a]:.6g} and {vals[b]:.6g} coincide")


def eigensystem_B(params: ModelParams) -> Eigensystem:
    """Eigenvalues ``k+-`` of ``liouvillian_B`` with their spectral projectors."""
    kp, km = eigenrates(params)
    _require_distinct(params, (kp, km), "subspace B")
    g = params.g
    out = []
    for a, b in ((kp, km), (km, kp)):
        P = np.array([[b, 1j * g], [1j * g, -a]]) / (b - a)
        out.append((a, P))
    return out


def eigensystem_A(params: ModelParams) -> Eigensystem:
    """
    Spectral projectors of ``liouvillian_A``.

    Eigenvalues are ``0``, ``-kappa/2`` and ``2 k+-``. The ``2 k+-`` projectors
    are built from the right eigenvector ``(1, -x/2g, (2x+y)/2y, 0)`` and the
    left eigenvector ``(y - x/2, 4g, x, (x+2y)/2)``, with ``x = k+-`` and
    ``y = k-+``; their overlap is ``(x - y)^2 / y``.
    """
    g, k = params.g, params.kappa
    kp, km = eigenrates(params)
    _require_distinct(params, (0.0, -k / 2, 2 * kp, 2 * km), "subspace A")
    d2 = (kp - km) ** 2
    P0 = np.array([[0, 0, 0, -1],
                   [0, 0, 0, 0],
                   [0, 0, 0, -1],
                   [0, 0, 0, 1]], dtype=complex)
    P1 = (-g / d2) * np.array([[g, -2 * k, 2 * g, 3 * g],
                               [k / 8, -k ** 2 / (4 * g), k / 4, 3 * k / 8],
                               [3 * g / 2, -3 * k, 3 * g, 9 * g / 2],
                               [0, 0, 0, 0]], dtype=complex)
    out = [(0j, P0), (complex(-k / 2), P1)]
    for x, y in ((kp, km), (km, kp)):
        right = np.array([1, -x / (2 * g), (2 * x + y) / (2 * y), 0])
        left = np.array([y - x / 2, 4 * g, x, (x + 2 * y) / 2])
        out.append((2 * x, (y / d2) * np.outer(right, left)))
    return out


def qblock_eigensystem_A(params: ModelParams) -> Eigensystem:
    """Spectral projectors of the 3x3 irrelevant block of ``liouvillian_A``."""
    g, k = params.g, params.kappa
    kp, km = eigenrates(params)
    _require_distinct(params, (0.0, -k / 2 + kp, -k / 2 + km), "Q block of A")
    P0 = np.array([[0, 0, k * g],
                   [0, 0, g ** 2 - k ** 2 / 2],
                   [0, 0, 2 * g ** 2 + k ** 2]], dtype=complex) / (k ** 2 + 2 * g ** 2)
    out = [(0j, P0)]
    for a, b in ((kp, km), (km, kp)):
        w3 = (b - k) / (2 * a - k)
        P = np.array([[b, g / 2, g / 2 * w3],
                      [-2 * g, -a, -a * w3],
                      [0, 0, 0]]) / (b - a)
        out.append((-k / 2 + a, P))
    return out


def spectral_exp(system: Eigensystem, t: float) -> ndarray:
    """``sum_l P_l exp(l t)``."""
    return sum(P * np.exp(lam * t) for lam, P in system)


# -- projector pairs ----------------------------------------------------------

def projectors_B() -> "ttm.ProjectorPair":
    return ttm.ProjectorPair.leading(2)


def projectors_A() -> "ttm.ProjectorPair":
    return ttm.ProjectorPair.leading(4)


def channel(params: ModelParams, name: str):
    """Generator and projector pair for ``'coherence'`` or ``'population'``."""
    if name == "coherence":
        return liouvillian_B(params), projectors_B()
    if name == "population":
        return liouvillian_A(params), projectors_A()
    raise ValueError(f"unknown channel {name!r}; expected 'coherence' or 'population'")
