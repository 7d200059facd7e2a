"""
Figure-level results built from the closed forms and the generic machinery.

Sweeps use the dimensionless axes ``g t`` and ``r = kappa / 4g``. Outputs are
plain in-memory tables; serialization lives in :mod:`ttmkit.csvio`.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from numpy import ndarray

from ttmkit import jcmodel, ttm
from ttmkit.jcmodel import ModelParams, Regime
from ttmkit.numlin import convolve_trapezoid


@dataclass(frozen=True)
class Table:
    """Rectangular numeric table with named columns and free-form metadata."""
    columns: Tuple[str, ...]
    rows: ndarray
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))
        object.__setattr__(self, "rows", rows)

    def column(self, name: str) -> ndarray:
        return self.rows[:, self.columns.index(name)]


@dataclass(frozen=True)
class ZeroTable:
    params: ModelParams
    zeros: Tuple[float, ...]
    note: str = ""


@dataclass(frozen=True)
class SweepGrid:
    gt_values: ndarray
    ratio_values: ndarray
    values: ndarray

    def __post_init__(self):
        for name in ("gt_values", "ratio_values"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.size > 1 and np.any(np.diff(v) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, v)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.ratio_values.size, self.gt_values.size):
            raise ValueError("values must have shape (len(ratio), len(gt))")
        object.__setattr__(self, "values", vals)

    def to_table(self) -> Table:
        R, G = np.meshgrid(self.ratio_values, self.gt_values, indexing="ij")
        rows = np.column_stack([G.ravel(), R.ravel(), self.values.ravel()])
        return Table(("gt", "r", "T2c"), rows)


def markovian_steps(params: ModelParams, n: int) -> ZeroTable:
    """Time steps ``t_m = m pi / (g sqrt(1 - r^2))``, ``m = 1..n``, at which ``T_{2,c}`` vanishes."""
    if n < 1:
        raise ValueError("n must be >= 1")
    info = jcmodel.regime(params)
    if info.kind is not Regime.UNDERDAMPED:
        return ZeroTable(params, (), f"no Markovian steps in the {info.kind} regime")
    omega = params.omega
    zeros = tuple(float(m * np.pi / omega) for m in range(1, n + 1))
    return ZeroTable(params, zeros)


def heatmap_T2c(gt_max: float, ratio_max: float, nx: int, ny: int) -> SweepGrid:
    """Signed ``T_{2,c}`` on ``gt in [0, gt_max]`` x ``r in [0, ratio_max]``."""
    if not (gt_max > 0 and ratio_max > 0):
        raise ValueError("ranges must be positive")
    if nx < 2 or ny < 2:
        raise ValueError("nx and ny must be >= 2")
    gt = np.linspace(0.0, gt_max, nx)
    ratios = np.linspace(0.0, ratio_max, ny)
    values = np.empty((ny, nx))
    for row, r in enumerate(ratios):
        values[row] = jcmodel.T2c(ModelParams.from_ratio(1.0, r), gt)
    return SweepGrid(gt, ratios, values)


def zero_curves(ratio_values: Iterable[float], orders: int) -> Table:
    """Zero lines ``gt = m pi / sqrt(1 - r^2)`` for the underdamped ratios."""
    rows = []
    for m in range(1, orders + 1):
        for r in ratio_values:
            if r < 1 - jcmodel.EPS_DEG:
                rows.append((m, r, m * np.pi / np.sqrt(1 - r * r)))
    return Table(("m", "r", "gt"), rows, {"orders": str(orders)})


def _time_grid(t_max: float, samples: int) -> ndarray:
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    return t_max * np.arange(1, samples + 1) / samples


def kernel_difference_curve(params: ModelParams, t_max: float, samples: int,
                            k_list: Sequence[int], channel: str) -> Table:
    """``|T_k(t/k) k^2/t^2 - K(t)|`` for ``t`` on ``(0, t_max]`` and each ``k``."""
    L, pq = jcmodel.channel(params, channel)
    ks = [int(k) for k in k_list]
    if not ks:
        raise ValueError("k list is empty")
    if any(k < 2 for k in ks):
        raise ValueError("every k must be >= 2")
    rows = [(t, k, ttm.continuum_limit_error(L, pq, t, k))
            for t in _time_grid(t_max, samples) for k in ks]
    meta = {"g": repr(params.g), "kappa": repr(params.kappa), "channel": channel}
    return Table(("t", "k", "difference"), rows, meta)


def channel_map(params: ModelParams, channel: str, t):
    if channel == "coherence":
        return jcmodel.Ec(params, t)
    if channel == "population":
        return jcmodel.Ep(params, t)
    raise ValueError(f"unknown channel {channel!r}")


def regime_trajectories(param_list: Sequence[ModelParams], t_max: float,
                        samples: int, channel: str = "coherence",
                        mark_zeros: int = 0) -> Table:
    """
    Sampled ``Ec`` (or ``Ep``) for several parameter sets.

    Columns are ``g, kappa, r, t, value, zero_m``. Ordinary samples carry
    ``zero_m = 0``; when ``mark_zeros > 0`` each underdamped set also gets
    rows at its first ``mark_zeros`` Markovian steps with ``zero_m = m``.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    ts = np.linspace(0.0, t_max, samples)
    blocks: List[ndarray] = []
    for p in param_list:
        vals = channel_map(p, channel, ts)
        block = [np.column_stack([np.full_like(ts, p.g), np.full_like(ts, p.kappa),
                                  np.full_like(ts, p.ratio), ts, vals,
                                  np.zeros_like(ts)])]
        if mark_zeros > 0:
            zeros = markovian_steps(p, mark_zeros).zeros
            for m, tz in enumerate(zeros, start=1):
                block.append(np.array([[p.g, p.kappa, p.ratio, tz,
                                        channel_map(p, channel, tz), m]]))
        blocks.append(np.vstack(block))
    rows = np.vstack(blocks) if blocks else np.empty((0, 6))
    return Table(("g", "kappa", "r", "t", "value", "zero_m"), rows,
                 {"channel": channel})


def integrodiff_residual(params: ModelParams, t_max: float, samples: int) -> float:
    """
    Max residual of ``c'(t) + g^2 int_0^t exp(-kappa (t-s)/2) c(s) ds`` for ``c = Ec``.

    ``samples`` is the number of grid intervals on ``[0, t_max]``; the
    derivative is a centered difference, the integral a composite trapezoid,
    both second order.
    """
    if samples < 16:
        raise ValueError("samples must be >= 16")
    dt = t_max / samples
    ts = dt * np.arange(samples + 1)
    c = jcmodel.Ec(params, ts)
    memory = convolve_trapezoid(-jcmodel.Kc(params, ts), c, dt)
    dc = (c[2:] - c[:-2]) / (2 * dt)
    return float(np.max(np.abs(dc + memory[1:-1])))
