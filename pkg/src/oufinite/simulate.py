"""Exact simulation of Ornstein-Uhlenbeck paths and terminal functionals.

Paths use the exact Gaussian transition over each grid step, so the only
discretisation error downstream is the trapezoid rule for int Y and int Y^2.
Random numbers come from one Philox stream per path, keyed by the seed with
the path index in the high counter word; a path's values therefore do not
depend on how paths are chunked or ordered.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterator, TextIO

import numpy as np
from scipy.signal import lfilter

from .errors import LambdaZeroUnsupportedExact, MalformedInput, NotUnitSigma
from .model import OUParams, Path, SufficientStats, validate
from .transform import _h3, decay_ratio

__all__ = [
    "SimConfig",
    "PathBatch",
    "StatsBatch",
    "path_rng",
    "transition_coefficients",
    "simulate_ou_exact",
    "simulate_stats",
    "simulate_terminal_joint",
    "path_to_stats",
    "trapezoid_stats",
    "write_path_csv",
    "write_batch_csv",
    "read_paths_csv",
]

_SERIES_THRESHOLD = 1e-8


@dataclass(frozen=True)
class SimConfig:
    n_steps: int = 5000
    seed: int = 42
    n_paths: int = 1

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValueError("n_paths must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Generator for path ``path_index``; draw k of the path is counter position k."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, path_index]))


def _normals(seed: int, first: int, count: int, size: int) -> np.ndarray:
    out = np.empty((count, size))
    for k in range(count):
        out[k] = path_rng(seed, first + k).standard_normal(size)
    return out


def transition_coefficients(lam: float, sigma: float, dt: float) -> tuple[float, float]:
    """(e^{-lam dt}, conditional sd) of the exact one-step transition."""
    u = lam * dt
    if abs(u) < _SERIES_THRESHOLD:
        var = sigma**2 * dt * (1 - u)
    else:
        var = sigma**2 * (-math.expm1(-2 * u)) / (2 * lam)
    return math.exp(-u), math.sqrt(var)


@dataclass(frozen=True)
class PathBatch:
    """Paths sharing one time grid; ``values`` has shape (n_paths, n_steps + 1)."""

    times: np.ndarray
    values: np.ndarray
    params_used: OUParams

    def __len__(self) -> int:
        return self.values.shape[0]

    def path(self, k: int) -> Path:
        return Path(self.times, self.values[k], self.params_used)

    def __iter__(self) -> Iterator[Path]:
        return (self.path(k) for k in range(len(self)))


@dataclass(frozen=True)
class StatsBatch:
    """Sufficient statistics of many paths as arrays."""

    y_T: np.ndarray
    i_T: np.ndarray
    j_T: np.ndarray
    y0: float
    horizon: float

    def __len__(self) -> int:
        return self.y_T.size

    def item(self, k: int) -> SufficientStats:
        return SufficientStats(
            float(self.y_T[k]), float(self.i_T[k]), float(self.j_T[k]), self.y0, self.horizon
        )

    def q_of_alpha(self, alpha) -> np.ndarray:
        T = self.horizon
        abar = self.i_T / T
        return np.maximum(self.j_T - self.i_T * abar, 0.0) + T * (alpha - abar) ** 2

    def s_of_alpha(self, alpha) -> np.ndarray:
        return 0.5 * (self.horizon - (self.y_T - alpha) ** 2 + (self.y0 - alpha) ** 2)

    def scaled(self, factor: float) -> "StatsBatch":
        """Stats of the paths Y / factor."""
        return StatsBatch(
            self.y_T / factor, self.i_T / factor, self.j_T / factor**2, self.y0 / factor, self.horizon
        )

    def subset(self, mask: np.ndarray) -> "StatsBatch":
        return StatsBatch(self.y_T[mask], self.i_T[mask], self.j_T[mask], self.y0, self.horizon)


def _simulate_block(params: OUParams, n_steps: int, seed: int, first: int, count: int) -> np.ndarray:
    dt = params.horizon / n_steps
    a, sd = transition_coefficients(params.lam, params.sigma, dt)
    z = _normals(seed, first, count, n_steps)
    x0 = params.y0 - params.alpha
    x = lfilter([sd], [1.0, -a], z, axis=1, zi=np.full((count, 1), a * x0))[0]
    out = np.empty((count, n_steps + 1))
    out[:, 0] = params.y0
    out[:, 1:] = params.alpha + x
    return out


def simulate_ou_exact(params: OUParams, config: SimConfig = SimConfig()) -> PathBatch:
    """Sample ``config.n_paths`` paths on the uniform grid with the exact transition.

    Any sigma > 0 and any real lambda (including 0 and negative values) is
    accepted.
    """
    validate(params)
    n = config.n_steps
    times = params.horizon * np.arange(n + 1) / n
    values = _simulate_block(params, n, config.seed, 0, config.n_paths)
    times.setflags(write=False)
    values.setflags(write=False)
    return PathBatch(times, values, params)


def trapezoid_stats(values: np.ndarray, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid approximations of int Y and int Y^2 along the last axis."""
    n = values.shape[-1] - 1
    dt = horizon / n
    ends = values[..., 0], values[..., -1]
    i_T = dt * (values.sum(-1) - 0.5 * (ends[0] + ends[1]))
    j_T = dt * ((values * values).sum(-1) - 0.5 * (ends[0] ** 2 + ends[1] ** 2))
    return i_T, j_T


def path_to_stats(path: Path) -> SufficientStats:
    """(Y_T, int Y, int Y^2) of ``path`` with the trapezoid rule."""
    i_T, j_T = trapezoid_stats(path.values, path.horizon)
    return SufficientStats(float(path.values[-1]), float(i_T), float(j_T), float(path.values[0]), path.horizon)


def simulate_stats(
    params: OUParams,
    config: SimConfig = SimConfig(),
    *,
    chunk: int = 2000,
    subsample: int = 1,
) -> StatsBatch:
    """Sufficient statistics of simulated paths without keeping the paths.

    ``subsample`` > 1 computes the statistics from every ``subsample``-th grid
    point of the same paths, which gives the coarser-grid statistics with
    common random numbers.
    """
    validate(params)
    n = config.n_steps
    if n % subsample:
        raise ValueError("subsample must divide n_steps")
    y_T = np.empty(config.n_paths)
    i_T = np.empty(config.n_paths)
    j_T = np.empty(config.n_paths)
    for first in range(0, config.n_paths, chunk):
        count = min(chunk, config.n_paths - first)
        block = _simulate_block(params, n, config.seed, first, count)[:, ::subsample]
        sl = slice(first, first + count)
        y_T[sl] = block[:, -1]
        i_T[sl], j_T[sl] = trapezoid_stats(block, params.horizon)
    return StatsBatch(y_T, i_T, j_T, params.y0, params.horizon)


def terminal_joint_law(params: OUParams) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of (Y_T, I_T) for sigma = 1."""
    lam, T = params.lam, params.horizon
    x = params.y0 - params.alpha
    u = lam * T
    g_half = float(decay_ratio(u / 2))
    mean = np.array([params.alpha + x * math.exp(-u), params.alpha * T + x * T * g_half])
    var_y = T * float(decay_ratio(u))
    var_i = T**3 * float(_h3(u))
    cov = 0.5 * T * T * g_half * g_half
    return mean, np.array([[var_y, cov], [cov, var_i]])


def simulate_terminal_joint(params: OUParams, config: SimConfig = SimConfig()) -> np.ndarray:
    """Exact draws of (Y_T, I_T), shape (n_paths, 2); sigma = 1 and lambda != 0."""
    validate(params)
    if params.sigma != 1.0:
        raise NotUnitSigma("simulate_terminal_joint requires sigma == 1")
    if params.lam == 0:
        raise LambdaZeroUnsupportedExact("use simulate_stats for lambda = 0")
    mean, cov = terminal_joint_law(params)
    chol = np.linalg.cholesky(cov)
    z = _normals(config.seed, 0, config.n_paths, 2)
    return mean + z @ chol.T


# ---------------------------------------------------------------------------
# CSV


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_path_csv(path: Path, fh: TextIO) -> None:
    fh.write("t,y\n")
    for t, y in zip(path.times, path.values):
        fh.write(f"{_fmt(t)},{_fmt(y)}\n")


def write_batch_csv(batch: PathBatch, fh: TextIO) -> None:
    fh.write("path_id,t,y\n")
    times = [_fmt(t) for t in batch.times]
    for k in range(len(batch)):
        for t, y in zip(times, batch.values[k]):
            fh.write(f"{k},{t},{_fmt(y)}\n")


def _number(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise MalformedInput(f"not a number: {text!r}", row=row, column=column) from None
    if not math.isfinite(v):
        raise MalformedInput("non-finite value", row=row, column=column)
    return v


def read_paths_csv(fh: TextIO) -> list[Path]:
    """Parse a ``t,y`` or ``path_id,t,y`` CSV into paths (ordered by path_id)."""
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedInput("empty input", row=0) from None
    if header not in (["t", "y"], ["path_id", "t", "y"]):
        raise MalformedInput(f"unexpected header {header}; expected t,y or path_id,t,y", row=1)
    batched = header[0] == "path_id"
    series: dict[int, tuple[list, list]] = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise MalformedInput(f"expected {len(header)} fields, got {len(row)}", row=row_no)
        if batched:
            pid_f = _number(row[0], row_no, "path_id")
            if pid_f != int(pid_f) or pid_f < 0:
                raise MalformedInput("path_id must be a non-negative integer", row=row_no, column="path_id")
            pid = int(pid_f)
        else:
            pid = 0
        t = _number(row[-2], row_no, "t")
        y = _number(row[-1], row_no, "y")
        ts, ys = series.setdefault(pid, ([], []))
        ts.append(t)
        ys.append(y)
    if not series:
        raise MalformedInput("no data rows", row=2)
    paths = []
    for pid in sorted(series):
        ts, ys = series[pid]
        try:
            paths.append(Path(np.array(ts), np.array(ys)))
        except ValueError as exc:
            raise MalformedInput(f"path {pid}: {exc}", column="t") from None
    return paths
