"""Asymptotic quantities estimated from simulated paths.

Lyapunov slopes, ergodic time averages, extinction frequencies with
Wilson intervals, and a Kolmogorov-Smirnov check of terminal values
against a boundary stationary density.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .errors import ComponentExtinct, LVError
from .model import ModelParams, validate_params
from .sde import Path, SimConfig, simulate_full
from .stationary import StationaryDensity

WILSON_LEVEL = 0.95
DEFAULT_FLOOR = 1e-8
DEFAULT_WINDOW = 0.5
MIN_WINDOW_SAMPLES = 100

# exp() of anything below this is 0.0 in double precision
_LOG_UNDERFLOW = math.log(np.finfo(float).smallest_subnormal)


@dataclass(frozen=True)
class LyapunovEstimate:
    slope: float
    stderr: float
    window: float
    intercept: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.window <= 1.0:
            raise ValueError(f"window must lie in (0, 1], got {self.window!r}")


def _tail(n: int, window: float) -> slice:
    if not 0.0 < window <= 1.0:
        raise ValueError(f"window must lie in (0, 1], got {window!r}")
    start = n - int(math.ceil(window * n))
    return slice(max(start, 0), n)


def lyapunov_fit(times: np.ndarray, logs: np.ndarray, window: float = DEFAULT_WINDOW) -> LyapunovEstimate:
    """Least-squares slope of ``logs`` against ``times`` over the tail window."""
    sl = _tail(len(times), window)
    t, v = np.asarray(times)[sl], np.asarray(logs)[sl]
    if t.size < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window holds {t.size} samples, need at least {MIN_WINDOW_SAMPLES}")
    if not np.all(np.isfinite(v)) or np.any(v < _LOG_UNDERFLOW):
        raise ComponentExtinct("component underflowed to zero inside the regression window")
    fit = stats.linregress(t, v)
    return LyapunovEstimate(float(fit.slope), float(fit.stderr), window, float(fit.intercept))


def lyapunov_exponent(path: Path, component="y", window: float = DEFAULT_WINDOW) -> LyapunovEstimate:
    """Slope of ``ln(component)`` over the last ``window`` fraction of ``path``.

    The log states are used exactly as integrated, so the fit is not
    affected by states that are too small to represent after ``exp``
    unless the log itself is non-finite.
    """
    return lyapunov_fit(path.times, path.column(component), window)


def ergodic_average(path: Path, observable: Callable) -> float:
    """Trapezoidal time average of ``observable`` along ``path``.

    For a boundary path ``observable`` receives the state array; for an
    interior path it receives ``(x, y)``. Scalars are broadcast.
    """
    t = path.times
    if t.size < 2:
        raise ValueError("need at least two samples for a time average")
    s = path.states
    raw = observable(s) if s.ndim == 1 else observable(s[:, 0], s[:, 1])
    vals = np.broadcast_to(np.asarray(raw, dtype=float), t.shape)
    dt = np.diff(t)
    w = np.zeros_like(t)
    w[:-1] += 0.5 * dt
    w[1:] += 0.5 * dt
    # same summation order for both sums so a constant averages exactly
    return float(np.sum(w * vals) / np.sum(w))


def wilson_interval(k: int, n: int, level: float = WILSON_LEVEL) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        return (0.0, 1.0)
    z = stats.norm.ppf(0.5 + level / 2.0)
    p = k / n
    z2n = z * z / n
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / n + z2n / (4.0 * n))
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return (float(lo), float(hi))


@dataclass(frozen=True)
class MonteCarloReport:
    n_paths: int
    x_extinct: int
    y_extinct: int
    neither_count: int
    ci_p: tuple[float, float]
    ci_q: tuple[float, float]
    mean_slope_x: float | None
    mean_slope_y: float | None
    slope_x_stderr: float | None
    slope_y_stderr: float | None
    floor: float
    horizon: float
    seed: int
    failed: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def n_completed(self) -> int:
        return self.x_extinct + self.y_extinct + self.neither_count

    @property
    def p_hat(self) -> float:
        return self.x_extinct / self.n_completed if self.n_completed else 0.0

    @property
    def q_hat(self) -> float:
        return self.y_extinct / self.n_completed if self.n_completed else 0.0

    @property
    def neither(self) -> float:
        if not self.n_completed:
            return 0.0
        # s + fl(1 - s) rounds to exactly 1 for any s in [0, 1]
        return 1.0 - (self.p_hat + self.q_hat)

    @property
    def completed_fraction(self) -> float:
        return self.n_completed / self.n_paths if self.n_paths else 0.0

    def to_json(self) -> dict:
        return {
            "n_paths": self.n_paths,
            "p_hat": self.p_hat,
            "q_hat": self.q_hat,
            "neither": self.neither,
            "ci_p": list(self.ci_p),
            "ci_q": list(self.ci_q),
            "mean_slope_x": self.mean_slope_x,
            "mean_slope_y": self.mean_slope_y,
            "floor": self.floor,
            "horizon": self.horizon,
            "seed": self.seed,
            "x_extinct": self.x_extinct,
            "y_extinct": self.y_extinct,
            "neither_count": self.neither_count,
            "slope_x_stderr": self.slope_x_stderr,
            "slope_y_stderr": self.slope_y_stderr,
            "n_completed": self.n_completed,
            "failed": [dict(f) for f in self.failed],
        }


def worker_count(n_tasks: int) -> int:
    """Thread count for a batch: ``LV_THREADS`` if set, else the CPU count."""
    env = os.environ.get("LV_THREADS")
    if env is not None and env.strip():
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"LV_THREADS must be a positive integer, got {env!r}") from None
        if cap < 1:
            raise ValueError(f"LV_THREADS must be a positive integer, got {env!r}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


@dataclass(frozen=True)
class _Outcome:
    kind: str  # "x", "y" or "neither"
    slope: float | None


def score_path(times: np.ndarray, log_states: np.ndarray, log_floor: float, window: float) -> _Outcome:
    """Classify one interior path by which component first drops below the floor."""
    below = log_states < log_floor
    hit_x = np.flatnonzero(below[:, 0])
    hit_y = np.flatnonzero(below[:, 1])
    ix = hit_x[0] if hit_x.size else None
    iy = hit_y[0] if hit_y.size else None
    if ix is None and iy is None:
        return _Outcome("neither", None)
    if iy is None or (ix is not None and ix < iy):
        kind, col = "x", 0
    elif ix is None or iy < ix:
        kind, col = "y", 1
    else:
        # same sample: the deeper one crossed first
        col = 0 if log_states[ix, 0] <= log_states[ix, 1] else 1
        kind = "xy"[col]
    try:
        slope = lyapunov_fit(times, log_states[:, col], window).slope
    except (ComponentExtinct, ValueError):
        slope = None
    return _Outcome(kind, slope)


def _mean_and_stderr(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values)
    err = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return float(arr.mean()), err


def run_batch(
    simulate_one: Callable[[int], tuple[np.ndarray, np.ndarray]],
    n_paths: int,
    floor: float,
    horizon: float,
    seed: int,
    window: float = DEFAULT_WINDOW,
) -> MonteCarloReport:
    """Score ``n_paths`` paths produced by ``simulate_one(index)``.

    ``simulate_one`` returns ``(times, log_states)`` with two columns.
    Results go into slots indexed by path so the report does not depend
    on thread scheduling.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    if not floor > 0:
        raise ValueError("floor must be positive")
    log_floor = math.log(floor)
    slots: list = [None] * n_paths

    def work(i: int) -> None:
        try:
            times, logs = simulate_one(i)
        except LVError as exc:
            slots[i] = exc
            return
        slots[i] = score_path(times, logs, log_floor, window)

    with ThreadPoolExecutor(max_workers=worker_count(n_paths)) as pool:
        list(pool.map(work, range(n_paths)))

    counts = {"x": 0, "y": 0, "neither": 0}
    slopes: dict[str, list[float]] = {"x": [], "y": []}
    failed = []
    for i, r in enumerate(slots):
        if isinstance(r, Exception):
            failed.append({"path_index": i, "error": type(r).__name__, "message": str(r)})
            continue
        counts[r.kind] += 1
        if r.kind != "neither" and r.slope is not None:
            slopes[r.kind].append(r.slope)
    done = sum(counts.values())
    mx, ex = _mean_and_stderr(slopes["x"])
    my, ey = _mean_and_stderr(slopes["y"])
    return MonteCarloReport(
        n_paths=n_paths,
        x_extinct=counts["x"],
        y_extinct=counts["y"],
        neither_count=counts["neither"],
        ci_p=wilson_interval(counts["x"], done),
        ci_q=wilson_interval(counts["y"], done),
        mean_slope_x=mx,
        mean_slope_y=my,
        slope_x_stderr=ex,
        slope_y_stderr=ey,
        floor=floor,
        horizon=horizon,
        seed=seed,
        failed=tuple(failed),
    )


def extinction_probabilities(
    p: ModelParams,
    z0: tuple[float, float],
    n_paths: int,
    cfg: SimConfig,
    floor: float = DEFAULT_FLOOR,
    window: float = DEFAULT_WINDOW,
) -> MonteCarloReport:
    """Monte Carlo frequencies of X-extinction and Y-extinction by time ``cfg.T``.

    Path ``i`` uses the streams ``(i, 1..3)`` of ``cfg.seed``. A path is
    X-extinct if ln X drops below ln ``floor`` at a recorded sample
    before ln Y does.
    """
    validate_params(p, deterministic=True)
    if not floor < min(z0):
        raise ValueError("floor must lie below both initial densities")

    def one(i: int):
        path = simulate_full(p, z0, cfg, path_index=i)
        return path.times, path.log_states

    return run_batch(one, n_paths, floor, cfg.T, cfg.seed, window)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    pvalue: float
    critical: float
    n: int

    @property
    def passes(self) -> bool:
        """True when the distance is below the 5% critical value."""
        return self.statistic < self.critical


def empirical_vs_stationary(samples, d: StationaryDensity) -> KsResult:
    """Two-sided KS distance between ``samples`` and the CDF of ``d``."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 50:
        raise ValueError(f"need at least 50 samples, got {x.size}")
    res = stats.kstest(x, d.cdf)
    crit = float(stats.kstwo.ppf(0.95, x.size))
    return KsResult(float(res.statistic), float(res.pvalue), crit, int(x.size))
