"""Lotka-Volterra dynamics switched by a two-state Markov chain.

Between switches the state follows the active regime's ODE::

    x' = x (a1 - b1 x - c1 y)
    y' = y (a2 - b2 y - c2 x)

The chain leaves regime 1 at rate ``alpha`` and regime 2 at rate
``beta``. Integration is classical RK4 on ``(ln x, ln y)`` with fixed
step ``h`` on the grid ``k*h``; a step that contains a switching time is
split so that the switch lands exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .analysis import DEFAULT_FLOOR, DEFAULT_WINDOW, MonteCarloReport, run_batch
from .errors import NonFiniteState, ValidationError
from .model import ModelParams, NoiseMode, validate_params
from .rng import CHAIN, gaussian_stream
from .sde import SimConfig

SCHEME = "rk4/exact-switch-landing"

# kernel modes
_FULL, _X_AXIS, _Y_AXIS = 0, 1, 2


@dataclass(frozen=True)
class PdmpSpec:
    regime1: ModelParams
    regime2: ModelParams
    alpha: float
    beta: float

    def __post_init__(self):
        for i, r in enumerate((self.regime1, self.regime2), start=1):
            try:
                validate_params(r, deterministic=True)
            except ValidationError as exc:
                exc.field = f"regimes[{i}].{exc.field}"
                raise
            if r.mode is not NoiseMode.DETERMINISTIC:
                err = ValidationError(f"regime {i} must not carry noise intensities")
                err.field = f"regimes[{i}]"
                raise err
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                err = ValidationError(f"switching rate {name} must be positive, got {v!r}")
                err.field = name
                raise err

    @property
    def occupation(self) -> float:
        """Stationary probability of regime 1."""
        return self.beta / (self.alpha + self.beta)

    def relabeled(self) -> "PdmpSpec":
        return PdmpSpec(self.regime2, self.regime1, self.beta, self.alpha)

    def swap_species(self) -> "PdmpSpec":
        return PdmpSpec(self.regime1.swap_species(), self.regime2.swap_species(), self.alpha, self.beta)

    def _table(self) -> np.ndarray:
        return np.array([[r.a1, r.a2, r.b1, r.b2, r.c1, r.c2] for r in (self.regime1, self.regime2)])

    @classmethod
    def from_json(cls, data: dict) -> "PdmpSpec":
        """``{"regimes": [{"a":[..],"b":[..],"c":[..]}, {...}], "alpha": .., "beta": ..}``."""
        regimes = data.get("regimes")
        if not isinstance(regimes, list) or len(regimes) != 2:
            err = ValidationError("'regimes' must be a list of two coefficient sets")
            err.field = "regimes"
            raise err
        rs = []
        for i, r in enumerate(regimes, start=1):
            try:
                rs.append(ModelParams.from_json(r))
            except ValidationError as exc:
                exc.field = f"regimes[{i}].{exc.field}"
                raise
        try:
            alpha, beta = float(data["alpha"]), float(data["beta"])
        except KeyError as exc:
            err = ValidationError(f"missing switching rate {exc.args[0]!r}")
            err.field = exc.args[0]
            raise err from None
        return cls(rs[0], rs[1], alpha, beta)

    def to_json(self) -> dict:
        regs = [{k: v for k, v in r.to_json().items() if k in ("a", "b", "c")} for r in (self.regime1, self.regime2)]
        return {"regimes": regs, "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class SwitchedPath:
    times: np.ndarray
    log_states: np.ndarray  # (n, 2)
    regimes: np.ndarray  # (n,) values in {1, 2}
    jump_times: np.ndarray
    jump_from: np.ndarray
    jump_to: np.ndarray
    jump_log_states: np.ndarray  # state at each jump time, (k, 2)
    seed: int
    h: float
    stride: int
    i0: int
    scheme: str = SCHEME

    @property
    def states(self) -> np.ndarray:
        return np.exp(self.log_states)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def column(self, component) -> np.ndarray:
        return self.log_states[:, {"x": 0, "y": 1}.get(component, component)]

    def to_csv(self, fh) -> None:
        fh.write("t,x,y,regime\n")
        data = np.column_stack([self.times, self.states, self.regimes])
        np.savetxt(fh, data, fmt=["%.17g", "%.17g", "%.17g", "%d"], delimiter=",")

    def jumps_to_csv(self, fh) -> None:
        fh.write("t_jump,from,to\n")
        data = np.column_stack([self.jump_times, self.jump_from, self.jump_to])
        np.savetxt(fh, data, fmt=["%.17g", "%d", "%d"], delimiter=",")


@numba.njit(cache=True, nogil=True)
def _field(lx, ly, r, par, mode):
    a1, a2, b1, b2, c1, c2 = par[r, 0], par[r, 1], par[r, 2], par[r, 3], par[r, 4], par[r, 5]
    if mode == 1:
        x = math.exp(lx)
        return a1 - b1 * x, 0.0, a2 - c2 * x
    if mode == 2:
        y = math.exp(ly)
        return 0.0, a2 - b2 * y, a1 - c1 * y
    x = math.exp(lx)
    y = math.exp(ly)
    return a1 - b1 * x - c1 * y, a2 - b2 * y - c2 * x, 0.0


@numba.njit(cache=True, nogil=True)
def _rk4(lx, ly, acc, dt, r, par, mode):
    k1x, k1y, k1i = _field(lx, ly, r, par, mode)
    k2x, k2y, k2i = _field(lx + 0.5 * dt * k1x, ly + 0.5 * dt * k1y, r, par, mode)
    k3x, k3y, k3i = _field(lx + 0.5 * dt * k2x, ly + 0.5 * dt * k2y, r, par, mode)
    k4x, k4y, k4i = _field(lx + dt * k3x, ly + dt * k3y, r, par, mode)
    s = dt / 6.0
    return (lx + s * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            ly + s * (k1y + 2.0 * k2y + 2.0 * k3y + k4y),
            acc + s * (k1i + 2.0 * k2i + 2.0 * k3i + k4i))


@numba.njit(cache=True, nogil=True)
def _integrate(lx, ly, r, par, mode, h, n_steps, stride, jt, rec, rec_reg, rec_acc, jstate):
    """Advance ``n_steps`` grid steps; regime index ``r`` is 0 or 1.

    ``rec_acc[k]`` holds the integral of the axis observable over the
    k-th recording interval. Returns the failing step or -1.
    """
    j = 0
    nj = jt.shape[0]
    acc = 0.0
    pos = 1
    for n in range(n_steps):
        t = n * h
        t_end = (n + 1) * h
        while j < nj and jt[j] < t_end:
            if jt[j] > t:
                lx, ly, acc = _rk4(lx, ly, acc, jt[j] - t, r, par, mode)
                t = jt[j]
            jstate[j, 0] = lx
            jstate[j, 1] = ly
            r = 1 - r
            j += 1
        lx, ly, acc = _rk4(lx, ly, acc, t_end - t, r, par, mode)
        if not (math.isfinite(lx) and math.isfinite(ly) and math.isfinite(acc)):
            return n + 1
        if (n + 1) % stride == 0:
            rec[pos, 0] = lx
            rec[pos, 1] = ly
            rec_reg[pos] = r + 1
            rec_acc[pos] = acc
            acc = 0.0
            pos += 1
    return -1


def switching_times(spec: PdmpSpec, i0: int, horizon: float, seed: int, path_index: int = 0) -> np.ndarray:
    """Jump times of the chain started in ``i0`` on ``(0, horizon)``.

    Holding times are unit exponentials from the stream
    ``(path_index, CHAIN)`` divided by the exit rate of the current
    regime; the chain alternates, so regime ``k`` is known from parity.
    """
    gen = gaussian_stream(seed, (path_index, CHAIN))
    rates = (spec.alpha, spec.beta) if i0 == 1 else (spec.beta, spec.alpha)
    mean_rate = 2.0 / (1.0 / spec.alpha + 1.0 / spec.beta)
    out: list[np.ndarray] = []
    t0 = 0.0
    k0 = 0
    while True:
        m = max(64, int(1.2 * mean_rate * (horizon - t0)) + 64)
        e = gen.standard_exponential(m)
        parity = (np.arange(k0, k0 + m) % 2)
        hold = e / np.where(parity == 0, rates[0], rates[1])
        times = t0 + np.cumsum(hold)
        inside = times < horizon
        out.append(times[inside])
        if not inside.all():
            break
        t0 = float(times[-1])
        k0 += m
    return np.concatenate(out)


def _initial_regime(spec: PdmpSpec, i0, seed: int, path_index: int) -> tuple[int, int]:
    """Resolve ``i0``; ``None`` draws it from the stationary law.

    The draw uses the stream ``(path_index, CHAIN, 1)`` so the holding
    times are untouched by the choice.
    """
    if i0 is None:
        u = gaussian_stream(seed, (path_index, CHAIN, 1)).random()
        return (1 if u < spec.occupation else 2), path_index
    if i0 not in (1, 2):
        raise ValueError(f"i0 must be 1, 2 or None, got {i0!r}")
    return int(i0), path_index


def _run(spec, i0, lx, ly, mode, cfg: SimConfig, path_index: int):
    n, stride = cfg.n_steps, int(cfg.record_stride)
    jt = switching_times(spec, i0, n * cfg.h, cfg.seed, path_index)
    rec = np.empty((n // stride + 1, 2))
    rec[0] = (lx, ly)
    rec_reg = np.empty(n // stride + 1, dtype=np.int8)
    rec_reg[0] = i0
    rec_acc = np.zeros(n // stride + 1)
    jstate = np.empty((jt.size, 2))
    bad = _integrate(lx, ly, i0 - 1, spec._table(), mode, cfg.h, n, stride, jt, rec, rec_reg, rec_acc, jstate)
    if bad >= 0:
        raise NonFiniteState(int(bad), path_index)
    return jt, rec, rec_reg, rec_acc, jstate


def simulate_pdmp(spec: PdmpSpec, i0, z0: tuple[float, float], cfg: SimConfig, path_index: int = 0) -> SwitchedPath:
    """One switched trajectory from regime ``i0`` and state ``z0``.

    ``i0=None`` draws the initial regime from the chain's stationary law.
    """
    x0, y0 = z0
    if not (x0 > 0 and y0 > 0):
        raise ValueError(f"z0 must be componentwise positive, got {z0!r}")
    i0, _ = _initial_regime(spec, i0, cfg.seed, path_index)
    jt, rec, rec_reg, _, jstate = _run(spec, i0, math.log(x0), math.log(y0), _FULL, cfg, path_index)
    frm = np.where(np.arange(jt.size) % 2 == 0, i0, 3 - i0).astype(np.int8)
    times = np.arange(rec.shape[0]) * (cfg.h * cfg.record_stride)
    return SwitchedPath(times, rec, rec_reg, jt, frm, (3 - frm).astype(np.int8), jstate,
                        cfg.seed, cfg.h, int(cfg.record_stride), i0)


def rk4_segment(regime: ModelParams, z0: tuple[float, float], duration: float, h: float) -> tuple[float, float]:
    """Integrate one fixed regime for ``duration`` with steps of at most ``h``."""
    par = np.array([[regime.a1, regime.a2, regime.b1, regime.b2, regime.c1, regime.c2]])
    lx, ly = math.log(z0[0]), math.log(z0[1])
    n = int(math.floor(duration / h))
    acc = 0.0
    for _ in range(n):
        lx, ly, acc = _rk4(lx, ly, acc, h, 0, par, _FULL)
    rest = duration - n * h
    if rest > 0:
        lx, ly, acc = _rk4(lx, ly, acc, rest, 0, par, _FULL)
    return math.exp(lx), math.exp(ly)


def occupation_fraction(path: SwitchedPath, regime: int = 1) -> float:
    """Exact fraction of ``[0, horizon]`` spent in ``regime``."""
    T = path.horizon
    edges = np.concatenate(([0.0], path.jump_times[path.jump_times < T], [T]))
    spans = np.diff(edges)
    active = np.where(np.arange(spans.size) % 2 == 0, path.i0, 3 - path.i0)
    return float(spans[active == regime].sum() / T)


def invariant_box(spec: PdmpSpec) -> float:
    """Level ``H0`` such that ``[0, H0]^2`` is forward invariant.

    Each coordinate decreases whenever it exceeds its largest
    single-species carrying capacity over both regimes.
    """
    return max(max(r.a1 / r.b1, r.a2 / r.b2) for r in (spec.regime1, spec.regime2))


@dataclass(frozen=True)
class BoundaryLambdas:
    lambda1: float
    lambda2: float
    stderr1: float
    stderr2: float
    horizon: float
    burn_in: float
    seed: int

    def to_json(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "stderr1": self.stderr1,
            "stderr2": self.stderr2,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "seed": self.seed,
        }


def _batch_means(increments: np.ndarray, dt: float, batches: int) -> tuple[float, float]:
    total = increments.size * dt
    mean = float(increments.sum() / total)
    k = increments.size // batches
    per = increments[: k * batches].reshape(batches, k).sum(axis=1) / (k * dt)
    err = float(per.std(ddof=1) / math.sqrt(batches))
    # accumulated rounding in the running integral bounds the resolution
    floor = 64.0 * np.finfo(float).eps * math.sqrt(increments.size) * max(1.0, abs(mean))
    return mean, float(max(err, floor))


def pdmp_boundary_lambdas(
    spec: PdmpSpec,
    T: float,
    seed: int,
    h: float = 1e-3,
    i0: int = 1,
    burn_in: float | None = None,
    batches: int = 20,
    u0: float = 1.0,
) -> BoundaryLambdas:
    """Time averages of the invasion rates along the two switched axis systems.

    lambda1 averages ``a2 - c2 u`` along ``u' = u (a1 - b1 u)`` on the
    x-axis; lambda2 averages ``a1 - c1 v`` along ``v' = v (a2 - b2 v)``
    on the y-axis. Both runs share the chain of stream ``(0, CHAIN)``.
    The first ``burn_in`` time units (default ``min(T/10, 100)``) are
    discarded; the stderr comes from ``batches`` equal batch means.
    """
    if i0 not in (1, 2):
        raise ValueError(f"i0 must be 1 or 2, got {i0!r}")
    if burn_in is None:
        burn_in = min(T / 10.0, 100.0)
    stride = max(1, int(round(0.1 / h)))
    cfg = SimConfig(T=T, h=h, seed=seed, record_stride=stride)
    dt = h * stride
    start = int(math.ceil(burn_in / dt))
    out = []
    for mode in (_X_AXIS, _Y_AXIS):
        lx = math.log(u0) if mode == _X_AXIS else 0.0
        ly = math.log(u0) if mode == _Y_AXIS else 0.0
        _, _, _, acc, _ = _run(spec, i0, lx, ly, mode, cfg, 0)
        inc = acc[1 + start:]
        if inc.size < batches * 2:
            raise ValueError("horizon too short for the requested batches after burn-in")
        out.append(_batch_means(inc, dt, batches))
    (l1, e1), (l2, e2) = out
    return BoundaryLambdas(l1, l2, e1, e2, T, burn_in, seed)


def pdmp_exclusion_mc(
    spec: PdmpSpec,
    i0,
    z0: tuple[float, float],
    n_paths: int,
    cfg: SimConfig,
    floor: float = DEFAULT_FLOOR,
    window: float = DEFAULT_WINDOW,
) -> MonteCarloReport:
    """Extinction frequencies over ``n_paths`` switched paths.

    Path ``i`` draws its chain from stream ``(i, CHAIN)``. ``i0=None``
    starts each path in a regime drawn from the stationary law.
    """
    if not floor < min(z0):
        raise ValueError("floor must lie below both initial densities")

    def one(i: int):
        path = simulate_pdmp(spec, i0, z0, cfg, path_index=i)
        return path.times, path.log_states

    return run_batch(one, n_paths, floor, cfg.T, cfg.seed, window)
