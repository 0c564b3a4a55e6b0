"""Seeded sample paths of the boundary and interior diffusions.

Both schemes step the logarithm of the state with Euler-Maruyama, so every
state is positive by construction. For the interior system::

    d ln X = (a1 - b1 X - c1 Y - (alpha1 X + gamma1)^2/2 - (beta1 Y)^2/2) dt
             + (alpha1 X + gamma1) dB1 + beta1 Y dB2
    d ln Y = (a2 - b2 Y - c2 X - (alpha2 Y + gamma2)^2/2 - (beta2 X)^2/2) dt
             + (alpha2 Y + gamma2) dB3 + beta2 X dB2

The drift is evaluated at the current state and clipped to
``[-taming_cap, taming_cap]``. Noise coefficients are evaluated at the
truncated state ``min(x, K)``, with ``K`` chosen so that every
state-proportional coefficient stays below ``sqrt(taming_cap)/2``. With
the default cap ``1/h`` a step moves the log state by at most 1 through
the drift and by a Gaussian of standard deviation at most 1/2 through
the noise, so excursions above ``K`` are pulled back geometrically fast.
Freezing the drift as well would leave those excursions with a heavy
tail that inflates second moments. The shared B2 increment is the same
number in both equations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import NonFiniteState
from .model import ModelParams, validate_params
from .rng import B1, B2, B3, gaussian_stream
from .stationary import BoundarySpec

CHUNK = 1 << 15
SCHEME = "log-euler-maruyama/tamed"


@dataclass(frozen=True)
class SimConfig:
    T: float
    h: float = 1e-3
    seed: int = 0
    record_stride: int = 1
    taming_cap: float | None = None

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ValueError(f"step h must be positive, got {self.h!r}")
        if not (self.T >= self.h and math.isfinite(self.T)):
            raise ValueError(f"horizon T must be >= h, got T={self.T!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride!r}")
        if self.taming_cap is not None and not self.taming_cap > 0:
            raise ValueError("taming_cap must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))

    @property
    def cap(self) -> float:
        return 1.0 / self.h if self.taming_cap is None else float(self.taming_cap)

    def truncation(self, *slopes: float) -> float:
        """State level above which noise coefficients ``slope * x`` are frozen."""
        s = max((abs(v) for v in slopes), default=0.0)
        return 0.5 * math.sqrt(self.cap) / s if s > 0 else math.inf


@dataclass(frozen=True)
class Path:
    times: np.ndarray
    log_states: np.ndarray  # shape (n,) or (n, 2)
    seed: int
    scheme: str
    h: float
    stride: int

    @property
    def states(self) -> np.ndarray:
        return np.exp(self.log_states)

    @property
    def ndim(self) -> int:
        return 1 if self.log_states.ndim == 1 else self.log_states.shape[1]

    def column(self, component) -> np.ndarray:
        """Log values of ``component`` (0/'x' or 1/'y')."""
        idx = {"x": 0, "y": 1}.get(component, component)
        if self.log_states.ndim == 1:
            if idx != 0:
                raise ValueError("boundary path has a single component")
            return self.log_states
        return self.log_states[:, idx]


@numba.njit(cache=True, nogil=True)
def _boundary_chunk(lx, a, b, alpha, gamma, h, cap, kx, z, step0, stride, rec, pos):
    sqh = math.sqrt(h)
    for k in range(z.shape[0]):
        x = math.exp(min(lx, 700.0))
        g = alpha * x + gamma
        drift = a - b * x - 0.5 * g * g
        g = alpha * min(x, kx) + gamma
        if drift > cap:
            drift = cap
        elif drift < -cap:
            drift = -cap
        lx = lx + drift * h + g * sqh * z[k]
        step = step0 + k + 1
        if not math.isfinite(lx):
            return lx, step, pos
        if step % stride == 0:
            rec[pos] = lx
            pos += 1
    return lx, -1, pos


@numba.njit(cache=True, nogil=True)
def _full_chunk(lx, ly, par, h, cap, kx, ky, z1, z2, z3, step0, stride, rec, pos):
    a1, a2, b1, b2, c1, c2, al1, al2, be1, be2, ga1, ga2 = (
        par[0], par[1], par[2], par[3], par[4], par[5],
        par[6], par[7], par[8], par[9], par[10], par[11],
    )
    sqh = math.sqrt(h)
    for k in range(z1.shape[0]):
        x = math.exp(min(lx, 700.0))
        y = math.exp(min(ly, 700.0))
        gx = al1 * x + ga1
        gy = al2 * y + ga2
        sx = be1 * y
        sy = be2 * x
        dx = a1 - b1 * x - c1 * y - 0.5 * gx * gx - 0.5 * sx * sx
        dy = a2 - b2 * y - c2 * x - 0.5 * gy * gy - 0.5 * sy * sy
        xt = min(x, kx)
        yt = min(y, ky)
        gx = al1 * xt + ga1
        gy = al2 * yt + ga2
        sx = be1 * yt
        sy = be2 * xt
        if dx > cap:
            dx = cap
        elif dx < -cap:
            dx = -cap
        if dy > cap:
            dy = cap
        elif dy < -cap:
            dy = -cap
        w1 = sqh * z1[k]
        w2 = sqh * z2[k]
        w3 = sqh * z3[k]
        lx = lx + dx * h + gx * w1 + sx * w2
        ly = ly + dy * h + gy * w3 + sy * w2
        step = step0 + k + 1
        if not (math.isfinite(lx) and math.isfinite(ly)):
            return lx, ly, step, pos
        if step % stride == 0:
            rec[pos, 0] = lx
            rec[pos, 1] = ly
            pos += 1
    return lx, ly, -1, pos


def simulate_boundary(spec: BoundarySpec, x0: float, cfg: SimConfig, stream=(0, B1)) -> Path:
    """One path of the axis diffusion ``spec`` started at ``x0``.

    ``stream`` selects the Gaussian stream; the default matches the B1
    noise of path 0 in :func:`simulate_full`.
    """
    if not x0 > 0:
        raise ValueError(f"x0 must be positive, got {x0!r}")
    n, stride = cfg.n_steps, int(cfg.record_stride)
    rec = np.empty(n // stride + 1)
    rec[0] = math.log(x0)
    pos = 1
    lx = rec[0]
    gen = gaussian_stream(cfg.seed, stream)
    noisy = spec.alpha != 0.0 or spec.gamma != 0.0
    kx = cfg.truncation(spec.alpha)
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        z = gen.standard_normal(m) if noisy else np.zeros(m)
        lx, bad, pos = _boundary_chunk(lx, float(spec.a), float(spec.b), float(spec.alpha),
                                       float(spec.gamma), cfg.h, cfg.cap, kx, z, start, stride, rec, pos)
        if bad >= 0:
            raise NonFiniteState(int(bad))
    times = np.arange(pos) * (cfg.h * stride)
    return Path(times, rec[:pos], cfg.seed, SCHEME, cfg.h, stride)


def simulate_full(p: ModelParams, z0: tuple[float, float], cfg: SimConfig, path_index: int = 0) -> Path:
    """One path of the two-species system started at ``z0``.

    Uses streams ``(path_index, 1)``, ``(path_index, 2)``, ``(path_index, 3)``
    for B1, B2, B3. Noise-free parameters are allowed.
    """
    gens = [gaussian_stream(cfg.seed, (path_index, j)) for j in (B1, B2, B3)]
    return _simulate_full(p, z0, cfg, gens, path_index)


def _simulate_full(p: ModelParams, z0, cfg: SimConfig, gens, path_index: int) -> Path:
    # gens: three objects with a standard_normal(m) method, for B1, B2, B3
    validate_params(p, deterministic=True)
    x0, y0 = z0
    if not (x0 > 0 and y0 > 0):
        raise ValueError(f"z0 must be componentwise positive, got {z0!r}")
    n, stride = cfg.n_steps, int(cfg.record_stride)
    rec = np.empty((n // stride + 1, 2))
    rec[0] = (math.log(x0), math.log(y0))
    lx, ly = rec[0]
    pos = 1
    par = np.array([p.a1, p.a2, p.b1, p.b2, p.c1, p.c2, p.alpha1, p.alpha2,
                    p.beta1, p.beta2, p.gamma1, p.gamma2], dtype=float)
    kx = cfg.truncation(p.alpha1, p.beta2)
    ky = cfg.truncation(p.alpha2, p.beta1)
    for start in range(0, n, CHUNK):
        m = min(CHUNK, n - start)
        z1, z2, z3 = (g.standard_normal(m) for g in gens)
        lx, ly, bad, pos = _full_chunk(lx, ly, par, cfg.h, cfg.cap, kx, ky, z1, z2, z3, start, stride, rec, pos)
        if bad >= 0:
            raise NonFiniteState(int(bad), path_index)
    times = np.arange(pos) * (cfg.h * stride)
    return Path(times, rec[:pos], cfg.seed, SCHEME, cfg.h, stride)


def path_to_csv(path: Path, fh) -> None:
    """Write ``t,x`` or ``t,x,y`` rows with round-trip precision."""
    header = "t,x" if path.ndim == 1 else "t,x,y"
    data = np.column_stack([path.times, path.states])
    fh.write(header + "\n")
    np.savetxt(fh, data, fmt="%.17g", delimiter=",")
