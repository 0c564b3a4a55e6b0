"""Composite Gauss rules for integrands of the form ``t**q * exp(ell(t))``.

All stationary-density integrals in this package reduce to that shape on a
half line ``(0, cap]``: a power law at the origin times a smooth factor.
The panel touching 0 uses Gauss-Jacobi with weight ``t**q`` so that an
integrable endpoint singularity costs nothing; every other panel uses
Gauss-Legendre. Panels are refined dyadically until two successive
estimates agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize, special

from .errors import QuadratureFailure

LogFactor = Callable[[np.ndarray], np.ndarray]

DROP_NATS = 40.0
ORDER = 20
MIN_LEVEL = 3
MAX_LEVEL = 14


@lru_cache(maxsize=None)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def _jacobi(n: int, q: float) -> tuple[np.ndarray, np.ndarray]:
    # weight (1 + x)**q on [-1, 1]
    x, w = special.roots_jacobi(n, 0.0, q)
    return x, w


def gauss_legendre(fn: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, panels: int, order: int = ORDER) -> float:
    """Composite Gauss-Legendre estimate of the integral of ``fn`` over [lo, hi]."""
    x, w = _legendre(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    vals = fn(nodes).reshape(panels, order)
    return float(np.sum(half * (vals @ w)))


@dataclass(frozen=True)
class Support:
    """Truncated integration range and the log-integrand peak used as shift."""

    lo: float
    hi: float
    peak: float


def find_support(
    q: float,
    log_factor: LogFactor,
    scale: float,
    cap: float = math.inf,
    drop: float = DROP_NATS,
) -> Support:
    """Locate where ``q*ln t + ell(t)`` stays within ``drop`` nats of its maximum.

    ``scale`` is a rough location of the bulk; the search covers eighteen
    decades around it. A lower bound of 0 means the power law at the
    origin is kept and integrated exactly by the Jacobi panel. Negative
    ``q`` is treated as 0 for bound finding: the extra mass near the origin
    is always inside the Jacobi panel.
    """
    qe = max(q, 0.0)

    def h(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = qe * np.log(t) + log_factor(t)
        return np.where(np.isnan(out), -np.inf, out)

    grid = scale * np.logspace(-12.0, 6.0, 3601)
    if math.isfinite(cap):
        grid = np.unique(np.append(grid[grid < cap], cap))
    vals = h(grid)
    if not np.any(np.isfinite(vals)):
        raise QuadratureFailure("log-integrand is not finite anywhere on the search grid")
    i = int(np.argmax(vals))
    lo_b = grid[max(i - 1, 0)]
    hi_b = grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda t: -float(h(t)), bounds=(lo_b, hi_b), method="bounded",
                                   options={"xatol": 1e-14 * max(hi_b, 1e-300)})
    t_peak, peak = (float(res.x), -float(res.fun)) if -res.fun > vals[i] else (float(grid[i]), float(vals[i]))
    level = peak - drop

    def crossing(a: float, b: float) -> float:
        return optimize.brentq(lambda t: float(h(t)) - level, a, b, xtol=1e-15 * b, rtol=1e-13)

    above = np.nonzero(vals[i:] < level)[0]
    if above.size:
        j = i + int(above[0])
        hi = crossing(max(grid[j - 1], t_peak), grid[j])
    elif math.isfinite(cap):
        hi = cap
    else:
        raise QuadratureFailure("integrand does not decay within the search range")

    below = np.nonzero(vals[: i + 1] < level)[0]
    if below.size:
        j = int(below[-1])
        lo = crossing(grid[j], min(grid[j + 1], t_peak))
    else:
        lo = 0.0
    return Support(lo=lo, hi=hi, peak=peak)


def _estimate(q: float, log_factor: LogFactor, lo: float, hi: float, shift: float, panels: int) -> float:
    x, w = _legendre(ORDER)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    total = 0.0
    start = 0
    if lo == 0.0:
        # first panel: t**q absorbed into the Jacobi weight
        xj, wj = _jacobi(ORDER, float(q))
        width = edges[1]
        tj = 0.5 * width * (1.0 + xj)
        total += (0.5 * width) ** (q + 1.0) * float(np.sum(wj * np.exp(log_factor(tj) - shift)))
        start = 1
    if panels > start:
        nodes = mid[start:, None] + half[start:, None] * x[None, :]
        flat = nodes.ravel()
        with np.errstate(divide="ignore"):
            logv = q * np.log(flat) + log_factor(flat) - shift
        vals = np.exp(logv).reshape(nodes.shape)
        total += float(np.sum(half[start:] * (vals @ w)))
    return total


def power_exp_integral(
    q: float,
    log_factor: LogFactor,
    support: Support,
    tol: float = 1e-10,
    shift: float | None = None,
) -> tuple[float, float]:
    """Integral of ``t**q * exp(ell(t) - shift)`` over ``support``.

    Returns ``(value, residual)`` where ``residual`` is the absolute
    difference between the last two dyadic levels. ``shift`` defaults to
    the support's peak so the result is O(1) regardless of scale.
    """
    if q <= -1.0:
        raise QuadratureFailure(f"power {q} is not integrable at the origin")
    shift = support.peak if shift is None else shift
    prev = _estimate(q, log_factor, support.lo, support.hi, shift, 2 ** MIN_LEVEL)
    for level in range(MIN_LEVEL + 1, MAX_LEVEL + 1):
        cur = _estimate(q, log_factor, support.lo, support.hi, shift, 2 ** level)
        resid = abs(cur - prev)
        if resid <= tol * abs(cur):
            return cur, resid
        prev = cur
    raise QuadratureFailure(f"no convergence to relative {tol:g} after {2 ** MAX_LEVEL} panels")


def cumulative_integral(fn: Callable[[np.ndarray], np.ndarray], anchor: float, points: np.ndarray, order: int = 16) -> np.ndarray:
    """Integral of ``fn`` from ``anchor`` to each entry of ``points``.

    Consecutive sorted points are joined by Gauss-Legendre panels; gaps
    spanning more than a factor 1.25 are split geometrically so that
    points close to the origin are reached with panels of matching size.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.ravel()
    out = np.empty_like(flat)
    x, w = _legendre(order)

    def run(targets: np.ndarray, idx: np.ndarray) -> None:
        # targets sorted moving away from anchor
        knots = np.concatenate(([anchor], targets))
        a, b = knots[:-1], knots[1:]
        pos = (a > 0) & (b > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(pos, np.maximum(a, b) / np.minimum(a, b), 1.0)
        n = np.where(ratio > 1.25, np.ceil(np.log(ratio) / math.log(1.25)), 1.0)
        n = np.where(~pos & (a != b), 8.0, n).astype(np.int64)
        own = np.repeat(np.arange(len(targets)), n)
        j = np.arange(own.size) - np.repeat(np.cumsum(n) - n, n)
        frac0 = j / n[own]
        frac1 = (j + 1) / n[own]
        ga = np.where(pos[own], a[own], 1.0)
        gb = np.where(pos[own], b[own], 1.0)
        lo = np.where(pos[own], ga * (gb / ga) ** frac0, a[own] + (b[own] - a[own]) * frac0)
        hi = np.where(pos[own], ga * (gb / ga) ** frac1, a[own] + (b[own] - a[own]) * frac1)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[:, None] + half[:, None] * x[None, :]
        vals = fn(nodes.ravel()).reshape(nodes.shape)
        piece = half * (vals @ w)
        per_target = np.bincount(own, weights=piece, minlength=len(targets))
        out[idx] = np.cumsum(per_target)

    up = np.nonzero(flat >= anchor)[0]
    if up.size:
        order_up = up[np.argsort(flat[up])]
        run(flat[order_up], order_up)
    down = np.nonzero(flat < anchor)[0]
    if down.size:
        order_down = down[np.argsort(-flat[down])]
        run(flat[order_down], order_down)
    return out.reshape(pts.shape)
