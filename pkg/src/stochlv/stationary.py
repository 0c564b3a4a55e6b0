"""Boundary invariant densities, their moments, and the invasion thresholds.

On an axis the surviving species follows the scalar diffusion::

    dphi = phi (a - b phi) dt + (gamma phi + alpha phi^2) dB

whose stationary density is the normalized speed density
``sigma^-2 exp(int 2 mu / sigma^2)``. Every density here is stored as one or
two *segments*, each of the form ``t**q0 * exp(ell(t))`` on ``(0, cap]`` in
either the ``phi`` coordinate or ``u = 1/phi``. That form lets the
moment integrals treat the power-law ends exactly (see ``quadrature``).

* alpha != 0, gamma == 0: one segment in ``u``; ``ell`` is a concave
  quadratic and ``q0 = 2``.
* alpha == 0, gamma != 0: one segment in ``phi``; Gamma law with shape
  ``2a/gamma^2 - 1`` and rate ``2b/gamma^2``.
* both nonzero: ``phi`` segment below ``a/b`` and ``u`` segment above it,
  with ``ell`` obtained by numerically integrating the drift/diffusion
  ratio after the logarithmic singularities are split off.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import quadrature as quad
from .errors import (
    BoundaryExtinct,
    CriticalCase,
    MomentDiverges,
    NoStationaryDensity,
    QuadratureFailure,
    ValidationError,
)
from .model import ModelParams, NoiseMode, validate_params

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class BoundarySpec:
    a: float
    b: float
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                err = ValidationError(f"{name} must be positive, got {v!r}")
                err.field = name
                raise err
        if not (math.isfinite(self.alpha) and math.isfinite(self.gamma)):
            raise ValidationError("noise intensities must be finite")
        if self.alpha * self.gamma < 0.0:
            # sigma would vanish at phi = -gamma/alpha inside (0, inf)
            err = ValidationError("alpha and gamma must share a sign")
            err.field = "gamma"
            raise err

    @property
    def survival_rate(self) -> float:
        """Growth rate of ln(phi) near zero: a - gamma^2/2."""
        return self.a - 0.5 * self.gamma ** 2


def boundary_spec(p: ModelParams, species: int) -> BoundarySpec:
    """The axis diffusion of ``species`` when the other one is absent."""
    if species == 1:
        return BoundarySpec(p.a1, p.b1, p.alpha1, p.gamma1)
    if species == 2:
        return BoundarySpec(p.a2, p.b2, p.alpha2, p.gamma2)
    raise ValueError(f"species must be 1 or 2, got {species}")


@dataclass(frozen=True)
class _Segment:
    coord: str  # "phi" or "inv"
    q0: float
    log_factor: Callable[[np.ndarray], np.ndarray]
    cap: float
    scale: float


@dataclass(frozen=True)
class StationaryDensity:
    spec: BoundarySpec
    log_norm: float
    norm_error: float
    tol: float
    bounds: tuple[tuple[str, float, float], ...]
    _segments: tuple[_Segment, ...] = field(repr=False)

    @property
    def normalizing_constant(self) -> float:
        """c* such that the density is c* times the speed density."""
        return math.exp(-self.log_norm)

    @property
    def moment_range(self) -> tuple[float, float]:
        """Open interval of exponents p with finite Q_p."""
        lo, hi = -math.inf, math.inf
        for seg in self._segments:
            if seg.coord == "phi":
                lo = max(lo, -1.0 - seg.q0)
            else:
                hi = min(hi, seg.q0 + 1.0)
        return lo, hi

    def logpdf(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, -np.inf)
        pos = phi > 0
        for seg, lower in zip(self._segments, self._phi_lower_edges()):
            if seg.coord == "phi":
                sel = pos & (phi <= seg.cap) & (phi > lower)
                t = phi[sel]
                out[sel] = seg.q0 * np.log(t) + seg.log_factor(t) - self.log_norm
            else:
                sel = pos & (phi >= 1.0 / seg.cap) & (phi > lower)
                u = 1.0 / phi[sel]
                out[sel] = (seg.q0 + 2.0) * np.log(u) + seg.log_factor(u) - self.log_norm
        return out

    def pdf(self, phi) -> np.ndarray:
        return np.exp(self.logpdf(phi))

    def _phi_lower_edges(self):
        # segments are ordered from small phi to large phi
        edges, prev = [], 0.0
        for seg in self._segments:
            edges.append(prev)
            prev = seg.cap if seg.coord == "phi" else math.inf
        return edges

    def cdf(self, phi) -> np.ndarray:
        """P(phi_inf <= phi) by quadrature between sorted evaluation points."""
        phi = np.asarray(phi, dtype=float)
        flat = phi.ravel()
        order = np.argsort(flat)
        xs = flat[order]
        acc = np.zeros_like(xs)
        for seg in self._segments:
            if seg.coord == "phi":
                t = np.clip(xs, 0.0, seg.cap)
                mass, peak = _partial_masses(seg, t)
                acc += mass * math.exp(peak - self.log_norm)
            else:
                # mass with phi <= x is mass with u >= 1/x
                with np.errstate(divide="ignore"):
                    u = np.where(xs > 0, 1.0 / np.maximum(xs, 1e-300), np.inf)
                u = np.clip(u, 0.0, seg.cap)
                mass, peak = _partial_masses(seg, np.append(u, seg.cap))
                acc += (mass[-1] - mass[:-1]) * math.exp(peak - self.log_norm)
        out = np.empty_like(xs)
        out[order] = np.clip(acc, 0.0, 1.0)
        return out.reshape(phi.shape)

    def to_csv_rows(self, grid) -> list[tuple[float, float]]:
        grid = np.asarray(grid, dtype=float)
        return list(zip(grid.tolist(), self.pdf(grid).tolist()))


def _partial_masses(seg: _Segment, ts: np.ndarray) -> tuple[np.ndarray, float]:
    """Integral of segment ``seg`` over [0, t] for each t, scaled by exp(-peak).

    Returns the scaled masses and the peak so callers can undo the scaling.
    """
    ts = np.asarray(ts, dtype=float)
    order = np.argsort(ts)
    srt = ts[order]
    sup = quad.find_support(seg.q0, seg.log_factor, seg.scale, seg.cap)
    out_sorted = np.zeros_like(srt)
    total = 0.0
    prev = sup.lo
    for k, t in enumerate(srt):
        t_c = min(max(t, sup.lo), sup.hi)
        if t_c > prev:
            piece = quad.Support(lo=prev, hi=t_c, peak=sup.peak)
            val, _ = quad.power_exp_integral(seg.q0, seg.log_factor, piece, tol=1e-9)
            total += val
            prev = t_c
        out_sorted[k] = total
    out = np.empty_like(out_sorted)
    out[order] = out_sorted
    return out, sup.peak


def _quadratic_segments(s: BoundarySpec) -> tuple[_Segment, ...]:
    k1 = 2.0 * s.b / s.alpha ** 2
    k2 = s.a / s.alpha ** 2
    return (_Segment("inv", 2.0, lambda u: k1 * u - k2 * u * u, math.inf, s.b / s.a),)


def _linear_segments(s: BoundarySpec) -> tuple[_Segment, ...]:
    g2 = s.gamma ** 2
    rate = 2.0 * s.b / g2
    shape = 2.0 * s.a / g2 - 1.0
    # constant 1/gamma^2 dropped; normalization is computed
    return (_Segment("phi", shape - 1.0, lambda x: -rate * x, math.inf, max(shape, 1e-3) / rate),)


def _mixed_segments(s: BoundarySpec) -> tuple[_Segment, ...]:
    a, b = s.a, s.b
    al, ga = abs(s.alpha), abs(s.gamma)
    A = 2.0 * a / ga ** 2
    split = a / b
    v_split = 1.0 / split

    # drift/diffusion ratio with the A/phi pole removed (phi side) and with
    # the -A/v pole removed after phi = 1/v (u side)
    def reg_phi(x):
        return -(2.0 * b + 2.0 * A * ga * al + A * al ** 2 * x) / (ga + al * x) ** 2

    def reg_inv(v):
        return 2.0 * (a * v - b) / (ga * v + al) ** 2

    def ell_phi(x):
        return -2.0 * np.log(ga + al * x) + quad.cumulative_integral(reg_phi, split, x)

    def ell_inv(u):
        return -2.0 * np.log(ga * u + al) - A * math.log(v_split) - quad.cumulative_integral(reg_inv, v_split, u)

    return (
        _Segment("phi", A - 2.0, ell_phi, split, split),
        _Segment("inv", 2.0, ell_inv, v_split, v_split),
    )


def _segments(spec: BoundarySpec) -> tuple[_Segment, ...]:
    if spec.alpha == 0.0 and spec.gamma == 0.0:
        raise NoStationaryDensity("noise-free boundary: the invariant law is a point mass at a/b")
    if spec.gamma == 0.0:
        return _quadratic_segments(spec)
    if spec.survival_rate <= 0.0:
        raise NoStationaryDensity(
            f"a - gamma^2/2 = {spec.survival_rate:.6g} <= 0: the boundary process goes extinct"
        )
    if spec.alpha == 0.0:
        return _linear_segments(spec)
    return _mixed_segments(spec)


def _segment_power(seg: _Segment, p: float) -> float:
    return seg.q0 + p if seg.coord == "phi" else seg.q0 - p


def _log_integral(segments, p: float, tol: float) -> tuple[float, float]:
    """log of sum_k int t^q exp(ell) and its relative error."""
    parts = []
    for seg in segments:
        q = _segment_power(seg, p)
        sup = quad.find_support(q, seg.log_factor, seg.scale, seg.cap)
        val, res = quad.power_exp_integral(q, seg.log_factor, sup, tol=tol)
        if not (val > 0 and math.isfinite(val)):
            raise QuadratureFailure(f"non-positive integral estimate {val!r}")
        parts.append((math.log(val) + sup.peak, res / val))
    top = max(lp for lp, _ in parts)
    weights = [math.exp(lp - top) for lp, _ in parts]
    total = sum(weights)
    log_val = top + math.log(total)
    rel = sum(w * r for w, (_, r) in zip(weights, parts)) / total
    return log_val, rel


def stationary_density(spec: BoundarySpec, tol: float = DEFAULT_TOL) -> StationaryDensity:
    """Normalized invariant density of the boundary diffusion ``spec``.

    Raises :class:`NoStationaryDensity` when the linear noise alone drives
    the process to zero (``a <= gamma^2/2``).
    """
    segs = _segments(spec)
    log_norm, rel = _log_integral(segs, 0.0, tol)
    bounds = []
    for seg in segs:
        sup = quad.find_support(seg.q0, seg.log_factor, seg.scale, seg.cap)
        bounds.append((seg.coord, sup.lo, sup.hi))
    return StationaryDensity(spec=spec, log_norm=log_norm, norm_error=rel, tol=tol,
                             bounds=tuple(bounds), _segments=segs)


def moment_with_error(d: StationaryDensity, p: float) -> tuple[float, float]:
    """``(Q_p, absolute error bound)`` for the density ``d``."""
    lo, hi = d.moment_range
    if not (lo < p < hi):
        raise MomentDiverges(f"Q_p is infinite for p={p}; finite only for {lo:.6g} < p < {hi:.6g}")
    if p == 0:
        return 1.0, d.norm_error
    log_val, rel = _log_integral(d._segments, p, d.tol)
    q = math.exp(log_val - d.log_norm)
    return q, q * (rel + d.norm_error)


def moment(d: StationaryDensity, p: float) -> float:
    """Q_p = integral of phi**p against the density."""
    return moment_with_error(d, p)[0]


def _invasion_rate(p: ModelParams, resident: int, tol: float) -> tuple[float, float]:
    """Average log-growth of the rare species against the resident's boundary law."""
    if resident == 1:
        a_inv, g_inv, c, beta = p.a2, p.gamma2, p.c2, p.beta2
    else:
        a_inv, g_inv, c, beta = p.a1, p.gamma1, p.c1, p.beta1
    spec = boundary_spec(p, resident)
    if spec.survival_rate <= 0.0:
        raise BoundaryExtinct(resident, spec.survival_rate)
    d = stationary_density(spec, tol)
    q1, e1 = moment_with_error(d, 1.0)
    if beta != 0.0:
        q2, e2 = moment_with_error(d, 2.0)
    else:
        q2, e2 = 0.0, 0.0
    value = a_inv - 0.5 * g_inv ** 2 - c * q1 - 0.5 * beta ** 2 * q2
    err = c * e1 + 0.5 * beta ** 2 * e2
    return value, err


def lambda1_with_error(p: ModelParams, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    validate_params(p)
    return _invasion_rate(p, 1, tol)


def lambda2_with_error(p: ModelParams, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    validate_params(p)
    return _invasion_rate(p, 2, tol)


def lambda1(p: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """Invasion rate of Y into the X-only stationary state.

    ``a2 - gamma2^2/2 - c2 Q1 - beta2^2/2 Q2`` with moments of species 1's
    boundary density. In the quadratic-noise model gamma2 = 0 and this is
    the usual ``a2 - c2 Q1 - beta2^2 Q2 / 2``.
    """
    return lambda1_with_error(p, tol)[0]


def lambda2(p: ModelParams, tol: float = DEFAULT_TOL) -> float:
    """Invasion rate of X into the Y-only stationary state (mirror of :func:`lambda1`)."""
    return lambda2_with_error(p, tol)[0]


def lambda_linear(p: ModelParams) -> tuple[float, float]:
    """Closed-form invasion rates for the linear-noise model.

    The resident's boundary law is Gamma with mean ``(a - gamma^2/2)/b``, so
    ``lambda1 = a2 - gamma2^2/2 - (c2/b1)(a1 - gamma1^2/2)`` and the mirror
    for ``lambda2``.
    """
    s1 = p.a1 - 0.5 * p.gamma1 ** 2
    s2 = p.a2 - 0.5 * p.gamma2 ** 2
    if s1 <= 0.0:
        raise BoundaryExtinct(1, s1)
    if s2 <= 0.0:
        raise BoundaryExtinct(2, s2)
    return s2 - p.c2 / p.b1 * s1, s1 - p.c1 / p.b2 * s2


class Regime(str, enum.Enum):
    COEXIST = "Coexist"
    Y_DIES = "YDiesXPersists"
    X_DIES = "XDiesYPersists"
    BISTABLE = "BistableExclusion"
    BOTH_DIE = "BothExtinct"
    UNCLASSIFIED = "Unclassified"

    def swapped(self) -> "Regime":
        return {Regime.Y_DIES: Regime.X_DIES, Regime.X_DIES: Regime.Y_DIES}.get(self, self)


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    case: str
    mode: str
    lambda1: float | None = None
    lambda2: float | None = None
    lambda1_err: float = 0.0
    lambda2_err: float = 0.0
    survival: tuple[float, float] | None = None

    def to_json(self) -> dict:
        return {
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda1_err": self.lambda1_err,
            "lambda2_err": self.lambda2_err,
            "survival": list(self.survival) if self.survival else None,
            "regime": self.regime.value,
            "case": self.case,
            "mode": self.mode,
        }


_SIGN_TABLE = {
    (True, True): (Regime.COEXIST, "sign-coexistence"),
    (False, True): (Regime.Y_DIES, "sign-exclusion"),
    (True, False): (Regime.X_DIES, "sign-exclusion"),
    (False, False): (Regime.BISTABLE, "sign-bistability"),
}

_LINEAR_CASES = {
    Regime.X_DIES: "linear-invasion-x-dies",
    Regime.Y_DIES: "linear-invasion-y-dies",
    Regime.COEXIST: "linear-invasion-coexistence",
    Regime.BISTABLE: "linear-invasion-bistability",
}


def classify_stochastic(p: ModelParams, tol: float = DEFAULT_TOL) -> RegimeReport:
    """Long-run regime of the stochastic system from the signs of the thresholds.

    In linear-noise mode the axis survival rates ``a_i - gamma_i^2/2`` are
    checked first; a species with a negative one dies regardless of
    competition. Raises :class:`CriticalCase` (with the Unclassified report
    attached) when a deciding quantity is zero within tolerance.
    """
    validate_params(p)
    mode = p.mode
    if mode is NoiseMode.LINEAR:
        s = (p.a1 - 0.5 * p.gamma1 ** 2, p.a2 - 0.5 * p.gamma2 ** 2)
        if any(abs(v) <= tol for v in s):
            rep = RegimeReport(Regime.UNCLASSIFIED, "", mode.value, survival=s)
            raise CriticalCase(f"axis survival rate is zero: {s}", rep)
        if s[0] < 0 and s[1] < 0:
            return RegimeReport(Regime.BOTH_DIE, "linear-both-axes-die", mode.value, survival=s)
        if s[0] < 0:
            return RegimeReport(Regime.X_DIES, "linear-x-axis-dies", mode.value, survival=s)
        if s[1] < 0:
            return RegimeReport(Regime.Y_DIES, "linear-y-axis-dies", mode.value, survival=s)
        l1, l2 = lambda_linear(p)
        e1 = e2 = 0.0
    else:
        s = None
        l1, e1 = _invasion_rate(p, 1, tol)
        l2, e2 = _invasion_rate(p, 2, tol)

    if abs(l1) <= max(tol, e1) or abs(l2) <= max(tol, e2):
        rep = RegimeReport(Regime.UNCLASSIFIED, "", mode.value, l1, l2, e1, e2, s)
        raise CriticalCase(f"threshold is zero within tolerance (lambda1={l1:.3g}, lambda2={l2:.3g})", rep)
    regime, case = _SIGN_TABLE[(l1 > 0, l2 > 0)]
    if mode is NoiseMode.LINEAR:
        case = _LINEAR_CASES[regime]
    return RegimeReport(regime, case, mode.value, l1, l2, e1, e2, s)
