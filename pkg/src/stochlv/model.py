"""Parameter records for the two-species competitive model and the
deterministic (noise-free) classification.

The stochastic system is::

    dX = X (a1 - b1 X - c1 Y) dt + (alpha1 X^2 + gamma1 X) dB1 + beta1 X Y dB2
    dY = Y (a2 - b2 Y - c2 X) dt + (alpha2 Y^2 + gamma2 Y) dB3 + beta2 X Y dB2

with B1, B2, B3 independent. Two noise families are supported in the
interior: purely quadratic (all gamma zero) and purely linear (all alpha
and beta zero).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, replace

from .errors import CriticalCase, DegenerateNoise, MixedModeUnsupported, NonPositiveCoefficient, ValidationError

CRITICAL_TOL = 1e-12

_RATE_FIELDS = ("a1", "a2", "b1", "b2", "c1", "c2")
_NOISE_FIELDS = ("alpha1", "alpha2", "beta1", "beta2", "gamma1", "gamma2")


class NoiseMode(str, enum.Enum):
    QUADRATIC = "quadratic"
    LINEAR = "linear"
    GENERAL = "general"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class ModelParams:
    a1: float
    a2: float
    b1: float
    b2: float
    c1: float
    c2: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0

    @property
    def mode(self) -> NoiseMode:
        quad = any(getattr(self, f) != 0.0 for f in ("alpha1", "alpha2", "beta1", "beta2"))
        lin = self.gamma1 != 0.0 or self.gamma2 != 0.0
        if quad and lin:
            return NoiseMode.GENERAL
        if lin:
            return NoiseMode.LINEAR
        if quad:
            return NoiseMode.QUADRATIC
        return NoiseMode.DETERMINISTIC

    def swap_species(self) -> "ModelParams":
        return ModelParams(
            a1=self.a2, a2=self.a1, b1=self.b2, b2=self.b1, c1=self.c2, c2=self.c1,
            alpha1=self.alpha2, alpha2=self.alpha1, beta1=self.beta2, beta2=self.beta1,
            gamma1=self.gamma2, gamma2=self.gamma1,
        )

    def noiseless(self) -> "ModelParams":
        return replace(self, **{f: 0.0 for f in _NOISE_FIELDS})

    @classmethod
    def from_json(cls, data: dict) -> "ModelParams":
        """Build from ``{"a":[..],"b":[..],"c":[..],"alpha":[..],"beta":[..],"gamma":[..]}``.

        ``alpha``, ``beta`` and ``gamma`` default to zero pairs.
        """
        kw = {}
        for key in ("a", "b", "c", "alpha", "beta", "gamma"):
            pair = data.get(key, [0.0, 0.0] if key in ("alpha", "beta", "gamma") else None)
            if pair is None:
                raise ValidationError(f"missing required field {key!r}")
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                err = ValidationError(f"field {key!r} must be a pair [species1, species2]")
                err.field = key
                raise err
            for i, v in enumerate(pair, start=1):
                try:
                    kw[f"{key}{i}"] = float(v)
                except (TypeError, ValueError):
                    err = ValidationError(f"{key}{i} is not a number: {v!r}")
                    err.field = f"{key}{i}"
                    raise err from None
        return cls(**kw)

    def to_json(self) -> dict:
        d = asdict(self)
        return {key: [d[f"{key}1"], d[f"{key}2"]] for key in ("a", "b", "c", "alpha", "beta", "gamma")}


def validate_params(raw: ModelParams, deterministic: bool = False) -> ModelParams:
    """Check positivity and noise structure; return ``raw`` unchanged.

    With ``deterministic=True`` missing noise is accepted (the caller only
    wants the drift). Mixed linear/quadratic noise is always rejected.
    """
    for f in _RATE_FIELDS:
        v = getattr(raw, f)
        if not (math.isfinite(v) and v > 0.0):
            raise NonPositiveCoefficient(f, v)
    for f in _NOISE_FIELDS:
        v = getattr(raw, f)
        if not math.isfinite(v):
            err = ValidationError(f"{f} must be finite, got {v!r}")
            err.field = f
            raise err

    mode = raw.mode
    if mode is NoiseMode.GENERAL:
        raise MixedModeUnsupported()
    if deterministic:
        return raw
    if mode is NoiseMode.DETERMINISTIC:
        raise DegenerateNoise(1, "all noise intensities are zero")
    if mode is NoiseMode.QUADRATIC:
        for i in (1, 2):
            if getattr(raw, f"alpha{i}") == 0.0:
                raise DegenerateNoise(i, f"alpha{i} = 0 makes the boundary diffusion degenerate")
    else:
        for i in (1, 2):
            if getattr(raw, f"gamma{i}") == 0.0:
                raise DegenerateNoise(i, f"gamma{i} = 0 in linear-noise mode")
    return raw


class DeterministicCase(str, enum.Enum):
    COEXIST = "Coexist"
    Y_WINS = "YWins"
    X_WINS = "XWins"
    BISTABLE = "Bistable"


@dataclass(frozen=True)
class DeterministicRegime:
    lambda1_det: float
    lambda2_det: float
    case_id: DeterministicCase
    equilibrium: tuple[float, float] | None = None

    def to_json(self) -> dict:
        return {
            "lambda1_det": self.lambda1_det,
            "lambda2_det": self.lambda2_det,
            "case": self.case_id.value,
            "equilibrium": list(self.equilibrium) if self.equilibrium else None,
        }


def classify_deterministic(p: ModelParams) -> DeterministicRegime:
    """Sign classification of the noise-free competition system.

    lambda1_det is the growth rate of a rare Y against X at its carrying
    capacity a1/b1; lambda2_det is the mirror quantity for X.
    """
    l1 = p.a2 - p.c2 * p.a1 / p.b1
    l2 = p.a1 - p.c1 * p.a2 / p.b2
    if abs(l1) <= CRITICAL_TOL or abs(l2) <= CRITICAL_TOL:
        raise CriticalCase(f"deterministic threshold is zero (lambda1={l1:.3g}, lambda2={l2:.3g})")
    if l1 > 0 and l2 > 0:
        # interior root of a1 - b1 x - c1 y = 0 = a2 - b2 y - c2 x
        det = p.b1 * p.b2 - p.c1 * p.c2
        eq = ((p.a1 * p.b2 - p.a2 * p.c1) / det, (p.a2 * p.b1 - p.a1 * p.c2) / det)
        return DeterministicRegime(l1, l2, DeterministicCase.COEXIST, eq)
    if l1 > 0:
        return DeterministicRegime(l1, l2, DeterministicCase.Y_WINS)
    if l2 > 0:
        return DeterministicRegime(l1, l2, DeterministicCase.X_WINS)
    return DeterministicRegime(l1, l2, DeterministicCase.BISTABLE)


EXAMPLE_1 = ModelParams(a1=4, a2=3, b1=1.5, b2=1, c1=1, c2=0.5, alpha1=0.25, alpha2=0.5, beta1=0.5, beta2=0.25)
EXAMPLE_2 = ModelParams(a1=4, a2=2, b1=1.5, b2=1, c1=2, c2=1, alpha1=1, alpha2=0.5, beta1=0.5, beta2=1)
EXAMPLE_3 = ModelParams(a1=2, a2=2, b1=1, b2=1, c1=2, c2=2, alpha1=1, alpha2=1, beta1=1, beta2=1)
