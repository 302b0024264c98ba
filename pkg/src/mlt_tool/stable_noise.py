"""
Symmetric alpha-stable noise machinery
======================================

Sampling of standard symmetric alpha-stable variables (Chambers-Mallows-
Stuck transform), increment scaling for the driving process, the jump
measure with its normalization constant, and heavy-tail diagnostics.

The normalization constant ``c_alpha`` is the one that makes the jump
measure integral reproduce the fractional-Laplacian symbol |k|^alpha, so
a standard draw has characteristic function exp(-|k|^alpha); alpha = 2
is tagged as the Brownian branch and degenerates to a centered Gaussian
with variance 2.

Random streams are counter-based (Philox) and keyed by (seed, index...)
so paths can be simulated in parallel yet bit-reproducibly; streams are
never shared between threads.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma

__all__ = [
    "StableSpec", "JumpMeasure", "OutOfRangeError", "SingularAtZeroError",
    "InsufficientSamplesError", "c_alpha", "jump_measure_density",
    "stream", "sample_standard", "increment", "tail_limit",
    "tail_diagnostic", "tail_curve",
]


class OutOfRangeError(ValueError):
    """Stability index outside the admissible range."""


class SingularAtZeroError(ValueError):
    """Jump measure evaluated at y = 0."""


class InsufficientSamplesError(ValueError):
    """Too few samples for a meaningful tail estimate."""


@dataclass(frozen=True)
class StableSpec:
    """Symmetric stable law: index alpha in (0, 2], scale sigma >= 0.

    Only the symmetric centered case is supported: skewness beta and
    shift gamma are fixed at 0. alpha = 2 selects the Brownian branch.
    """
    alpha: float
    sigma: float
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise OutOfRangeError(f"alpha must be in (0, 2], got {self.alpha}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.beta != 0.0 or self.gamma != 0.0:
            raise ValueError("only the symmetric centered case (beta = gamma = 0) is supported")

    @property
    def is_brownian(self) -> bool:
        return self.alpha == 2.0


def c_alpha(alpha: float) -> float:
    """Jump-measure normalization constant for index alpha in (0, 2).

    C_alpha = alpha * Gamma((1+alpha)/2) / (2^(1-alpha) * sqrt(pi)
    * Gamma(1 - alpha/2)); with this constant the generator built from
    the jump measure has Fourier symbol -|k|^alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise OutOfRangeError(f"alpha must be in (0, 2), got {alpha}")
    return (alpha * _gamma((1.0 + alpha) / 2.0)
            / (2.0 ** (1.0 - alpha) * math.sqrt(math.pi) * _gamma(1.0 - alpha / 2.0)))


@dataclass(frozen=True)
class JumpMeasure:
    """Levy jump measure C_alpha |y|^-(1+alpha) dy of a stable process."""
    alpha: float
    c_alpha: float

    @classmethod
    def for_index(cls, alpha: float) -> "JumpMeasure":
        return cls(alpha, c_alpha(alpha))

    def density(self, y):
        return jump_measure_density(self.alpha, y)


def jump_measure_density(alpha: float, y):
    """Jump measure density C_alpha / |y|^(1+alpha); even in y, y != 0."""
    const = c_alpha(alpha)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0.0):
        raise SingularAtZeroError("jump measure density is singular at y = 0")
    out = const / np.abs(y) ** (1.0 + alpha)
    return float(out) if out.ndim == 0 else out


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based random stream keyed by (seed, *key).

    Philox streams with distinct keys are statistically independent and
    bit-reproducible, which makes parallel per-path simulation exactly
    repeatable from the global seed.
    """
    return np.random.Generator(np.random.Philox(key=np.random.SeedSequence((seed,) + key).generate_state(2, np.uint64)))


def sample_standard(alpha: float, rng: np.random.Generator, size=None):
    """Draw from the standard symmetric stable law S_alpha(1, 0, 0).

    Chambers-Mallows-Stuck transform for alpha in (0, 2); the alpha = 1
    special case reduces to tan of a uniform angle (Cauchy) and alpha = 2
    to a centered Gaussian with variance 2.
    """
    if not 0.0 < alpha <= 2.0:
        raise OutOfRangeError(f"alpha must be in (0, 2], got {alpha}")
    if alpha == 2.0:
        return rng.normal(0.0, math.sqrt(2.0), size=size)
    v = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=size)
    if alpha == 1.0:
        return np.tan(v)
    w = rng.standard_exponential(size=size)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))


def increment(spec: StableSpec, dt: float, rng: np.random.Generator, size=None):
    """Increment of the driving process over a step dt.

    Self-similar scaling sigma * dt^(1/alpha) applied to a standard
    draw; on the Brownian branch this is a Gaussian with standard
    deviation sigma * sqrt(2 dt), consistent with the S_2 scaling.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if spec.sigma == 0.0:
        return 0.0 if size is None else np.zeros(size)
    return spec.sigma * dt ** (1.0 / spec.alpha) * sample_standard(spec.alpha, rng, size=size)


def tail_limit(alpha: float, sigma: float) -> float:
    """Limit of y^alpha P(L_1 > y): one-sided tail constant.

    For the unit-time symmetric law of scale sigma the survival function
    obeys y^alpha P(L_1 > y) -> C_alpha sigma^alpha / alpha.
    """
    return c_alpha(alpha) * sigma ** alpha / alpha


def tail_diagnostic(alpha: float, sigma: float, samples: np.ndarray, y: float) -> float:
    """Estimate y^alpha P(L_1 > y) from draws of the unit-time law.

    Requires alpha < 2 and at least 1e5 samples; the estimate approaches
    tail_limit(alpha, sigma) as y grows.
    """
    if not alpha < 2.0:
        raise OutOfRangeError("tail diagnostic applies to the heavy-tailed range alpha < 2")
    samples = np.asarray(samples)
    if samples.size < 10 ** 5:
        raise InsufficientSamplesError(f"need >= 1e5 samples, got {samples.size}")
    return float(y ** alpha * np.mean(samples > y))


def tail_curve(alpha: float, sigma: float, samples: np.ndarray, ys) -> np.ndarray:
    """Diagnostic table: columns (y, empirical survival, theoretical tail)."""
    samples = np.sort(np.asarray(samples))
    ys = np.asarray(ys, dtype=float)
    emp = 1.0 - np.searchsorted(samples, ys, side="right") / samples.size
    theo = tail_limit(alpha, sigma) / ys ** alpha
    return np.column_stack([ys, emp, theo])
