"""Special functions, log-space probabilities and the random primitives.

Everything probabilistic in the package is carried as a natural log so that
values such as ``1e-157057`` survive; :class:`LogReal` is the thin wrapper used
at API boundaries.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

__all__ = [
    "DomainError",
    "LogReal",
    "log_sum",
    "log_gamma",
    "log_beta",
    "log_factorial",
    "log_binomial",
    "sample_beta",
    "pick_interval",
    "stream",
    "DrawBuffer",
    "as_draws",
]

LN10 = math.log(10.0)
_TINY = math.ulp(0.0)
_BELOW_ONE = 1.0 - 2.0**-53
HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Above this argument the Stirling series with the terms below is accurate to
# well under 1e-15 absolute.
_STIRLING_CUTOFF = 15.0
# B_{2k} / (2k (2k - 1)) for k = 1..8
_STIRLING_COEFFS = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


@dataclass(frozen=True, order=True)
class LogReal:
    """A non-negative real stored as its natural logarithm (``-inf`` is zero)."""

    log_value: float

    @classmethod
    def from_value(cls, x: float) -> "LogReal":
        if x < 0:
            raise DomainError(f"LogReal cannot hold a negative value: {x}")
        return cls(math.log(x) if x > 0 else -math.inf)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)

    @property
    def log10(self) -> float:
        return self.log_value / LN10

    def __mul__(self, other: "LogReal") -> "LogReal":
        return LogReal(self.log_value + other.log_value)

    def __truediv__(self, other: "LogReal") -> "LogReal":
        return LogReal(self.log_value - other.log_value)

    def __add__(self, other: "LogReal") -> "LogReal":
        return LogReal(log_sum((self.log_value, other.log_value)))

    def mantissa_exponent(self, digits: int | None = None) -> tuple[float, int]:
        """Decimal ``(mantissa, exponent)`` with ``1 <= mantissa < 10``.

        With ``digits`` the mantissa is rounded to that many significant
        digits and the pair is renormalised if rounding reaches 10.
        """
        if self.log_value == -math.inf:
            return 0.0, 0
        l10 = self.log10
        exponent = math.floor(l10)
        mantissa = 10.0 ** (l10 - exponent)
        if digits is not None:
            mantissa = round(mantissa, digits - 1)
            if mantissa >= 10.0:
                mantissa /= 10.0
                exponent += 1
        return mantissa, exponent

    def format(self, digits: int = 3) -> str:
        m, e = self.mantissa_exponent(digits)
        return f"{m:.{digits - 1}f}e{e:+d}"

    def to_dict(self) -> dict:
        m, e = self.mantissa_exponent()
        return {"log_e": self.log_value, "mantissa": m, "exponent10": e}


def log_sum(logs: Iterable[float]) -> float:
    """``log(sum(exp(x) for x in logs))`` without overflow or underflow."""
    logs = [x for x in logs if x != -math.inf]
    if not logs:
        return -math.inf
    top = max(logs)
    return top + math.log(math.fsum(math.exp(x - top) for x in logs))


def _stirling_corr(x: float) -> float:
    # log Gamma(x) - [(x - 1/2) log x - x + log(2 pi)/2]
    inv = 1.0 / x
    inv2 = inv * inv
    acc = 0.0
    p = inv
    for c in _STIRLING_COEFFS:
        acc += c * p
        p *= inv2
    return acc


def _check_positive(*args: float) -> None:
    for a in args:
        if not (math.isfinite(a) and a > 0):
            raise DomainError(f"argument must be finite and > 0, got {a!r}")


def log_gamma(x: float) -> float:
    _check_positive(x)
    if x >= _STIRLING_CUTOFF:
        return (x - 0.5) * math.log(x) - x + HALF_LOG_2PI + _stirling_corr(x)
    return math.lgamma(x)


def log_factorial(k: int) -> float:
    if k < 0:
        raise DomainError(f"factorial of negative integer {k}")
    return math.lgamma(k + 1.0)


def log_binomial(n: int, k: int) -> float:
    if not 0 <= k <= n:
        return -math.inf
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def log_beta(a: float, b: float) -> LogReal:
    """``log B(a, b)``, exactly symmetric in its arguments.

    Small arguments go through ``lgamma``; once the larger argument is past
    the Stirling cutoff the large terms are combined analytically so that no
    catastrophic cancellation between ``log Gamma`` values occurs.
    """
    _check_positive(a, b)
    if a < b:
        a, b = b, a
    if a < _STIRLING_CUTOFF:
        return LogReal(math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b))
    s = a + b
    corr = _stirling_corr(a) - _stirling_corr(s)
    if b >= _STIRLING_CUTOFF:
        value = (
            HALF_LOG_2PI
            - 0.5 * math.log(s)
            + (a - 0.5) * math.log1p(-b / s)
            + (b - 0.5) * math.log(b / s)
            + _stirling_corr(b)
            + corr
        )
        return LogReal(value)
    # log Gamma(a) - log Gamma(a + b), large a, small b
    diff = -(a - 0.5) * math.log1p(b / a) + b - b * math.log(s) + corr
    return LogReal(math.lgamma(b) + diff)


def _log_gamma_variates(shape: float, rng: np.random.Generator, size) -> np.ndarray:
    # Shapes below 1 are boosted by one and corrected with U**(1/shape).
    if shape >= 1.0:
        return np.log(rng.standard_gamma(shape, size))
    g = rng.standard_gamma(shape + 1.0, size)
    u = rng.random(size)
    return np.log(g) + np.log(u) / shape


def sample_beta(a: float, b: float, rng: np.random.Generator, size=None):
    """Beta(a, b) variates as ``X / (X + Y)`` with independent Gamma ``X, Y``.

    The ratio is formed from log-Gammas, which keeps draws near 0 accurate
    even for shapes close to zero.  Draws closer to 0 or 1 than the nearest
    double are returned as that double, so the result is always inside
    (0, 1).
    """
    _check_positive(a, b)
    shape = 1 if size is None else size
    lx = _log_gamma_variates(a, rng, shape)
    ly = _log_gamma_variates(b, rng, shape)
    out = np.clip(expit(lx - ly), _TINY, _BELOW_ONE)
    if size is None:
        return float(out[0])
    return out


def pick_interval(breakpoints: Sequence[float], u: float) -> int:
    """Index of the cell of ``[0, 1]`` containing ``u``.

    ``breakpoints`` is ``[0, x_1, ..., x_k, 1]``; cells are half-open
    ``[x_j, x_{j+1})`` except the last, which is closed at 1.  A point sitting
    on an interior breakpoint belongs to the cell on its right.
    """
    if not 0.0 <= u <= 1.0:
        raise DomainError(f"u must lie in [0, 1], got {u!r}")
    ncells = len(breakpoints) - 1
    if ncells < 1:
        raise DomainError("need at least two breakpoints")
    j = bisect_right(breakpoints, u) - 1
    return min(j, ncells - 1)


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Independent reproducible generator for ``(seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


class DrawBuffer:
    """Block-wise scalar draws from a generator.

    Simulation loops take one variate at a time; refilling blocks keeps that
    cheap while the sequence stays a deterministic function of the generator
    state.  Blocks start small and double up to ``block`` so that a buffer
    used for a single short run wastes few draws.  Pass one buffer to many
    calls to amortise it across replicates.
    """

    def __init__(self, rng: np.random.Generator, block: int = 4096):
        if isinstance(rng, DrawBuffer):
            raise TypeError("already a DrawBuffer")
        self.rng = rng
        self.block = block
        self._sizes: dict = {}
        self._u: list[float] = []
        self._e: list[float] = []
        self._b: dict[tuple[float, float], list[float]] = {}

    def _next_size(self, key) -> int:
        size = self._sizes.get(key, 16)
        self._sizes[key] = min(2 * size, self.block)
        return size

    def uniform(self) -> float:
        if not self._u:
            self._u = self.rng.random(self._next_size("u")).tolist()[::-1]
        return self._u.pop()

    def beta(self, a: float, b: float) -> float:
        buf = self._b.get((a, b))
        if not buf:
            buf = sample_beta(a, b, self.rng, self._next_size((a, b))).tolist()[::-1]
            self._b[(a, b)] = buf
        return buf.pop()

    def exponential(self) -> float:
        if not self._e:
            self._e = self.rng.standard_exponential(self._next_size("e")).tolist()[::-1]
        return self._e.pop()

    def failures_before_success(self, p: float) -> int:
        """Geometric count of failed trials before the first success."""
        return int(self.rng.geometric(p)) - 1


def as_draws(rng) -> DrawBuffer:
    return rng if isinstance(rng, DrawBuffer) else DrawBuffer(rng)
