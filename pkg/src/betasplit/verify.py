"""Self-check suites run by ``betasplit verify``.

Each suite returns a :class:`SuiteResult`; the fast level covers trees up to
5 leaves, the full level goes to 7 leaves and adds Monte Carlo checks.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Callable

from . import oracle, probability, reversal
from .generate import ModelParams, run_god
from .numerics import DrawBuffer, stream
from .trees import (
    Resolution,
    catalan_coefficient,
    cherry_count,
    forget_ranks,
    iso_split_count,
    perm_to_ranked_planar,
    ranked_planar_to_perm,
    shape_of,
)

__all__ = ["PARAM_GRID", "SuiteResult", "run_suites", "SUITES"]

PARAM_GRID = ((0.0, 0.0), (-0.5, -0.5), (1.0, 0.0), (0.0, 2.0), (3.0, 3.0))

# (beta, shape, n) -> (mantissa, exponent) rounded to 3 digits
_TABLE_REFERENCE = {
    ("zero", "comb", 8): (1.27, -2),
    ("zero", "comb", 32): (1.31, -25),
    ("infinity", "comb", 1024): (2.09, -157057),
    ("infinity", "balanced", 1024): (1.26, -247),
    ("minus_one", "comb", 1024): (1.0, 0),
}


@dataclass
class SuiteResult:
    suite: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _normalization(max_n: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(2, max_n + 1):
        for a, b in PARAM_GRID:
            for res in Resolution:
                worst = max(worst, abs(oracle.exact_distribution(n, a, b, res).total() - 1.0))
    return worst < 1e-10, f"max |total - 1| = {worst:.3g}"


def _consistency(max_n: int) -> tuple[bool, str]:
    # direct coarse formulas against fibre sums
    worst = 0.0
    for n in range(2, max_n + 1):
        for a, b in PARAM_GRID:
            for res in (Resolution.PLANAR, Resolution.RANKED, Resolution.SHAPE):
                dist = oracle.exact_distribution(n, a, b, res)
                for key, t in dist.trees.items():
                    direct = probability.log_prob(t, a, b).value
                    worst = max(worst, abs(direct - dist[key].value))
    return worst < 1e-12, f"max abs difference = {worst:.3g}"


def _bijection(max_n: int) -> tuple[bool, str]:
    for n in range(1, max_n + 1):
        trees = oracle.enumerate_ranked_planar(n)
        if len(set(trees)) != math.factorial(n - 1):
            return False, f"n={n}: {len(set(trees))} distinct trees"
        for t in trees:
            if perm_to_ranked_planar(ranked_planar_to_perm(t)) != t:
                return False, f"round trip failed for {t!r}"
    return True, f"(n-1)! distinct trees and round trips for n <= {max_n}"


def _yule(max_n: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(2, max_n + 1):
        target = -math.lgamma(n)
        for t in oracle.enumerate_ranked_planar(n):
            worst = max(worst, abs(probability.log_prob_ranked_planar(t, 0.0, 0.0).log_value - target))
    return worst < 1e-12, f"max log error = {worst:.3g}"


def _counting(max_n: int) -> tuple[bool, str]:
    for n in range(2, max_n + 1):
        planar = oracle.exact_distribution(n, 0.0, 0.0, Resolution.PLANAR)
        for key, t in planar.trees.items():
            if planar.fibre_sizes[key] != catalan_coefficient(t):
                return False, f"planar fibre of {key} has {planar.fibre_sizes[key]} rankings"
        ranked = oracle.exact_distribution(n, 0.0, 0.0, Resolution.RANKED)
        for key, t in ranked.trees.items():
            if ranked.fibre_sizes[key] != 2 ** (n - 1 - cherry_count(t)):
                return False, f"ranked fibre of {key} has size {ranked.fibre_sizes[key]}"
        by_shape = Counter(oracle.encode(shape_of(t)) for t in planar.trees.values())
        shapes = oracle.exact_distribution(n, 0.0, 0.0, Resolution.SHAPE)
        for key, t in shapes.trees.items():
            if by_shape[key] != 2 ** (n - 1 - iso_split_count(t)):
                return False, f"shape fibre of {key} has {by_shape[key]} planar shapes"
    return True, f"fibre sizes agree for n <= {max_n}"


def _table() -> tuple[bool, str]:
    rows = {(r["beta"], r["shape"], r["n"]): (r["mantissa"], r["exponent10"]) for r in probability.table1()}
    bad = [k for k, v in _TABLE_REFERENCE.items() if rows.get(k) != v]
    return not bad, f"mismatches: {bad}" if bad else f"{len(rows)} entries, reference values match"


def _reversal(max_n: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(1, max_n + 1):
        for a, b in PARAM_GRID:
            worst = max(worst, reversal.verify_reversal(n, a, b))
    rows = max(abs(v - 1.0) for n1 in range(2, max_n + 2) for v in reversal.kernel_row_sums(n1).values())
    return worst < 1e-10 and rows < 1e-12, f"max residual = {worst:.3g}, max row error = {rows:.3g}"


def _closed_forms(max_n: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(2, max_n + 1):
        for t in oracle.enumerate_ranked_planar(n):
            for b in (0, 1, 2, 3):
                gen = probability.log_prob_ranked_planar(t, b, b).value
                worst = max(worst, abs(probability.log_prob_integer_beta(t, b).value - gen))
                gen = probability.log_prob_ranked_planar(t, b - 0.5, b - 0.5).value
                worst = max(worst, abs(probability.log_prob_half_integer(t, b).value - gen))
    return worst < 1e-10, f"max abs difference = {worst:.3g}"


def _quadrature() -> tuple[bool, str]:
    worst = 0.0
    for t in oracle.enumerate_ranked_planar(5)[:10]:
        for a, b in ((0.0, 0.0), (0.5, -0.5), (1.0, 0.0)):
            q = oracle.quadrature_check(t, a, b).log_value
            p = probability.log_prob_ranked_planar(t, a, b).log_value
            worst = max(worst, abs(math.expm1(q - p)))
    return worst < 1e-8, f"max relative difference = {worst:.3g}"


def _monte_carlo() -> tuple[bool, str]:
    params = ModelParams(n=4)
    draws = DrawBuffer(stream(20231, 0))
    counts = Counter(oracle.encode(forget_ranks(run_god(params, draws)[0].tree)) for _ in range(10_000))
    stat, dof, p = oracle.chi_square_gof(counts, oracle.exact_distribution(4, 0.0, 0.0, Resolution.PLANAR))
    return p > 1e-3, f"chi2 = {stat:.3f}, dof = {dof}, p = {p:.3g}"


Suite = Callable[[], tuple[bool, str]]

SUITES: dict[str, list[tuple[str, Suite]]] = {
    "fast": [
        ("normalization", lambda: _normalization(5)),
        ("bijection", lambda: _bijection(5)),
        ("yule", lambda: _yule(5)),
        ("counting", lambda: _counting(5)),
        ("table", _table),
    ],
    "full": [
        ("normalization", lambda: _normalization(7)),
        ("consistency", lambda: _consistency(7)),
        ("bijection", lambda: _bijection(7)),
        ("yule", lambda: _yule(7)),
        ("counting", lambda: _counting(7)),
        ("table", _table),
        ("reversal", lambda: _reversal(6)),
        ("closed_forms", lambda: _closed_forms(6)),
        ("quadrature", _quadrature),
        ("monte_carlo", _monte_carlo),
    ],
}


def run_suites(level: str = "fast") -> list[SuiteResult]:
    if level not in SUITES:
        raise ValueError(f"unknown level {level!r}")
    out = []
    for name, fn in SUITES[level]:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(SuiteResult(name, bool(ok), detail, round(time.perf_counter() - t0, 3)))
    return out
