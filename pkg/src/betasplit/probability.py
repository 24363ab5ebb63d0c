"""Exact tree probabilities under the (alpha, beta) Beta-splitting model.

The finest resolution has the product form

    P(tau) = prod_i B(nL_i + alpha + 1, nR_i + beta + 1) / B(alpha + 1, beta + 1)

over internal nodes, where nL_i / nR_i count internal nodes in the left/right
subtree of node i.  Coarser resolutions sum this over their fibres.  Every
function returns a :class:`~betasplit.numerics.LogReal`.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

from .numerics import DomainError, LogReal, log_beta, log_binomial, log_factorial, log_sum
from .trees import (
    AnyTree,
    PlanarShape,
    RankedPlanarTree,
    RankedShape,
    Resolution,
    TreeShape,
    catalan_coefficient,
    cherry_count,
    iso_split_count,
    planar_embeddings,
    preorder,
    ranked_planar_embeddings,
)

__all__ = [
    "UnsupportedScaleError",
    "BetaCase",
    "DEFAULT_EMBEDDING_CAP",
    "log_prob_ranked_planar",
    "log_prob_planar",
    "log_prob_ranked_shape",
    "log_prob_shape",
    "log_prob",
    "log_prob_integer_beta",
    "log_prob_half_integer",
    "log_prob_ranked_planar_limit_inf",
    "log_prob_ranked_planar_limit_minus_one",
    "log_prob_limit",
    "log_prob_comb_shape",
    "log_prob_balanced_shape",
    "aldous_split_pmf",
    "table1",
]

LN2 = math.log(2.0)
DEFAULT_EMBEDDING_CAP = 20


class UnsupportedScaleError(RuntimeError):
    """Explicit enumeration was requested beyond the configured size cap."""


class BetaCase(str, enum.Enum):
    MINUS_ONE = "minus_one"
    ZERO = "zero"
    INFINITY = "infinity"


def _check_params(alpha: float, beta: float) -> None:
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not (math.isfinite(v) and v > -1):
            raise DomainError(f"{name} must be a finite real > -1, got {v!r}")


def _check_no_frozen(t: AnyTree) -> None:
    if any(x.is_leaf and x.frozen for x in preorder(t.root)):
        raise DomainError("probabilities are only defined for trees without frozen leaves")


def _splits(t: AnyTree) -> Iterable[tuple[int, int]]:
    for x in preorder(t.root):
        if not x.is_leaf:
            yield x.left.n_internal, x.right.n_internal


class _NodeFactor:
    """Memoised log B(nL + alpha + 1, nR + beta + 1) - log B(alpha + 1, beta + 1)."""

    def __init__(self, alpha: float, beta: float):
        _check_params(alpha, beta)
        self.alpha = alpha
        self.beta = beta
        self.norm = log_beta(alpha + 1.0, beta + 1.0).log_value
        self.cache: dict[tuple[int, int], float] = {(0, 0): 0.0}

    def __call__(self, nl: int, nr: int) -> float:
        v = self.cache.get((nl, nr))
        if v is None:
            v = log_beta(nl + self.alpha + 1.0, nr + self.beta + 1.0).log_value - self.norm
            self.cache[(nl, nr)] = v
        return v


def log_prob_ranked_planar(t: RankedPlanarTree, alpha: float, beta: float) -> LogReal:
    _check_no_frozen(t)
    f = _NodeFactor(alpha, beta)
    return LogReal(math.fsum(f(nl, nr) for nl, nr in _splits(t)))


def log_prob_planar(t: PlanarShape | RankedPlanarTree, alpha: float, beta: float) -> LogReal:
    """Ranked planar probability times the number of rankings (it does not
    depend on the ranking)."""
    _check_no_frozen(t)
    f = _NodeFactor(alpha, beta)
    terms = [f(nl, nr) + log_binomial(nl + nr, nl) for nl, nr in _splits(t)]
    return LogReal(math.fsum(terms))


def _check_cap(t: AnyTree, cap: int) -> None:
    if t.leaf_count > cap:
        raise UnsupportedScaleError(
            f"embedding enumeration capped at n={cap} leaves, tree has {t.leaf_count}"
        )


def log_prob_ranked_shape(
    t: RankedShape, alpha: float, beta: float, method: str = "factorized", cap: int = DEFAULT_EMBEDDING_CAP
) -> LogReal:
    """Probability of a ranked non-planar tree.

    For ``alpha == beta`` all ``2**(n-1-c)`` planar embeddings are equally
    likely.  Otherwise the sum over embeddings is needed.  Flipping one node
    only swaps that node's own factor, so the sum factorises into a product
    of per-node sums (``method="factorized"``); ``method="enumerate"`` sums
    the embeddings one by one and refuses trees above ``cap`` leaves.
    """
    _check_no_frozen(t)
    _check_params(alpha, beta)
    if alpha == beta:
        f = _NodeFactor(alpha, beta)
        n = t.leaf_count
        return LogReal((n - 1 - cherry_count(t)) * LN2 + math.fsum(f(nl, nr) for nl, nr in _splits(t)))
    if method == "enumerate":
        _check_cap(t, cap)
        return LogReal(log_sum(log_prob_ranked_planar(e, alpha, beta).log_value for e in ranked_planar_embeddings(t)))
    if method != "factorized":
        raise ValueError(f"unknown method {method!r}")
    f = _NodeFactor(alpha, beta)
    terms = []
    for nl, nr in _splits(t):
        if nl == nr == 0:
            continue
        terms.append(log_sum((f(nl, nr), f(nr, nl))))
    return LogReal(math.fsum(terms))


def log_prob_shape(
    t: TreeShape, alpha: float, beta: float, method: str = "factorized", cap: int = DEFAULT_EMBEDDING_CAP
) -> LogReal:
    """Probability of an unranked non-planar tree shape.

    ``alpha == beta`` uses the ``2**(n-1-s)`` multiplicity of planar
    embeddings; otherwise the embeddings are summed, either factorised node by
    node or (``method="enumerate"``) explicitly under ``cap``.
    """
    _check_no_frozen(t)
    _check_params(alpha, beta)
    if alpha == beta:
        n = t.leaf_count
        return LogReal((n - 1 - iso_split_count(t)) * LN2 + log_prob_planar(t, alpha, beta).log_value)
    if method == "enumerate":
        _check_cap(t, cap)
        return LogReal(log_sum(log_prob_planar(e, alpha, beta).log_value for e in planar_embeddings(t)))
    if method != "factorized":
        raise ValueError(f"unknown method {method!r}")
    f = _NodeFactor(alpha, beta)
    terms = []
    for x in preorder(t.root):
        if x.is_leaf:
            continue
        nl, nr = x.left.n_internal, x.right.n_internal
        own = f(nl, nr) + log_binomial(nl + nr, nl)
        if x.left != x.right:
            own = log_sum((own, f(nr, nl) + log_binomial(nl + nr, nl)))
        terms.append(own)
    return LogReal(math.fsum(terms))


_BY_RESOLUTION = {
    Resolution.RANKED_PLANAR: log_prob_ranked_planar,
    Resolution.PLANAR: log_prob_planar,
    Resolution.RANKED: log_prob_ranked_shape,
    Resolution.SHAPE: log_prob_shape,
}


def log_prob(t: AnyTree, alpha: float, beta: float, **kw) -> LogReal:
    """Dispatch on the resolution of ``t``."""
    fn = _BY_RESOLUTION[t.resolution]
    return fn(t, alpha, beta, **kw) if kw else fn(t, alpha, beta)


def log_prob_integer_beta(t: RankedPlanarTree, b: int) -> LogReal:
    """Factorial form for ``alpha = beta = b``, a non-negative integer."""
    if int(b) != b or b < 0:
        raise DomainError(f"b must be a non-negative integer, got {b!r}")
    b = int(b)
    lf = log_factorial
    terms = [
        lf(nl + b) + lf(nr + b) + lf(2 * b + 1) - lf(nl + nr + 2 * b + 1) - 2 * lf(b)
        for nl, nr in _splits(t)
    ]
    return LogReal(math.fsum(terms))


def log_prob_half_integer(t: RankedPlanarTree, b: int) -> LogReal:
    """Factorial form for ``alpha = beta = b - 1/2`` with integer ``b >= 0``."""
    if int(b) != b or b < 0:
        raise DomainError(f"b must be a non-negative integer, got {b!r}")
    b = int(b)
    lf = log_factorial
    terms = []
    for nl, nr in _splits(t):
        num = lf(2 * nl + 2 * b) + lf(2 * nr + 2 * b) + 2 * lf(b)
        den = (nl + nr) * 2 * LN2 + lf(nl + b) + lf(nr + b) + lf(nl + nr + 2 * b) + lf(2 * b)
        terms.append(num - den)
    return LogReal(math.fsum(terms))


def log_prob_ranked_planar_limit_inf(t: RankedPlanarTree) -> LogReal:
    """``alpha = beta -> infinity``: every node contributes 2**-(nL + nR)."""
    return LogReal(-LN2 * sum(nl + nr for nl, nr in _splits(t)))


def log_prob_ranked_planar_limit_minus_one(t: RankedPlanarTree) -> LogReal:
    """``alpha = beta -> -1``: only caterpillars survive, each non-cherry node
    picking its side with probability 1/2."""
    k = 0
    for nl, nr in _splits(t):
        if nl and nr:
            return LogReal(-math.inf)
        if nl or nr:
            k += 1
    return LogReal(-LN2 * k)


def log_prob_limit(t: AnyTree, case: BetaCase | str) -> LogReal:
    """Limit probabilities at any resolution for ``alpha = beta`` in {-1, inf}.

    In the symmetric limits the ranked planar probability still depends on
    the topology only, so coarse resolutions multiply by fibre sizes.
    """
    case = BetaCase(case)
    if case is BetaCase.ZERO:
        return log_prob(t, 0.0, 0.0)
    rp = log_prob_ranked_planar_limit_inf if case is BetaCase.INFINITY else log_prob_ranked_planar_limit_minus_one
    base = rp(t).log_value
    n = t.leaf_count
    if t.resolution is Resolution.RANKED_PLANAR:
        mult = 0.0
    elif t.resolution is Resolution.PLANAR:
        mult = math.log(catalan_coefficient(t))
    elif t.resolution is Resolution.RANKED:
        mult = (n - 1 - cherry_count(t)) * LN2
    else:
        mult = (n - 1 - iso_split_count(t)) * LN2 + math.log(catalan_coefficient(t))
    return LogReal(base + mult)


def log_prob_comb_shape(n: int, case: BetaCase | str) -> LogReal:
    """Closed form for the comb tree shape on ``n`` leaves."""
    case = BetaCase(case)
    if n < 2:
        raise DomainError(f"comb needs n >= 2, got {n}")
    if case is BetaCase.MINUS_ONE:
        return LogReal(0.0)
    if case is BetaCase.ZERO:
        return LogReal((n - 2) * LN2 - log_factorial(n - 1))
    return LogReal(-LN2 * ((n - 2) * (n - 3) // 2))


def log_prob_balanced_shape(n: int, case: BetaCase | str) -> LogReal:
    """Closed form for the fully balanced shape on ``n = 2**N`` leaves."""
    case = BetaCase(case)
    if n < 2 or n & (n - 1):
        raise DomainError(f"balanced shape needs n a power of two >= 2, got {n}")
    big_n = n.bit_length() - 1
    if case is BetaCase.MINUS_ONE:
        return LogReal(0.0 if n == 2 else -math.inf)
    rankings = log_factorial(n - 1) - math.fsum(2**k * math.log(n / 2**k - 1) for k in range(big_n))
    if case is BetaCase.ZERO:
        ranked = -log_factorial(n - 1)
    else:
        ranked = -LN2 * (n * (big_n - 2) + 2)
    return LogReal(rankings + ranked)


def aldous_split_pmf(n: int, beta: float) -> np.ndarray:
    """Split distribution ``q(i), i = 1..n-1`` of Aldous' model (index ``i-1``).

    Each integral is a Beta function; the normaliser is their sum, since
    ``1 - x**n - (1-x)**n`` expands binomially into the same terms.  This
    stays valid on the whole range ``beta > -2``.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not (math.isfinite(beta) and beta > -2):
        raise DomainError(f"beta must be > -2, got {beta!r}")
    logs = np.array(
        [log_binomial(n, i) + log_beta(i + beta + 1.0, n - i + beta + 1.0).log_value for i in range(1, n)]
    )
    logs -= log_sum(logs.tolist())
    q = np.exp(logs)
    # exact symmetry q(i) = q(n - i)
    return 0.5 * (q + q[::-1])


TABLE1_SIZES = (4, 8, 32, 1024)


def table1() -> list[dict]:
    """Comb and balanced shape probabilities for n in {4, 8, 32, 1024} and
    beta in {-1, 0, +inf}."""
    rows = []
    for case in BetaCase:
        for kind, fn in (("comb", log_prob_comb_shape), ("balanced", log_prob_balanced_shape)):
            for n in TABLE1_SIZES:
                p = fn(n, case)
                m, e = p.mantissa_exponent(3)
                rows.append({"beta": case.value, "shape": kind, "n": n, "log_e": p.log_value, "mantissa": m, "exponent10": e})
    return rows
