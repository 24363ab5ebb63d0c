"""Brute-force ground truth for small trees.

Exhaustive enumeration of ranked planar trees through permutations, exact
distributions at every resolution obtained by summing over projection fibres,
an exact rational evaluator, adaptive quadrature of the split integrals, and
chi-square goodness-of-fit tests for the samplers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping

from scipy import integrate, stats

from .numerics import DomainError, LogReal, log_sum
from .probability import UnsupportedScaleError, log_prob_ranked_planar
from .trees import (
    AnyTree,
    Leaf,
    Node,
    PlanarShape,
    RankedPlanarTree,
    Resolution,
    Tree,
    perm_to_ranked_planar,
    project,
    split_profile,
    to_newick,
)

__all__ = [
    "ENUMERATION_CAP",
    "QuadratureError",
    "ExactDistribution",
    "enumerate_ranked_planar",
    "enumerate_planar_shapes",
    "encode",
    "exact_distribution",
    "exact_rational_probability",
    "quadrature_check",
    "chi_square_gof",
    "chi_square_two_sample",
    "pool_cells",
    "counts_by",
]

ENUMERATION_CAP = 8
MIN_EXPECTED = 5.0
MIN_OBSERVATIONS = 1000


class QuadratureError(ArithmeticError):
    pass


def _check_n(n: int) -> None:
    if not 1 <= n <= ENUMERATION_CAP:
        raise UnsupportedScaleError(f"enumeration supports 1 <= n <= {ENUMERATION_CAP}, got n={n}")


def enumerate_ranked_planar(n: int) -> list[RankedPlanarTree]:
    """All ``(n-1)!`` ranked planar trees with ``n`` leaves."""
    _check_n(n)
    return [perm_to_ranked_planar(p) for p in itertools.permutations(range(1, n))]


def enumerate_planar_shapes(n: int) -> list[PlanarShape]:
    """All planar shapes with ``n`` leaves, built directly by recursion on the
    size of the left subtree (independent of the permutation route)."""
    _check_n(n)
    by_size: list[list[Tree]] = [[], [Leaf()]]
    for k in range(2, n + 1):
        by_size.append([Node(a, b) for i in range(1, k) for a in by_size[i] for b in by_size[k - i]])
    return [PlanarShape(r) for r in by_size[n]]


def encode(t: AnyTree) -> str:
    """Stable string key; coarse resolutions are canonical, so equal trees
    encode equally."""
    return to_newick(t)


@dataclass
class ExactDistribution:
    """Probabilities of every tree with ``n`` leaves at one resolution.

    ``fibre_sizes`` counts the ranked planar trees mapped onto each entry.
    """

    resolution: Resolution
    n: int
    alpha: float
    beta: float
    log_probs: dict[str, float]
    trees: dict[str, AnyTree] = field(repr=False)
    fibre_sizes: dict[str, int] = field(repr=False)

    def __len__(self) -> int:
        return len(self.log_probs)

    def __getitem__(self, key: str) -> LogReal:
        return LogReal(self.log_probs[key])

    def probabilities(self) -> dict[str, float]:
        return {k: math.exp(v) for k, v in self.log_probs.items()}

    def total(self) -> float:
        return math.fsum(self.probabilities().values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["encoding", "probability_log_e", "probability_mantissa", "probability_exp10"])
        for key in sorted(self.log_probs):
            lr = self[key]
            m, e = lr.mantissa_exponent()
            w.writerow([key, repr(lr.log_value), f"{m:.15g}", e])
        return buf.getvalue()


def exact_distribution(n: int, alpha: float, beta: float, resolution: Resolution | str) -> ExactDistribution:
    """Ranked planar probabilities summed over the fibres of the projection.

    No renormalisation is applied, so the total is itself a check.
    """
    resolution = Resolution(resolution)
    groups: dict[str, list[float]] = {}
    trees: dict[str, AnyTree] = {}
    for t in enumerate_ranked_planar(n):
        coarse = project(t, resolution)
        key = encode(coarse)
        groups.setdefault(key, []).append(log_prob_ranked_planar(t, alpha, beta).log_value)
        trees.setdefault(key, coarse)
    return ExactDistribution(
        resolution,
        n,
        alpha,
        beta,
        {k: log_sum(v) for k, v in groups.items()},
        trees,
        {k: len(v) for k, v in groups.items()},
    )


def _beta_int(p: int, q: int) -> Fraction:
    return Fraction(math.factorial(p - 1) * math.factorial(q - 1), math.factorial(p + q - 1))


def exact_rational_probability(t: RankedPlanarTree, alpha: int, beta: int) -> Fraction:
    """Exact probability for non-negative integer ``alpha`` and ``beta``."""
    if int(alpha) != alpha or int(beta) != beta or alpha < 0 or beta < 0:
        raise DomainError("exact rational evaluation needs non-negative integer alpha and beta")
    alpha, beta = int(alpha), int(beta)
    norm = _beta_int(alpha + 1, beta + 1)
    out = Fraction(1)
    for nl, nr in split_profile(t):
        out *= _beta_int(nl + alpha + 1, nr + beta + 1) / norm
    return out


def _split_integral(nl: int, nr: int, alpha: float, beta: float) -> float:
    # the algebraic weight b**alpha (1-b)**beta carries the endpoint
    # singularities; the remaining polynomial is smooth
    val, abserr, info = integrate.quad(
        lambda b: b**nl * (1.0 - b) ** nr,
        0.0,
        1.0,
        weight="alg",
        wvar=(alpha, beta),
        epsabs=0.0,
        epsrel=1e-13,
        limit=200,
        full_output=True,
    )[:3]
    if not val > 0 or abserr > 1e-9 * val:
        raise QuadratureError(f"split integral ({nl}, {nr}) did not converge: {val} +- {abserr}")
    return val


def quadrature_check(t: RankedPlanarTree, alpha: float, beta: float) -> LogReal:
    """Tree probability with each split integral evaluated numerically."""
    if not (alpha > -1 and beta > -1):
        raise DomainError("alpha and beta must be > -1")
    log_norm = math.log(_split_integral(0, 0, alpha, beta))
    return LogReal(math.fsum(math.log(_split_integral(nl, nr, alpha, beta)) - log_norm for nl, nr in split_profile(t)))


def pool_cells(observed: list[float], expected: list[float], threshold: float = MIN_EXPECTED):
    """Merge cells so that each has expected count >= ``threshold``.

    Cells are visited in ascending order of expected count (ties keep input
    order) and accumulated until the running pool reaches the threshold.  A
    final pool that stays short is merged into the previous one.
    """
    order = sorted(range(len(expected)), key=lambda i: expected[i])
    obs_out: list[float] = []
    exp_out: list[float] = []
    o_acc = e_acc = 0.0
    for i in order:
        o_acc += observed[i]
        e_acc += expected[i]
        if e_acc >= threshold:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if obs_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return obs_out, exp_out


def chi_square_gof(
    observed: Mapping[Hashable, int], expected: ExactDistribution | Mapping[Hashable, float]
) -> tuple[float, int, float]:
    """Pearson goodness of fit of counts against a probability table.

    Returns ``(statistic, dof, p_value)``.  Expected cells absent from
    ``observed`` count as zero; observed cells outside the expected support
    are an error.
    """
    probs = expected.probabilities() if isinstance(expected, ExactDistribution) else dict(expected)
    if not probs:
        raise ValueError("expected distribution has empty support")
    extra = [k for k, v in observed.items() if v and k not in probs]
    if extra:
        raise ValueError(f"observed cells outside the expected support: {extra[:3]}")
    m = sum(observed.values())
    if m < MIN_OBSERVATIONS:
        raise ValueError(f"need at least {MIN_OBSERVATIONS} observations, got {m}")
    keys = list(probs)
    total_p = math.fsum(probs.values())
    obs, exp = pool_cells([observed.get(k, 0) for k in keys], [m * probs[k] / total_p for k in keys])
    stat = math.fsum((o - e) ** 2 / e for o, e in zip(obs, exp))
    dof = len(obs) - 1
    if dof == 0:
        return 0.0, 0, 1.0
    return stat, dof, float(stats.chi2.sf(stat, dof))


def chi_square_two_sample(a: Mapping[Hashable, int], b: Mapping[Hashable, int]) -> tuple[float, int, float]:
    """Homogeneity test of two count tables over the union of their supports.

    Categories are pooled, in ascending order of combined count, until every
    pooled category has expected count >= 5 in both samples.
    """
    keys = sorted(set(a) | set(b), key=lambda k: (a.get(k, 0) + b.get(k, 0), str(k)))
    na, nb = sum(a.values()), sum(b.values())
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    need = MIN_EXPECTED * (na + nb) / min(na, nb)
    rows: list[list[int]] = []
    acc = [0, 0]
    for k in keys:
        acc[0] += a.get(k, 0)
        acc[1] += b.get(k, 0)
        if acc[0] + acc[1] >= need:
            rows.append(acc)
            acc = [0, 0]
    if acc[0] + acc[1]:
        if rows:
            rows[-1][0] += acc[0]
            rows[-1][1] += acc[1]
        else:
            rows.append(acc)
    if len(rows) < 2:
        return 0.0, 0, 1.0
    res = stats.chi2_contingency(rows, correction=False)
    return float(res.statistic), int(res.dof), float(res.pvalue)


def counts_by(items, key=encode) -> Counter:
    return Counter(key(x) for x in items)
