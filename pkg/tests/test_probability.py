import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from betasplit.numerics import DomainError
from betasplit.oracle import (
    enumerate_planar_shapes,
    enumerate_ranked_planar,
    exact_rational_probability,
)
from betasplit.probability import (
    BetaCase,
    UnsupportedScaleError,
    aldous_split_pmf,
    log_prob,
    log_prob_balanced_shape,
    log_prob_comb_shape,
    log_prob_half_integer,
    log_prob_integer_beta,
    log_prob_limit,
    log_prob_planar,
    log_prob_ranked_planar,
    log_prob_ranked_planar_limit_inf,
    log_prob_ranked_planar_limit_minus_one,
    log_prob_ranked_shape,
    log_prob_shape,
    table1,
)
from betasplit.trees import (
    Leaf,
    Node,
    PlanarShape,
    RankedPlanarTree,
    RankedShape,
    TreeShape,
    balanced,
    comb,
    forget_planarity,
    forget_ranks,
    from_bracket,
    mirror,
    perm_to_ranked_planar,
    shape_of,
)

GRID = [(0, 0), (-0.5, -0.5), (1, 0), (0, 2), (3, 3)]
CHERRY = RankedPlanarTree(Node(Leaf(), Leaf(), 1))


def p(x):
    return x.value


@pytest.mark.parametrize("n", range(1, 8))
def test_yule_law(n):
    for t in enumerate_ranked_planar(n):
        assert log_prob_ranked_planar(t, 0, 0).log_value == pytest.approx(-math.lgamma(n), abs=1e-12)


@pytest.mark.parametrize("alpha, beta", GRID + [(-0.9, 40.0)])
def test_cherry_is_certain(alpha, beta):
    assert log_prob_ranked_planar(CHERRY, alpha, beta).log_value == 0.0
    for t in (forget_ranks(CHERRY), forget_planarity(CHERRY), shape_of(CHERRY)):
        assert log_prob(t, alpha, beta).log_value == pytest.approx(0.0, abs=1e-15)


def test_comb4_at_one_one_against_exact_rational():
    t = RankedPlanarTree(comb(4))
    exact = exact_rational_probability(t, 1, 1)
    # B(2,4)/B(2,2) * B(2,3)/B(2,2) = (1/20)(6) * (1/12)(6)
    assert exact == Fraction(3, 10) * Fraction(1, 2)
    assert p(log_prob_ranked_planar(t, 1, 1)) == pytest.approx(float(exact), rel=1e-14)
    assert p(log_prob_integer_beta(t, 1)) == pytest.approx(float(exact), rel=1e-14)


def test_planar_examples():
    assert p(log_prob_planar(PlanarShape(balanced(4)), 0, 0)) == pytest.approx(1 / 3, abs=1e-15)
    combs = [s for s in enumerate_planar_shapes(4) if s != PlanarShape(balanced(4))]
    assert len(combs) == 4
    for s in combs:
        assert p(log_prob_planar(s, 0, 0)) == pytest.approx(1 / 6, abs=1e-15)
    # the same shape in bracket notation
    assert p(log_prob_planar(from_bracket("[., [[., .], .]]"), 0, 0)) == pytest.approx(1 / 6)


@pytest.mark.parametrize("alpha, beta", GRID)
def test_planar_sums_to_one_at_five(alpha, beta):
    total = math.fsum(p(log_prob_planar(s, alpha, beta)) for s in enumerate_planar_shapes(5))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_ranked_shape_examples():
    (only,) = {forget_planarity(t) for t in enumerate_ranked_planar(3)}
    assert p(log_prob_ranked_shape(only, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    rc = RankedShape(comb(4))
    rb = forget_planarity(perm_to_ranked_planar([2, 1, 3]))
    assert p(log_prob_ranked_shape(rc, 0, 0)) == pytest.approx(2 / 3, abs=1e-15)
    assert p(log_prob_ranked_shape(rb, 0, 0)) == pytest.approx(1 / 3, abs=1e-15)


def test_ranked_comb_asymmetric_embeddings():
    rc = RankedShape(comb(4))
    embeddings = [t for t in enumerate_ranked_planar(4) if forget_planarity(t) == rc]
    assert len(embeddings) == 4
    direct = math.fsum(p(log_prob_ranked_planar(e, 1, 0)) for e in embeddings)
    exact = sum(exact_rational_probability(e, 1, 0) for e in embeddings)
    assert direct == pytest.approx(float(exact), rel=1e-14)
    for method in ("factorized", "enumerate"):
        assert p(log_prob_ranked_shape(rc, 1, 0, method=method)) == pytest.approx(direct, rel=1e-13)


def test_shape_examples():
    c4, b4 = TreeShape(comb(4, ranked=False)), TreeShape(balanced(4))
    assert p(log_prob_shape(c4, 0, 0)) == pytest.approx(2 / 3, abs=1e-15)
    assert p(log_prob_shape(b4, 0, 0)) == pytest.approx(1 / 3, abs=1e-15)
    for alpha, beta in GRID:
        assert p(log_prob_shape(c4, alpha, beta)) + p(log_prob_shape(b4, alpha, beta)) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("n", range(2, 8))
@pytest.mark.parametrize("alpha, beta", GRID)
def test_resolution_consistency(n, alpha, beta):
    ranked = enumerate_ranked_planar(n)
    rp = {t: p(log_prob_ranked_planar(t, alpha, beta)) for t in ranked}
    assert math.fsum(rp.values()) == pytest.approx(1.0, abs=1e-10)
    for proj, fn in ((forget_ranks, log_prob_planar), (forget_planarity, log_prob_ranked_shape)):
        fibres: dict = {}
        for t, v in rp.items():
            fibres.setdefault(proj(t), []).append(v)
        for coarse, vals in fibres.items():
            assert p(fn(coarse, alpha, beta)) == pytest.approx(math.fsum(vals), abs=1e-12)
    shapes: dict = {}
    for s in {forget_ranks(t) for t in ranked}:
        shapes.setdefault(shape_of(s), []).append(p(log_prob_planar(s, alpha, beta)))
    for sh, vals in shapes.items():
        assert p(log_prob_shape(sh, alpha, beta)) == pytest.approx(math.fsum(vals), abs=1e-12)
        if alpha != beta and n <= 6:
            assert p(log_prob_shape(sh, alpha, beta, method="enumerate")) == pytest.approx(math.fsum(vals), abs=1e-12)


def test_enumeration_cap():
    big = RankedShape(comb(21))
    with pytest.raises(UnsupportedScaleError):
        log_prob_ranked_shape(big, 1, 0, method="enumerate")
    with pytest.raises(UnsupportedScaleError):
        log_prob_shape(TreeShape(comb(8, ranked=False)), 1, 0, method="enumerate", cap=7)
    # the factorised sum has no cap and the symmetric case needs none
    assert log_prob_ranked_shape(big, 1, 0).log_value < 0
    assert log_prob_ranked_shape(big, 2, 2).log_value < 0
    with pytest.raises(ValueError):
        log_prob_shape(TreeShape(comb(4, ranked=False)), 1, 0, method="bogus")


@pytest.mark.parametrize("bad", [(-1, 0), (0, -1.5), (math.inf, 0), (0, math.nan)])
def test_parameter_domain(bad):
    with pytest.raises(DomainError):
        log_prob_ranked_planar(CHERRY, *bad)


def test_frozen_leaves_rejected():
    t = RankedPlanarTree(Node(Leaf(True), Leaf(), 1))
    with pytest.raises(DomainError):
        log_prob_ranked_planar(t, 0, 0)


@pytest.mark.parametrize("n", range(2, 8))
def test_mirror_symmetry(n):
    for t in enumerate_ranked_planar(n):
        for b in (-0.5, 0.0, 2.5):
            assert log_prob_ranked_planar(mirror(t), b, b).log_value == log_prob_ranked_planar(t, b, b).log_value


@pytest.mark.parametrize("n", range(2, 7))
def test_integer_beta_closed_form(n):
    for t in enumerate_ranked_planar(n):
        for b in (0, 1, 2):
            assert log_prob_integer_beta(t, b).log_value == pytest.approx(
                log_prob_ranked_planar(t, b, b).log_value, abs=1e-12
            )


@pytest.mark.parametrize("n", range(2, 7))
def test_half_integer_closed_form(n):
    for t in enumerate_ranked_planar(n):
        for b in (0, 1, 2, 3):
            assert log_prob_half_integer(t, b).log_value == pytest.approx(
                log_prob_ranked_planar(t, b - 0.5, b - 0.5).log_value, abs=1e-10
            )
    assert log_prob_half_integer(CHERRY, 0).log_value == 0.0


def test_closed_form_domains():
    with pytest.raises(DomainError):
        log_prob_integer_beta(CHERRY, 1.5)
    with pytest.raises(DomainError):
        log_prob_half_integer(CHERRY, -1)


def test_comb_shape_probability_decreases_with_beta():
    c8 = TreeShape(comb(8, ranked=False))
    values = [log_prob_shape(c8, b, b).log_value for b in (-0.9, 0, 1, 5, 50)]
    assert all(x > y for x, y in zip(values, values[1:]))


def test_limit_inf_closed_forms():
    for n in range(2, 12):
        assert log_prob_ranked_planar_limit_inf(RankedPlanarTree(comb(n))).log_value == pytest.approx(
            -math.log(2) * (n - 1) * (n - 2) / 2
        )
    for big_n in range(1, 6):
        n = 2**big_n
        t = perm_to_ranked_planar(_balanced_perm(n))
        assert log_prob_ranked_planar_limit_inf(t).log_value == pytest.approx(-math.log(2) * (n * (big_n - 2) + 2))


def _balanced_perm(n):
    # ranks given breadth-first on the complete tree, read in symmetric order
    depth = n.bit_length() - 1
    out = []

    def walk(level, index):
        if level == depth:
            return
        walk(level + 1, 2 * index)
        out.append(2**level + index)
        walk(level + 1, 2 * index + 1)

    walk(0, 0)
    return out


@pytest.mark.parametrize("n", range(2, 7))
def test_large_beta_approaches_limit(n):
    for t in enumerate_ranked_planar(n):
        lim = log_prob_ranked_planar_limit_inf(t).log_value
        got = log_prob_ranked_planar(t, 1e4, 1e4).log_value
        assert abs(got - lim) <= 0.01 * max(abs(lim), 1e-300) or got == lim == 0.0


def test_limit_distributions_normalised():
    for n in range(2, 8):
        trees = enumerate_ranked_planar(n)
        for case in ("infinity", "minus_one"):
            assert math.fsum(p(log_prob_limit(t, case)) for t in trees) == pytest.approx(1.0, abs=1e-12)
        shapes = {shape_of(t) for t in trees}
        for case in BetaCase:
            assert math.fsum(p(log_prob_limit(s, case)) for s in shapes) == pytest.approx(1.0, abs=1e-12)


def test_limit_minus_one():
    assert log_prob_ranked_planar_limit_minus_one(perm_to_ranked_planar([2, 1, 3])).log_value == -math.inf
    assert p(log_prob_ranked_planar_limit_minus_one(RankedPlanarTree(comb(5)))) == pytest.approx(1 / 8)
    # approached from inside the domain
    t = RankedPlanarTree(comb(5))
    assert p(log_prob_ranked_planar(t, -0.9999, -0.9999)) == pytest.approx(1 / 8, rel=1e-3)


@pytest.mark.parametrize(
    "fn, n, case, mantissa, exponent",
    [
        (log_prob_comb_shape, 4, "zero", 6.67, -1),
        (log_prob_comb_shape, 1024, "zero", 8.49, -2330),
        (log_prob_comb_shape, 32, "infinity", 1.13, -131),
        (log_prob_balanced_shape, 8, "zero", 1.59, -2),
        (log_prob_balanced_shape, 8, "infinity", 7.81, -2),
        (log_prob_balanced_shape, 1024, "infinity", 1.26, -247),
    ],
)
def test_table_examples(fn, n, case, mantissa, exponent):
    assert fn(n, case).mantissa_exponent(3) == (mantissa, exponent)


@pytest.mark.parametrize("n", [4, 8])
@pytest.mark.parametrize("case", list(BetaCase))
def test_closed_shapes_agree_with_enumeration(n, case):
    c = TreeShape(comb(n, ranked=False))
    b = TreeShape(balanced(n))
    assert p(log_prob_comb_shape(n, case)) == pytest.approx(p(log_prob_limit(c, case)), rel=1e-12)
    assert p(log_prob_balanced_shape(n, case)) == pytest.approx(p(log_prob_limit(b, case)), rel=1e-12, abs=1e-300)


def test_balanced_needs_power_of_two():
    with pytest.raises(DomainError):
        log_prob_balanced_shape(6, "zero")
    with pytest.raises(DomainError):
        log_prob_comb_shape(1, "zero")


def test_table1_rows():
    rows = table1()
    assert len(rows) == 24
    assert {(r["beta"], r["shape"]) for r in rows if r["mantissa"] == 1.0 and r["exponent10"] == 0} >= {
        ("minus_one", "comb")
    }


def _aldous_quad(n, beta):
    def integral(i):
        val, _ = integrate.quad(lambda x: math.comb(n, i) * x ** (i + beta) * (1 - x) ** (n - i + beta), 0, 1, epsabs=0, epsrel=1e-13)
        return val

    raw = np.array([integral(i) for i in range(1, n)])
    norm, _ = integrate.quad(lambda x: (1 - x**n - (1 - x) ** n) * (x * (1 - x)) ** beta, 0, 1, epsabs=0, epsrel=1e-13)
    return raw / norm


def test_aldous_pmf():
    assert aldous_split_pmf(2, 0.0).tolist() == [1.0]
    q = aldous_split_pmf(4, 0.0)
    assert q == pytest.approx(_aldous_quad(4, 0.0), rel=1e-10)
    assert q == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    assert aldous_split_pmf(7, 2.5) == pytest.approx(_aldous_quad(7, 2.5), rel=1e-9)
    for n in (2, 3, 10, 50):
        for beta in (-1.9, -1.0, -0.5, 0.0, 3.0):
            q = aldous_split_pmf(n, beta)
            assert abs(q.sum() - 1) < 1e-10 and np.all(q >= 0)
            assert np.array_equal(q, q[::-1])
    with pytest.raises(DomainError):
        aldous_split_pmf(1, 0.0)
    with pytest.raises(DomainError):
        aldous_split_pmf(4, -2.0)
