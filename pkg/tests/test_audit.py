import numpy as np
import pytest

from fastsecagg.audit import (
    audit_exhaustive,
    audit_sampled,
    build_generator,
    empirical_privacy_test,
    find_breach,
    gf_rank,
    rank_condition,
    restricted_distribution,
    total_variation,
)
from fastsecagg.errors import SpaceTooLarge
from fastsecagg.fastshare import fast_share


def test_generator_shape(fig4):
    gen = build_generator(fig4)
    assert gen.G.shape == (30, 20) and gen.K == 30 - len(fig4.sets.zeros)
    assert gen.G1.shape == (30, 4)


def test_generator_rows_reproduce_shares(fig4, rng):
    gen = build_generator(fig4)
    s = fig4.ctx.random(rng, 4)
    m = fig4.ctx.random(rng, len(fig4.sets.M))
    X = fast_share(s, fig4, masks=m)
    assert np.array_equal((gen.G @ np.concatenate([s, m])) % 31, X)


def test_gf_rank():
    assert gf_rank(np.eye(4, dtype=np.int64), 7) == 4
    assert gf_rank(np.array([[1, 2], [2, 4]]), 7) == 1
    assert gf_rank(np.array([[1, 2], [3, 6]]), 7) == 1
    assert gf_rank(np.array([[1, 2], [3, 5]]), 7) == 2
    assert gf_rank(np.zeros((3, 3), dtype=np.int64), 7) == 0


def test_fig4_exhaustive(fig4):
    report = audit_exhaustive(fig4, fig4.T_count)
    assert report.subsets_checked == 30 + 435 + 4060
    assert report.passed and report.mode == "exhaustive"


def test_exhaustive_limit(p130):
    with pytest.raises(SpaceTooLarge):
        audit_exhaustive(p130, 13)


def test_sampled(fig4, rng):
    report = audit_sampled(fig4, fig4.T_count, 500, rng)
    assert report.passed and report.subsets_checked == 500
    assert '"failures": []' in report.to_json()


def test_breach_above_threshold(fig4, rng):
    size, P = find_breach(fig4, rng, tries=20)
    assert size > fig4.T_count and len(P) == size
    assert not rank_condition(fig4, P)
    assert audit_sampled(fig4, fig4.N, 1, rng).failures  # all shares reveal everything


def test_exact_tv_zero_within_threshold(tiny):
    assert len(tiny.sets.M) == 5 and tiny.T_count == 1
    for i in range(tiny.N):
        assert empirical_privacy_test(tiny, P=[i], s=[1], s_prime=[7]).tv_distance == 0


def test_exact_tv_positive_for_leaking_coalition(tiny, rng):
    size, P = find_breach(tiny, rng, tries=20)
    report = empirical_privacy_test(tiny, P=P, s=[1], s_prime=[7])
    assert report.tv_distance > 0 and not report.passed
    assert empirical_privacy_test(tiny, P=range(12), s=[1], s_prime=[7]).tv_distance == 1.0


def test_distribution_mass(tiny):
    hist = restricted_distribution(tiny, [3], [0, 5])
    assert sum(hist.values()) == 13**5
    assert total_variation(hist, hist) == 0
    with pytest.raises(SpaceTooLarge):
        restricted_distribution(tiny, [3], [0], max_space=1000)
