import itertools

import numpy as np
import pytest

from fastsecagg.errors import DegenerateParams, TooManySecrets
from fastsecagg.shamir import ShamirParams, lagrange_coefficients, shamir_params, shamir_recon, shamir_share


def test_every_threshold_subset_recovers():
    sp = ShamirParams(N=12, S_count=3, T_count=4, q=13)
    rng = np.random.default_rng(0)
    s = sp.ctx.random(rng, 3)
    X = shamir_share(s, sp, rng)
    for subset in itertools.combinations(range(12), sp.threshold):
        assert np.array_equal(shamir_recon({i: X[i] for i in subset}, sp), s)


def test_below_threshold_is_bottom():
    sp = shamir_params(12, 3, 4)
    rng = np.random.default_rng(1)
    X = shamir_share(sp.ctx.random(rng, 3), sp, rng)
    assert shamir_recon({i: X[i] for i in range(6)}, sp) is None


def test_distinct_sharings_same_secret():
    sp = shamir_params(30, 5, 6)
    rng = np.random.default_rng(2)
    s = sp.ctx.random(rng, 5)
    X1, X2 = shamir_share(s, sp, rng), shamir_share(s, sp, rng)
    assert not np.array_equal(X1, X2)
    keep = rng.choice(30, 11, replace=False)
    assert np.array_equal(shamir_recon({int(i): X1[i] for i in keep}, sp), s)
    assert np.array_equal(shamir_recon({int(i): X2[i] for i in keep}, sp), s)


def test_batched_blocks():
    sp = shamir_params(20, 4, 3)
    rng = np.random.default_rng(3)
    s = sp.ctx.random(rng, (6, 4))
    X = shamir_share(s, sp, rng)
    got = shamir_recon({i: X[..., i] for i in range(3, 20)}, sp)
    assert np.array_equal(got, s)


def test_lagrange_matches_vandermonde_inverse():
    q = 101
    xs = [3, 7, 11, 20, 50]
    C = lagrange_coefficients(xs, q, keep=5)
    for j, xj in enumerate(xs):
        for m, xm in enumerate(xs):
            val = sum(C[j][i] * pow(xm, i, q) for i in range(5)) % q
            assert val == (1 if j == m else 0)


def test_errors():
    with pytest.raises(DegenerateParams):
        ShamirParams(N=12, S_count=10, T_count=4, q=13)
    with pytest.raises(DegenerateParams):
        ShamirParams(N=12, S_count=1, T_count=1, q=12)
    with pytest.raises(DegenerateParams):
        ShamirParams(N=12, S_count=1, T_count=1, q=11)
    sp = shamir_params(12, 2, 2)
    with pytest.raises(TooManySecrets):
        shamir_share([1, 2, 3], sp, np.random.default_rng(0))
