import numpy as np
import pytest

from fastsecagg.errors import HasErasures, LengthMismatch, NotDivisor
from fastsecagg.fft import ShareVector, default_split, dft, good_thomas, idft, naive_dft, subsample_alias_check
from fastsecagg.gf import field_new, find_field

# (N, q) pairs covering the dense float path, the int64 Good-Thomas path and object dtype
CONTEXTS = [(30, 31), (130, 131), (12, 13), (130, 33151), (1056, None), (30, (1 << 61) - 1)]


def make_ctx(N, q):
    q = q or find_field(N, N + 1)
    if (q - 1) % N:
        q = find_field(N, q)
    return field_new(q, N)


@pytest.mark.parametrize("N,q", CONTEXTS)
def test_dft_matches_naive(N, q):
    ctx = make_ctx(N, q)
    rng = np.random.default_rng(N)
    x = ctx.random(rng, N)
    assert [int(v) for v in dft(x, ctx)] == naive_dft(x, ctx)


@pytest.mark.parametrize("N,q", CONTEXTS)
def test_round_trip(N, q):
    ctx = make_ctx(N, q)
    rng = np.random.default_rng(7)
    x = ctx.random(rng, (20, N))
    assert np.array_equal(idft(dft(x, ctx), ctx), x)


def test_round_trip_100_vectors():
    ctx = field_new(31, 30)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = ctx.random(rng, 30)
        assert np.array_equal(idft(dft(x, ctx), ctx), x)


def test_good_thomas_equals_naive_on_every_split():
    ctx = field_new(131, 130)
    x = ctx.random(np.random.default_rng(3), 130)
    want = naive_dft(x, ctx)
    for n0, n1 in [(2, 65), (5, 26), (10, 13), (13, 10), (1, 130)]:
        assert [int(v) for v in good_thomas(x, ctx.omega, n0, n1, ctx)] == want


def test_batched_matches_rowwise():
    ctx = field_new(131, 130)
    x = ctx.random(np.random.default_rng(4), (3, 5, 130))
    X = dft(x, ctx)
    for idx in np.ndindex(3, 5):
        assert [int(v) for v in X[idx]] == naive_dft(x[idx], ctx)


def test_default_split():
    assert default_split(130) == (10, 13)
    assert default_split(30) == (5, 6)
    assert default_split(8190) == (90, 91)


def test_alias_identity():
    ctx = field_new(31, 30)
    rng = np.random.default_rng(5)
    for n in (1, 2, 3, 5, 6, 10, 15, 30):
        assert subsample_alias_check(ctx.random(rng, 30), n, ctx)
    with pytest.raises(NotDivisor):
        subsample_alias_check(ctx.random(rng, 30), 7, ctx)


def test_errors():
    ctx = field_new(31, 30)
    with pytest.raises(LengthMismatch):
        dft(np.zeros(29, dtype=np.int64), ctx)
    erased = np.zeros(30, dtype=bool)
    erased[3] = True
    with pytest.raises(HasErasures):
        idft(ShareVector(np.zeros(30, dtype=np.int64), erased), ctx)
    with pytest.raises(LengthMismatch):
        ShareVector(np.zeros(30, dtype=np.int64), np.zeros(4, dtype=bool))
    assert np.array_equal(idft(ShareVector(np.zeros(30, dtype=np.int64)), ctx), np.zeros(30))
