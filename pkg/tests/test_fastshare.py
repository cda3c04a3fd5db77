import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastsecagg.errors import InconsistentRow, LengthMismatch, TooManyErasures, TooManySecrets
from fastsecagg.fastshare import (
    build_signal,
    decode_share_vector,
    encode_share_vector,
    fast_recon,
    fast_share,
    parity_check,
    peel,
    rs_erasure_decode,
)
from fastsecagg.fft import ShareVector, naive_dft


def drop(X, gone):
    return {i: X[..., i] for i in range(X.shape[-1]) if i not in set(gone)}


def test_share_is_dft_of_placed_signal(fig4, rng):
    s = fig4.ctx.random(rng, 4)
    masks = fig4.ctx.random(rng, len(fig4.sets.M))
    X = fast_share(s, fig4, masks=masks)
    x = build_signal(s, fig4, masks)
    assert [int(v) for v in X] == naive_dft(x, fig4.ctx)
    assert np.all(x[list(fig4.sets.zeros)] == 0)


def test_fig4_parity_sums(fig4, rng):
    X = fast_share(fig4.ctx.random(rng, 4), fig4, rng)
    assert int(X[0::5].sum()) % 31 == 0  # X0 + X5 + ... + X25
    assert int(X[0::6].sum()) % 31 == 0  # X0 + X6 + ... + X24


def test_parity_check_accepts_shares_rejects_noise(fig4, p130, row130, rng):
    for p in (fig4, p130, row130):
        for _ in range(20):
            assert parity_check(fast_share(p.ctx.random(rng, p.S_count), p, rng), p)
        rejected = sum(not parity_check(p.ctx.random(rng, p.N), p) for _ in range(100))
        assert rejected == 100


def test_fig4_two_shares_in_one_line(fig4, rng):
    s = fig4.ctx.random(rng, 4)
    X = fast_share(s, fig4, rng)
    # 1 and 7 share a length-5 line (both 1 mod 6); the other direction separates them
    assert np.array_equal(fast_recon(drop(X, [1, 7]), fig4), s)


def test_fig4_square_pattern_fails(fig4, rng):
    X = fast_share(fig4.ctx.random(rng, 4), fig4, rng)
    # cells (1,1), (1,2), (2,1), (2,2): every line through them holds two erasures
    assert fast_recon(drop(X, [1, 26, 7, 2]), fig4) is None


def test_two_independent_sharings_agree(p130, rng):
    s = p130.ctx.random(rng, 26)
    X1, X2 = fast_share(s, p130, rng), fast_share(s, p130, rng)
    assert not np.array_equal(X1, X2)
    assert np.array_equal(fast_recon(X1, p130), fast_recon(X2, p130))


def test_peel_restores_values(p130, rng):
    X = fast_share(p130.ctx.random(rng, (3, 26)), p130, rng)
    erased = np.zeros(130, dtype=bool)
    erased[[0, 14, 27, 41]] = True
    Y = X.copy()
    Y[..., erased] = 0
    assert peel(Y, erased, p130)
    assert np.array_equal(Y, X) and not erased.any()


def test_row_variant_tolerates_full_capacity(row130, rng):
    s = row130.ctx.random(rng, row130.S_count)
    X = fast_share(s, row130, rng)
    # one erasure in each length-10 line (13 lines, capacity 1 each)
    gone = [c + 13 * (c % 10) for c in range(13)]
    assert np.array_equal(fast_recon(drop(X, gone), row130), s)
    assert fast_recon(drop(X, [0, 13]), row130) is None


def test_rs_decode(p130, rng):
    ctx = p130.ctx
    n, dim = 10, 7
    root = pow(ctx.omega, 13, 131)
    points = ctx.powers(root, n)
    coeffs = ctx.random(rng, dim)
    word = np.array([sum(int(c) * pow(int(z), k, 131) for k, c in enumerate(coeffs)) % 131 for z in points])
    erased = np.zeros(n, dtype=bool)
    erased[[1, 4, 8]] = True
    damaged = np.where(erased, 0, word)
    assert np.array_equal(rs_erasure_decode(damaged, erased, points, dim, ctx), word)
    erased[2] = True
    with pytest.raises(TooManyErasures):
        rs_erasure_decode(damaged, erased, points, dim, ctx)
    erased[[2, 8]] = False  # two erasures leave one redundant coordinate to check
    bad = np.where(erased, 0, word)
    bad[9] = (bad[9] + 1) % 131
    with pytest.raises(InconsistentRow):
        rs_erasure_decode(bad, erased, points, dim, ctx)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 12))
def test_round_trip_under_dropouts(seed, k):
    from fastsecagg import make_params

    p = make_params(N=130, alpha="1/2", beta="1/4", delta0="1/10")
    rng = np.random.default_rng(seed)
    s = p.ctx.random(rng, 26)
    X = fast_share(s, p, rng)
    out = fast_recon(drop(X, rng.choice(130, k, replace=False).tolist()), p)
    assert out is None or np.array_equal(out, s)
    if k <= 1:
        assert out is not None


def test_partial_secret_blocks_zero_pad(fig4, rng):
    X = fast_share([5, 6], fig4, rng)
    assert fast_recon(X, fig4).tolist() == [5, 6, 0, 0]
    with pytest.raises(TooManySecrets):
        fast_share([1, 2, 3, 4, 5], fig4, rng)
    with pytest.raises(LengthMismatch):
        fast_share([1], fig4, masks=[0, 1])


def test_wire_format(rng):
    vals = rng.integers(0, 131, 13)
    erased = np.zeros(13, dtype=bool)
    erased[[2, 11]] = True
    data = encode_share_vector(vals, erased, width=2)
    assert len(data) == 4 + 13 * 2 + 2
    assert data[:4] == (13).to_bytes(4, "little")
    assert data[-2:] == bytes([0b00000100, 0b00001000])
    vec, end = decode_share_vector(data, width=2)
    assert end == len(data)
    assert np.array_equal(vec.erased, erased)
    assert np.array_equal(vec.coeffs[~erased], vals[~erased]) and not vec.coeffs[erased].any()
    with pytest.raises(LengthMismatch):
        decode_share_vector(data[:-1], width=2)


def test_share_vector_input(fig4, rng):
    s = fig4.ctx.random(rng, 4)
    X = fast_share(s, fig4, rng)
    erased = np.zeros(30, dtype=bool)
    erased[13] = True
    assert np.array_equal(fast_recon(ShareVector(X, erased), fig4), s)
