import json
import math
from fractions import Fraction as F

import pytest

from fastsecagg.errors import DegenerateParams, OutOfRange
from fastsecagg.layout import make_params, params_from_dict, row_code_split


def closed_form(alpha, beta, d0, d1, N, variant="product"):
    """Independent recomputation of the counts with exact rationals."""
    if variant == "product":
        s = (1 - alpha) * (1 - 2 * beta) * (1 - d0) * (1 - d1) * N
        t = alpha * beta * (1 - d0) * (1 - d1) * N
        d = (1 - (1 - d0) * (1 - d1)) * N / 2
    else:
        s = (1 - alpha) * (1 - beta) * (1 - d0) * N
        t = alpha * beta * (1 - d0) * N
        d = d0 * N
    return math.floor(s), math.floor(t), math.floor(d)


def test_crt_round_trip(fig4):
    for flat in range(30):
        g = fig4.crt_encode(flat)
        assert (g.a, g.b) == (flat % 5, flat % 6)
        assert fig4.crt_decode(g.a, g.b) == flat
    with pytest.raises(OutOfRange):
        fig4.crt_encode(30)
    with pytest.raises(OutOfRange):
        fig4.crt_decode(5, 0)


def test_fig4_geometry(fig4):
    sets = fig4.sets
    # one zero row (a = 0) and one zero column (b = 0)
    assert {fig4.crt_encode(j).a for j in sets.Z0} == {0} and len(sets.Z0) == 6
    assert {fig4.crt_encode(j).b for j in sets.Z1} == {0} and len(sets.Z1) == 5
    assert len(sets.S) == 4
    assert fig4.K == 30 - len(sets.zeros) == 20
    cells = [(fig4.crt_encode(j).a, fig4.crt_encode(j).b) for j in sets.S]
    assert cells == sorted(cells)  # row-major secret order
    assert (fig4.S_count, fig4.T_count, fig4.D_count) == (4, 3, 5)


def test_sets_partition(p130, row130, fig4, tiny):
    for p in (p130, row130, fig4, tiny):
        s = p.sets
        allc = set(s.zeros) | set(s.S) | set(s.M)
        assert allc == set(range(p.N))
        assert len(s.zeros) + len(s.S) + len(s.M) == p.N
        assert set(s.T) <= set(s.M)


def test_product_counts_130(p130):
    assert (p130.n0, p130.n1, p130.q) == (10, 13, 131)
    want = closed_form(F(1, 2), F(1, 4), F(1, 10), F(1, 10), 130)
    assert want == (26, 13, 12)
    assert (p130.S_count, p130.T_count, p130.D_count) == want
    # 0.2N, 0.1N, 0.095N after flooring
    assert want == (math.floor(0.2 * 130), math.floor(0.1 * 130), math.floor(F(95, 1000) * 130))


def test_row_counts_130(row130):
    want = closed_form(F(1, 2), F(1, 2), F(1, 10), None, 130, "row")
    assert want == (math.floor(F(225, 1000) * 130), math.floor(F(225, 1000) * 130), 13)
    assert (row130.S_count, row130.T_count, row130.D_count) == want


@pytest.mark.parametrize("N", [240, 525, 1056, 1980])
def test_product_counts_track_formula(N):
    p = make_params(N=N, alpha="1/2", beta="1/4", delta0="1/10")
    want = closed_form(F(1, 2), F(1, 4), F(1, 10), F(1, 10), N)
    assert p.S_count <= want[0] and p.S_count >= want[0] - max(p.n0, p.n1)
    assert (p.T_count, p.D_count) == want[1:]


def test_range_checks():
    with pytest.raises(DegenerateParams):
        make_params(N=130, alpha="1/2", beta="3/5", delta0="1/10")
    with pytest.raises(DegenerateParams):
        make_params(4, 6, alpha="1/2", beta="1/4", delta0="1/4")  # not coprime
    with pytest.raises(DegenerateParams):
        make_params(5, 6, alpha="1/2", beta="1/4", delta0="1/10")  # no zero row
    with pytest.raises(DegenerateParams):
        make_params(N=130, alpha="0", beta="1/4", delta0="1/10")
    with pytest.raises(DegenerateParams):
        make_params(N=130, alpha="1/2", beta="1/4", delta0="1/10", variant="diagonal")


def test_row_code_split():
    assert row_code_split(130) == (10, 13)
    n0, n1 = row_code_split(1000)
    assert n0 * n1 == 1000 and math.gcd(n0, n1) == 1 and n0 < n1


def test_serialisation_round_trip(p130, row130, fig4):
    for p in (p130, row130, fig4):
        text = p.to_json()
        back = params_from_dict(json.loads(text))
        assert back.to_json() == text
        assert back.sets == p.sets


def test_build_sets_is_pure(p130):
    again = make_params(N=130, alpha="1/2", beta="1/4", delta0="1/10")
    assert json.dumps(again.sets.to_dict()) == json.dumps(p130.sets.to_dict())


def test_strict_parsing(p130):
    d = p130.to_dict()
    d["extra"] = 1
    with pytest.raises(DegenerateParams):
        params_from_dict(d)
    d = p130.to_dict()
    d["omega"] = 1
    with pytest.raises(DegenerateParams):
        params_from_dict(d)
