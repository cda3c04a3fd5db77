import json

import numpy as np
import pytest

from fastsecagg.errors import ConfigError
from fastsecagg.protocol import Trace, make_config
from fastsecagg.simnet import (
    DropSpec,
    SimConfig,
    bench_scaling,
    doubling_ratio,
    parse_dropouts,
    run_campaign,
    run_trial,
    sample_dropouts,
    wilson_interval,
)

FIG4 = dict(n0=5, n1=6, alpha="1/2", beta="3/10", delta0="1/5", delta1="1/6")


@pytest.fixture(scope="module")
def proto():
    return make_config(L=12, R=8, backend="sim", **FIG4)


def test_parse_dropouts():
    assert parse_dropouts("2:12") == [DropSpec(2, 12)]
    assert parse_dropouts("0:0.05, 2:3") == [DropSpec(0, 0.05), DropSpec(2, 3)]
    assert parse_dropouts("") == []
    for bad in ("3:1", "2", "x:1", "1:-2"):
        with pytest.raises(ConfigError):
            parse_dropouts(bad)


def test_dropspec_count():
    assert DropSpec(0, 0.1).count(130, 130) == 13
    assert DropSpec(0, 5).count(3, 130) == 3


def test_sample_dropouts_disjoint(proto):
    cfg = SimConfig(proto, (DropSpec(0, 2), DropSpec(1, 1), DropSpec(2, 2)))
    d = sample_dropouts(cfg, np.random.default_rng(0))
    assert [len(d[r]) for r in (0, 1, 2)] == [2, 1, 2]
    assert not (d[0] & d[1]) and not (d[1] & d[2]) and not (d[0] & d[2])


def test_budget(proto):
    with pytest.raises(ConfigError):
        SimConfig(proto, (DropSpec(2, 6),))
    SimConfig(proto, (DropSpec(2, 6),), overload=True)
    with pytest.raises(ConfigError):
        SimConfig(proto, trials=0)


def test_trial_matches_sum(proto):
    out = run_trial(SimConfig(proto, (DropSpec(2, 1),)), 3)
    assert out.match and out.abort is None
    assert len(out.C2) == 29 and out.C1 == list(range(30))


def test_replay_is_byte_identical(proto):
    cfg = SimConfig(proto, (DropSpec(1, 2), DropSpec(2, 2)), seed=9)
    a, b = run_trial(cfg, 4), run_trial(cfg, 4)
    assert a.to_json() == b.to_json()
    assert run_trial(cfg, 5).to_json() != a.to_json()
    assert "timings" not in json.loads(a.to_json())


def test_trace_replays(proto):
    cfg = SimConfig(proto, (DropSpec(2, 1),))
    t1, t2 = Trace(), Trace()
    run_trial(cfg, 0, t1)
    run_trial(cfg, 0, t2)
    assert t1.to_bytes() == t2.to_bytes()
    assert Trace.from_bytes(t1.to_bytes()).to_bytes() == t1.to_bytes()


def test_bytes_are_conserved(proto):
    out = run_trial(SimConfig(proto, (DropSpec(0, 1), DropSpec(2, 1))), 1)
    assert sum(out.bytes_sent.values()) == sum(out.bytes_received.values())


def test_overload_aborts(proto):
    out = run_trial(SimConfig(proto, (DropSpec(0, 0.5),), overload=True), 0)
    assert out.abort.startswith("AbortTooFewClients") and not out.match


def test_tamper_is_caught(proto):
    cfg = SimConfig(proto, tamper=3)
    for seed in range(10):
        out = run_trial(cfg, seed)
        assert out.tampered
        for victim in out.tampered:
            assert out.client_aborts[victim] == "AuthFailure"


def test_input_generators(proto, tmp_path):
    cfg = SimConfig(proto, input_gen="constant")
    out = run_trial(cfg, 0)
    assert out.match and out.ground_truth == [30 * 7] * 12
    path = tmp_path / "u.npy"
    np.save(path, np.ones((30, 12), dtype=np.int64))
    assert run_trial(SimConfig(proto, input_gen="file", input_file=str(path)), 0).ground_truth == [30] * 12
    np.save(path, np.ones((3, 12), dtype=np.int64))
    with pytest.raises(ConfigError):
        run_trial(SimConfig(proto, input_gen="file", input_file=str(path)), 0)


def test_campaign(proto):
    report = run_campaign(SimConfig(proto, (DropSpec(2, 1),), trials=5))
    assert report.trials == 5 and report.successes == 5 and report.success_rate == 1.0
    lo, hi = report.wilson95
    assert 0 < lo < 1 == hi
    assert report.to_csv().startswith("metric,value")


def test_wilson():
    lo, hi = wilson_interval(950, 1000)
    assert lo == pytest.approx(0.9346, abs=1e-3) and hi == pytest.approx(0.9621, abs=1e-3)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_doubling_ratio():
    sizes = [100, 200, 400, 800]
    assert doubling_ratio(sizes, [s**2 for s in sizes]) == pytest.approx(4.0)
    assert doubling_ratio(sizes, [s * np.log(s) for s in sizes]) < 2.4


def test_bench_small():
    out = bench_scaling([130, 240], "fastshare", runs=1)
    assert [r["N"] for r in out["rows"]] == [130, 240] and out["doubling_ratio"] > 0
    with pytest.raises(ConfigError):
        bench_scaling([130], "other")
