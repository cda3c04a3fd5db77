"""In-process simulation of FastSecAgg with seeded dropouts.

A trial builds N clients and a server, delivers every message in memory,
and drops clients at round boundaries: a client dropped in round ``r`` never
sends its round-``r`` message (and anything after). Everything random in a
trial derives from ``(cfg.seed, trial seed)``, so a trial replays exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
import time
import timeit
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ProtocolAbort
from .fastshare import fast_recon, fast_share
from .protocol import Client, ProtocolConfig, Server, Trace
from .shamir import shamir_params, shamir_recon, shamir_share

ROUNDS = (0, 1, 2)


@dataclass(frozen=True)
class DropSpec:
    """Drop ``amount`` clients (a count, or a fraction when below 1) in ``round``."""

    round: int
    amount: float

    def count(self, alive: int, N: int) -> int:
        if self.amount < 1:
            return min(alive, math.floor(self.amount * N))
        return min(alive, int(self.amount))


def parse_dropouts(spec: str) -> list[DropSpec]:
    """``"2:12"`` or ``"0:0.05,2:3"``: comma separated ``round:amount`` pairs."""
    out = []
    for part in filter(None, (p.strip() for p in spec.split(","))):
        try:
            rnd, amount = part.split(":")
            ds = DropSpec(int(rnd), float(amount))
        except ValueError as exc:
            raise ConfigError(f"bad dropout spec {part!r}; expected round:amount") from exc
        if ds.round not in ROUNDS or ds.amount < 0:
            raise ConfigError(f"bad dropout spec {part!r}; round must be 0, 1 or 2")
        out.append(ds)
    return out


@dataclass(frozen=True)
class SimConfig:
    protocol: ProtocolConfig
    dropouts: tuple[DropSpec, ...] = ()
    input_gen: str = "uniform"  # uniform | constant | file
    input_file: str | None = None
    trials: int = 1
    seed: int = 0
    record_views: bool = False
    tamper: int = 0  # ciphertexts to corrupt in round-1 deliveries
    overload: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trial count must be at least 1")
        if self.input_gen not in ("uniform", "constant", "file"):
            raise ConfigError(f"unknown input generator {self.input_gen!r}")
        if self.input_gen == "file" and not self.input_file:
            raise ConfigError("input_gen 'file' needs input_file")
        if not self.overload:
            N = self.protocol.N
            total = sum(d.count(N, N) for d in self.dropouts)
            if total > self.protocol.D_max:
                raise ConfigError(
                    f"{total} dropouts exceed the budget D={self.protocol.D_max}; set overload to run anyway"
                )


@dataclass
class SimOutcome:
    seed: int
    C0: list[int]
    C1: list[int]
    C2: list[int]
    result: list[int] | None
    abort: str | None
    ground_truth: list[int]
    match: bool
    client_aborts: dict[int, str] = field(default_factory=dict)
    tampered: list[int] = field(default_factory=list)
    bytes_sent: dict[str, int] = field(default_factory=dict)
    bytes_received: dict[str, int] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    views: dict | None = None

    def canonical(self) -> dict:
        """Everything except wall-clock timings, which never replay exactly."""
        d = asdict(self)
        d.pop("timings")
        d["client_aborts"] = {str(k): v for k, v in sorted(self.client_aborts.items())}
        return d

    def to_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))


def make_inputs(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    p = cfg.protocol
    if cfg.input_gen == "uniform":
        return rng.integers(0, p.R, size=(p.N, p.L), dtype=np.int64)
    if cfg.input_gen == "constant":
        return np.full((p.N, p.L), p.R - 1, dtype=np.int64)
    u = np.load(cfg.input_file)
    if u.shape != (p.N, p.L):
        raise ConfigError(f"input file holds shape {u.shape}, expected {(p.N, p.L)}")
    return u.astype(np.int64)


def sample_dropouts(cfg: SimConfig, rng: np.random.Generator) -> dict[int, set[int]]:
    """Clients dropped in each round, uniform without replacement over survivors."""
    N = cfg.protocol.N
    alive = np.arange(N)
    out = {r: set() for r in ROUNDS}
    for r in ROUNDS:
        for spec in (d for d in cfg.dropouts if d.round == r):
            k = spec.count(len(alive), N)
            gone = rng.choice(alive, size=k, replace=False) if k else np.zeros(0, dtype=np.int64)
            out[r] |= {int(i) for i in gone}
            alive = np.setdiff1d(alive, gone)
    return out


class _Meter:
    def __init__(self):
        self.sent: dict[str, int] = {}
        self.received: dict[str, int] = {}

    def count(self, msg, sender: str, receiver: str) -> None:
        self.sent[sender] = self.sent.get(sender, 0) + msg.nbytes
        self.received[receiver] = self.received.get(receiver, 0) + msg.nbytes


def _tamper(deliveries: dict, k: int, rng: np.random.Generator) -> list[int]:
    """Flip one random bit in ``k`` random delivered ciphertexts; returns victims."""
    slots = [(i, r) for i, d in sorted(deliveries.items()) for r in range(len(d.senders))]
    if not slots:
        return []
    picks = rng.choice(len(slots), size=min(k, len(slots)), replace=False)
    victims = []
    for p in picks:
        i, r = slots[p]
        cts = deliveries[i].ciphertexts
        col = rng.integers(0, cts.shape[1])
        cts[r, col] ^= np.uint8(1 << int(rng.integers(0, 8)))
        victims.append(i)
    return sorted(set(victims))


def run_trial(cfg: SimConfig, seed: int, trace: Trace | None = None) -> SimOutcome:
    p = cfg.protocol
    N = p.N
    root = np.random.SeedSequence([cfg.seed, seed])
    s_inputs, s_drop, s_tamper, s_clients = root.spawn(4)
    u = make_inputs(cfg, np.random.default_rng(s_inputs))
    dropped = sample_dropouts(cfg, np.random.default_rng(s_drop))
    client_rngs = [np.random.default_rng(s) for s in s_clients.spawn(N)]
    meter = _Meter()
    timings: dict[str, float] = {}
    aborts: dict[int, str] = {}
    server = Server(p)
    st = server.state
    result = None
    abort = None
    tampered: list[int] = []
    views = {} if cfg.record_views else None

    def deliver(msg, sender: str, receiver: str, to=None):
        meter.count(msg, sender, receiver)
        if trace is not None:
            trace.record(msg, to)

    try:
        t = time.perf_counter()
        clients = {i: Client(i, p, u[i], client_rngs[i]) for i in range(N)}
        active = [i for i in range(N) if i not in dropped[0]]
        inbox = []
        for i in active:
            msg = clients[i].round0()
            deliver(msg, str(i), "server")
            inbox.append(msg)
        keylist = server.round0(inbox)
        for i in st.C0:
            deliver(keylist, "server", str(i), i)
        timings["round0"] = time.perf_counter() - t

        t = time.perf_counter()
        inbox = []
        for i in st.C0:
            if i in dropped[1]:
                continue
            try:
                msg = clients[i].round1(keylist)
            except ProtocolAbort as exc:
                aborts[i] = type(exc).__name__
                continue
            deliver(msg, str(i), "server")
            inbox.append(msg)
        deliveries = server.round1(inbox)
        if cfg.tamper:
            tampered = _tamper(deliveries, cfg.tamper, np.random.default_rng(s_tamper))
        for i, d in deliveries.items():
            deliver(d, "server", str(i), i)
        timings["round1"] = time.perf_counter() - t

        t = time.perf_counter()
        inbox = []
        for i in st.C1:
            if i in dropped[2]:
                continue
            try:
                msg = clients[i].round2(deliveries[i])
            except ProtocolAbort as exc:
                aborts[i] = type(exc).__name__
                continue
            deliver(msg, str(i), "server")
            inbox.append(msg)
            if views is not None:
                views[str(i)] = [int(v) for v in msg.values]
        z = server.round2(inbox)
        result = [int(v) for v in z]
        timings["round2"] = time.perf_counter() - t
    except ProtocolAbort as exc:
        abort = f"{type(exc).__name__}: {exc}"

    truth = u[st.C1].sum(axis=0) if st.C1 else np.zeros(p.L, dtype=np.int64)
    truth = [int(v) for v in truth]
    return SimOutcome(
        seed=seed,
        C0=list(st.C0),
        C1=list(st.C1),
        C2=list(st.C2),
        result=result,
        abort=abort,
        ground_truth=truth,
        match=result is not None and result == truth,
        client_aborts=aborts,
        tampered=tampered,
        bytes_sent=dict(sorted(meter.sent.items())),
        bytes_received=dict(sorted(meter.received.items())),
        timings=timings,
        views=views,
    )


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    phat = successes / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class CampaignReport:
    trials: int
    successes: int
    aborts: dict[str, int]
    success_rate: float
    wilson95: tuple[float, float]
    timings: dict[str, dict[str, float]]
    bytes: dict[str, float]
    reference: dict[str, int]
    overload_allowed: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["metric", "value"])
        for k, v in sorted(_flatten(self.to_dict()).items()):
            w.writerow([k, v])
        return buf.getvalue()


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            for n, item in enumerate(v):
                out[f"{key}.{n}"] = item
        else:
            out[key] = v
    return out


def run_campaign(cfg: SimConfig, progress=None) -> CampaignReport:
    """Run ``cfg.trials`` seeded trials and summarise them."""
    p = cfg.protocol
    successes = 0
    aborts: dict[str, int] = {}
    phase_times: dict[str, list[float]] = {}
    client_bytes = []
    server_bytes = []
    for t in range(cfg.trials):
        out = run_trial(cfg, t)
        successes += out.match
        if out.abort:
            reason = out.abort.split(":")[0]
            aborts[reason] = aborts.get(reason, 0) + 1
        for k, v in out.timings.items():
            phase_times.setdefault(k, []).append(v)
        per_client = [out.bytes_sent.get(str(i), 0) + out.bytes_received.get(str(i), 0) for i in out.C0]
        if per_client:
            client_bytes.append(statistics.fmean(per_client))
        server_bytes.append(out.bytes_sent.get("server", 0) + out.bytes_received.get("server", 0))
        if progress:
            progress(t, out)
    timings = {
        k: {"mean": statistics.fmean(v), "median": statistics.median(v)} for k, v in sorted(phase_times.items())
    }
    N, L = p.N, p.L
    return CampaignReport(
        trials=cfg.trials,
        successes=successes,
        aborts=dict(sorted(aborts.items())),
        success_rate=successes / cfg.trials,
        wilson95=wilson_interval(successes, cfg.trials),
        timings=timings,
        bytes={
            "client_mean": statistics.fmean(client_bytes) if client_bytes else 0.0,
            "server_mean": statistics.fmean(server_bytes),
        },
        # Asymptotic cost shapes for comparison; reported, never asserted.
        reference={"client_L_plus_N": L + N, "server_LN_plus_N2": L * N + N * N},
        overload_allowed=cfg.overload,
    )


# --- scaling benchmark ---------------------------------------------------------------

BENCH_SPLITS = {240: (15, 16), 525: (21, 25), 1056: (32, 33), 1980: (44, 45), 4032: (63, 64), 8190: (90, 91)}


def _split_for(N: int) -> tuple[int, int]:
    if N in BENCH_SPLITS:
        return BENCH_SPLITS[N]
    from .fft import default_split

    return default_split(N)


def _time_call(fn, runs: int) -> float:
    """Median over ``runs`` of per-call time; each run repeats ``fn`` until it
    spans at least 0.2 s, so calls below timer resolution are batched."""
    fn()  # warm-up, discarded
    timer = timeit.Timer(fn)
    samples = []
    for _ in range(runs):
        number, total = timer.autorange()
        samples.append(total / number)
    return statistics.median(samples)


def doubling_ratio(sizes, seconds) -> float:
    """``2**slope`` of the least-squares fit of log time against log N."""
    slope = np.polyfit(np.log(sizes), np.log(seconds), 1)[0]
    return float(2**slope)


def bench_scaling(sizes, scheme: str = "fastshare", runs: int = 5, seed: int = 0) -> dict:
    """Server-side reconstruction time for each N, with the fitted doubling ratio.

    Both schemes reconstruct one block of ``S_count`` secrets from the same
    random set of ``N - D_count`` surviving shares.
    """
    if scheme not in ("fastshare", "shamir"):
        raise ConfigError(f"unknown scheme {scheme!r}")
    from .layout import make_params

    rng = np.random.default_rng(seed)
    rows = []
    for N in sizes:
        n0, n1 = _split_for(N)
        params = make_params(n0, n1, alpha="1/2", beta="1/4", delta0="1/10")
        s = params.ctx.random(rng, (params.S_count,))
        X = fast_share(s, params, rng)
        while True:  # a pattern that peels, so both schemes time a success
            drop = set(rng.choice(N, params.D_count, replace=False).tolist())
            present = {i: X[i] for i in range(N) if i not in drop}
            if fast_recon(present, params) is not None:
                break
        if scheme == "fastshare":
            fn = lambda: fast_recon(present, params)  # noqa: E731
        else:
            sp = shamir_params(N, params.S_count, params.T_count)
            Y = shamir_share(s, sp, rng)
            shares = {i: Y[i] for i in present}
            fn = lambda: shamir_recon(shares, sp)  # noqa: E731
        rows.append({"N": N, "n0": n0, "n1": n1, "seconds": _time_call(fn, runs)})
    for a, b in zip(rows, rows[1:]):
        b["ratio_vs_prev"] = doubling_ratio([a["N"], b["N"]], [a["seconds"], b["seconds"]])
    ratio = doubling_ratio([r["N"] for r in rows], [r["seconds"] for r in rows]) if len(rows) > 1 else None
    return {"scheme": scheme, "runs": runs, "rows": rows, "doubling_ratio": ratio}
