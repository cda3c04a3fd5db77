"""FastSecAgg clients, server and wire messages.

One aggregation runs in three rounds:

0. every client advertises a public key; the server forwards the key list
   of the responders (C0).
1. every client splits its input into blocks of ``S_count`` values, shares
   each block with FastShare, and encrypts the tuple of shares meant for
   client ``j`` under the pair key ``k_ij``. The server forwards to each
   responder (C1) the ciphertexts addressed to it by other responders.
2. every client decrypts, checks the embedded ids, and returns the sum of
   the shares it holds (its own included). From the sum-shares of C2 the
   server reconstructs the sum of the C1 inputs block by block.

Every party aborts when fewer than ``N - D_max`` clients answer a round.
Inputs live in ``[0, R)``; the field is chosen so that ``N * (R - 1) < q``
and the field sum lifts back to the integer sum exactly.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import crypto
from .errors import AbortReconFailed, AbortTooFewClients, AuthFailure, ConfigError, LengthMismatch
from .fastshare import fast_recon, fast_share
from .layout import SchemeParams, make_params

SERVER_ID = 0xFFFFFFFF
MSG_HEADER = struct.Struct("<BBI")  # tag, round, sender


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ProtocolConfig:
    params: SchemeParams
    L: int
    R: int
    lam: int = 128
    backend: str = "x25519"
    D_max: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError("input length L must be at least 1")
        if self.R < 2:
            raise ConfigError("input range R must be at least 2")
        if self.params.N * (self.R - 1) >= self.params.q:
            raise ConfigError(f"N*(R-1) = {self.params.N * (self.R - 1)} must stay below q = {self.params.q}")
        if self.backend not in crypto.BACKENDS:
            raise ConfigError(f"unknown crypto backend {self.backend!r}")
        if self.D_max is None:
            object.__setattr__(self, "D_max", self.params.D_count)
        if not 0 <= self.D_max < self.params.N:
            raise ConfigError("D_max must lie in [0, N)")

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def blocks(self) -> int:
        return math.ceil(self.L / self.params.S_count)

    @property
    def threshold(self) -> int:
        """Fewest clients a round may proceed with."""
        return self.N - self.D_max

    @property
    def pp(self) -> crypto.PublicParams:
        return crypto.ka_param(self.lam, self.backend)


def make_config(L: int, R: int, backend: str = "x25519", lam: int = 128, D_max: int | None = None, **scheme) -> ProtocolConfig:
    """Scheme parameters with a field large enough for exact sums of ``[0, R)`` inputs."""
    N = scheme.get("N") or scheme["n0"] * scheme["n1"]
    if "q" not in scheme:
        scheme.setdefault("min_q", N * (R - 1) + 1)
    return ProtocolConfig(make_params(**scheme), L, R, lam, backend, D_max)


def partition(u: np.ndarray, S: int) -> np.ndarray:
    """Blocks of ``S`` consecutive entries; the last is zero padded."""
    blocks = math.ceil(len(u) / S)
    out = np.zeros(blocks * S, dtype=np.int64)
    out[: len(u)] = u
    return out.reshape(blocks, S)


# --- messages ---------------------------------------------------------------------


@dataclass
class AdvertiseKey:
    sender: int
    pk: bytes
    TAG = 1
    ROUND = 0

    def payload(self) -> bytes:
        return struct.pack("<H", len(self.pk)) + self.pk

    @property
    def nbytes(self) -> int:
        return MSG_HEADER.size + 2 + len(self.pk)


@dataclass
class KeyList:
    pairs: list[tuple[int, bytes]]
    sender: int = SERVER_ID
    TAG = 2
    ROUND = 0

    def __post_init__(self):
        self._nbytes = MSG_HEADER.size + 4 + sum(6 + len(pk) for _, pk in self.pairs)
        self._table = None

    def table(self) -> tuple[np.ndarray, object]:
        """Sorted unique ids and their keys, as a uint8 matrix when all keys share one length."""
        if self._table is None:
            latest = dict(self.pairs)
            ids = np.array(sorted(latest), dtype=np.int64)
            pks = [latest[int(i)] for i in ids]
            if len({len(pk) for pk in pks}) == 1:
                pks = np.frombuffer(b"".join(pks), dtype=np.uint8).reshape(len(pks), -1)
            self._table = (ids, pks)
        return self._table

    def payload(self) -> bytes:
        parts = [struct.pack("<I", len(self.pairs))]
        for cid, pk in self.pairs:
            parts.append(struct.pack("<IH", cid, len(pk)) + pk)
        return b"".join(parts)

    @property
    def nbytes(self) -> int:
        return self._nbytes


@dataclass
class CipherBatch:
    """Ciphertext ``m`` (a row of ``ciphertexts``) is addressed to ``receivers[m]``."""

    sender: int
    receivers: np.ndarray
    ciphertexts: np.ndarray
    TAG = 3
    ROUND = 1

    def payload(self) -> bytes:
        m, width = self.ciphertexts.shape
        return (
            struct.pack("<II", m, width)
            + np.asarray(self.receivers, dtype="<u4").tobytes()
            + np.ascontiguousarray(self.ciphertexts, dtype=np.uint8).tobytes()
        )

    @property
    def nbytes(self) -> int:
        m, width = self.ciphertexts.shape
        return MSG_HEADER.size + 8 + 4 * m + m * width

    def pairs(self) -> list[tuple[int, bytes]]:
        return [(int(j), row.tobytes()) for j, row in zip(self.receivers, self.ciphertexts)]


@dataclass
class CipherDelivery:
    """Ciphertexts for client ``to``; row ``m`` came from ``senders[m]``."""

    to: int
    senders: np.ndarray
    ciphertexts: np.ndarray
    sender: int = SERVER_ID
    TAG = 4
    ROUND = 1

    def payload(self) -> bytes:
        m, width = self.ciphertexts.shape
        return (
            struct.pack("<III", self.to, m, width)
            + np.asarray(self.senders, dtype="<u4").tobytes()
            + np.ascontiguousarray(self.ciphertexts, dtype=np.uint8).tobytes()
        )

    @property
    def nbytes(self) -> int:
        m, width = self.ciphertexts.shape
        return MSG_HEADER.size + 12 + 4 * m + m * width


@dataclass
class SumShare:
    sender: int
    values: np.ndarray
    TAG = 5
    ROUND = 2

    def payload(self) -> bytes:
        vals = [int(v) for v in np.asarray(self.values).ravel()]
        return struct.pack("<I", len(vals)) + b"".join(v.to_bytes(8, "little") for v in vals)

    @property
    def nbytes(self) -> int:
        return MSG_HEADER.size + 4 + 8 * len(self.values)


@dataclass
class Abort:
    sender: int
    round: int
    reason: str
    TAG = 6

    @property
    def ROUND(self) -> int:  # noqa: N802 -- mirrors the class attribute of other messages
        return self.round

    def payload(self) -> bytes:
        text = self.reason.encode()
        return struct.pack("<H", len(text)) + text

    @property
    def nbytes(self) -> int:
        return MSG_HEADER.size + 2 + len(self.reason.encode())


Message = AdvertiseKey | KeyList | CipherBatch | CipherDelivery | SumShare | Abort


def encode_message(msg) -> bytes:
    """``u8 tag | u8 round | u32 sender | payload`` (all little endian)."""
    return MSG_HEADER.pack(msg.TAG, msg.ROUND, msg.sender) + msg.payload()


def decode_message(data: bytes):
    tag, rnd, sender = MSG_HEADER.unpack_from(data)
    off = MSG_HEADER.size
    try:
        if tag == AdvertiseKey.TAG:
            (n,) = struct.unpack_from("<H", data, off)
            return AdvertiseKey(sender, data[off + 2 : off + 2 + n])
        if tag == KeyList.TAG:
            (count,) = struct.unpack_from("<I", data, off)
            off += 4
            pairs = []
            for _ in range(count):
                cid, n = struct.unpack_from("<IH", data, off)
                off += 6
                pairs.append((cid, data[off : off + n]))
                off += n
            return KeyList(pairs, sender)
        if tag in (CipherBatch.TAG, CipherDelivery.TAG):
            to = None
            if tag == CipherDelivery.TAG:
                (to,) = struct.unpack_from("<I", data, off)
                off += 4
            m, width = struct.unpack_from("<II", data, off)
            off += 8
            ids = np.frombuffer(data, dtype="<u4", count=m, offset=off).astype(np.int64)
            off += 4 * m
            cts = np.frombuffer(data, dtype=np.uint8, count=m * width, offset=off).reshape(m, width).copy()
            if tag == CipherBatch.TAG:
                return CipherBatch(sender, ids, cts)
            return CipherDelivery(to, ids, cts, sender)
        if tag == SumShare.TAG:
            (n,) = struct.unpack_from("<I", data, off)
            off += 4
            vals = [int.from_bytes(data[off + 8 * k : off + 8 * k + 8], "little") for k in range(n)]
            dtype = object if any(v >= 1 << 62 for v in vals) else np.int64
            return SumShare(sender, np.array(vals, dtype=dtype))
        if tag == Abort.TAG:
            (n,) = struct.unpack_from("<H", data, off)
            return Abort(sender, rnd, data[off + 2 : off + 2 + n].decode())
    except (struct.error, ValueError) as exc:
        raise LengthMismatch(f"truncated message: {exc}") from exc
    raise ValueError(f"unknown message tag {tag}")


def describe(msg) -> dict:
    """JSON-friendly summary used in traces."""
    d = {"type": type(msg).__name__, "round": msg.ROUND, "sender": msg.sender, "nbytes": msg.nbytes}
    if isinstance(msg, CipherDelivery):
        d["to"] = msg.to
        d["count"] = len(msg.senders)
    elif isinstance(msg, CipherBatch):
        d["count"] = len(msg.receivers)
    elif isinstance(msg, KeyList):
        d["count"] = len(msg.pairs)
    elif isinstance(msg, Abort):
        d["reason"] = msg.reason
    return d


# --- client ----------------------------------------------------------------------------


def share_dtype(q: int) -> np.dtype:
    """Narrowest little-endian unsigned type holding every element of GF(q)."""
    for name in ("<u1", "<u2", "<u4", "<u8"):
        if q - 1 <= np.iinfo(name).max:
            return np.dtype(name)
    raise ConfigError(f"q={q} does not fit in 64 bits")


def _pack_shares(sender: int, receivers: np.ndarray, shares: np.ndarray, dtype: np.dtype) -> np.ndarray:
    """Plaintext rows ``sender u32 | receiver u32 | shares`` as uint8."""
    ids = np.uint64(sender) | (np.asarray(receivers, dtype=np.uint64) << np.uint64(32))
    head = ids.astype("<u8").view(np.uint8).reshape(len(receivers), 8)
    body = np.ascontiguousarray(shares[:, receivers].T.astype(dtype)).view(np.uint8)
    return np.concatenate([head, body.reshape(len(receivers), -1)], axis=1)


class Client:
    """One honest client; each ``round*`` call consumes the server's last message."""

    def __init__(self, cid: int, config: ProtocolConfig, u, rng: np.random.Generator):
        self.id = cid
        self.config = config
        self.u = np.asarray(u, dtype=np.int64)
        if self.u.shape != (config.L,):
            raise ConfigError(f"client {cid}: expected an input of length {config.L}")
        if self.u.min(initial=0) < 0 or self.u.max(initial=0) >= config.R:
            raise ConfigError(f"client {cid}: inputs must lie in [0, {config.R})")
        self.rng = rng
        self.round = 0
        self.keypair = crypto.ka_gen(config.pp, rng)
        self.peers = np.zeros(0, dtype=np.int64)
        self.keys: crypto.KeyBatch | None = None
        self.shares: np.ndarray | None = None

    def _expect(self, rnd: int) -> None:
        if self.round != rnd:
            raise RuntimeError(f"client {self.id} is in round {self.round}, not {rnd}")

    def round0(self) -> AdvertiseKey:
        self._expect(0)
        self.round = 1
        return AdvertiseKey(self.id, self.keypair.pk)

    def round1(self, keylist: KeyList) -> CipherBatch:
        self._expect(1)
        cfg = self.config
        ids, pks = keylist.table()
        if len(ids) < cfg.threshold:
            raise AbortTooFewClients(f"round 1: {len(ids)} keys, need {cfg.threshold}")
        others = ids != self.id
        self.peers = ids[others]
        pks = pks[others] if isinstance(pks, np.ndarray) else [pk for pk, keep in zip(pks, others) if keep]
        self.keys = crypto.ka_agree_many(self.keypair.sk, pks, cfg.backend, cfg.lam)
        blocks = partition(self.u, cfg.params.S_count)
        self.shares = fast_share(blocks, cfg.params, self.rng)  # (blocks, N), fresh masks per block
        plain = _pack_shares(self.id, self.peers, self.shares, share_dtype(cfg.params.q))
        cts = crypto.ae_enc_many(self.keys, plain, self.id, self.peers)
        self.round = 2
        return CipherBatch(self.id, self.peers.copy(), cts)

    def round2(self, delivery: CipherDelivery) -> SumShare:
        self._expect(2)
        cfg = self.config
        q = cfg.params.q
        if delivery.to != self.id:
            raise AuthFailure(f"client {self.id} got a delivery addressed to {delivery.to}")
        senders = np.asarray(delivery.senders, dtype=np.int64)
        rows = np.searchsorted(self.peers, senders)
        if len(senders) and (np.any(rows >= len(self.peers)) or np.any(self.peers[np.minimum(rows, len(self.peers) - 1)] != senders)):
            raise AuthFailure(f"client {self.id} got ciphertexts from unknown senders")
        if len(np.unique(senders)) != len(senders):
            raise AuthFailure(f"client {self.id} got two ciphertexts from one sender")
        total = self.shares[:, self.id].astype(object if q >= 1 << 31 else np.int64)
        if len(senders):
            plain, ok = crypto.ae_dec_many(self.keys.take(rows), delivery.ciphertexts)
            if not ok.all():
                raise AuthFailure(f"client {self.id}: ciphertext from {int(senders[~ok][0])} failed authentication")
            ids = np.ascontiguousarray(plain[:, :8]).view("<u8").ravel()
            expect_ids = senders.astype(np.uint64) | (np.uint64(self.id) << np.uint64(32))
            if np.any(ids != expect_ids):
                raise AuthFailure(f"client {self.id}: embedded ids do not match the addressing")
            header = np.ascontiguousarray(delivery.ciphertexts[:, :8]).view("<u8").ravel()
            if np.any(header != expect_ids):
                raise AuthFailure(f"client {self.id}: ciphertext header does not match the addressing")
            shares = np.ascontiguousarray(plain[:, 8:]).view(share_dtype(q))
            if shares.shape[1] != cfg.blocks:
                raise AuthFailure(f"client {self.id}: plaintext holds {shares.shape[1]} shares, expected {cfg.blocks}")
            if np.any(shares >= q):
                raise AuthFailure(f"client {self.id}: share outside the field")
            if q < 1 << 31:
                total = (total + shares.astype(np.int64).sum(axis=0)) % q
            else:
                total = np.array([(int(t) + sum(int(v) for v in col)) % q for t, col in zip(total, shares.T)], dtype=object)
        self.round = 3
        return SumShare(self.id, total)


# --- server ----------------------------------------------------------------------------


@dataclass
class ServerState:
    C0: list[int] = field(default_factory=list)
    C1: list[int] = field(default_factory=list)
    C2: list[int] = field(default_factory=list)
    keys: dict[int, bytes] = field(default_factory=dict)
    output: np.ndarray | None = None


class Server:
    def __init__(self, config: ProtocolConfig):
        self.config = config
        self.state = ServerState()

    def _check(self, rnd: int, count: int) -> None:
        if count < self.config.threshold:
            raise AbortTooFewClients(f"round {rnd}: {count} clients responded, need {self.config.threshold}")

    @staticmethod
    def _unique(inbox, allowed=None) -> dict:
        out = {}
        for msg in inbox:
            if allowed is not None and msg.sender not in allowed:
                continue
            if msg.sender in out:
                raise ValueError(f"duplicate message from client {msg.sender}")
            out[msg.sender] = msg
        return dict(sorted(out.items()))

    def round0(self, inbox: list[AdvertiseKey]) -> KeyList:
        msgs = self._unique(inbox, range(self.config.N))
        self.state.C0 = list(msgs)
        self._check(0, len(msgs))
        self.state.keys = {i: m.pk for i, m in msgs.items()}
        return KeyList(list(self.state.keys.items()))

    def round1(self, inbox: list[CipherBatch]) -> dict[int, CipherDelivery]:
        """Route, to each client of C1, the ciphertexts other C1 members addressed to it."""
        msgs = self._unique(inbox, set(self.state.C0))
        C1 = list(msgs)
        self.state.C1 = C1
        self._check(1, len(C1))
        N = self.config.N
        widths = {m.ciphertexts.shape[1] for m in msgs.values()}
        if len(widths) > 1:
            raise ValueError("ciphertexts of differing lengths in one round")
        (width,) = widths
        sizes = [len(m.receivers) for m in msgs.values()]
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        pool = np.concatenate([m.ciphertexts for m in msgs.values()]) if sizes else np.zeros((0, width), np.uint8)
        where = np.full((len(C1), N), -1, dtype=np.int64)  # pool row of (sender index, receiver)
        for k, m in enumerate(msgs.values()):
            where[k, np.asarray(m.receivers, dtype=np.int64)] = np.arange(offsets[k], offsets[k + 1])
        senders = np.array(C1, dtype=np.int64)
        out = {}
        for k, i in enumerate(C1):
            rows = where[:, i]
            keep = (rows >= 0) & (senders != i)
            out[i] = CipherDelivery(i, senders[keep], pool[rows[keep]])
        return out

    def round2(self, inbox: list[SumShare]) -> np.ndarray:
        cfg = self.config
        msgs = self._unique(inbox, set(self.state.C1))
        self.state.C2 = list(msgs)
        self._check(2, len(msgs))
        for m in msgs.values():
            if len(m.values) != cfg.blocks:
                raise LengthMismatch(f"sum-share of client {m.sender} has {len(m.values)} blocks, expected {cfg.blocks}")
        shares = {i: m.values for i, m in msgs.items()}
        sums = fast_recon(shares, cfg.params)
        if sums is None:
            raise AbortReconFailed(f"peeling stalled with {cfg.N - len(shares)} missing sum-shares")
        z = np.asarray(sums).reshape(-1)[: cfg.L]
        self.state.output = np.array([int(v) for v in z], dtype=object if cfg.params.q >= 1 << 62 else np.int64)
        return self.state.output


# --- traces ----------------------------------------------------------------------------


@dataclass
class Trace:
    """Messages in delivery order, for replay and debugging."""

    events: list = field(default_factory=list)

    def record(self, msg, to=None) -> None:
        self.events.append((msg, to))

    def to_bytes(self) -> bytes:
        """Concatenation of ``u32 receiver | u32 length | encoded message``."""
        parts = []
        for msg, to in self.events:
            body = encode_message(msg)
            parts.append(struct.pack("<II", SERVER_ID if to is None else to, len(body)) + body)
        return b"".join(parts)

    @staticmethod
    def from_bytes(data: bytes) -> "Trace":
        trace = Trace()
        off = 0
        while off < len(data):
            to, n = struct.unpack_from("<II", data, off)
            off += 8
            trace.record(decode_message(data[off : off + n]), None if to == SERVER_ID else to)
            off += n
        return trace

    def to_json(self) -> str:
        rows = []
        for msg, to in self.events:
            d = describe(msg)
            d["receiver"] = "server" if to is None else to
            rows.append(d)
        return json.dumps(rows, indent=1)
