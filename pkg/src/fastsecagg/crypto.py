"""Key agreement and authenticated encryption behind one small interface.

Two backends are provided:

``x25519`` (default)
    X25519 key agreement, HKDF-SHA256 key derivation and AES-GCM. Secret keys
    are drawn from the caller's seeded generator, so runs are reproducible,
    but the primitives are the real ones.

``sim``
    A deterministic, numpy-vectorised test double for large simulation
    campaigns. Keys, keystreams and tags come from a 64-bit mixing function.
    Its "key agreement" derives the pair key from the two *public* keys, so it
    offers no secrecy at all; it only preserves the interface contracts
    (symmetric agreement, round trip, tamper rejection). Never use it outside
    simulation.

Ciphertext layout, identical for both backends::

    sender u32 LE | receiver u32 LE | nonce (12) | body | tag (16)

The two ids are authenticated as associated data. The nonce is
``sender u32 | receiver u32 | counter u32``; a (sender, receiver) pair never
reuses a counter under one key.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidKey

HEADER = struct.Struct("<II")
NONCE_LEN = 12
TAG_LEN = 16
PREFIX_LEN = HEADER.size + NONCE_LEN
BACKENDS = ("x25519", "sim")


@dataclass(frozen=True)
class PublicParams:
    lam: int = 128
    backend: str = "x25519"


@dataclass(frozen=True)
class KeyPair:
    pk: bytes
    sk: bytes = b""
    backend: str = "x25519"

    def __repr__(self):
        return f"KeyPair(pk={self.pk.hex()}, backend={self.backend!r})"


@dataclass(frozen=True)
class SharedKey:
    key: bytes
    backend: str = "x25519"


def ka_param(lam: int = 128, backend: str = "x25519") -> PublicParams:
    if backend not in BACKENDS:
        raise ValueError(f"unknown crypto backend {backend!r}")
    if lam not in (128, 192, 256):
        raise ValueError("lambda must be 128, 192 or 256")
    return PublicParams(lam, backend)


def make_nonce(sender: int, receiver: int, counter: int = 0) -> bytes:
    return struct.pack("<III", sender, receiver, counter)


# --- 64-bit mixing (sim backend) ---------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)
_TAG_SEEDS = (np.uint64(0x243F6A8885A308D3), np.uint64(0x13198A2E03707344))


_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


def _mix(x):
    """splitmix64 finaliser; a bijection on 64-bit words (wraps silently on arrays)."""
    x = np.add(x, _GOLDEN, dtype=np.uint64)
    x ^= x >> _S30
    x *= _C1
    x ^= x >> _S27
    x *= _C2
    x ^= x >> _S31
    return x


def _sim_pk(sk: bytes) -> np.ndarray:
    return _mix(np.frombuffer(sk, dtype="<u8")[:1])[0]


def _sim_pair_key(a, b) -> np.ndarray:
    """Symmetric in (a, b); returns (..., 2) words."""
    a = np.atleast_1d(np.asarray(a, dtype=np.uint64))
    b = np.atleast_1d(np.asarray(b, dtype=np.uint64))
    k0 = _mix((a ^ b) ^ ((a + b) * _C1))
    k1 = _mix(k0 ^ _TAG_SEEDS[0])
    return np.stack([k0, k1], axis=-1)


def _nonce_words(header_words: np.ndarray, counters: np.ndarray) -> np.ndarray:
    return header_words ^ (counters * _C2)


def _sim_stream(keys: np.ndarray, nonce_words: np.ndarray, n_words: int) -> np.ndarray:
    """Keystream word ``w`` of row ``m`` is ``(r_m ^ w * C1) * C2`` with ``r_m = mix(key_m ^ nonce_m)``."""
    idx = np.arange(n_words, dtype=np.uint64) * _C1
    r = _mix(keys[:, 0] ^ nonce_words)
    out = r[:, None] ^ idx[None, :]
    out *= _C2
    return out


_TAG_WEIGHTS: dict[int, np.ndarray] = {}


def _sim_tags(keys: np.ndarray, header_words: np.ndarray, counters: np.ndarray, body_words: np.ndarray) -> np.ndarray:
    """Two keyed sums of position-weighted words: (m, 2) uint64.

    Each word is xored with the key and multiplied by an odd position weight,
    a bijection, so a change to any single word always changes both sums.
    """
    width = body_words.shape[1] + 2
    weights = _TAG_WEIGHTS.get(width)
    if weights is None:
        pos = np.arange(width, dtype=np.uint64)
        weights = _TAG_WEIGHTS[width] = _mix(np.stack([pos, pos + np.uint64(width)])) | np.uint64(1)
    k = keys[:, 1]
    data = np.empty((len(k), width), dtype=np.uint64)
    data[:, 0] = header_words
    data[:, 1] = counters
    data[:, 2:] = body_words
    data ^= k[:, None]
    sums = data @ weights.T  # wraps mod 2**64
    sums ^= k[:, None]
    sums ^= np.array(_TAG_SEEDS, dtype=np.uint64)
    return _mix(sums)


# --- key agreement ------------------------------------------------------------------


def ka_gen(pp: PublicParams, rng: np.random.Generator) -> KeyPair:
    if pp.backend == "sim":
        sk = rng.integers(0, 2**63, dtype=np.int64).astype("<u8").tobytes()
        return KeyPair(np.uint64(_sim_pk(sk)).astype("<u8").tobytes(), sk, "sim")
    from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey
    from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

    sk = rng.bytes(32)
    pk = X25519PrivateKey.from_private_bytes(sk).public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
    return KeyPair(pk, sk, "x25519")


def _check_pk(pk: bytes, backend: str) -> None:
    want = 8 if backend == "sim" else 32
    if not isinstance(pk, (bytes, bytearray)) or len(pk) != want:
        raise InvalidKey(f"{backend} public keys are {want} bytes")


def ka_agree(sk: bytes, pk: bytes, backend: str = "x25519", lam: int = 128) -> SharedKey:
    """Shared key of ``sk``'s owner and ``pk``'s owner (symmetric)."""
    _check_pk(pk, backend)
    if backend == "sim":
        other = np.frombuffer(pk, dtype="<u8")
        return SharedKey(_sim_pair_key(_sim_pk(sk), other)[0].astype("<u8").tobytes(), "sim")
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
    from cryptography.hazmat.primitives.kdf.hkdf import HKDF

    try:
        secret = X25519PrivateKey.from_private_bytes(sk).exchange(X25519PublicKey.from_public_bytes(pk))
    except ValueError as exc:
        raise InvalidKey(str(exc)) from exc
    key = HKDF(algorithm=hashes.SHA256(), length=lam // 8, salt=None, info=b"fastsecagg pair key").derive(secret)
    return SharedKey(key, "x25519")


@dataclass(frozen=True)
class KeyBatch:
    """Pair keys for many peers, one row each (``(m, lam/8)`` uint8)."""

    keys: np.ndarray
    backend: str = "x25519"

    def __len__(self):
        return len(self.keys)

    def take(self, rows) -> "KeyBatch":
        return KeyBatch(self.keys[rows], self.backend)

    def __getitem__(self, row: int) -> SharedKey:
        return SharedKey(self.keys[row].tobytes(), self.backend)

    @classmethod
    def of(cls, keys: list[SharedKey]) -> "KeyBatch":
        backend = keys[0].backend if keys else "x25519"
        raw = np.frombuffer(b"".join(k.key for k in keys), dtype=np.uint8)
        return cls(raw.reshape(len(keys), -1) if keys else raw.reshape(0, 16), backend)


def ka_agree_many(sk: bytes, pks, backend: str = "x25519", lam: int = 128) -> KeyBatch:
    """Pair keys with every public key in ``pks`` (a list of bytes or an ``(m, len)`` uint8 matrix)."""
    if isinstance(pks, np.ndarray):
        if pks.ndim != 2:
            raise InvalidKey("public key matrix must be two dimensional")
        if backend == "sim":
            if pks.shape[1] != 8:
                raise InvalidKey("sim public keys are 8 bytes")
            others = np.ascontiguousarray(pks).view("<u8").ravel()
            raw = _sim_pair_key(_sim_pk(sk), others).astype("<u8")
            return KeyBatch(raw.view(np.uint8).reshape(len(pks), 16), "sim")
        pks = [row.tobytes() for row in pks]
    if backend != "sim":
        return KeyBatch.of([ka_agree(sk, pk, backend, lam) for pk in pks]) if pks else KeyBatch(np.zeros((0, lam // 8), np.uint8), backend)
    joined = b"".join(pks)
    if len(joined) != 8 * len(pks) or any(len(pk) != 8 for pk in pks):
        raise InvalidKey("sim public keys are 8 bytes")
    return ka_agree_many(sk, np.frombuffer(joined, dtype=np.uint8).reshape(len(pks), 8), backend, lam)


# --- authenticated encryption -------------------------------------------------------------


def ae_enc(key: SharedKey, plaintext: bytes, sender: int = 0, receiver: int = 0, counter: int = 0) -> bytes:
    batch = KeyBatch.of([key])
    pt = np.frombuffer(plaintext, dtype=np.uint8).reshape(1, len(plaintext))
    return ae_enc_many(batch, pt, sender, np.array([receiver]), counter)[0].tobytes()


def ae_dec(key: SharedKey, ciphertext: bytes) -> bytes | None:
    """Plaintext, or ``None`` when authentication fails."""
    ct = np.frombuffer(ciphertext, dtype=np.uint8).reshape(1, len(ciphertext))
    plain, ok = ae_dec_many(KeyBatch.of([key]), ct)
    return plain[0].tobytes() if ok[0] else None


def parse_header(ciphertext: bytes) -> tuple[int, int]:
    """``(sender, receiver)`` from a ciphertext prefix."""
    if len(ciphertext) < PREFIX_LEN + TAG_LEN:
        raise ValueError("ciphertext shorter than header and tag")
    return HEADER.unpack_from(ciphertext)


def _prefix(sender: int, receivers: np.ndarray, counter: int) -> np.ndarray:
    """Header plus nonce for each receiver: ``(m, 20)`` uint8."""
    m = len(receivers)
    words = np.empty((m, 5), dtype="<u4")
    words[:, 0] = sender
    words[:, 1] = receivers
    words[:, 2] = sender
    words[:, 3] = receivers
    words[:, 4] = counter
    return words.view(np.uint8)


def _padded_words(data: np.ndarray) -> np.ndarray:
    """``(m, n)`` uint8 to ``(m, ceil(n/8))`` uint64, zero padded."""
    m, n = data.shape
    pad = (-n) % 8
    if pad:
        data = np.concatenate([data, np.zeros((m, pad), np.uint8)], axis=1)
    return np.ascontiguousarray(data).view("<u8").astype(np.uint64)


def ae_enc_many(keys: KeyBatch, plaintexts: np.ndarray, sender: int, receivers, counter: int = 0) -> np.ndarray:
    """Encrypt row m of ``plaintexts`` (uint8) for ``receivers[m]`` under ``keys[m]``.

    Returns an ``(m, 20 + len + 16)`` uint8 matrix in the documented layout.
    """
    receivers = np.asarray(receivers, dtype=np.uint32)
    plaintexts = np.asarray(plaintexts, dtype=np.uint8)
    m, length = plaintexts.shape
    prefix = _prefix(sender, receivers, counter)
    if keys.backend != "sim":
        from cryptography.hazmat.primitives.ciphers.aead import AESGCM

        rows = []
        for r in range(m):
            head = prefix[r].tobytes()
            rows.append(head + AESGCM(keys.keys[r].tobytes()).encrypt(head[8:], plaintexts[r].tobytes(), head[:8]))
        return np.frombuffer(bytearray(b"".join(rows)), dtype=np.uint8).reshape(m, PREFIX_LEN + length + TAG_LEN)
    kw = np.ascontiguousarray(keys.keys).view("<u8")
    header_words = np.ascontiguousarray(prefix[:, :8]).view("<u8").ravel()
    counters = np.full(m, counter, dtype=np.uint64)
    n_words = (length + 7) // 8
    body = _padded_words(plaintexts) ^ _sim_stream(kw, _nonce_words(header_words, counters), n_words)
    body_bytes = body.astype("<u8").view(np.uint8)[:, :length]
    tags = _sim_tags(kw, header_words, counters, _padded_words(body_bytes)).astype("<u8").view(np.uint8)
    return np.concatenate([prefix, body_bytes, tags], axis=1)


def ae_dec_many(keys: KeyBatch, ciphertexts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(plaintexts (m, len) uint8, ok (m,) bool)``; rows with ``ok`` False are garbage."""
    ciphertexts = np.asarray(ciphertexts, dtype=np.uint8)
    m, total = ciphertexts.shape
    length = total - PREFIX_LEN - TAG_LEN
    if length < 0:
        return np.zeros((m, 0), np.uint8), np.zeros(m, dtype=bool)
    if keys.backend != "sim":
        from cryptography.exceptions import InvalidTag
        from cryptography.hazmat.primitives.ciphers.aead import AESGCM

        plain = np.zeros((m, length), np.uint8)
        ok = np.zeros(m, dtype=bool)
        for r in range(m):
            c = ciphertexts[r].tobytes()
            try:
                pt = AESGCM(keys.keys[r].tobytes()).decrypt(c[HEADER.size : PREFIX_LEN], c[PREFIX_LEN:], c[: HEADER.size])
            except InvalidTag:
                continue
            plain[r] = np.frombuffer(pt, dtype=np.uint8)
            ok[r] = True
        return plain, ok
    kw = np.ascontiguousarray(keys.keys).view("<u8")
    header_words = np.ascontiguousarray(ciphertexts[:, :8]).view("<u8").ravel().astype(np.uint64)
    nonce_ids = np.ascontiguousarray(ciphertexts[:, 8:16]).view("<u8").ravel().astype(np.uint64)
    counters = np.ascontiguousarray(ciphertexts[:, 16:PREFIX_LEN]).view("<u4").ravel().astype(np.uint64)
    body_bytes = ciphertexts[:, PREFIX_LEN : PREFIX_LEN + length]
    body = _padded_words(body_bytes)
    tags = np.ascontiguousarray(ciphertexts[:, PREFIX_LEN + length :]).view("<u8").astype(np.uint64)
    ok = np.all(_sim_tags(kw, header_words, counters, body) == tags, axis=1) & (nonce_ids == header_words)
    plain = (body ^ _sim_stream(kw, _nonce_words(header_words, counters), body.shape[1])).astype("<u8")
    return plain.view(np.uint8)[:, :length], ok
