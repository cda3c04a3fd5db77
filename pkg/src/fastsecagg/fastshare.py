"""FFT-based multi-secret sharing and its peeling reconstruction.

Shares are the spectrum of a signal holding zeros, secrets and masks. Seen on
the CRT grid, every line of shares ``X[u * N/n_i + c]`` (``u = 0..n_i-1``) is a
codeword of a generalised Reed-Solomon code: divided by the evaluation point
``z_u = omega**(-u*N/n_i)`` it is a polynomial of degree below
``n_i - k_i`` evaluated at ``z_u``, where ``k_i`` is the number of zero rows
(or columns) in that direction. A line with at most ``k_i`` erasures is
therefore repaired by Lagrange interpolation, and alternating passes over the
two directions peel away erasures until none remain or no line makes progress.

``fast_recon`` returns ``None`` (the failure symbol) when peeling stalls.
"""

from __future__ import annotations

import struct
from collections.abc import Mapping
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import HasErasures, InconsistentRow, LengthMismatch, TooManyErasures, TooManySecrets
from .fft import ShareVector, _transform, idft
from .gf import FieldCtx
from .layout import SchemeParams

ELEMENT_WIDTH = 8


def _fft_split(params: SchemeParams) -> tuple[int, int]:
    return params.n0, params.n1


def build_signal(s, params: SchemeParams, masks, reduced: bool = False) -> np.ndarray:
    """Place secrets on S, masks on M and zeros elsewhere (last axis = N).

    ``reduced`` marks ``masks`` as already lying in ``[0, q)``.
    """
    ctx = params.ctx
    sets = params.sets
    s = ctx.asarray(s)
    batch = s.shape[:-1]
    if s.shape[-1] > params.S_count:
        raise TooManySecrets(f"{s.shape[-1]} secrets but only {params.S_count} slots")
    x = ctx.zeros(batch + (params.N,))
    x[..., params.S_idx[: s.shape[-1]]] = s
    if not reduced:
        masks = ctx.asarray(masks)
    if masks.shape != batch + (len(sets.M),):
        raise LengthMismatch(f"expected masks of shape {batch + (len(sets.M),)}, got {masks.shape}")
    x[..., params.M_idx] = masks
    return x


def fast_share(s, params: SchemeParams, rng: np.random.Generator | None = None, masks=None) -> np.ndarray:
    """Share the secrets ``s`` (shape ``(..., <=S_count)``) into N shares.

    Entry ``X[..., i]`` of the result is client ``i``'s share. Fresh uniform
    masks are drawn from ``rng`` unless ``masks`` is supplied.
    """
    s = np.asarray(s)
    if s.ndim == 0:
        s = s.reshape(1)
    drawn = masks is None
    if drawn:
        if rng is None:
            raise ValueError("fast_share needs an rng or explicit masks")
        masks = params.ctx.random(rng, s.shape[:-1] + (len(params.sets.M),))
    x = build_signal(s, params, masks, reduced=drawn)
    return _transform(x, params.ctx.omega, params.ctx, _fft_split(params))


# --- line geometry -------------------------------------------------------------


@dataclass(frozen=True)
class LineFamily:
    """All lines ``X[u * stride + c]`` of one direction, with their code data."""

    positions: np.ndarray  # (lines, length) flat share indices
    capacity: int  # erasures a line can absorb
    points: np.ndarray  # (length,) evaluation points z_u
    point_inv: np.ndarray  # (length,) z_u ** -1
    inv_diff: np.ndarray  # (length, length) 1/(z_t - z_u), diagonal 1
    check: np.ndarray  # (length, capacity) parity-check matrix omega**(-u*v*stride)


def _line_family(ctx: FieldCtx, N: int, length: int, capacity: int) -> LineFamily:
    stride = N // length
    q = ctx.q
    u = np.arange(length)
    positions = u[None, :] * stride + np.arange(stride)[:, None]
    root_inv = pow(ctx.omega_inv, stride, q)  # primitive length-th root
    points = ctx.powers(root_inv, length)
    point_inv = ctx.powers(pow(ctx.omega, stride, q), length)
    diff = (points[:, None] - points[None, :]) % q
    np.fill_diagonal(diff, 1)
    inv_diff = ctx.inv_array(diff)
    np.fill_diagonal(inv_diff, 1)
    exps = (np.outer(u, np.arange(capacity)) % length).astype(np.int64)
    check = points[exps] if capacity else ctx.zeros((length, 0))
    return LineFamily(positions, capacity, points, point_inv, inv_diff, check)


@lru_cache(maxsize=64)
def line_families(params: SchemeParams) -> tuple[LineFamily, ...]:
    """Length-n0 lines first (one per ``b``), then length-n1 lines (product code)."""
    ctx, N = params.ctx, params.N
    fams = [_line_family(ctx, N, params.n0, params.k0)]
    if params.variant == "product":
        fams.append(_line_family(ctx, N, params.n1, params.k1))
    return tuple(fams)


def parity_check(X, params: SchemeParams) -> bool:
    """True iff every line satisfies all of its parity constraints."""
    if isinstance(X, ShareVector):
        if X.has_erasures:
            raise HasErasures("parity check needs every coordinate")
        X = X.coeffs
    ctx = params.ctx
    X = ctx.asarray(X)
    if X.shape[-1] != params.N:
        raise LengthMismatch(f"expected {params.N} shares, got {X.shape[-1]}")
    for fam in line_families(params):
        if fam.capacity == 0:
            continue
        syndromes = ctx.matmul(X[..., fam.positions], fam.check)
        if np.any(syndromes):
            return False
    return True


# --- Reed-Solomon erasure decoding ------------------------------------------------


def rs_erasure_decode(values, erased, points, dim: int, ctx: FieldCtx, inv_diff=None) -> np.ndarray:
    """Fill erased coordinates of a Reed-Solomon codeword by interpolation.

    ``values[..., u]`` must equal ``f(points[u])`` for one polynomial ``f`` of
    degree below ``dim`` (the same point set for every leading index). The
    first ``dim`` known coordinates fix ``f``; the remaining known ones are
    checked against it and a mismatch raises :class:`InconsistentRow`.
    """
    q = ctx.q
    values = ctx.asarray(values)
    erased = np.asarray(erased, dtype=bool)
    n = values.shape[-1]
    points = ctx.asarray(points)
    if erased.shape != (n,) or points.shape != (n,):
        raise LengthMismatch("values, erasure mask and points must have equal length")
    n_erased = int(erased.sum())
    if n_erased > n - dim:
        raise TooManyErasures(f"{n_erased} erasures exceed the {n - dim} a length-{n} line can absorb")
    out = values.copy()
    if n_erased == 0:
        return out
    known = np.flatnonzero(~erased)
    base = known[:dim]
    targets = np.setdiff1d(np.arange(n), base)
    diff_tb = (points[targets][:, None] - points[base][None, :]) % q
    if inv_diff is None:
        inv_tb = ctx.inv_array(diff_tb)
        diff_bb = (points[base][:, None] - points[base][None, :]) % q
        np.fill_diagonal(diff_bb, 1)
        inv_bb = ctx.inv_array(diff_bb)
    else:
        inv_tb = inv_diff[np.ix_(targets, base)]
        inv_bb = inv_diff[np.ix_(base, base)].copy()
        np.fill_diagonal(inv_bb, 1)
    full = ctx.prod(diff_tb, axis=-1)  # prod_k (z_t - x_k)
    inv_den = ctx.prod(inv_bb, axis=-1)  # prod_{k != j} 1/(x_j - x_k)
    lagrange = (((full[:, None] * inv_tb) % q) * inv_den[None, :]) % q
    fitted = ctx.matmul(values[..., base], lagrange.T)
    extra = ~erased[targets]
    if np.any(fitted[..., extra] != values[..., targets[extra]]):
        raise InconsistentRow("known coordinates do not lie on a single codeword")
    out[..., targets] = fitted
    return out


# --- reconstruction ------------------------------------------------------------


def collect_shares(shares, N: int, ctx: FieldCtx) -> tuple[np.ndarray, np.ndarray]:
    """Normalise a partial share set to ``(values (..., N), erased (N,))``.

    Accepts a mapping ``client_id -> share``, a :class:`ShareVector` or a
    complete array. Erased positions are zeroed.
    """
    if isinstance(shares, ShareVector):
        X = ctx.asarray(shares.coeffs)
        erased = np.zeros(N, dtype=bool) if shares.erased is None else shares.erased.copy()
    elif isinstance(shares, Mapping):
        ids = sorted(shares)
        if any(not 0 <= i < N for i in ids):
            raise LengthMismatch(f"client ids must lie in [0, {N})")
        if not ids:
            return ctx.zeros((N,)), np.ones(N, dtype=bool)
        vals = ctx.asarray([shares[i] for i in ids])  # (present, ...)
        vals = np.moveaxis(vals, 0, -1)
        X = ctx.zeros(vals.shape[:-1] + (N,))
        X[..., ids] = vals
        erased = np.ones(N, dtype=bool)
        erased[ids] = False
    else:
        X = ctx.asarray(shares)
        erased = np.zeros(N, dtype=bool)
    if X.shape[-1] != N:
        raise LengthMismatch(f"expected {N} share positions, got {X.shape[-1]}")
    X[..., erased] = 0
    return X, erased


def peel(X: np.ndarray, erased: np.ndarray, params: SchemeParams) -> bool:
    """Repair erasures in place by alternating line passes; True when none remain."""
    ctx = params.ctx
    q = ctx.q
    fams = line_families(params)
    for _ in range(params.iterations):
        if not erased.any():
            return True
        progress = False
        for fam in fams:
            length = fam.positions.shape[1]
            counts = erased[fam.positions].sum(axis=1)
            for line in np.flatnonzero((counts > 0) & (counts <= fam.capacity)):
                pos = fam.positions[line]
                gaps = erased[pos]
                scaled = (X[..., pos] * fam.point_inv) % q
                fixed = rs_erasure_decode(scaled, gaps, fam.points, length - fam.capacity, ctx, fam.inv_diff)
                X[..., pos[gaps]] = (fixed[..., gaps] * fam.points[gaps]) % q
                erased[pos] = False
                progress = True
        if not progress:
            break
    return not erased.any()


def fast_recon(shares, params: SchemeParams):
    """Recover the secrets from a partial share set, or ``None`` on failure.

    ``shares`` is a mapping ``client_id -> share`` (each share a scalar or a
    vector over blocks), a :class:`ShareVector`, or a complete array. All
    blocks share one erasure pattern, so peeling succeeds or fails for all of
    them together.
    """
    X, erased = collect_shares(shares, params.N, params.ctx)
    if not peel(X, erased, params):
        return None
    x = idft(X, params.ctx, split=_fft_split(params))
    return x[..., params.S_idx]


# --- wire format -----------------------------------------------------------------


def encode_share_vector(values, erased=None, width: int = ELEMENT_WIDTH) -> bytes:
    """``u32 length | length * width-byte LE elements | erasure bitmap``."""
    vals = [int(v) for v in np.asarray(values).ravel()]
    n = len(vals)
    mask = np.zeros(n, dtype=bool) if erased is None else np.asarray(erased, dtype=bool)
    if mask.shape != (n,):
        raise LengthMismatch("erasure mask length differs from vector length")
    body = b"".join((0 if m else v).to_bytes(width, "little") for v, m in zip(vals, mask))
    bitmap = np.packbits(mask, bitorder="little").tobytes()
    return struct.pack("<I", n) + body + bitmap


def decode_share_vector(data: bytes, offset: int = 0, width: int = ELEMENT_WIDTH) -> tuple[ShareVector, int]:
    (n,) = struct.unpack_from("<I", data, offset)
    offset += 4
    end = offset + n * width
    if len(data) < end + (n + 7) // 8:
        raise LengthMismatch("truncated share vector")
    vals = [int.from_bytes(data[offset + k * width : offset + (k + 1) * width], "little") for k in range(n)]
    bitmap = np.frombuffer(data, dtype=np.uint8, count=(n + 7) // 8, offset=end)
    erased = np.unpackbits(bitmap, bitorder="little")[:n].astype(bool)
    coeffs = np.array(vals, dtype=object if any(v >= 1 << 62 for v in vals) else np.int64)
    return ShareVector(coeffs, erased), end + (n + 7) // 8
