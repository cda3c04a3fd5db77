"""Finite-field DFT of composite length N = n0 * n1 (gcd(n0, n1) = 1).

The transform uses the Good-Thomas prime-factor mapping: the length-N signal
is re-indexed onto an ``n0 x n1`` grid, transformed along each axis with
``omega**n1`` and ``omega**n0`` respectively, and read back through the CRT.
Each axis transform is a vectorised mixed-radix Cooley-Tukey recursion that
bottoms out in a dense kernel for prime (or tiny) lengths, so non-smooth
factors cost O(n_i**2) per line.

All transforms act on the last axis and broadcast over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from .errors import HasErasures, LengthMismatch, NotDivisor
from .gf import FieldCtx

DENSE_CUTOFF = 8
DENSE_N = 512  # whole-length transforms up to this size use one matrix product


@dataclass
class ShareVector:
    """Frequency-domain vector with an optional erasure mask (True = missing)."""

    coeffs: np.ndarray
    erased: np.ndarray | None = None

    def __post_init__(self):
        if self.erased is not None:
            self.erased = np.asarray(self.erased, dtype=bool)
            if self.erased.shape != (np.shape(self.coeffs)[-1],):
                raise LengthMismatch("erasure mask length differs from vector length")

    @property
    def has_erasures(self) -> bool:
        return self.erased is not None and bool(self.erased.any())

    def __len__(self):
        return np.shape(self.coeffs)[-1]


def _smallest_factor(n: int) -> int:
    for p in range(2, int(n**0.5) + 1):
        if n % p == 0:
            return p
    return n


@lru_cache(maxsize=512)
def _dense_matrix(q: int, n: int, root: int, object_dtype: bool) -> np.ndarray:
    powers = [1] * n
    for k in range(1, n):
        powers[k] = powers[k - 1] * root % q
    idx = np.outer(np.arange(n), np.arange(n)) % n
    table = np.array(powers, dtype=object if object_dtype else np.int64)
    return table[idx]


@lru_cache(maxsize=32)
def _dense_float(q: int, n: int, root: int) -> np.ndarray:
    return _dense_matrix(q, n, root, False).astype(np.float64)


@lru_cache(maxsize=512)
def _twiddles(q: int, p: int, m: int, root: int, object_dtype: bool) -> np.ndarray:
    powers = [1] * (p * m)
    for k in range(1, p * m):
        powers[k] = powers[k - 1] * root % q
    idx = np.outer(np.arange(p), np.arange(m))
    table = np.array(powers, dtype=object if object_dtype else np.int64)
    return table[idx]


def dft_axis(x: np.ndarray, root: int, ctx: FieldCtx) -> np.ndarray:
    """Length-n DFT along the last axis, ``X_k = sum_i root**(i*k) x_i``.

    ``root`` must have multiplicative order exactly ``n``.
    """
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    q = ctx.q
    obj = ctx.dtype is object
    p = _smallest_factor(n)
    if p == n or n <= DENSE_CUTOFF:
        return ctx.matmul(x, _dense_matrix(q, n, root, obj))
    m = n // p
    # x[t*p + r] -> sub[..., r, t]; transform each decimated stream with root**p.
    sub = np.swapaxes(x.reshape(x.shape[:-1] + (m, p)), -1, -2)
    sub = dft_axis(sub, pow(root, p, q), ctx)
    sub = (sub * _twiddles(q, p, m, root, obj)) % q
    # butterfly of length p across r, output index k2 of k = k1 + m*k2
    out = dft_axis(np.swapaxes(sub, -1, -2), pow(root, m, q), ctx)
    return np.swapaxes(out, -1, -2).reshape(x.shape)


@lru_cache(maxsize=128)
def _gt_maps(N: int, n0: int, n1: int) -> tuple[np.ndarray, np.ndarray]:
    i0 = np.arange(n0)[:, None]
    i1 = np.arange(n1)[None, :]
    in_map = (n1 * i0 + n0 * i1) % N  # grid cell -> time index
    k = np.arange(N)
    out_map = (k % n0) * n1 + (k % n1)  # frequency index -> flattened grid cell
    return in_map, out_map


def good_thomas(x: np.ndarray, root: int, n0: int, n1: int, ctx: FieldCtx) -> np.ndarray:
    """Length-(n0*n1) DFT with ``root`` via the prime-factor mapping."""
    N = n0 * n1
    in_map, out_map = _gt_maps(N, n0, n1)
    grid = x[..., in_map]
    grid = dft_axis(grid, pow(root, n0, ctx.q), ctx)
    grid = np.swapaxes(dft_axis(np.swapaxes(grid, -1, -2), pow(root, n1, ctx.q), ctx), -1, -2)
    return grid.reshape(x.shape[:-1] + (N,))[..., out_map]


def default_split(N: int) -> tuple[int, int]:
    """Coprime split N = n0 * n1 with n0 <= n1 and n0 as close to sqrt(N) as possible."""
    best = (1, N)
    for d in range(1, int(N**0.5) + 1):
        if N % d == 0 and gcd(d, N // d) == 1:
            best = (d, N // d)
    return best


def _check_length(x: np.ndarray, ctx: FieldCtx) -> None:
    if x.ndim == 0 or x.shape[-1] != ctx.N:
        raise LengthMismatch(f"expected length {ctx.N}, got {x.shape[-1] if x.ndim else 0}")


def _transform(x: np.ndarray, root: int, ctx: FieldCtx, split) -> np.ndarray:
    N, q = ctx.N, ctx.q
    if N <= DENSE_N and ctx.dtype is not object and N * (q - 1) ** 2 < 1 << 53:
        # short transforms: one floating-point BLAS product is exact and fastest
        return (x.astype(np.float64) @ _dense_float(q, N, root)).astype(np.int64) % q
    n0, n1 = split or default_split(N)
    return good_thomas(x, root, n0, n1, ctx)


def dft(x, ctx: FieldCtx, split: tuple[int, int] | None = None) -> np.ndarray:
    """``X_j = sum_i omega**(i*j) x_i`` along the last axis."""
    x = ctx.asarray(x)
    _check_length(x, ctx)
    return _transform(x, ctx.omega, ctx, split)


def idft(X, ctx: FieldCtx, split: tuple[int, int] | None = None) -> np.ndarray:
    """``x_i = N**-1 sum_j omega**(-i*j) X_j``; refuses vectors with erasures."""
    if isinstance(X, ShareVector):
        if X.has_erasures:
            raise HasErasures("cannot invert a share vector with erased coordinates")
        X = X.coeffs
    X = ctx.asarray(X)
    _check_length(X, ctx)
    return (_transform(X, ctx.omega_inv, ctx, split) * ctx.n_inv) % ctx.q


def naive_dft(x, ctx: FieldCtx, root: int | None = None) -> list[int]:
    """Direct double loop over Python ints; the reference oracle for tests."""
    q = ctx.q
    root = ctx.omega if root is None else root
    vals = [int(v) % q for v in x]
    n = len(vals)
    return [sum(pow(root, i * j, q) * vals[i] for i in range(n)) % q for j in range(n)]


def subsample_alias_check(x, n: int, ctx: FieldCtx) -> bool:
    """Check the aliasing identity for the period-``n`` subsampled signal.

    The length-(N/n) DFT of ``x[::n]`` (generated by ``omega**n``) must equal
    ``n**-1`` times the stride-(N/n) aliased sums of the full spectrum.
    """
    N = ctx.N
    if n < 1 or N % n:
        raise NotDivisor(f"{n} does not divide {N}")
    x = ctx.asarray(x)
    _check_length(x, ctx)
    q = ctx.q
    m = N // n
    lhs = naive_dft(x[::n], ctx, root=pow(ctx.omega, n, q))
    X = dft(x, ctx)
    aliased = [int(sum(int(X[i]) for i in range(j, N, m)) % q) for j in range(m)]
    rhs = [v * ctx.small_inv(n) % q for v in aliased]
    return lhs == rhs
