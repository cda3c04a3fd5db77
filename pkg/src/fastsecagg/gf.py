"""Prime-field arithmetic over GF(q) and primitive-root discovery.

Only prime moduli are supported. Scalars are plain Python ints in ``[0, q)``;
bulk data lives in numpy arrays. For ``q < 2**31`` arrays use ``int64`` (every
product of two canonical elements fits in 63 bits); larger moduli fall back to
``object`` arrays of Python ints, which keeps arithmetic exact up to the
64-bit range at a speed cost.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DivideByZero, NoRootFound, NotPrime, OrderMismatch, SearchExhausted

INT64_LIMIT = 1 << 31
FIND_FIELD_CEILING = 1 << 62


def is_prime(n: int) -> bool:
    from sympy import isprime

    return bool(isprime(n))


def _prime_factors(n: int) -> list[int]:
    from sympy import factorint

    return sorted(factorint(n))


def find_generator(q: int, limit: int = 10_000) -> int:
    """Smallest generator of GF(q)* found by trial over small candidates."""
    if q == 2:
        return 1
    order = q - 1
    cofactors = [order // p for p in _prime_factors(order)]
    for g in range(2, min(q, limit)):
        if all(pow(g, c, q) != 1 for c in cofactors):
            return g
    raise NoRootFound(f"no generator of GF({q})* below {limit}")


def multiplicative_order(a: int, q: int) -> int:
    """Order of ``a`` in GF(q)*, from the factorisation of q - 1."""
    a %= q
    if a == 0:
        raise DivideByZero("0 has no multiplicative order")
    order = q - 1
    for p in _prime_factors(q - 1):
        while order % p == 0 and pow(a, order // p, q) == 1:
            order //= p
    return order


@dataclass(frozen=True)
class FieldCtx:
    """GF(q) together with a primitive N-th root of unity ``omega``."""

    q: int
    N: int
    omega: int
    n_inv_cache: tuple[int, ...] = field(default=(), repr=False, compare=False)

    @property
    def dtype(self):
        return np.int64 if self.q < INT64_LIMIT else object

    @cached_property
    def omega_inv(self) -> int:
        return self.inv(self.omega)

    @cached_property
    def n_inv(self) -> int:
        return self.inv(self.N % self.q)

    def small_inv(self, k: int) -> int:
        """Inverse of the integer ``k``; cached for ``1 <= k < len(n_inv_cache)``."""
        if 0 < k < len(self.n_inv_cache):
            return self.n_inv_cache[k]
        return self.inv(k % self.q)

    # --- scalar arithmetic ------------------------------------------------

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        return (-a) % self.q

    def inv(self, a: int) -> int:
        a %= self.q
        if a == 0:
            raise DivideByZero(f"0 has no inverse in GF({self.q})")
        return pow(a, -1, self.q)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.q)
        return pow(a % self.q, e, self.q)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value % self.q, self.q)

    # --- array arithmetic -------------------------------------------------

    def asarray(self, values) -> np.ndarray:
        if self.dtype is object:
            arr = np.array(values, dtype=object)
            flat = [int(v) % self.q for v in arr.ravel()]
            out = np.empty(len(flat), dtype=object)
            out[:] = flat
            return out.reshape(arr.shape)
        return np.asarray(values, dtype=np.int64) % self.q

    def zeros(self, shape) -> np.ndarray:
        if self.dtype is object:
            out = np.empty(shape, dtype=object)
            out.fill(0)
            return out
        return np.zeros(shape, dtype=np.int64)

    def random(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.dtype is object:
            flat = [int(v) for v in rng.integers(0, self.q, size=int(np.prod(shape)), dtype=np.uint64)]
            out = np.empty(len(flat), dtype=object)
            out[:] = flat
            return out.reshape(shape)
        return rng.integers(0, self.q, size=shape, dtype=np.int64)

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``(a @ b) mod q`` without int64 overflow."""
        if self.dtype is object:
            return (a @ b) % self.q
        bound = b.shape[0] * (self.q - 1) ** 2
        if bound < 1 << 53:  # exact in double precision, and BLAS is fast
            return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.int64) % self.q
        if bound < 1 << 63:
            return (a @ b) % self.q
        if b.shape[0] >= 1 << 16:
            raise ValueError("inner dimension too large for limb-split matmul")
        lo = b & 0xFFFF
        hi = b >> 16
        return ((((a @ hi) % self.q) << 16) + a @ lo) % self.q

    def pow_array(self, a: np.ndarray, e: int) -> np.ndarray:
        q = self.q
        result = self.zeros(np.shape(a)) + 1
        base = np.asarray(a) % q
        while e:
            if e & 1:
                result = (result * base) % q
            base = (base * base) % q
            e >>= 1
        return result

    def inv_array(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a) % self.q
        if np.any(a == 0):
            raise DivideByZero("array contains 0")
        return self.pow_array(a, self.q - 2)

    def prod(self, a: np.ndarray, axis: int = -1) -> np.ndarray:
        """Product along ``axis`` by pairwise folding (log depth)."""
        a = np.moveaxis(np.asarray(a), axis, -1)
        q = self.q
        while a.shape[-1] > 1:
            n = a.shape[-1]
            half = n // 2
            folded = (a[..., :half] * a[..., half : 2 * half]) % q
            if n % 2:
                folded = np.concatenate([folded, a[..., 2 * half :]], axis=-1)
            a = folded
        if a.shape[-1] == 0:
            return self.zeros(a.shape[:-1]) + 1
        return a[..., 0]

    def powers(self, base: int, n: int) -> np.ndarray:
        """``[base**0, ..., base**(n-1)]`` as an array."""
        out = [1] * n
        for k in range(1, n):
            out[k] = out[k - 1] * base % self.q
        return self.asarray(out) if self.dtype is object else np.array(out, dtype=np.int64)


@dataclass(frozen=True)
class FieldElement:
    """A canonical element of GF(q) with operator overloads."""

    value: int
    q: int

    def __post_init__(self):
        if not 0 <= self.value < self.q:
            raise ValueError(f"{self.value} is not canonical in GF({self.q})")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.q != self.q:
                raise ValueError("elements from different fields")
            return other.value
        return int(other) % self.q

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.q, self.q)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.q, self.q)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.q, self.q)

    def __mul__(self, other):
        return FieldElement(self.value * self._coerce(other) % self.q, self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.q, self.q)

    def inv(self) -> "FieldElement":
        if self.value == 0:
            raise DivideByZero(f"0 has no inverse in GF({self.q})")
        return FieldElement(pow(self.value, -1, self.q), self.q)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.q).inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        return FieldElement(pow(self.value, e, self.q), self.q)

    def __int__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.q == other.q and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.q
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.q))


def field_new(q: int, N: int, small: int = 64) -> FieldCtx:
    """Build GF(q) with a primitive ``N``-th root of unity.

    The root is ``g ** ((q - 1) // N)`` for the smallest generator ``g``.
    """
    if q < 2 or not is_prime(q):
        raise NotPrime(f"{q} is not prime")
    if N < 1 or (q - 1) % N:
        raise OrderMismatch(f"N={N} does not divide q-1={q - 1}")
    g = find_generator(q)
    omega = pow(g, (q - 1) // N, q)
    if N > 1 and any(pow(omega, (N // p), q) == 1 for p in _prime_factors(N)):
        raise NoRootFound(f"derived omega={omega} is not a primitive {N}-th root")
    cache = tuple([0] + [pow(k, -1, q) for k in range(1, min(small, q - 1) + 1)])
    return FieldCtx(q=q, N=N, omega=omega, n_inv_cache=cache)


def find_field(N: int, min_q: int = 2, ceiling: int = FIND_FIELD_CEILING) -> int:
    """Smallest prime ``q >= min_q`` with ``q = 1 (mod N)``."""
    if N < 1:
        raise ValueError("N must be positive")
    k = max(1, -(-(min_q - 1) // N))
    q = k * N + 1
    while q <= ceiling:
        if is_prime(q):
            return q
        q += N
    raise SearchExhausted(f"no prime = 1 mod {N} in [{min_q}, {ceiling}]")
