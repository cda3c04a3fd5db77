"""CRT grid indexing, scheme parameters and the index sets of the signal.

A flat index ``j`` in ``[0, N)`` sits at grid cell ``(a, b) = (j mod n0, j mod
n1)``. The signal is zero on Z0 (low ``a`` rows) and, for the product-code
variant, on Z1 (low ``b`` columns); secrets occupy S, and everything else
carries uniform masks. T is the block of mask cells used when arguing privacy.

All fractional boundaries are floored. The geometric S region is then
truncated, in secret order, to the closed-form secret count; truncated cells
become masks. Counts reported by :class:`SchemeParams` are read off the
constructed sets where a set exists.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Literal

from .errors import DegenerateParams, OutOfRange
from .fft import default_split
from .gf import FieldCtx, field_new, find_field

Variant = Literal["product", "row"]
PARAMS_SCHEMA = "fastsecagg.params/1"


def as_fraction(value) -> Fraction:
    """Exact rational from a Fraction, int, float or string like ``"1/10"``."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1_000_000)
    return Fraction(value)


def _floor(x: Fraction) -> int:
    return math.floor(x)


@dataclass(frozen=True)
class GridIndex:
    a: int
    b: int
    flat: int


@dataclass(frozen=True)
class IndexSets:
    """Flat-index sets; ``S`` is listed in secret order, the rest ascending."""

    Z0: tuple[int, ...]
    Z1: tuple[int, ...]
    S: tuple[int, ...]
    T: tuple[int, ...]
    M: tuple[int, ...]

    @property
    def zeros(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.Z0) | set(self.Z1)))

    def to_dict(self) -> dict:
        return {name: list(getattr(self, name)) for name in ("Z0", "Z1", "S", "T", "M")}


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of one FastShare instance, with its field."""

    n0: int
    n1: int
    alpha: Fraction
    beta: Fraction
    delta0: Fraction
    delta1: Fraction | None
    variant: Variant
    ctx: FieldCtx
    c: Fraction = Fraction(1)
    J: int | None = None

    @property
    def N(self) -> int:
        return self.n0 * self.n1

    @property
    def q(self) -> int:
        return self.ctx.q

    @property
    def omega(self) -> int:
        return self.ctx.omega

    @property
    def k0(self) -> int:
        """Zero rows, i.e. erasures a length-n0 line can absorb."""
        return _floor(self.delta0 * self.n0)

    @property
    def k1(self) -> int:
        return _floor(self.delta1 * self.n1) if self.variant == "product" else 0

    @property
    def iterations(self) -> int:
        return self.J if self.J is not None else self.n0 + self.n1

    # --- closed-form counts ----------------------------------------------

    @property
    def formula_counts(self) -> tuple[int, int, int]:
        a, b, d0, N = self.alpha, self.beta, self.delta0, self.N
        if self.variant == "product":
            d1 = self.delta1
            s = (1 - a) * (1 - 2 * b) * (1 - d0) * (1 - d1) * N
            t = a * b * (1 - d0) * (1 - d1) * N
            d = (1 - (1 - d0) * (1 - d1)) * N / 2
        else:
            s = (1 - a) * (1 - b) * (1 - d0) * N
            t = a * b * (1 - d0) * N
            d = d0 * N
        return _floor(s), _floor(t), _floor(d)

    @property
    def S_count(self) -> int:
        return len(self.sets.S)

    @property
    def T_count(self) -> int:
        return self.formula_counts[1]

    @property
    def D_count(self) -> int:
        return self.formula_counts[2]

    @property
    def K(self) -> int:
        """Number of non-zero signal positions (secrets plus masks)."""
        return self.N - len(self.sets.zeros)

    # --- grid -------------------------------------------------------------

    @cached_property
    def _crt_coeffs(self) -> tuple[int, int]:
        n0, n1 = self.n0, self.n1
        e0 = n1 * pow(n1, -1, n0) if n0 > 1 else 0
        e1 = n0 * pow(n0, -1, n1) if n1 > 1 else 0
        return e0, e1

    def crt_encode(self, flat: int) -> GridIndex:
        if not 0 <= flat < self.N:
            raise OutOfRange(f"flat index {flat} outside [0, {self.N})")
        return GridIndex(flat % self.n0, flat % self.n1, flat)

    def crt_decode(self, a: int, b: int) -> int:
        if not (0 <= a < self.n0 and 0 <= b < self.n1):
            raise OutOfRange(f"cell ({a}, {b}) outside {self.n0}x{self.n1} grid")
        e0, e1 = self._crt_coeffs
        return (a * e0 + b * e1) % self.N

    @cached_property
    def sets(self) -> IndexSets:
        return build_sets(self)

    @cached_property
    def S_idx(self):
        import numpy as np

        return np.array(self.sets.S, dtype=np.int64)

    @cached_property
    def M_idx(self):
        import numpy as np

        return np.array(self.sets.M, dtype=np.int64)

    # --- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "schema": PARAMS_SCHEMA,
            "variant": self.variant,
            "n0": self.n0,
            "n1": self.n1,
            "alpha": str(self.alpha),
            "beta": str(self.beta),
            "delta0": str(self.delta0),
            "q": self.q,
            "omega": self.omega,
        }
        if self.variant == "product":
            d["delta1"] = str(self.delta1)
        else:
            d["c"] = str(self.c)
        if self.J is not None:
            d["J"] = self.J
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def summary(self) -> dict:
        s, t, d = self.formula_counts
        sets = self.sets
        return {
            "N": self.N,
            "n0": self.n0,
            "n1": self.n1,
            "q": self.q,
            "omega": self.omega,
            "variant": self.variant,
            "S_count": self.S_count,
            "T_count": self.T_count,
            "D_count": self.D_count,
            "formula": {"S": s, "T": t, "D": d},
            "set_sizes": {k: len(v) for k, v in sets.to_dict().items()},
            "K": self.K,
            "line_capacity": [self.k0, self.k1] if self.variant == "product" else [self.k0],
            "J": self.iterations,
        }


PARAM_KEYS = {"schema", "variant", "n0", "n1", "N", "alpha", "beta", "delta0", "delta1", "q", "omega", "c", "J"}


def params_from_dict(d: dict) -> SchemeParams:
    unknown = set(d) - PARAM_KEYS
    if unknown:
        raise DegenerateParams(f"unknown parameter fields: {sorted(unknown)}")
    params = make_params(
        n0=d.get("n0"),
        n1=d.get("n1"),
        N=d.get("N"),
        alpha=d["alpha"],
        beta=d["beta"],
        delta0=d["delta0"],
        delta1=d.get("delta1"),
        variant=d.get("variant", "product"),
        q=d.get("q"),
        c=d.get("c", 1),
        J=d.get("J"),
    )
    if "omega" in d and d["omega"] != params.omega:
        ctx = FieldCtx(q=params.q, N=params.N, omega=int(d["omega"]), n_inv_cache=params.ctx.n_inv_cache)
        if pow(ctx.omega, params.N, ctx.q) != 1:
            raise DegenerateParams("omega is not an N-th root of unity")
        from .gf import multiplicative_order

        if multiplicative_order(ctx.omega, ctx.q) != params.N:
            raise DegenerateParams("omega is not a primitive N-th root of unity")
        params = SchemeParams(
            params.n0, params.n1, params.alpha, params.beta, params.delta0, params.delta1,
            params.variant, ctx, params.c, params.J,
        )
    return params


def row_code_split(N: int, c=1, min_n0: int = 4) -> tuple[int, int]:
    """Coprime split whose ``n0`` is closest to ``max(min_n0, ceil(c * log2 N))``.

    Ties go to the larger ``n0``; ``n0 < n1`` and ``n0 >= min_n0`` always hold.
    """
    target = max(min_n0, math.ceil(as_fraction(c) * math.log2(N)))
    options = [
        d for d in range(min_n0, math.isqrt(N) + 1)
        if N % d == 0 and d < N // d and math.gcd(d, N // d) == 1
    ]
    if not options:
        raise DegenerateParams(f"N={N} has no coprime split with {min_n0} <= n0 < n1")
    d = min(options, key=lambda d: (abs(d - target), -d))
    return d, N // d


def make_params(
    n0: int | None = None,
    n1: int | None = None,
    *,
    N: int | None = None,
    alpha,
    beta,
    delta0,
    delta1=None,
    variant: Variant = "product",
    q: int | None = None,
    min_q: int | None = None,
    c=1,
    J: int | None = None,
) -> SchemeParams:
    """Validate fractions, pick the grid split and field, and build the sets."""
    if variant not in ("product", "row"):
        raise DegenerateParams(f"unknown variant {variant!r}")
    alpha, beta, delta0 = as_fraction(alpha), as_fraction(beta), as_fraction(delta0)
    if variant == "product":
        if delta1 is None:
            delta1 = delta0
        delta1 = as_fraction(delta1)
    else:
        delta1 = None

    if n0 is None or n1 is None:
        if N is None:
            raise DegenerateParams("give either N or both n0 and n1")
        n0, n1 = default_split(N) if variant == "product" else row_code_split(N, c)
    elif N is not None and N != n0 * n1:
        raise DegenerateParams(f"N={N} but n0*n1={n0 * n1}")
    n0, n1 = int(n0), int(n1)
    if n0 < 2 or n1 < 2:
        raise DegenerateParams("need n0, n1 >= 2")
    if math.gcd(n0, n1) != 1:
        raise DegenerateParams(f"n0={n0} and n1={n1} are not coprime")
    if n0 >= n1:
        raise DegenerateParams("need n0 < n1")

    def _open_unit(name, value, hi=Fraction(1)):
        if not 0 < value < hi:
            raise DegenerateParams(f"{name}={value} must lie in (0, {hi})")

    _open_unit("alpha", alpha)
    _open_unit("beta", beta, Fraction(1, 2) if variant == "product" else Fraction(1))
    _open_unit("delta0", delta0)
    if delta1 is not None:
        _open_unit("delta1", delta1)

    total = n0 * n1
    if q is None:
        q = find_field(total, min_q if min_q is not None else total + 1)
    ctx = field_new(int(q), total, small=max(n0, n1))
    params = SchemeParams(n0, n1, alpha, beta, delta0, delta1, variant, ctx, as_fraction(c), J)
    params.sets  # noqa: B018 -- build eagerly so bad parameters fail here
    s, t, d = params.formula_counts
    if params.S_count + t + d >= total:
        raise DegenerateParams(f"S+T+D={params.S_count + t + d} must be below N={total}")
    return params


def build_sets(params: SchemeParams) -> IndexSets:
    n0, n1 = params.n0, params.n1
    a_, b_, d0 = params.alpha, params.beta, params.delta0
    k0 = params.k0
    a_split = _floor(d0 * n0 + a_ * (1 - d0) * n0)  # first secret row
    cell = params.crt_decode

    if params.variant == "product":
        d1 = params.delta1
        k1 = params.k1
        b_lo = _floor(d1 * n1 + b_ * (1 - d1) * n1)
        b_hi = _floor(d1 * n1 + (1 - b_) * (1 - d1) * n1)
        s_cols = range(b_lo, b_hi + 1)
        t_cols = range(b_hi, n1)
    else:
        k1 = 0
        b_split = _floor((1 - b_) * n1)
        s_cols = range(0, b_split + 1)
        t_cols = range(b_split, n1)

    Z0 = sorted(cell(a, b) for a in range(k0) for b in range(n1))
    Z1 = sorted(cell(a, b) for a in range(n0) for b in range(k1))
    s_target, t_target, _ = params.formula_counts
    S = [cell(a, b) for a in range(max(a_split, k0), n0) for b in s_cols if b >= k1][:s_target]
    T = sorted([cell(a, b) for a in range(k0, a_split) for b in t_cols if b >= k1][:t_target])

    if not Z0 or (params.variant == "product" and not Z1):
        raise DegenerateParams("a zero set is empty; increase delta so delta_i * n_i >= 1")
    if not S:
        raise DegenerateParams("no secret positions; S_count = 0")
    if not T:
        raise DegenerateParams("the privacy block T is empty")
    taken = set(Z0) | set(Z1) | set(S)
    M = sorted(set(range(params.N)) - taken)
    return IndexSets(tuple(Z0), tuple(Z1), tuple(S), tuple(T), tuple(M))
