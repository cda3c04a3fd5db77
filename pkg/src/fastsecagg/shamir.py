"""Multi-secret Shamir sharing, the quadratic-cost baseline.

The ``S_count`` secrets are the low coefficients of a polynomial of degree
``S_count + T_count - 1`` whose remaining coefficients are uniform masks.
Shares are evaluations at distinct non-zero points. Any ``S_count + T_count``
shares determine the polynomial; reconstruction uses plain Lagrange
interpolation in Python integers, so its cost grows quadratically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParams, TooManySecrets
from .fastshare import collect_shares
from .gf import FieldCtx, find_field, is_prime


@dataclass(frozen=True)
class ShamirParams:
    N: int
    S_count: int
    T_count: int
    q: int
    eval_points: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.S_count < 1 or self.T_count < 0 or self.S_count + self.T_count > self.N:
            raise DegenerateParams("need 1 <= S_count and S_count + T_count <= N")
        if not is_prime(self.q):
            raise DegenerateParams(f"q={self.q} is not prime")
        if not self.eval_points:
            if self.q <= self.N:
                raise DegenerateParams(f"q={self.q} leaves fewer than N non-zero points")
            object.__setattr__(self, "eval_points", tuple(range(1, self.N + 1)))
        pts = [p % self.q for p in self.eval_points]
        if len(pts) != self.N or len(set(pts)) != self.N or 0 in pts:
            raise DegenerateParams("eval_points must be N distinct non-zero field elements")

    @property
    def threshold(self) -> int:
        """Shares needed to reconstruct."""
        return self.S_count + self.T_count

    @property
    def dropout_tolerance(self) -> int:
        return self.N - self.threshold

    @property
    def ctx(self) -> FieldCtx:
        return FieldCtx(q=self.q, N=1, omega=1)


def shamir_params(N: int, S_count: int, T_count: int, q: int | None = None) -> ShamirParams:
    """Parameters with points ``1..N``; by default ``q`` is the first prime above N."""
    if q is None:
        q = find_field(1, N + 1)
    return ShamirParams(N, S_count, T_count, q)


def vandermonde(params: ShamirParams) -> np.ndarray:
    ctx = params.ctx
    k = params.threshold
    rows = [ctx.powers(p, k) for p in params.eval_points]
    return ctx.asarray(rows)


def shamir_share(s, params: ShamirParams, rng: np.random.Generator | None = None, masks=None) -> np.ndarray:
    """Shares of ``s`` (shape ``(..., <=S_count)``); ``X[..., i]`` goes to client i."""
    ctx = params.ctx
    s = ctx.asarray(s)
    if s.ndim == 0:
        s = s.reshape(1)
    if s.shape[-1] > params.S_count:
        raise TooManySecrets(f"{s.shape[-1]} secrets but only {params.S_count} slots")
    batch = s.shape[:-1]
    if masks is None:
        masks = ctx.random(rng, batch + (params.T_count,))
    coeffs = ctx.zeros(batch + (params.threshold,))
    coeffs[..., : s.shape[-1]] = s
    coeffs[..., params.S_count :] = ctx.asarray(masks)
    return ctx.matmul(coeffs, vandermonde(params).T)


def lagrange_coefficients(xs: list[int], q: int, keep: int) -> list[list[int]]:
    """``C[j][i]`` = coefficient of ``x**i`` in the j-th Lagrange basis polynomial.

    Only the lowest ``keep`` coefficients are produced. Cost is O(k**2) for
    ``k = len(xs)`` points, all in Python integers.
    """
    k = len(xs)
    # master polynomial M(x) = prod (x - x_j), low degree first
    master = [1]
    for xj in xs:
        nxt = [0] * (len(master) + 1)
        for i, c in enumerate(master):
            nxt[i] = (nxt[i] - xj * c) % q
            nxt[i + 1] = (nxt[i + 1] + c) % q
        master = nxt
    out = []
    for j, xj in enumerate(xs):
        denom = 1
        for m, xm in enumerate(xs):
            if m != j:
                denom = denom * (xj - xm) % q
        w = pow(denom, -1, q)
        # M(x) / (x - xj) from the low end: Q0 = -M0/xj, Qi = (Q(i-1) - Mi)/xj
        xinv = pow(xj, -1, q)
        row = []
        prev = 0
        for i in range(min(keep, k)):
            prev = (prev - master[i]) * xinv % q
            row.append(prev * w % q)
        out.append(row)
    return out


def shamir_recon(shares, params: ShamirParams):
    """First ``S_count`` coefficients from any ``S_count + T_count`` shares, else ``None``."""
    ctx = params.ctx
    X, erased = collect_shares(shares, params.N, ctx)
    present = np.flatnonzero(~erased)
    k = params.threshold
    if len(present) < k:
        return None
    use = [int(i) for i in present[:k]]
    xs = [params.eval_points[i] % params.q for i in use]
    coeffs = lagrange_coefficients(xs, params.q, params.S_count)
    q = params.q
    if X.ndim == 1:
        ys = [int(X[i]) for i in use]
        return ctx.asarray(
            [sum(ys[j] * coeffs[j][t] for j in range(k)) % q for t in range(params.S_count)]
        )
    return ctx.matmul(X[..., use], ctx.asarray(coeffs))
