"""Executable privacy checks for FastShare.

Shares are a linear image ``X = G [s; m]`` of the secrets ``s`` and masks
``m``, where ``G`` keeps the DFT columns of the non-zero signal positions
(secret columns first, mask columns after). A coalition ``P`` learns nothing
about ``s`` exactly when ``rank(G_P) == rank(G2_P)``: the secret columns add
no rank beyond what uniform masks already cover.

The sampled audit is a falsification tool. It can find a leaking coalition but
cannot certify that none exists, except in the exhaustive mode on small N.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import SpaceTooLarge
from .fastshare import fast_share
from .layout import SchemeParams

MAX_SPACE = 31**4


@dataclass(frozen=True)
class GeneratorMatrix:
    G: np.ndarray  # (N, K)
    S_count: int
    columns: tuple[int, ...]  # signal position behind each column

    @property
    def G1(self) -> np.ndarray:
        return self.G[:, : self.S_count]

    @property
    def G2(self) -> np.ndarray:
        return self.G[:, self.S_count :]

    @property
    def K(self) -> int:
        return self.G.shape[1]


def build_generator(params: SchemeParams) -> GeneratorMatrix:
    """``G[j, c] = omega**(j * pos_c)`` over the secret then mask positions."""
    sets = params.sets
    columns = tuple(sets.S) + tuple(sets.M)
    ctx = params.ctx
    table = ctx.powers(ctx.omega, params.N)
    j = np.arange(params.N)[:, None]
    G = table[(j * np.array(columns)[None, :]) % params.N]
    return GeneratorMatrix(G, len(sets.S), columns)


def gf_rank(A: np.ndarray, q: int) -> int:
    """Rank over GF(q) by Gaussian elimination."""
    A = np.array(A, dtype=object if q >= 1 << 31 else np.int64) % q
    rows, cols = A.shape if A.ndim == 2 else (0, 0)
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        pivots = np.flatnonzero(A[rank:, col] % q) + rank
        if len(pivots) == 0:
            continue
        p = int(pivots[0])
        if p != rank:
            A[[rank, p]] = A[[p, rank]]
        inv = pow(int(A[rank, col]), -1, q)
        A[rank] = (A[rank] * inv) % q
        others = np.flatnonzero(A[:, col] % q)
        others = others[others != rank]
        if len(others):
            A[others] = (A[others] - A[others, col][:, None] * A[rank][None, :]) % q
        rank += 1
    return rank


def rank_condition(params: SchemeParams, P, gen: GeneratorMatrix | None = None) -> bool:
    """True when coalition ``P`` learns nothing about the secrets."""
    P = sorted(set(int(i) for i in P))
    if not P:
        return True
    gen = gen or build_generator(params)
    q = params.q
    return gf_rank(gen.G[P], q) == gf_rank(gen.G2[P], q)


@dataclass
class AuditReport:
    params: dict
    subsets_checked: int
    failures: list[list[int]]
    tv_distance: float | None = None
    mode: str = "sampled"

    @property
    def passed(self) -> bool:
        return not self.failures and not self.tv_distance

    def to_dict(self) -> dict:
        return {
            "params": self.params,
            "subsets_checked": self.subsets_checked,
            "failures": self.failures,
            "tv_distance": self.tv_distance,
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def audit_sampled(params: SchemeParams, size: int, samples: int, rng: np.random.Generator) -> AuditReport:
    """Check ``samples`` uniformly random coalitions of the given size."""
    gen = build_generator(params)
    failures = []
    for _ in range(samples):
        P = sorted(rng.choice(params.N, size, replace=False).tolist())
        if not rank_condition(params, P, gen):
            failures.append(P)
    return AuditReport(params.to_dict(), samples, failures)


def audit_exhaustive(params: SchemeParams, max_size: int, limit: int = 200_000) -> AuditReport:
    """Check every coalition with ``1 <= |P| <= max_size``."""
    total = sum(math.comb(params.N, k) for k in range(1, max_size + 1))
    if total > limit:
        raise SpaceTooLarge(f"{total} coalitions exceed the limit of {limit}")
    gen = build_generator(params)
    failures = []
    for k in range(1, max_size + 1):
        for P in itertools.combinations(range(params.N), k):
            if not rank_condition(params, P, gen):
                failures.append(list(P))
    return AuditReport(params.to_dict(), total, failures, mode="exhaustive")


def find_breach(params: SchemeParams, rng: np.random.Generator, tries: int = 50, max_extra: int | None = None):
    """Smallest coalition size above T_count at which a random coalition leaks.

    Returns ``(size, P)`` for the first leaking coalition found, or ``None``.
    Leakage is monotone in ``P``, so each random ordering is bisected for the
    shortest leaking prefix.
    """
    gen = build_generator(params)
    start = params.T_count + 1
    stop = params.N if max_extra is None else min(params.N, params.T_count + max_extra)
    best = None
    for _ in range(tries):
        order = rng.permutation(params.N).tolist()
        if rank_condition(params, order[:stop], gen):
            continue
        lo, hi = start - 1, stop  # prefix lo is safe (or below start), prefix hi leaks
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if rank_condition(params, order[:mid], gen):
                lo = mid
            else:
                hi = mid
        if best is None or hi < best[0]:
            best = (hi, sorted(order[:hi]))
    return best


# --- exact distribution test ---------------------------------------------------


def restricted_distributions(params: SchemeParams, s, coalitions, max_space: int = MAX_SPACE) -> list[dict]:
    """Histograms of the shares seen by each coalition, over every mask assignment.

    The shares of ``s`` are computed once for all ``q**|M|`` mask vectors and
    then restricted to each coalition in turn.
    """
    q = params.q
    n_masks = len(params.sets.M)
    space = q**n_masks
    if space > max_space:
        raise SpaceTooLarge(f"mask space q**{n_masks} = {space} exceeds {max_space}")
    masks = np.stack(np.unravel_index(np.arange(space), (q,) * n_masks), axis=-1).astype(np.int64)
    secrets = np.broadcast_to(np.asarray(s, dtype=np.int64), (space, len(s)))
    X = fast_share(secrets, params, masks=masks)
    out = []
    for P in coalitions:
        P = sorted(set(int(i) for i in P))
        view = X[:, P]
        if q ** len(P) >= 1 << 62:
            out.append(dict(Counter(tuple(int(v) for v in row) for row in view)))
            continue
        codes = (view.astype(np.int64) * (q ** np.arange(len(P), dtype=np.int64))).sum(axis=1)
        keys, counts = np.unique(codes, return_counts=True)
        out.append({int(k): int(c) for k, c in zip(keys, counts)})
    return out


def restricted_distribution(params: SchemeParams, s, P, max_space: int = MAX_SPACE) -> dict:
    """Histogram of the shares seen by ``P`` over every mask assignment."""
    return restricted_distributions(params, s, [P], max_space)[0]


def total_variation(p: dict, r: dict) -> float:
    """Exact TV distance between two histograms over the same total mass."""
    from fractions import Fraction

    total = sum(p.values())
    diff = sum(abs(p.get(k, 0) - r.get(k, 0)) for k in set(p) | set(r))
    return float(Fraction(diff, 2 * total))


def empirical_privacy_test(
    params: SchemeParams,
    trials: int = 1,
    rng: np.random.Generator | None = None,
    P=None,
    s=None,
    s_prime=None,
    max_space: int = MAX_SPACE,
) -> AuditReport:
    """Largest exact TV distance between the share views of two secret blocks.

    Each trial fixes a coalition (size T_count unless ``P`` is given) and two
    secret blocks, enumerates every mask assignment and compares the exact
    distributions of the coalition's shares.
    """
    rng = rng or np.random.default_rng(0)
    q = params.q
    worst = 0.0
    failures = []
    for _ in range(trials):
        coalition = P if P is not None else rng.choice(params.N, params.T_count, replace=False).tolist()
        a = s if s is not None else rng.integers(0, q, params.S_count).tolist()
        b = s_prime if s_prime is not None else rng.integers(0, q, params.S_count).tolist()
        tv = total_variation(
            restricted_distribution(params, a, coalition, max_space),
            restricted_distribution(params, b, coalition, max_space),
        )
        if tv > 0:
            failures.append(sorted(int(i) for i in coalition))
        worst = max(worst, tv)
    return AuditReport(params.to_dict(), trials, failures, tv_distance=worst, mode="exact-distribution")
