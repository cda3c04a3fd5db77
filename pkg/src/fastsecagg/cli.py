"""Command-line entry point: ``fastsecagg <command> [options]``.

Commands: ``params``, ``share``, ``recon``, ``simulate``, ``audit``, ``bench``.
Exit codes: 0 success, 1 configuration error, 2 protocol abort or failed
reconstruction, 3 audit failure.

Share file layout (all integers little endian)::

    magic   4 bytes  b"FSSH"
    version u8       1
    digest  32 bytes sha256 of the canonical parameter JSON
    width   u8       bytes per field element
    blocks  u32      number of secret blocks
    count   u32      number of secrets before block padding
    blocks share vectors, each: u32 n | n * width element bytes | ceil(n/8) erasure bitmap
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import re
import struct
import sys

import numpy as np

from . import __version__
from .errors import FastSecAggError, LengthMismatch, ProtocolAbort
from .layout import PARAMS_SCHEMA, make_params, params_from_dict

log = logging.getLogger("fastsecagg")

SHARE_MAGIC = b"FSSH"
SHARE_VERSION = 1
SHARE_HEADER = struct.Struct("<4sB32sBII")

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_AUDIT = 0, 1, 2, 3


class CliError(Exception):
    """A configuration problem, reported as ``path:line: message``."""


# --- config files ----------------------------------------------------------------


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _blame(path: str, text: str, data: dict, exc: Exception) -> CliError:
    msg = str(exc)
    for key in data:
        if re.search(r"\b%s\b" % re.escape(key), msg):
            return CliError(f"{path}:{_key_line(text, key)}: {msg}")
    return CliError(f"{path}:1: {msg}")


def load_json(path: str) -> tuple[dict, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise CliError(f"{path}:1: expected a JSON object")
    return data, text


def load_params(path: str, **overrides):
    """Strictly parsed scheme parameters; ``overrides`` fill keys the file leaves out."""
    data, text = load_json(path)
    if "schema" in data and data["schema"] != PARAMS_SCHEMA:
        raise CliError(f"{path}:{_key_line(text, 'schema')}: unsupported schema {data['schema']!r}")
    merged = {**{k: v for k, v in overrides.items() if v is not None}, **data}
    try:
        return params_from_dict(merged)
    except (FastSecAggError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, KeyError):
            exc = CliError(f"missing field {exc.args[0]}")
        raise _blame(path, text, data, exc) from exc


def params_from_args(args, **extra):
    if args.params:
        return load_params(args.params, **extra)
    scheme = {k: getattr(args, k) for k in ("N", "n0", "n1", "alpha", "beta", "delta0", "delta1", "q", "variant")}
    scheme = {k: v for k, v in scheme.items() if v is not None}
    scheme.update({k: v for k, v in extra.items() if v is not None and k not in scheme})
    try:
        return make_params(**scheme)
    except (FastSecAggError, TypeError, ValueError) as exc:
        raise CliError(f"<args>:1: {exc}") from exc


def parse_int_list(text: str | None) -> list[int]:
    if not text:
        return []
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise CliError(f"<args>:1: expected comma separated integers, got {text!r}") from exc


# --- output ------------------------------------------------------------------------


def _flatten(d, prefix: str = "") -> dict:
    out = {}
    items = sorted(d.items()) if isinstance(d, dict) else enumerate(d)
    for k, v in items:
        key = f"{prefix}{k}"
        if isinstance(v, (dict, list, tuple)) and v:
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(doc).items():
        w.writerow([k, v])
    return buf.getvalue()


def emit(doc: dict, args) -> None:
    text = render(doc, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- share files -----------------------------------------------------------------


def params_digest(params) -> bytes:
    return hashlib.sha256(params.to_json().encode()).digest()


def write_share_file(path: str, params, shares: np.ndarray, count: int, erased=None) -> None:
    from .fastshare import encode_share_vector
    from .protocol import share_dtype

    width = share_dtype(params.q).itemsize
    shares = np.atleast_2d(shares)
    parts = [SHARE_HEADER.pack(SHARE_MAGIC, SHARE_VERSION, params_digest(params), width, len(shares), count)]
    parts += [encode_share_vector(row, erased, width) for row in shares]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def read_share_file(path: str, params):
    """``(shares (blocks, N), erased (N,), count)``; a cell erased in any block counts as erased."""
    from .fastshare import decode_share_vector

    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}") from exc
    if len(data) < SHARE_HEADER.size:
        raise CliError(f"{path}: truncated header")
    magic, version, digest, width, blocks, count = SHARE_HEADER.unpack_from(data)
    if magic != SHARE_MAGIC or version != SHARE_VERSION:
        raise CliError(f"{path}: not a version {SHARE_VERSION} share file")
    if digest != params_digest(params):
        raise CliError(f"{path}: shares were made under different parameters")
    offset = SHARE_HEADER.size
    rows, erased = [], np.zeros(params.N, dtype=bool)
    try:
        for _ in range(blocks):
            vec, offset = decode_share_vector(data, offset, width)
            if len(vec.coeffs) != params.N:
                raise LengthMismatch(f"vector of length {len(vec.coeffs)}, expected {params.N}")
            rows.append(vec.coeffs)
            erased |= vec.erased
    except (LengthMismatch, struct.error) as exc:
        raise CliError(f"{path}: {exc}") from exc
    return params.ctx.asarray(rows).reshape(blocks, params.N), erased, count


# --- commands ----------------------------------------------------------------------


def cmd_params(args) -> int:
    params = params_from_args(args)
    doc = {"params": params.to_dict(), "summary": params.summary()}
    if args.sets:
        doc["sets"] = params.sets.to_dict()
    emit(doc, args)
    return EXIT_OK


def cmd_share(args) -> int:
    from .fastshare import fast_share
    from .protocol import partition

    params = params_from_args(args)
    rng = np.random.default_rng(args.seed)
    secrets = parse_int_list(args.secrets)
    if not secrets:
        secrets = params.ctx.random(rng, (params.S_count,)).tolist()
    if any(not 0 <= s < params.q for s in secrets):
        raise CliError(f"<args>:1: secrets must lie in [0, {params.q})")
    shares = fast_share(partition(np.array(secrets, dtype=np.int64), params.S_count), params, rng)
    write_share_file(args.share_file, params, shares, len(secrets))
    emit({"share_file": args.share_file, "blocks": len(shares), "count": len(secrets), "N": params.N, "q": params.q}, args)
    return EXIT_OK


def cmd_recon(args) -> int:
    from .fastshare import fast_recon

    params = params_from_args(args)
    shares, erased, count = read_share_file(args.share_file, params)
    for i in parse_int_list(args.erase):
        if not 0 <= i < params.N:
            raise CliError(f"<args>:1: erased index {i} outside [0, {params.N})")
        erased[i] = True
    if args.erase_random:
        rng = np.random.default_rng(args.seed)
        alive = np.flatnonzero(~erased)
        erased[rng.choice(alive, size=min(args.erase_random, len(alive)), replace=False)] = True
    present = {int(i): shares[:, i] for i in np.flatnonzero(~erased)}
    out = fast_recon(present, params)
    doc = {"erased": np.flatnonzero(erased).tolist(), "N": params.N}
    if out is None:
        doc["abort"] = "reconstruction failed: erasure pattern does not peel"
        emit(doc, args)
        return EXIT_ABORT
    doc["secrets"] = [int(v) for v in np.asarray(out).ravel()[:count]]
    emit(doc, args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .protocol import ProtocolConfig, Trace
    from .simnet import SimConfig, parse_dropouts, run_campaign, run_trial

    params = params_from_args(args)
    pinned = args.q is not None or (args.params and "q" in load_json(args.params)[0])
    min_q = params.N * (args.R - 1) + 1
    if params.q < min_q and not pinned:  # widen the field so sums of inputs stay exact
        params = make_params(
            params.n0, params.n1, alpha=params.alpha, beta=params.beta, delta0=params.delta0,
            delta1=params.delta1, variant=params.variant, c=params.c, J=params.J, min_q=min_q,
        )
    try:
        pc = ProtocolConfig(params, args.L, args.R, args.lam, args.backend, args.D_max)
        cfg = SimConfig(
            pc,
            tuple(parse_dropouts(args.dropouts or "")),
            input_gen=args.inputs,
            input_file=args.input_file,
            trials=args.trials,
            seed=args.seed,
            tamper=args.tamper,
            overload=not args.enforce_budget,
        )
    except FastSecAggError as exc:
        raise CliError(f"<args>:1: {exc}") from exc
    if args.trials == 1:
        trace = Trace() if args.trace else None
        outcome = run_trial(cfg, 0, trace)
        if trace is not None:
            with open(args.trace, "wb") as fh:
                fh.write(trace.to_bytes())
        doc = outcome.canonical()
        if not args.full:
            doc.pop("result")
            doc.pop("ground_truth")
        emit(doc, args)
        return EXIT_ABORT if outcome.abort else EXIT_OK
    report = run_campaign(cfg, progress=lambda t, o: log.info("trial %d: %s", t, o.abort or "ok"))
    emit(report.to_dict(), args)
    return EXIT_ABORT if report.aborts else EXIT_OK


def cmd_audit(args) -> int:
    from .audit import audit_exhaustive, audit_sampled, empirical_privacy_test

    params = params_from_args(args)
    rng = np.random.default_rng(args.seed)
    try:
        if args.mode == "exhaustive":
            report = audit_exhaustive(params, args.size or params.T_count)
        elif args.mode == "exact":
            report = empirical_privacy_test(params, args.samples, rng)
        else:
            report = audit_sampled(params, args.size or params.T_count, args.samples, rng)
    except FastSecAggError as exc:
        raise CliError(f"<args>:1: {exc}") from exc
    emit(report.to_dict(), args)
    return EXIT_OK if report.passed else EXIT_AUDIT


def cmd_bench(args) -> int:
    from .simnet import bench_scaling

    sizes = parse_int_list(args.sizes)
    schemes = ("fastshare", "shamir") if args.scheme == "both" else (args.scheme,)
    doc = {s: bench_scaling(sizes, s, runs=args.runs, seed=args.seed) for s in schemes}
    emit(doc, args)
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def _scheme_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scheme (ignored when --params is given)")
    g.add_argument("--params", metavar="FILE", help="scheme parameter JSON")
    g.add_argument("--N", type=int, help="number of clients; the grid split is chosen automatically")
    g.add_argument("--n0", type=int)
    g.add_argument("--n1", type=int)
    g.add_argument("--alpha", default="1/2")
    g.add_argument("--beta", default="1/4")
    g.add_argument("--delta0", default="1/10")
    g.add_argument("--delta1")
    g.add_argument("--q", type=int, help="field prime; default is the smallest valid one")
    g.add_argument("--variant", choices=("product", "row"), default="product")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="unsigned 64-bit seed")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="fastsecagg", description="FastShare secret sharing and FastSecAgg simulation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", parents=[common], help="derive S, T, D, the field and the index sets")
    _scheme_flags(p)
    p.add_argument("--sets", action="store_true", help="also print the index sets")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("share", parents=[common], help="share secrets into a share file")
    _scheme_flags(p)
    p.add_argument("share_file")
    p.add_argument("--secrets", help="comma separated field elements; default is one random block")
    p.set_defaults(func=cmd_share)

    p = sub.add_parser("recon", parents=[common], help="reconstruct secrets from a share file")
    _scheme_flags(p)
    p.add_argument("share_file")
    p.add_argument("--erase", help="comma separated client indices to drop")
    p.add_argument("--erase-random", type=int, default=0, metavar="K", help="drop K more clients at random")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("simulate", parents=[common], help="run the aggregation protocol with dropouts")
    _scheme_flags(p)
    p.add_argument("--L", type=int, default=1000, help="input length per client")
    p.add_argument("--R", type=int, default=256, help="inputs lie in [0, R)")
    p.add_argument("--lam", type=int, default=128, choices=(128, 192, 256))
    p.add_argument("--backend", choices=("x25519", "sim"), default="x25519")
    p.add_argument("--D-max", dest="D_max", type=int, help="dropout budget; default D_count")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--dropouts", metavar="SPEC", help='round:amount pairs, e.g. "2:12" or "0:0.05,2:3"')
    p.add_argument("--inputs", choices=("uniform", "constant", "file"), default="uniform")
    p.add_argument("--input-file", help=".npy array of shape (N, L)")
    p.add_argument("--tamper", type=int, default=0, help="corrupt this many delivered ciphertexts")
    p.add_argument("--enforce-budget", action="store_true", help="reject dropout specs above D_max")
    p.add_argument("--trace", metavar="PATH", help="write the message trace of a single trial")
    p.add_argument("--full", action="store_true", help="include result vectors in single-trial output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("audit", parents=[common], help="privacy audit of a parameter set")
    _scheme_flags(p)
    p.add_argument("--mode", choices=("sampled", "exhaustive", "exact"), default="sampled")
    p.add_argument("--size", type=int, help="coalition size (max size when exhaustive); default T_count")
    p.add_argument("--samples", type=int, default=500, help="coalitions (sampled) or trials (exact)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("bench", parents=[common], help="reconstruction time against N")
    p.add_argument("--sizes", default="240,525,1056,1980,4032,8190")
    p.add_argument("--scheme", choices=("fastshare", "shamir", "both"), default="both")
    p.add_argument("--runs", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    if not 0 <= args.seed < 1 << 64:
        print("error: <args>:1: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolAbort as exc:
        print(f"abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except FastSecAggError as exc:
        print(f"error: <args>:1: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
