"""Command-line front end: ``betasplit <command> [options]``.

Exit codes: 0 success, 1 a check or verification failed, 2 invalid usage or
parameters, 3 unparseable tree input, 4 size or iteration cap exceeded,
5 I/O failure, 6 numerical precision failure.  Every error is reported as a
single line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator

from .continuous import simulate_continuous
from .generate import IterationCapError, ModelParams, PrecisionError, run_god
from .numerics import DomainError, DrawBuffer, stream
from .oracle import QuadratureError, exact_distribution
from .probability import BetaCase, UnsupportedScaleError, log_prob, log_prob_limit, table1
from .reversal import kernel_row_sums, verify_reversal
from .trees import (
    NewickParseError,
    Resolution,
    TreeValidationError,
    from_newick,
    perm_to_ranked_planar,
    project,
    to_newick,
)
from .verify import run_suites

__all__ = ["main", "build_parser", "RunConfig", "EXIT_CODES", "BLOCK_SIZE"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAP = 4
EXIT_IO = 5
EXIT_PRECISION = 6

EXIT_CODES = {
    "ok": EXIT_OK,
    "check_failed": EXIT_CHECK_FAILED,
    "usage": EXIT_USAGE,
    "parse": EXIT_PARSE,
    "cap": EXIT_CAP,
    "io": EXIT_IO,
    "precision": EXIT_PRECISION,
}

# Replicates are processed in fixed blocks; block k always draws from
# stream(seed, k), so the output does not depend on the worker count.
BLOCK_SIZE = 256
RESIDUAL_TOL = 1e-10
ROW_SUM_TOL = 1e-12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _beta_value(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


_RESOLUTIONS = [r.value for r in Resolution]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="betasplit", description="Beta-splitting random trees: sampling and exact probabilities.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    model = _Parser(add_help=False)
    model.add_argument("--alpha", type=_beta_value, default=None)
    model.add_argument("--beta", type=_beta_value, default=0.0)

    out = _Parser(add_help=False)
    out.add_argument("--format", choices=["csv", "json", "newick"], default="csv")
    out.add_argument("--out", default=None, help="file for per-replicate or per-tree records")

    sampling = _Parser(add_help=False)
    sampling.add_argument("--delta", type=float, default=0.0)
    sampling.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sampling.add_argument("--leaves", type=_count, default=4)
    sampling.add_argument("--reps", type=_count, default=1)
    sampling.add_argument("--seed", type=_seed, required=True)
    sampling.add_argument("--resolution", choices=_RESOLUTIONS, default="ranked-planar")

    sub.add_parser("sample", parents=[model, sampling, out], help="sample trees from the discrete process")

    ct = sub.add_parser("simulate-ct", parents=[model, sampling, out], help="sample continuous-time trees")
    ct.add_argument("--events", type=_count, default=None, help="stop after this many events instead")

    pr = sub.add_parser("prob", parents=[model], help="probability of a given tree")
    src = pr.add_mutually_exclusive_group(required=True)
    src.add_argument("tree", nargs="?", help="Newick or bracket notation")
    src.add_argument("--perm", help="permutation of 1..n-1, comma separated")
    pr.add_argument("--resolution", choices=_RESOLUTIONS, default=None)
    pr.add_argument("--method", choices=["factorized", "enumerate"], default="factorized")
    pr.add_argument("--limit", action="store_true", help="allow beta in {-1, 0, inf} with alpha = beta")

    di = sub.add_parser("dist", parents=[model], help="exact distribution by enumeration (n <= 8)")
    di.add_argument("--leaves", type=_count, default=4)
    di.add_argument("--resolution", choices=_RESOLUTIONS, default="ranked-planar")
    di.add_argument("--format", choices=["csv", "json"], default="csv")
    di.add_argument("--out", default=None)

    tb = sub.add_parser("table1", help="comb and balanced shape probabilities in the limit cases")
    tb.add_argument("--format", choices=["csv", "json"], default="csv")

    rc = sub.add_parser("reverse-check", parents=[model], help="check the backward kernel identity")
    rc.add_argument("--leaves", type=_count, default=5)

    ve = sub.add_parser("verify", help="run the self-check suites")
    ve.add_argument("--level", choices=["fast", "full"], default="fast")
    return p


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ModelParams
    seed: int
    replicates: int
    resolution: Resolution
    fmt: str
    out: str | None
    events: int | None = None


def _alpha(args) -> float:
    return args.beta if args.alpha is None else args.alpha


def _model_params(args) -> ModelParams:
    alpha = _alpha(args)
    for name, v in (("alpha", alpha), ("beta", args.beta)):
        if not (math.isfinite(v) and v > -1):
            raise DomainError(f"{name}={v:g} is outside (-1, inf); limit values are accepted by table1 and prob --limit only")
    return ModelParams(alpha, args.beta, args.delta, args.lam, max(args.leaves, 1))


def _workers() -> int:
    raw = os.environ.get("BETASPLIT_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        v = int(raw)
    except ValueError:
        raise UsageError(f"BETASPLIT_THREADS must be a positive integer, got {raw!r}") from None
    if v < 1:
        raise UsageError(f"BETASPLIT_THREADS must be a positive integer, got {raw!r}")
    return v


SAMPLE_COLUMNS = ["replicate", "outcome", "tree", "leaves", "frozen", "effective_events", "steps"]
CT_COLUMNS = ["replicate", "outcome", "tree", "timed_newick", "total_time", "events"]


def _run_block(cfg: RunConfig, block: int) -> list[dict]:
    draws = DrawBuffer(stream(cfg.seed, block))
    lo = block * BLOCK_SIZE
    hi = min(lo + BLOCK_SIZE, cfg.replicates)
    out = []
    for rep in range(lo, hi):
        if cfg.command == "sample":
            st, outcome = run_god(cfg.params, draws)
            tree = st.tree
            out.append(
                {
                    "replicate": rep,
                    "outcome": outcome,
                    "tree": to_newick(project(tree, cfg.resolution)),
                    "leaves": st.leaf_count,
                    "frozen": st.leaf_count - st.active_count,
                    "effective_events": st.effective_events,
                    "steps": st.steps,
                }
            )
        else:
            if cfg.events is not None:
                tt = simulate_continuous(cfg.params, draws, after_events=cfg.events)
            else:
                tt = simulate_continuous(cfg.params, draws, active_leaves=cfg.params.n)
            out.append(
                {
                    "replicate": rep,
                    "outcome": tt.outcome,
                    "tree": to_newick(project(tt.base, cfg.resolution)),
                    "timed_newick": tt.to_newick(),
                    "total_time": tt.total_time,
                    "events": len(tt.events),
                }
            )
    return out


def _blocks(cfg: RunConfig) -> Iterator[list[dict]]:
    nblocks = -(-cfg.replicates // BLOCK_SIZE)
    workers = min(_workers(), nblocks)
    if workers <= 1:
        for b in range(nblocks):
            yield _run_block(cfg, b)
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves block order whatever the completion order
        yield from pool.map(_run_block, [cfg] * nblocks, range(nblocks))


def _record_text(rec: dict, fmt: str, columns: list[str]) -> str:
    if fmt == "json":
        return json.dumps(rec) + "\n"
    if fmt == "newick":
        return (rec.get("timed_newick") or rec["tree"]) + "\n"
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([rec[c] for c in columns])
    return buf.getvalue()


def _summary(counts: Counter, total: int, fmt: str) -> str:
    rows = sorted(counts.items())
    if fmt == "json":
        return json.dumps(
            {
                "replicates": total,
                "rows": [{"outcome": o, "tree": t, "count": c, "frequency": c / total} for (o, t), c in rows],
            }
        ) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["outcome", "tree", "count", "frequency"])
    for (o, t), c in rows:
        w.writerow([o, t, c, f"{c / total:.6f}"])
    return buf.getvalue()


def _open_out(path: str):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def cmd_sample(cfg: RunConfig, stdout) -> int:
    columns = SAMPLE_COLUMNS if cfg.command == "sample" else CT_COLUMNS
    fh = _open_out(cfg.out) if cfg.out else None
    try:
        if cfg.replicates == 0:
            return EXIT_OK
        if fh is not None and cfg.fmt == "csv":
            fh.write(",".join(columns) + "\n")
        counts: Counter = Counter()
        for block in _blocks(cfg):
            for rec in block:
                counts[(rec["outcome"], rec["tree"])] += 1
                if fh is not None:
                    fh.write(_record_text(rec, cfg.fmt, columns))
        stdout.write(_summary(counts, cfg.replicates, cfg.fmt))
    finally:
        if fh is not None:
            fh.close()
    return EXIT_OK


def _prob_record(t, lp, **extra) -> dict:
    m, e = lp.mantissa_exponent()
    return {
        "tree": to_newick(t),
        "resolution": t.resolution.value,
        **extra,
        "probability": lp.value,
        "log_e": lp.log_value,
        "mantissa": m,
        "exponent10": e,
    }


def _read_tree(args):
    if args.perm is not None:
        try:
            perm = [int(x) for x in args.perm.replace(" ", "").split(",") if x]
            t = perm_to_ranked_planar(perm)
        except (ValueError, TreeValidationError) as exc:
            raise NewickParseError(f"bad permutation: {exc}", args.perm, 0) from None
        return project(t, args.resolution) if args.resolution else t
    return from_newick(args.tree, args.resolution)


def cmd_prob(args, stdout) -> int:
    t = _read_tree(args)
    alpha = _alpha(args)
    if args.limit:
        if alpha != args.beta:
            raise DomainError("--limit needs alpha = beta")
        cases = {-1.0: BetaCase.MINUS_ONE, 0.0: BetaCase.ZERO, math.inf: BetaCase.INFINITY}
        if args.beta not in cases:
            raise DomainError("--limit takes beta in {-1, 0, inf}")
        lp = log_prob_limit(t, cases[args.beta])
        rec = _prob_record(t, lp, alpha="inf" if alpha == math.inf else alpha, beta="inf" if args.beta == math.inf else args.beta)
    else:
        if not (math.isfinite(alpha) and math.isfinite(args.beta) and alpha > -1 and args.beta > -1):
            raise DomainError("alpha and beta must be finite and > -1 (use --limit for -1 or inf)")
        kw = {"method": args.method} if t.resolution in (Resolution.RANKED, Resolution.SHAPE) else {}
        lp = log_prob(t, alpha, args.beta, **kw)
        rec = _prob_record(t, lp, alpha=alpha, beta=args.beta)
    stdout.write(json.dumps(rec) + "\n")
    return EXIT_OK


def _check_finite_params(alpha: float, beta: float) -> None:
    if not (math.isfinite(alpha) and math.isfinite(beta) and alpha > -1 and beta > -1):
        raise DomainError("alpha and beta must be finite and > -1")


def cmd_dist(args, stdout) -> int:
    alpha = _alpha(args)
    _check_finite_params(alpha, args.beta)
    if args.leaves < 1:
        raise DomainError("--leaves must be >= 1")
    dist = exact_distribution(args.leaves, alpha, args.beta, args.resolution)
    if args.format == "csv":
        text = dist.to_csv()
    else:
        rows = []
        for key in sorted(dist.log_probs):
            lr = dist[key]
            m, e = lr.mantissa_exponent()
            rows.append({"encoding": key, "probability_log_e": lr.log_value, "probability_mantissa": m, "probability_exp10": e})
        text = json.dumps(rows) + "\n"
    if args.out:
        with _open_out(args.out) as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return EXIT_OK


_BETA_LABEL = {"minus_one": "-1", "zero": "0", "infinity": "inf"}


def cmd_table1(args, stdout) -> int:
    rows = [
        {
            "beta": _BETA_LABEL[r["beta"]],
            "shape": r["shape"],
            "n": r["n"],
            "mantissa": r["mantissa"],
            "exponent10": r["exponent10"],
            "value": "0" if r["log_e"] == -math.inf else f"{r['mantissa']:.2f}e{r['exponent10']}",
            "log_e": r["log_e"],
        }
        for r in table1()
    ]
    if args.format == "json":
        stdout.write(json.dumps(rows) + "\n")
        return EXIT_OK
    w = csv.writer(stdout, lineterminator="\n")
    w.writerow(list(rows[0]))
    for r in rows:
        w.writerow(list(r.values()))
    return EXIT_OK


def cmd_reverse_check(args, stdout) -> int:
    alpha = _alpha(args)
    _check_finite_params(alpha, args.beta)
    residual = verify_reversal(args.leaves, alpha, args.beta)
    row_err = max(abs(v - 1.0) for v in kernel_row_sums(args.leaves + 1).values())
    ok = residual < RESIDUAL_TOL and row_err < ROW_SUM_TOL
    rec = {"n": args.leaves, "alpha": alpha, "beta": args.beta, "max_residual": residual, "max_row_sum_error": row_err, "passed": ok}
    stdout.write(json.dumps(rec) + "\n")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_verify(args, stdout) -> int:
    results = run_suites(args.level)
    for r in results:
        stdout.write(json.dumps(r.to_dict()) + "\n")
    ok = all(r.passed for r in results)
    stdout.write(json.dumps({"level": args.level, "passed": ok}) + "\n")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _dispatch(args, stdout) -> int:
    if args.command in ("sample", "simulate-ct"):
        if args.command == "sample" and args.leaves < 1:
            raise DomainError("--leaves must be >= 1")
        cfg = RunConfig(
            args.command,
            _model_params(args),
            args.seed,
            args.reps,
            Resolution(args.resolution),
            args.format,
            args.out,
            getattr(args, "events", None),
        )
        return cmd_sample(cfg, stdout)
    handler = {
        "prob": cmd_prob,
        "dist": cmd_dist,
        "table1": cmd_table1,
        "reverse-check": cmd_reverse_check,
        "verify": cmd_verify,
    }[args.command]
    return handler(args, stdout)


def _fail(code: int, msg: str) -> int:
    line = " ".join(str(msg).split())
    sys.stderr.write(f"betasplit: error: {line}\n")
    return code


def main(argv: Iterable[str] | None = None) -> int:
    stdout = sys.stdout
    try:
        args = build_parser().parse_args(None if argv is None else list(argv))
        return _dispatch(args, stdout)
    except UsageError as exc:
        return _fail(EXIT_USAGE, exc)
    except (NewickParseError, TreeValidationError) as exc:
        return _fail(EXIT_PARSE, exc)
    except (UnsupportedScaleError, IterationCapError) as exc:
        return _fail(EXIT_CAP, exc)
    except (PrecisionError, QuadratureError) as exc:
        return _fail(EXIT_PRECISION, exc)
    except (DomainError, ValueError) as exc:
        return _fail(EXIT_USAGE, exc)
    except OSError as exc:
        return _fail(EXIT_IO, exc)


if __name__ == "__main__":
    sys.exit(main())
