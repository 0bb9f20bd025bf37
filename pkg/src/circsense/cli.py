"""Command-line entry point: ``circsense <subcommand> [flags]``.

Exit status is 0 on success, 2 on invalid input and 3 when any solver run
fails to converge (the CSV is still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import harness
from .analysis import COHERENCE_CSV_HEADER, chirp_coherence, coherence
from .constructions import MatrixFormatError, chirp_matrix, legendre_partial_circulant, save_matrix
from .numtheory import check_prime, primes_in_range
from .quantization import QUANTIZATION_CSV_HEADER, assemble_one_stage
from .solver import RECOVERY_CSV_HEADER, SUCCESS_DB, SolverConfig, basis_pursuit, snr

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED = 0, 2, 3
CONSTRUCTIONS = ("legendre", "bernoulli", "devore", "chirp", "random-legendre")

log = logging.getLogger("circsense")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _alpha(text):
    try:
        num, den = (int(t) for t in text.split("/"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NUM/DEN, got {text!r}") from None
    if den <= 0 or num <= 0 or num >= den:
        raise argparse.ArgumentTypeError("alpha must satisfy 0 < NUM/DEN < 1")
    return num, den


def _int_range(text):
    """``LO:HI`` or ``LO:HI:STEP``, inclusive of ``HI``."""
    parts = text.replace("-", ":").split(":") if ":" in text or "-" in text[1:] else [text, text]
    try:
        nums = [int(t) for t in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI[:STEP], got {text!r}") from None
    if len(nums) not in (2, 3) or nums[0] > nums[1] or (len(nums) == 3 and nums[2] < 1):
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return nums[0], nums[1], nums[2] if len(nums) == 3 else 1


def _construction(text):
    if text in CONSTRUCTIONS or (text.startswith("file:") and len(text) > 5):
        return text
    raise argparse.ArgumentTypeError(f"unknown construction {text!r}")


def _primes(args, default=None):
    if args.p is not None:
        return [check_prime(args.p)]
    if args.p_range is not None:
        lo, hi, _ = args.p_range
        primes = primes_in_range(lo, hi)
        if not primes:
            raise ValueError(f"no primes in [{lo}, {hi}]")
        return primes
    if default is None:
        raise ValueError("one of --p or --p-range is required")
    return list(default)


def _ks(args, default):
    if args.k is not None:
        return [args.k]
    if args.k_range is not None:
        lo, hi, step = args.k_range
        return list(range(lo, hi + 1, step))
    return list(default)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _trial_path(out, name):
    out = Path(out)
    tag = name.replace(":", "_").replace("/", "_")
    return out.with_name(f"{out.stem}.{tag}.trials.csv")


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header.split(",") if isinstance(header, str) else header)
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- commands


def cmd_gen(args):
    p = check_prime(args.p)
    name = args.construction or "legendre"
    if name == "chirp":
        A = chirp_matrix(p)
    elif name == "legendre":
        A = legendre_partial_circulant(p, *args.alpha, floor=args.floor_m)
    else:
        A = harness.build_matrix(name, p, n=args.n, alpha=args.alpha, floor_m=args.floor_m, seed=args.seed)
    if args.out is None:
        raise ValueError("gen needs --out")
    save_matrix(A, args.out)
    return EXIT_OK


def cmd_render(args):
    if args.out is None:
        raise ValueError("render needs --out")
    harness.render_matrix(check_prime(args.p), args.out, args.alpha, args.floor_m)
    return EXIT_OK


def cmd_coherence(args):
    name = args.construction or "legendre"
    rows = []
    for p in _primes(args):
        if name == "legendre":
            rep = coherence(legendre_partial_circulant(p, *args.alpha, floor=args.floor_m))
        elif name == "chirp":
            rep = chirp_coherence(p)
        else:
            A = harness.build_matrix(name, p, n=args.n, alpha=args.alpha, floor_m=args.floor_m, seed=args.seed)
            rep = coherence(A, p=p)
        rows.append(rep.csv_row())
    _emit(COHERENCE_CSV_HEADER + "\n" + "".join(r + "\n" for r in rows), args.out)
    return EXIT_OK


def cmd_recover(args):
    p = check_prime(args.p)
    name = args.construction or "legendre"
    A = harness.build_matrix(name, p, n=args.n, alpha=args.alpha, floor_m=args.floor_m, seed=args.seed)
    n = A.shape[1]
    cfg = SolverConfig()
    rows, failed = [], 0
    for k in _ks(args, [1]):
        for trial in range(args.trials):
            rng = harness.substream(args.seed, harness.ADHOC, p, k, trial, 0)
            x, _ = harness.sparse_signal(rng, n, k)
            res = basis_pursuit(A, A @ x, cfg)
            value = snr(x, res.x)
            failed += not res.converged
            rows.append([trial, k, p, A.shape[0], repr(value), int(value > SUCCESS_DB), res.iterations])
    _emit(_rows_csv(RECOVERY_CSV_HEADER, rows), args.out)
    return EXIT_NONCONVERGED if failed else EXIT_OK


def cmd_quantize(args):
    p = check_prime(args.p)
    M = legendre_partial_circulant(p, *args.alpha, floor=args.floor_m)
    rows = []
    for k in _ks(args, [1]):
        for trial in range(args.trials):
            rng = harness.substream(args.seed, harness.ADHOC, p, k, trial, 0)
            x, _ = harness.sparse_signal(rng, p, k)
            prob = assemble_one_stage(
                M, x, args.r, args.delta, levels=args.levels, epsilon=args.epsilon,
                rng=harness.substream(args.seed, harness.ADHOC, p, k, trial, 2),
            )
            rows.append(prob.run.csv_row())
    _emit(QUANTIZATION_CSV_HEADER + "\n" + "".join(r + "\n" for r in rows), args.out)
    return EXIT_OK


def _spec(args, name, primes, ks, constructions, **overrides):
    kw = dict(
        experiment=name,
        primes=primes,
        ks=ks,
        trials=args.trials,
        seed=args.seed,
        constructions=tuple(constructions),
        n=args.n,
        alpha=args.alpha,
        floor_m=args.floor_m,
        r=args.r,
        delta=args.delta,
        levels=args.levels,
        epsilon=args.epsilon,
        workers=args.workers,
    )
    kw.update(overrides)
    return harness.ExperimentSpec(**kw)


def _finish(report, args, per_trial=True):
    _emit(report.to_csv(), args.out)
    if per_trial and args.out is not None and report.trials:
        for name in dict.fromkeys(t.construction for t in report.trials):
            _trial_path(args.out, name).write_text(report.trials_csv(name))
    for key, value in report.summary.items():
        log.info("%s = %s", key, value)
    if report.nonconverged:
        log.warning("%d solver runs did not converge", report.nonconverged)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_exp1(args):
    constructions = [args.construction] if args.construction else ["legendre"]
    primes = _primes(args, primes_in_range(71, 1193))
    return _finish(harness.exp1_coherence_sweep(_spec(args, "exp1", primes, [], constructions)), args)


def cmd_exp2(args):
    constructions = [args.construction] if args.construction else ["legendre", "bernoulli", "devore"]
    spec = _spec(args, "exp2", _primes(args, [997]), _ks(args, range(2, 103, 4)), constructions,
                 n=args.n or 300)
    return _finish(harness.exp2_success_vs_sparsity(spec), args)


def cmd_exp3(args):
    constructions = [args.construction] if args.construction else ["legendre", "bernoulli"]
    spec = _spec(args, "exp3", _primes(args, primes_in_range(41, 293)), _ks(args, [10, 20]), constructions,
                 n=args.n or 40, floor_m=True)
    return _finish(harness.exp3_success_vs_p(spec), args)


def cmd_exp4(args):
    trials = 50 if args.full_trials else args.trials
    spec = _spec(args, "exp4", _primes(args, primes_in_range(113, 197)), [], ["legendre"],
                 n=args.n or 100, trials=trials)
    return _finish(harness.exp4_max_sparsity(spec), args)


def cmd_expq(args):
    spec = _spec(args, "expq", _primes(args, [101, 211, 401, 809, 1601]), _ks(args, [3]), ["legendre"])
    return _finish(harness.exp_quantized(spec), args, per_trial=False)


COMMANDS = {
    "gen": (cmd_gen, "write a measurement matrix to a text file"),
    "render": (cmd_render, "render the sign pattern as a PBM bitmap"),
    "coherence": (cmd_coherence, "coherence per prime"),
    "recover": (cmd_recover, "basis-pursuit recovery trials"),
    "quantize": (cmd_quantize, "sigma-delta quantization runs"),
    "exp1": (cmd_exp1, "coherence sweep with log-log slope"),
    "exp2": (cmd_exp2, "success fraction versus sparsity"),
    "exp3": (cmd_exp3, "success fraction versus p"),
    "exp4": (cmd_exp4, "maximal recoverable sparsity versus p"),
    "expq": (cmd_expq, "one-stage quantized recovery error versus p"),
}


def build_parser():
    parser = _ArgumentParser(prog="circsense", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        grp = sp.add_mutually_exclusive_group()
        grp.add_argument("--p", type=int)
        grp.add_argument("--p-range", type=_int_range, metavar="LO:HI")
        sp.add_argument("--alpha", type=_alpha, default=(3, 4), metavar="NUM/DEN")
        sp.add_argument("--floor-m", action="store_true", help="use floor(p**alpha) rows")
        kgrp = sp.add_mutually_exclusive_group()
        kgrp.add_argument("--k", type=int)
        kgrp.add_argument("--k-range", type=_int_range, metavar="LO:HI[:STEP]")
        sp.add_argument("--n", type=int, help="signal length (columns kept)")
        sp.add_argument("--trials", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--construction", type=_construction, metavar="{%s,file:<path>}" % ",".join(CONSTRUCTIONS))
        sp.add_argument("--r", type=int, default=2)
        sp.add_argument("--delta", type=float, default=0.05)
        sp.add_argument("--levels", type=int)
        sp.add_argument("--epsilon", type=float, default=0.0)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", metavar="PATH")
        if name == "exp4":
            sp.add_argument("--full-trials", action="store_true", help="50 trials per level")
    return parser


def _validate(args):
    if args.trials < 1:
        raise ValueError("--trials must be >= 1")
    if args.seed < 0:
        raise ValueError("--seed must be non-negative")
    if args.k is not None and args.k < 0:
        raise ValueError("--k must be non-negative")
    if not 0 <= args.r <= 3:
        raise ValueError("--r must be in 0..3")
    if args.delta <= 0 or args.epsilon < 0:
        raise ValueError("need --delta > 0 and --epsilon >= 0")
    if args.levels is not None and args.levels < 1:
        raise ValueError("--levels must be >= 1")
    if args.workers < 1:
        raise ValueError("--workers must be >= 1")
    if args.command in ("gen", "render", "recover", "quantize") and args.p is None:
        raise ValueError(f"{args.command} needs --p")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    warnings.simplefilter("default")
    np.seterr(all="ignore")
    try:
        _validate(args)
        return COMMANDS[args.command][0](args)
    except (ValueError, MatrixFormatError, OSError, OverflowError) as exc:
        print(f"circsense {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
