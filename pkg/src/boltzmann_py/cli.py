"""
Command-line interface.

    bz oracle SPEC --x X [--class NAME]
    bz sample SPEC --x X [--mode exp|ord] [--count K] [--strategy mixture|invcdf]
    bz check SPEC --x X [--trials T] [--workers W]
    bz tune SPEC --size S
    bz words sample --dfa FILE [--shuffle FILE] --x X [--mode exp|ord]
    bz words count --dfa FILE [--shuffle FILE] [--order N]

SPEC is a .bz specification or a .json automaton, on disk or from the
shipped catalog. Results go to standard output (JSON Lines by default,
pandas text tables with --format text); diagnostics go to standard error.

Exit codes: 0 success, 1 failed check or internal error, 2 divergent
ordinary generating function, 3 invalid input, 4 parameter out of range.
"""

import argparse
import contextlib
import json
import logging
import sys
from typing import Any, Callable, Dict, Iterable, List, Optional, TextIO

import pandas as pd
from pydantic import ValidationError

from . import __version__
from .config import Mode, OutputFormat, RunConfig, resolve_seed
from .errors import (
    BoltzmannError,
    DivergentOGFError,
    EgfDivergentError,
    EmptyLanguageError,
    InconclusiveGrowthError,
    LawDomainError,
    SpecError,
    UnachievableError,
)
from .exp_sampler import SpecTarget
from .loader import BoltzmannLoader
from .oracle import (
    EvalResult,
    Method,
    egf_eval,
    expected_size_eval,
    expected_size_ordinary,
    ogf_eval_adaptive,
    ogf_eval_laplace,
    tune_parameter,
)
from .ord_transform import STRATEGIES, BoltzmannTarget, build_ordinary
from .random_source import RandomSource
from .stats import DIVERGENCE_ERRORS, run_check_suite
from .words import ShuffleLanguage, ShuffleTarget, WordTarget, count_words_matrix, ogf_rational_eval

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_DIVERGENT = 2
EXIT_INVALID_INPUT = 3
EXIT_OUT_OF_RANGE = 4


def exit_code(exc: BaseException) -> int:
    """Exit status for an exception escaping a command"""
    if isinstance(exc, (DivergentOGFError, InconclusiveGrowthError)):
        return EXIT_DIVERGENT
    if isinstance(exc, (SpecError, EmptyLanguageError, FileNotFoundError, IsADirectoryError, UnicodeDecodeError)):
        return EXIT_INVALID_INPUT
    if isinstance(exc, (EgfDivergentError, UnachievableError, LawDomainError, ValidationError)):
        return EXIT_OUT_OF_RANGE
    return EXIT_FAILURE


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


# Output

def _envelope(config: RunConfig) -> Dict[str, Any]:
    return {"seed": config.seed, "config_hash": config.hash, "version": __version__}


def _emit_json(documents: Iterable[Dict[str, Any]], out: TextIO) -> None:
    for document in documents:
        out.write(json.dumps(document, sort_keys=True, ensure_ascii=False) + "\n")


def _emit_table(rows: List[Dict[str, Any]], out: TextIO, header: Optional[str] = None) -> None:
    if header:
        out.write(header + "\n")
    out.write(pd.DataFrame(rows).to_string(index=False) + "\n")


def _header(config: RunConfig) -> str:
    return f"# seed {config.seed}  config {config.hash}  boltzmann-py {__version__}"


# Targets

def load_target(config: RunConfig, loader: Optional[BoltzmannLoader] = None) -> BoltzmannTarget:
    """Specification class, regular language or shuffle product named by the inputs"""
    loader = loader or BoltzmannLoader()
    path = config.inputs[0]
    if path.endswith(".json"):
        dfa = loader.load_dfa(path)
        if len(config.inputs) > 1:
            return ShuffleTarget(ShuffleLanguage(dfa, loader.load_dfa(config.inputs[1])))
        return WordTarget(dfa)
    if len(config.inputs) > 1:
        raise SpecError("--shuffle applies to automata only")
    return SpecTarget(loader.load_spec(path), config.class_name)


def _egf_result(target: BoltzmannTarget, x: float) -> EvalResult:
    if isinstance(target, SpecTarget):
        return egf_eval(target.spec, target.class_name, x)
    value = target.egf_value(x)
    # matrix exponential: rounding only
    return EvalResult(value, 1e-14 * abs(value), Method.CLOSED_FORM)


# Commands

def cmd_oracle(config: RunConfig, out: TextIO) -> int:
    """Generating-function values, growth verdict and leading counts"""
    target = load_target(config)
    x = config.x
    egf = _egf_result(target, x)
    series, coeffs, growth = ogf_eval_adaptive(target.coefficients, x)
    laplace = ogf_eval_laplace(target.egf_value, x, tol=1e-10 * max(series.value, 1.0), rate=growth.rate)
    mean = expected_size_eval(coeffs, growth, x)
    document: Dict[str, Any] = {
        "class": target.name,
        "x": x,
        "egf": egf.to_dict(),
        "ogf_series": series.to_dict(),
        "ogf_laplace": laplace.to_dict(),
        "growth": {"verdict": growth.verdict.value, "R": growth.rate},
        "mean_size": mean.value,
        "mean_size_err": mean.error,
        "coeffs": list(coeffs.counts[: config.order + 1]),
    }
    if isinstance(target, WordTarget):
        document["ogf_rational"] = ogf_rational_eval(target.dfa, x).to_dict()

    if config.format == OutputFormat.TEXT.value:
        rows = [
            {"quantity": key, "value": document[key]["value"], "err": document[key]["err"]}
            for key in ("egf", "ogf_series", "ogf_laplace", "ogf_rational") if key in document
        ]
        rows.append({"quantity": "mean_size", "value": document["mean_size"], "err": document["mean_size_err"]})
        _emit_table(rows, out, f"{_header(config)}\n# {target.name} at x={x}, "
                               f"growth {growth.verdict.value} R={growth.rate}")
    else:
        _emit_json([{**_envelope(config), **document}], out)
    return EXIT_OK


def _draws(config: RunConfig, target: BoltzmannTarget) -> Iterable[Any]:
    rng = RandomSource(config.seed)
    if config.mode == Mode.ORDINARY.value:
        sampler = build_ordinary(target, config.x, config.strategy, rng, ceiling=config.ceiling)
        for _ in range(config.count):
            yield sampler.sample()
    else:
        for _ in range(config.count):
            yield target.sample_exponential(config.x, rng, config.ceiling)


def cmd_sample(config: RunConfig, out: TextIO) -> int:
    """Stream of sampled objects, one per line"""
    target = load_target(config)
    envelope = _envelope(config)
    if config.format == OutputFormat.TEXT.value:
        rows = []
        for index, obj in enumerate(_draws(config, target)):
            row = {"index": index, "size": obj.size, "object": obj.to_term()}
            if obj.draw is not None:
                row["u"] = obj.draw.u
            rows.append(row)
        _emit_table(rows, out, _header(config))
    else:
        _emit_json(({**envelope, "index": i, **obj.to_json()} for i, obj in enumerate(_draws(config, target))), out)
    return EXIT_OK


def cmd_check(config: RunConfig, out: TextIO) -> int:
    """Verification report; nonzero exit when any check fails"""
    target = load_target(config)
    report = run_check_suite(target, config.x, config.trials, config.seed, config.workers, config.strategy)
    if config.format == OutputFormat.TEXT.value:
        rows = [
            {"check": c.name, "status": c.status, "p_value": c.p_value, "detail": c.detail}
            for c in report.checks
        ]
        _emit_table(rows, out, f"{_header(config)}\n# {report.target} at x={report.x}, {report.trials} trials")
    else:
        _emit_json([{**_envelope(config), **report.to_dict(config.timings)}], out)

    failures = report.failures
    if not failures:
        return EXIT_OK
    divergent = {cls.__name__ for cls in DIVERGENCE_ERRORS}
    if all(f.error in divergent for f in failures):
        return EXIT_DIVERGENT
    return EXIT_FAILURE


def cmd_tune(config: RunConfig, out: TextIO) -> int:
    """Parameter whose ordinary mean size matches the requested size within 1%"""
    target = load_target(config)
    x = tune_parameter(target.coefficients, config.target_size)
    series, coeffs, growth = ogf_eval_adaptive(target.coefficients, x)
    document = {
        "class": target.name,
        "target_size": config.target_size,
        "x": x,
        "mean_size": expected_size_ordinary(coeffs, growth, x),
    }
    if config.format == OutputFormat.TEXT.value:
        _emit_table([document], out, _header(config))
    else:
        _emit_json([{**_envelope(config), **document}], out)
    return EXIT_OK


def cmd_words_count(config: RunConfig, out: TextIO) -> int:
    """Counts of a language or shuffle product up to --order"""
    target = load_target(config)
    counts = list(target.coefficients(config.order).counts)
    if isinstance(target, WordTarget) and count_words_matrix(target.dfa, config.order) != counts:
        raise BoltzmannError("dynamic-programming and transfer-matrix counts disagree")
    if config.format == OutputFormat.TEXT.value:
        _emit_table([{"n": n, "count": a} for n, a in enumerate(counts)], out, _header(config))
    else:
        _emit_json([{**_envelope(config), "language": target.name, "order": config.order, "counts": counts}], out)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, TextIO], int]] = {
    "oracle": cmd_oracle,
    "sample": cmd_sample,
    "check": cmd_check,
    "tune": cmd_tune,
    "words sample": cmd_sample,
    "words count": cmd_words_count,
}


# Parsing

class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the invalid-input status, keeping 2 for divergence"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $BZ_SEED, then OS entropy)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    common.add_argument("--output", default=None, help="write results to this file instead of standard output")

    def target_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("target", help=".bz specification or .json automaton (path or catalog name)")
        sub.add_argument("--class", dest="class_name", default=None, help="class to use (default: first defined)")
        sub.add_argument("--shuffle", default=None, help="second automaton: use the shuffle product")

    def sampling_args(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--x", type=float, required=True, help="Boltzmann parameter")
        sub.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.EXPONENTIAL.value)
        sub.add_argument("--count", type=int, default=1)
        sub.add_argument("--strategy", choices=STRATEGIES, default="mixture", help="u-draw strategy (ord mode)")
        sub.add_argument("--ceiling", type=int, default=None, help="reject objects above this size")

    parser = _Parser(
        prog="bz",
        description="Exponential and ordinary Boltzmann samplers with generating-function oracles",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    oracle = commands.add_parser("oracle", parents=[common], help="evaluate generating functions")
    target_args(oracle)
    oracle.add_argument("--x", type=float, required=True)
    oracle.add_argument("--order", type=int, default=16, help="number of counts to print")

    sample = commands.add_parser("sample", parents=[common], help="draw objects")
    target_args(sample)
    sampling_args(sample)

    check = commands.add_parser("check", parents=[common], help="run the verification suite")
    target_args(check)
    check.add_argument("--x", type=float, required=True)
    check.add_argument("--trials", type=int, default=0, help="draws per sampling check (0: analytic checks only)")
    check.add_argument("--workers", type=int, default=1)
    check.add_argument("--strategy", choices=STRATEGIES, default="mixture")
    check.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")

    tune = commands.add_parser("tune", parents=[common], help="find x for a target mean size")
    target_args(tune)
    tune.add_argument("--size", dest="target_size", type=float, required=True)

    words = commands.add_parser("words", help="regular languages and shuffle products")
    word_commands = words.add_subparsers(dest="words_command", required=True)
    words_sample = word_commands.add_parser("sample", parents=[common], help="draw words")
    words_sample.add_argument("--dfa", required=True)
    words_sample.add_argument("--shuffle", default=None)
    sampling_args(words_sample)
    words_count = word_commands.add_parser("count", parents=[common], help="count words by length")
    words_count.add_argument("--dfa", required=True)
    words_count.add_argument("--shuffle", default=None)
    words_count.add_argument("--order", type=int, default=16)
    return parser


def make_config(args: argparse.Namespace, environ: Optional[Dict[str, str]] = None) -> RunConfig:
    """
    Validated configuration from parsed arguments.

    Raises:
        ValidationError: invalid option values
        ValueError: unusable $BZ_SEED
    """
    command = args.command if args.command != "words" else f"words {args.words_command}"
    if args.command == "words":
        inputs = [args.dfa] + ([args.shuffle] if args.shuffle else [])
    else:
        inputs = [args.target] + ([args.shuffle] if args.shuffle else [])
    options = {
        key: getattr(args, key)
        for key in ("class_name", "x", "mode", "count", "strategy", "ceiling", "trials", "workers",
                    "target_size", "order", "timings")
        if getattr(args, key, None) is not None
    }
    return RunConfig(
        command=command,
        inputs=inputs,
        seed=resolve_seed(args.seed, environ),
        format=args.format,
        output=args.output,
        **options,
    )


def _open_output(path: Optional[str]):
    if path is None:
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    try:
        config = make_config(args)
    except (ValidationError, ValueError) as exc:
        print(f"bz: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_OUT_OF_RANGE
    logger.info("%s: seed %d, config %s", config.command, config.seed, config.hash)

    try:
        with _open_output(config.output) as out:
            return COMMANDS[config.command](config, out)
    except (BoltzmannError, OSError, UnicodeDecodeError) as exc:
        logger.debug("command failed", exc_info=True)
        print(f"bz: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
