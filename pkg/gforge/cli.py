"""
Command-line pipeline: sentence -> case split -> normal form -> witness -> model -> verification.

Subcommands: parse, nf, witness, build, check, mc, lb, bounds, serve.
Reports are key=value lines on stdout (prefixed with "# " when they follow a
document that must stay parseable); logs go to stderr.

Exit statuses: 0 success, 2 unreadable input or bad options, 3 fragment
violation, 4 no witness found, 5 a structure failed verification.
"""
from __future__ import annotations

import argparse
import asyncio
import csv
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path
from typing import Iterable, TextIO

import gmpy2
from dotenv import load_dotenv

from gforge.cache import get_cached_witness, set_cached_witness
from gforge.corpus import entry
from gforge.logic_syntax import (
    FragmentError,
    FragmentTag,
    GrammarError,
    Sentence,
    Signature,
    SignatureError,
    classify,
    length,
    parse_sentence,
    print_sentence,
)
from gforge.lower_bound import emit_phi_n, standard_model, verify_lower_bound
from gforge.model_builder import (
    ALGORITHMS,
    MATERIALIZE_CAP,
    PRECISION,
    SAMPLERS,
    TUPLE_BUDGET,
    WORKERS,
    LazyStructure,
    MaterializationRefused,
    RandomSource,
    SearchExhausted,
    auto_n,
    build_deterministic,
    build_sampled,
    delta_gap_log2,
    domain_bounds,
    epsilon,
    footnote_model,
    parse_lazy_tuple,
    sweep_success,
    thresholds,
)
from gforge.normal_form import (
    CaseSplit,
    NormalFormSentence,
    case_splits,
    count_case_splits,
    expansion_factor,
    identity_split,
    normalize,
    reinterpret_model,
    serialize_normal_form,
)
from gforge.structure_lab import (
    FiniteStructure,
    StructureError,
    check_extension,
    check_guarded,
    format_structure,
    model_check,
    naive_model_check,
    read_structure,
    tgf_to_gfu,
    write_structure,
)
from gforge.type_algebra import TypeAlgebraError, count_types
from gforge.witness_engine import (
    STRATEGIES,
    NoWitnessFound,
    TypeFamily,
    certify,
    compute_witness,
    densify,
    format_witness,
    minimal_witness,
    pair_complete,
    read_witness,
    repair_pairs,
    shrink_witness,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_FRAGMENT = 3
EXIT_NO_WITNESS = 4
EXIT_VERIFY = 5

MODES = ("gf", "tgf")
DEFAULT_TS = (2, 3, 4, 8, 16, 64)


class ConfigError(ValueError):
    """Options that do not form a runnable configuration."""


class VerificationFailed(RuntimeError):
    def __init__(self, message: str, records: list[str]):
        super().__init__(message)
        self.records = records


def env_seed() -> int | None:
    raw = (os.environ.get("GFORGE_SEED") or "").strip()
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"GFORGE_SEED must be an integer, got {raw!r}") from e


# --- configuration --------------------------------------------------------------------------------


@dataclass
class PipelineConfig:
    source: str
    mode: str = "gf"
    algo: str = "markov"
    n: int | None = None
    auto: bool = False
    theoretical: bool = False
    seed: int | None = None
    strategy: str = "auto"
    shrink: bool = True
    seeds: int = 10
    out_dir: Path | None = None
    materialize_cap: int = MATERIALIZE_CAP
    lazy: bool = False

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.algo not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algo!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"witness strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        policies = sum([self.n is not None, self.auto, self.theoretical])
        if self.algo == "deterministic":
            if self.seed is not None:
                raise ConfigError("the deterministic construction takes no seed")
            if policies:
                raise ConfigError("the deterministic construction fixes its own domain; drop --n/--auto-n/--n-theory")
        else:
            if self.seed is None:
                raise ConfigError("sampling needs --seed or GFORGE_SEED")
            if policies != 1:
                raise ConfigError("choose exactly one of --n, --auto-n, --n-theory")
            if self.n is not None and self.n < 0:
                raise ConfigError("--n must be non-negative")
            if self.lazy:
                raise ConfigError("--lazy applies to the deterministic construction only")
        if self.mode == "tgf" and self.algo != "markov":
            raise ConfigError("triguarded input needs --algo markov so that every pair carries a 2-type")


# --- stages ---------------------------------------------------------------------------------------


def load_sentence(source: str) -> Sentence:
    """A path, "-" for stdin, or "corpus:NAME"."""
    if source.startswith("corpus:"):
        try:
            text = entry(source[len("corpus:") :]).text
        except KeyError as e:
            raise ConfigError(str(e)) from e
    elif source == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {source}: {e}") from e
    return parse_sentence(text)


def prepare(sentence: Sentence, mode: str) -> Sentence:
    """The guarded sentence the pipeline works on; triguarded input gets a universal role."""
    tag = classify(sentence.formula)
    if tag is FragmentTag.GF:
        return sentence
    if tag is FragmentTag.TGF and mode == "tgf":
        return tgf_to_gfu(sentence)
    raise FragmentError(f"{tag.value} sentence rejected in {mode} mode")


def find_witness(nf: NormalFormSentence, strategy: str = "auto", shrink: bool = True) -> TypeFamily:
    w = compute_witness(nf, strategy)
    if shrink:
        w = shrink_witness(w, nf)
    if nf.universal_role and not pair_complete(w)[0]:
        repaired = repair_pairs(w, nf)
        if repaired is None:
            logger.warning("witness is not pair-complete; falling back to a small model")
            repaired = minimal_witness(nf)
        w = repaired
    return w


async def witness_for(nf: NormalFormSentence, strategy: str, shrink: bool) -> tuple[TypeFamily, str]:
    key = strategy + ("+shrink" if shrink else "")
    cached = await get_cached_witness(nf, key)
    if cached is not None:
        logger.info("witness cache hit")
        return cached, "cache"
    w = await asyncio.to_thread(find_witness, nf, strategy, shrink)
    await set_cached_witness(nf, key, w)
    return w, "computed"


@dataclass
class Built:
    structure: FiniteStructure | None
    lazy: LazyStructure | None
    witness: TypeFamily
    records: list[str] = field(default_factory=list)


def build_structure(cfg: PipelineConfig, w: TypeFamily, nf: NormalFormSentence) -> Built:
    records = [f"algo={cfg.algo}"]
    if cfg.algo == "deterministic":
        if w.width == 0:
            b = footnote_model(w)
            return Built(b, None, w, records + ["short_circuit=constants only", f"n={b.size}"])
        dense = densify(w)
        lazy = build_deterministic(dense)
        records += [
            f"primes={','.join(map(str, lazy.ladder.primes))}",
            f"modulus={lazy.modulus}",
            f"n={lazy.size}",
        ]
        if cfg.lazy:
            return Built(None, lazy, dense, records)
        return Built(lazy.materialize(cfg.materialize_cap), lazy, dense, records)
    if w.size < 3:
        b = footnote_model(w)
        return Built(b, None, w, records + [f"short_circuit={thresholds(w, cfg.algo).short_circuit}", f"n={b.size}"])
    if cfg.auto:
        found = auto_n(w, nf, cfg.algo, cfg.seed, cfg.seeds)
        records += [
            f"n={found.n}",
            f"seed={cfg.seed}",
            f"child_seed={found.seed.path[-1] if found.seed.path else '-'}",
            "auto_n_attempts=" + ",".join(f"{n}:{s}" for n, s in found.attempts),
        ]
        return Built(found.structure, None, w, records)
    n = cfg.n if cfg.n is not None else thresholds(w, cfg.algo).n_theory
    if math.comb(n, w.width) > TUPLE_BUDGET:
        raise SearchExhausted(f"n={n} needs {math.comb(n, w.width)} top-level tuples, above the budget {TUPLE_BUDGET}")
    b = build_sampled(w, n, RandomSource(cfg.seed), cfg.algo)
    return Built(b, None, w, records + [f"n={n}", f"seed={cfg.seed}"])


def _flag(ok: bool) -> str:
    return "true" if ok else "false"


def verify_structure(
    b: FiniteStructure,
    w: TypeFamily,
    nf: NormalFormSentence,
    split: CaseSplit,
    sentence: Sentence,
) -> tuple[list[str], bool]:
    """Guardedness, extension, the normal form, and the input sentence on the reduct."""
    guarded = check_guarded(b, w)
    extension = check_extension(b, w, first_only=True)
    nf_ok = model_check(b, nf.to_sentence())
    reduct = reinterpret_model(b, split, sentence.signature)
    ok = model_check(reduct, sentence)
    records = [
        f"guarded={_flag(not guarded)}",
        f"extension={_flag(not extension)}",
        f"model_check_nf={_flag(nf_ok)}",
        f"model_check={_flag(ok)}",
    ]
    records += [f"violation={v}" for v in (guarded + extension)[:5]]
    return records, not guarded and not extension and nf_ok and ok


@dataclass
class SplitResult:
    split: CaseSplit
    nf: NormalFormSentence
    witness: TypeFamily
    witness_source: str
    built: Built
    records: list[str]


async def _run_split(cfg: PipelineConfig, original: Sentence, prepared: Sentence, split: CaseSplit) -> SplitResult:
    nf, sigma_nf = normalize(prepared, split)
    witness, source = await witness_for(nf, cfg.strategy, cfg.shrink)
    built = await asyncio.to_thread(build_structure, cfg, witness, nf)
    records = [
        split.describe(),
        f"signature_nf={sigma_nf}",
        f"fresh={','.join(nf.fresh) or '-'}",
        f"expansion={expansion_factor(prepared, nf):.3f}",
        f"witness_source={source}",
        f"witness_types={witness.size}",
        "witness_levels=" + "/".join(str(len(level)) for level in witness.levels),
    ] + built.records
    if built.structure is None:
        return SplitResult(split, nf, witness, source, built, records + ["verification=lazy"])
    checks, ok = await asyncio.to_thread(verify_structure, built.structure, built.witness, nf, split, original)
    if not ok:
        raise VerificationFailed(f"split {split.index} failed verification", records + checks)
    return SplitResult(split, nf, witness, source, built, records + checks)


_SPLIT_FAILURES = (NoWitnessFound, SearchExhausted, MaterializationRefused, VerificationFailed, TypeAlgebraError)


async def run_pipeline(cfg: PipelineConfig) -> dict:
    """Try case splits in order, a batch of WORKERS at a time; the lowest successful split wins.

    Returns a summary dict: status, records, errors, and the winning SplitResult.
    Parse and fragment failures propagate to the caller.
    """
    cfg.validate()
    original = load_sentence(cfg.source)
    prepared = prepare(original, cfg.mode)
    splits = list(case_splits(prepared))
    summary: dict = {"status": EXIT_NO_WITNESS, "records": [], "errors": [], "splits": len(splits), "result": None}
    logger.info("%d case splits for a sentence of length %d", len(splits), length(original.formula))
    witnessed = False
    for start in range(0, len(splits), max(1, WORKERS)):
        batch = splits[start : start + max(1, WORKERS)]
        outcomes = await asyncio.gather(
            *(_run_split(cfg, original, prepared, s) for s in batch),
            return_exceptions=True,
        )
        for split, outcome in zip(batch, outcomes):
            if isinstance(outcome, NoWitnessFound):
                summary["errors"].append(f"split {split.index}: no witness found ({outcome})")
                continue
            if isinstance(outcome, _SPLIT_FAILURES):
                witnessed = True
                summary["errors"].append(f"split {split.index}: {type(outcome).__name__}: {outcome}")
                if isinstance(outcome, VerificationFailed):
                    summary["records"] = outcome.records
                continue
            if isinstance(outcome, BaseException):
                raise outcome
            summary.update(status=EXIT_OK, result=outcome, records=[f"splits={len(splits)}"] + outcome.records)
            summary["records"] += _threshold_records(cfg, outcome)
            if cfg.out_dir is not None:
                write_artifacts(cfg.out_dir, outcome, summary["records"])
            return summary
    summary["status"] = EXIT_VERIFY if witnessed else EXIT_NO_WITNESS
    if not witnessed:
        summary["errors"].append("no witness found")
    return summary


def _threshold_records(cfg: PipelineConfig, result: SplitResult) -> list[str]:
    w = result.witness
    lines: list[str] = []
    if cfg.algo in SAMPLERS:
        lines += [f"thresholds.{line}" for line in thresholds(w, cfg.algo).records()]
    else:
        lines += domain_bounds(w)
    lines += report_bounds(result.nf.signature, 2)
    return lines


def write_artifacts(out_dir: Path, result: SplitResult, records: Iterable[str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "normal-form.txt").write_text(serialize_normal_form(result.nf), encoding="utf-8")
    (out_dir / "witness.txt").write_text(format_witness(result.witness), encoding="utf-8")
    if result.built.structure is not None:
        write_structure(result.built.structure, out_dir / "structure.txt")
    (out_dir / "report.txt").write_text("\n".join(records) + "\n", encoding="utf-8")
    logger.info("artifacts written to %s", out_dir)


# --- bounds ---------------------------------------------------------------------------------------


def report_bounds(signature: Signature, t: int) -> list[str]:
    """Exponent 1 - 1/e + eps_t and |types_wd| raised to it, without the unknown constant."""
    if t < 2:
        raise ValueError(f"t must be at least 2, got {t}")
    count = count_types(signature, signature.width)
    eps = epsilon(t)
    with gmpy2.local_context(gmpy2.get_context(), precision=PRECISION):
        exponent = 1 - gmpy2.exp(-1) + eps
        bits = gmpy2.log2(gmpy2.mpfr(count))
        bound_log2 = exponent * bits
    lines = [
        f"bounds.t={t}",
        f"bounds.types_log2={float(bits):.6g}",
        f"bounds.epsilon={float(eps):.6g}",
        f"bounds.exponent={float(exponent):.6g}",
        f"bounds.limit_exponent={float(1 - gmpy2.exp(-1)):.6g}",
        f"bounds.domain_log2={float(bound_log2):.6g}  # constant-free",
    ]
    if count.bit_length() <= 64:
        lines.insert(1, f"bounds.types={count}")
    return lines


# --- lazy queries ---------------------------------------------------------------------------------


def serve_lazy_queries(lazy: LazyStructure, stdin: TextIO, stdout: TextIO) -> int:
    """One tuple per input line ("0:3,1:5"), one type per output line."""
    answered = 0
    for line in stdin:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            stdout.write(f"{lazy.type_of(parse_lazy_tuple(line))}\n")
            answered += 1
        except ValueError as e:
            stdout.write(f"error: {e}\n")
    return answered


# --- subcommands ----------------------------------------------------------------------------------


def _emit(lines: Iterable[str], prefix: str = "") -> None:
    for line in lines:
        print(f"{prefix}{line}")


def _seed(args) -> int | None:
    return args.seed if args.seed is not None else env_seed()


def cmd_parse(args) -> int:
    s = load_sentence(args.input)
    print(print_sentence(s), end="")
    _emit(
        [
            f"fragment={classify(s.formula).value}",
            f"signature={s.signature}",
            f"width={s.signature.width}",
            f"length={length(s.formula)}",
        ],
        prefix="# ",
    )
    return EXIT_OK


def cmd_nf(args) -> int:
    prepared = prepare(load_sentence(args.input), args.mode)
    total = count_case_splits(prepared)
    if not 0 <= args.split < total:
        raise ConfigError(f"split index {args.split} outside 0..{total - 1}")
    split = next(islice(case_splits(prepared), args.split, None))
    nf, sigma = normalize(prepared, split)
    text = serialize_normal_form(nf)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    _emit(
        [
            split.describe(),
            f"splits={total}",
            f"signature={sigma}",
            f"fresh={','.join(nf.fresh) or '-'}",
            f"expansion={expansion_factor(prepared, nf):.3f}",
        ],
        prefix="# ",
    )
    return EXIT_OK


async def first_witness(prepared: Sentence, strategy: str, shrink: bool) -> tuple[CaseSplit, NormalFormSentence, TypeFamily]:
    for split in case_splits(prepared):
        nf, _ = normalize(prepared, split)
        try:
            w, _ = await witness_for(nf, strategy, shrink)
        except NoWitnessFound as e:
            logger.debug("%s: %s", split.describe(), e)
            continue
        return split, nf, w
    raise NoWitnessFound("no witness found")


def cmd_witness(args) -> int:
    prepared = prepare(load_sentence(args.input), args.mode)
    split, nf, w = asyncio.run(first_witness(prepared, args.strategy, not args.no_shrink))
    text = format_witness(w)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    _emit([split.describe()] + certify(w, nf).records(), prefix="# ")
    return EXIT_OK


def cmd_build(args) -> int:
    sampling = args.algo in SAMPLERS
    cfg = PipelineConfig(
        source=args.input,
        mode=args.mode,
        algo=args.algo,
        n=args.n,
        auto=args.auto_n or (sampling and args.n is None and not args.n_theory),
        theoretical=args.n_theory,
        seed=_seed(args) if sampling else args.seed,
        strategy=args.strategy,
        shrink=not args.no_shrink,
        seeds=args.seeds,
        out_dir=Path(args.out) if args.out else None,
        materialize_cap=args.materialize_cap,
        lazy=args.lazy,
    )
    summary = asyncio.run(run_pipeline(cfg))
    _emit(summary["records"])
    for error in summary["errors"]:
        print(f"error: {error}", file=sys.stderr)
    result = summary["result"]
    if summary["status"] == EXIT_OK and result is not None and cfg.lazy and result.built.lazy is not None:
        answered = serve_lazy_queries(result.built.lazy, sys.stdin, sys.stdout)
        logger.info("answered %d lazy queries", answered)
    return summary["status"]


def cmd_check(args) -> int:
    b = read_structure(args.structure)
    s = load_sentence(args.sentence)
    ok = model_check(b, s)
    records = [f"model_check={_flag(ok)}"]
    if args.naive:
        naive = naive_model_check(b, s)
        records.append(f"naive_model_check={_flag(naive)}")
        ok = ok and naive
    if args.witness:
        w = read_witness(args.witness)
        guarded, extension = check_guarded(b, w), check_extension(b, w)
        records += [f"guarded={_flag(not guarded)}", f"extension={_flag(not extension)}"]
        records += [f"violation={v}" for v in (guarded + extension)[:5]]
        ok = ok and not guarded and not extension
    _emit(records)
    return EXIT_OK if ok else EXIT_VERIFY


def _sizes(args, w: TypeFamily) -> list[int]:
    if args.sizes:
        try:
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
        except ValueError as e:
            raise ConfigError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from e
    else:
        sizes, n = [], max(1, w.width + 1)
        while n <= args.max_n:
            sizes.append(n)
            n *= 2
    if args.n_theory:
        sizes.append(thresholds(w, args.algo).n_theory)
    return sizes


def cmd_mc(args) -> int:
    seed = _seed(args)
    if seed is None:
        raise ConfigError("Monte Carlo runs need --seed or GFORGE_SEED")
    prepared = prepare(load_sentence(args.input), args.mode)
    _, nf, w = asyncio.run(first_witness(prepared, args.strategy, not args.no_shrink))
    rows = [e.row() for e in sweep_success(w, nf, _sizes(args, w), args.trials, seed, args.algo)]
    for row in rows:
        print(" ".join(f"{k}={v}" for k, v in row.items()))
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=["n", "trials", "successes", "rate"])
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_OK


def cmd_lb(args) -> int:
    if args.action == "emit":
        s = emit_phi_n(args.n)
        print(print_sentence(s), end="")
        _emit(
            [f"fragment={classify(s.formula).value}", f"width={s.signature.width}", f"length={length(s.formula)}"],
            prefix="# ",
        )
        return EXIT_OK
    if args.action == "model":
        b = standard_model(args.n)
        if args.out:
            write_structure(b, args.out)
            print(f"elements={b.size}")
        else:
            print(format_structure(b), end="")
        return EXIT_OK
    b = read_structure(args.structure) if args.structure else None
    report = verify_lower_bound(args.n, b)
    _emit(report.records())
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_bounds(args) -> int:
    prepared = prepare(load_sentence(args.input), args.mode)
    nf, sigma = normalize(prepared, identity_split(prepared))
    lines = [f"signature_nf={sigma}", f"width={sigma.width}"]
    for t in args.t or DEFAULT_TS:
        lines += report_bounds(sigma, t)
    if args.witness:
        w = read_witness(args.witness)
        for algo in SAMPLERS:
            lines += [f"{algo}.{line}" for line in thresholds(w, algo).records()]
        lines += domain_bounds(w)
    if args.delta_gap:
        lhs, rhs = delta_gap_log2(args.delta_gap)
        lines += [f"delta_gap.product_log2={lhs}", f"delta_gap.power_log2={rhs:.6g}", f"delta_gap.product_larger={_flag(lhs > rhs)}"]
    _emit(lines)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    if args.witness:
        os.environ["GFORGE_LAZY_WITNESS"] = args.witness
    uvicorn.run("gforge.api:app", host=args.host, port=args.port)
    return EXIT_OK


# --- entry point ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gforge", description="Finite models for guarded sentences.")
    sub = parser.add_subparsers(dest="command", required=True)

    def sentence_input(p: argparse.ArgumentParser) -> None:
        p.add_argument("input", help='sentence file, "-" for stdin, or corpus:NAME')
        p.add_argument("--mode", choices=MODES, default="gf")

    def witness_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--strategy", choices=STRATEGIES, default="auto")
        p.add_argument("--no-shrink", action="store_true", help="keep the witness as computed")

    p = sub.add_parser("parse", help="parse and pretty-print a sentence")
    p.add_argument("input")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("nf", help="normal form for one case split")
    sentence_input(p)
    p.add_argument("--split", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_nf)

    p = sub.add_parser("witness", help="compute a satisfiability witness")
    sentence_input(p)
    witness_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("build", help="full pipeline: witness, model, verification")
    sentence_input(p)
    witness_flags(p)
    p.add_argument("--algo", choices=ALGORITHMS, default="markov")
    policy = p.add_mutually_exclusive_group()
    policy.add_argument("--n", type=int)
    policy.add_argument("--auto-n", action="store_true", help="doubling search (default for sampling)")
    policy.add_argument("--n-theory", action="store_true", help="use the proven threshold")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=int, default=10, help="child seeds tried per n by --auto-n")
    p.add_argument("--out", help="directory for normal-form, witness, structure and report files")
    p.add_argument("--materialize-cap", type=int, default=MATERIALIZE_CAP)
    p.add_argument("--lazy", action="store_true", help="answer type queries from stdin instead of materializing")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="verify a structure against a sentence and optionally a witness")
    p.add_argument("structure")
    p.add_argument("sentence")
    p.add_argument("--witness")
    p.add_argument("--naive", action="store_true", help="also run the quantifier-expansion checker")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("mc", help="Monte Carlo success rates of the sampling constructions")
    sentence_input(p)
    witness_flags(p)
    p.add_argument("--algo", choices=SAMPLERS, default="independent")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--sizes", help="comma-separated domain sizes; default doubles up to --max-n")
    p.add_argument("--max-n", type=int, default=256)
    p.add_argument("--n-theory", action="store_true", help="add the proven threshold to the sizes")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("lb", help="the lower-bound sentence family")
    p.add_argument("action", choices=("emit", "model", "verify"))
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--out")
    p.add_argument("--structure", help="structure to verify instead of the standard model")
    p.set_defaults(func=cmd_lb)

    p = sub.add_parser("bounds", help="domain-size bounds and thresholds")
    sentence_input(p)
    p.add_argument("--t", type=int, action="append")
    p.add_argument("--witness")
    p.add_argument("--delta-gap", type=int, metavar="W")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("serve", help="HTTP queries against a deterministic lazy structure")
    p.add_argument("--witness", help="witness file (defaults to GFORGE_LAZY_WITNESS)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.environ.get("GFORGE_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GrammarError, SignatureError, StructureError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except FragmentError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FRAGMENT
    except NoWitnessFound as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NO_WITNESS
    except (VerificationFailed, SearchExhausted, MaterializationRefused) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
