"""Three-layer pipeline and command-line front end.

Layer 1 parses source into the lambda IR and runs type inference with
operator specialization.  Layer 2 compresses every definition and the
main expression into combinator form under the MDL objective.  Layer 3
emits the GAEL text, a decoded lambda rendering, and pseudocode, plus a
structured report with token, density, and equivalence metrics.

Exit codes: 0 success, 1 input error, 3 equivalence violation (the
compressed program provably disagrees with its source on some probe).
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from . import lambda_ir, mdl_opt, metrics, ski_core, type_infer
from .explainer import explain_term
from .lambda_ir import Program, Term
from .mdl_opt import CompressionPlan, MdlConfig
from .ski_core import RuleSet, SkiProgram, SkiTerm, Verdict

REPORT_SCHEMA_VERSION = 1
SOURCE_EXTENSION = ".lam"


class IncompatibleTermError(Exception):
    pass


@dataclass(frozen=True)
class PipelineReport:
    program_id: str
    p_tokens: int
    s_tokens: int
    cr: Fraction
    density_source: metrics.DensityReport
    density_gael: metrics.DensityReport
    equivalence: str
    objective: float
    map_types: dict[str, dict[str, str]]
    timings: dict[str, float]

    def to_dict(self, include_timings: bool = True) -> dict:
        doc = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "program_id": self.program_id,
            "p_tokens": self.p_tokens,
            "s_tokens": self.s_tokens,
            "cr": float(self.cr),
            "cr_exact": [self.cr.numerator, self.cr.denominator],
            "density_source": self.density_source.as_dict(),
            "density_gael": self.density_gael.as_dict(),
            "equivalence": self.equivalence,
            "objective": self.objective,
            "map_types": self.map_types,
        }
        if include_timings:
            doc["timings"] = self.timings
        return doc


@dataclass(frozen=True)
class PipelineResult:
    report: PipelineReport
    plan: CompressionPlan
    encoded: SkiProgram
    specialized: Program
    gael_text: str
    lambda_text: str
    pseudocode_text: str


@dataclass(frozen=True)
class CorpusReport:
    reports: tuple[PipelineReport, ...]
    errors: tuple[tuple[str, str], ...]
    mean_cr: float
    median_cr: float
    equivalence_pass_rate: float
    mean_rho_source: float
    mean_rho_gael: float

    def to_dict(self, include_timings: bool = True) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "programs": [r.to_dict(include_timings) for r in self.reports],
            "errors": [{"program_id": pid, "error": msg} for pid, msg in self.errors],
            "aggregates": {
                "count": len(self.reports),
                "mean_cr": self.mean_cr,
                "median_cr": self.median_cr,
                "equivalence_pass_rate": self.equivalence_pass_rate,
                "mean_rho_source": self.mean_rho_source,
                "mean_rho_gael": self.mean_rho_gael,
            },
        }


# --- type inference stage ---------------------------------------------------


def _infer_and_specialize(prog: Program) -> tuple[Program, dict[str, dict[str, str]]]:
    """MAP-specialize each definition and main under an environment that
    types earlier definition names as functions."""
    summary: dict[str, dict[str, str]] = {}
    new_defs: list[tuple[str, Term]] = []
    seen: list[str] = []

    def process(label: str, body: Term) -> Term:
        env = type_infer.ContextEnv(
            bindings={name: type_infer.TypeTag.FUNC for name in seen}
        )
        variables, constraints = type_infer.build_constraints(body, env)
        if not variables:
            summary[label] = {}
            return body
        if len(variables) > type_infer.MAX_ENUM_VARIABLES:
            summary[label] = {"_skipped": f"{len(variables)} variables exceed guard"}
            return body
        post = type_infer.posterior(constraints, variables)
        assignment = type_infer.map_assignment(post)
        summary[label] = {v: assignment[v].name for v in variables}
        return type_infer.specialize_operators(body, assignment, env)

    for name, body in prog.defs:
        new_defs.append((name, process(name, body)))
        seen.append(name)
    new_main = process("main", prog.main) if prog.main is not None else None
    return Program(defs=tuple(new_defs), main=new_main), summary


# --- equivalence stage --------------------------------------------------------


def _verify_equivalence(
    original: Program, encoded: SkiProgram, cfg: MdlConfig
) -> str:
    verdicts = []
    for item in mdl_opt._items_of(original):
        ski_inlined = mdl_opt._inline_item(encoded, item.name)
        probes = cfg.probes_for_arity(item.arity)
        result = ski_core.behavioral_equal(item.inlined, ski_inlined, probes, cfg.fuel)
        verdicts.append(result.verdict)
    if any(v is Verdict.DIFFERENT for v in verdicts):
        return "different"
    if any(v is Verdict.UNKNOWN for v in verdicts):
        return "unknown"
    return "equal"


# --- target emission -----------------------------------------------------------


def _term_to_ski(t: Term) -> SkiTerm:
    match t:
        case lambda_ir.Var(name):
            return ski_core.FreeVar(name)
        case lambda_ir.IntLit(v):
            return ski_core.SInt(v)
        case lambda_ir.BoolLit(v):
            return ski_core.SBool(v)
        case lambda_ir.Prim(op):
            return ski_core.SPrim(op)
        case lambda_ir.App(fun, arg):
            return ski_core.SApp(_term_to_ski(fun), _term_to_ski(arg))
        case lambda_ir.Lam():
            raise IncompatibleTermError("lambda node cannot be emitted as GAEL")
    raise TypeError(f"not a Term: {t!r}")


_PSEUDO_NAMES = {
    "add": "add",
    "sub": "sub",
    "mul": "mul",
    "eq": "eq",
    "if": "if_then_else",
    "addZ": "int_add",
    "addR": "real_add",
}


def _pseudo_expr(t: Term) -> str:
    match t:
        case lambda_ir.Var(name):
            return name
        case lambda_ir.IntLit(v):
            return str(v)
        case lambda_ir.BoolLit(v):
            return "true" if v else "false"
        case lambda_ir.Prim(op):
            return _PSEUDO_NAMES[op]
        case lambda_ir.Lam(param, body):
            return f"lambda {param}: {_pseudo_expr(body)}"
        case lambda_ir.App():
            head, args = lambda_ir.spine(t)
            head_text = _pseudo_expr(head)
            if isinstance(head, lambda_ir.Lam):
                head_text = f"({head_text})"
            return f"{head_text}({', '.join(_pseudo_expr(a) for a in args)})"
    raise TypeError(f"not a Term: {t!r}")


def _pseudo_procedure(name: str, t: Term) -> str:
    params = []
    while isinstance(t, lambda_ir.Lam):
        params.append(t.param)
        t = t.body
    header = f"procedure {name}({', '.join(params)}):"
    return f"{header}\n    return {_pseudo_expr(t)}"


def emit_target(t: Union[Term, SkiTerm], target: str) -> str:
    """Render a term as `gael`, `lambda`, or `pseudocode` text."""
    is_lambda = ski_core._is_lambda_term(t)
    if target == "gael":
        ski = _term_to_ski(t) if is_lambda else t
        return ski_core.gael_print(ski)
    if target == "lambda":
        term = t if is_lambda else ski_core.ski_decode(t)
        return lambda_ir.pretty_print(term)
    if target == "pseudocode":
        term = t if is_lambda else ski_core.ski_decode(t)
        return _pseudo_procedure("main", term)
    raise ValueError(f"unknown target {target!r}")


def _emit_program(encoded: SkiProgram, target: str) -> str:
    if target == "gael":
        return ski_core.gael_print_program(encoded)
    chunks = []
    for name, body in encoded.defs:
        if target == "lambda":
            chunks.append(f"{name} := {lambda_ir.pretty_print(ski_core.ski_decode(body))};")
        else:
            chunks.append(_pseudo_procedure(name, ski_core.ski_decode(body)))
    if encoded.main is not None:
        if target == "lambda":
            chunks.append(lambda_ir.pretty_print(ski_core.ski_decode(encoded.main)))
        else:
            chunks.append(_pseudo_procedure("main", ski_core.ski_decode(encoded.main)))
    return "\n\n".join(chunks) if target == "pseudocode" else "\n".join(chunks)


# --- pipeline -------------------------------------------------------------------


def run_pipeline(
    source: str,
    cfg: MdlConfig = MdlConfig(),
    program_id: str = "program",
    density_c: float = metrics.DEFAULT_BOUND_CONSTANT,
) -> PipelineResult:
    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    prog = lambda_ir.parse_program(source)
    timings["parse_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    specialized, map_summary = _infer_and_specialize(prog)
    timings["infer_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    plan = mdl_opt.compress_program(specialized, cfg)
    encoded = plan.encoded_program()
    timings["compress_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    gael_text = ski_core.gael_print_program(encoded)
    lambda_text = _emit_program(encoded, "lambda")
    pseudo_text = _emit_program(encoded, "pseudocode")
    timings["emit_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    equivalence = _verify_equivalence(prog, encoded, cfg)
    p_tokens = metrics.token_count(source, "source")
    s_tokens = metrics.token_count(gael_text, "gael")
    cr = metrics.compression_rate(s_tokens, p_tokens)
    density_source = metrics.symbolic_density(source.encode("utf-8"), c=density_c)
    density_gael = metrics.symbolic_density(gael_text.encode("utf-8"), c=density_c)
    timings["metrics_s"] = time.perf_counter() - t0

    report = PipelineReport(
        program_id=program_id,
        p_tokens=p_tokens,
        s_tokens=s_tokens,
        cr=cr,
        density_source=density_source,
        density_gael=density_gael,
        equivalence=equivalence,
        objective=plan.objective,
        map_types=map_summary,
        timings=timings,
    )
    return PipelineResult(
        report=report,
        plan=plan,
        encoded=encoded,
        specialized=specialized,
        gael_text=gael_text,
        lambda_text=lambda_text,
        pseudocode_text=pseudo_text,
    )


def run_corpus(
    directory: Union[str, Path],
    cfg: MdlConfig = MdlConfig(),
    density_c: float = metrics.DEFAULT_BOUND_CONSTANT,
) -> CorpusReport:
    """Run the pipeline over every source file, in filename order."""
    directory = Path(directory)
    files = sorted(directory.glob(f"*{SOURCE_EXTENSION}"), key=lambda p: p.name)
    if not files:
        raise FileNotFoundError(
            f"no {SOURCE_EXTENSION} files found in {directory}"
        )
    reports: list[PipelineReport] = []
    errors: list[tuple[str, str]] = []
    for path in files:
        program_id = path.stem
        try:
            result = run_pipeline(
                path.read_text(encoding="utf-8"),
                cfg,
                program_id=program_id,
                density_c=density_c,
            )
            reports.append(result.report)
        except Exception as exc:  # record and continue the sweep
            errors.append((program_id, f"{type(exc).__name__}: {exc}"))
    crs = [r.cr for r in reports]
    mean_cr = float(sum(crs, Fraction(0)) / len(crs)) if crs else 0.0
    median_cr = float(statistics.median(crs)) if crs else 0.0
    pass_rate = (
        sum(1 for r in reports if r.equivalence == "equal") / len(reports)
        if reports
        else 0.0
    )
    mean_rho_src = (
        float(sum((r.density_source.rho for r in reports), Fraction(0)) / len(reports))
        if reports
        else 0.0
    )
    mean_rho_gael = (
        float(sum((r.density_gael.rho for r in reports), Fraction(0)) / len(reports))
        if reports
        else 0.0
    )
    return CorpusReport(
        reports=tuple(reports),
        errors=tuple(errors),
        mean_cr=mean_cr,
        median_cr=median_cr,
        equivalence_pass_rate=pass_rate,
        mean_rho_source=mean_rho_src,
        mean_rho_gael=mean_rho_gael,
    )


def corpus_csv(report: CorpusReport) -> str:
    lines = ["program_id,p_tokens,s_tokens,cr,equivalence,objective,rho_source,rho_gael"]
    for r in report.reports:
        lines.append(
            f"{r.program_id},{r.p_tokens},{r.s_tokens},{float(r.cr):.6f},"
            f"{r.equivalence},{r.objective:.6f},"
            f"{float(r.density_source.rho):.6f},{float(r.density_gael.rho):.6f}"
        )
    return "\n".join(lines) + "\n"


# --- CLI ------------------------------------------------------------------------


_RULE_FLAGS = {
    "naive": RuleSet.NAIVE,
    "i": RuleSet.WITH_I,
    "eta": RuleSet.ETA_OPTIMIZED,
}


def _config_from_args(args: argparse.Namespace) -> MdlConfig:
    rule_sets = mdl_opt.ALL_RULE_SETS
    if args.rules:
        chosen = []
        for flag in args.rules.split(","):
            flag = flag.strip()
            if flag not in _RULE_FLAGS:
                raise ValueError(f"unknown rule set {flag!r} (expected naive|i|eta)")
            chosen.append(_RULE_FLAGS[flag])
        rule_sets = tuple(chosen)
    probe_config = ski_core.ProbeConfig(arity=0, max_tuples=args.probes)
    return MdlConfig(
        lambda_weight=args.lambda_weight,
        beam_width=args.beam,
        probe_config=probe_config,
        rule_sets=rule_sets,
        extraction_enabled=not args.no_extract,
        fuel=args.fuel,
    )


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda", dest="lambda_weight", type=float, default=0.99,
                        help="compression weight in [0,1] (default 0.99)")
    parser.add_argument("--beam", type=int, default=8, help="beam width (default 8)")
    parser.add_argument("--rules", default="",
                        help="comma list of rule sets to search: naive,i,eta (default all)")
    parser.add_argument("--fuel", type=int, default=lambda_ir.DEFAULT_FUEL,
                        help="reduction step budget (default 10000)")
    parser.add_argument("--probes", type=int, default=216,
                        help="max probe tuples per equivalence check (default 216)")
    parser.add_argument("--no-extract", action="store_true",
                        help="disable common-subterm extraction")
    parser.add_argument("--report", default="", help="write a JSON report to this path")
    parser.add_argument("--c", dest="density_c", type=float,
                        default=metrics.DEFAULT_BOUND_CONSTANT,
                        help="density bound constant (default 16)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skic",
        description="Compress functional programs into GAEL combinator form.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_compress = sub.add_parser("compress", help="compress one source file")
    p_compress.add_argument("file")
    p_compress.add_argument("--emit", default="gael",
                            help="comma list of targets to print: gael,lambda,pseudo")
    _add_common_options(p_compress)

    p_corpus = sub.add_parser("corpus", help="compress every source file in a directory")
    p_corpus.add_argument("dir")
    _add_common_options(p_corpus)

    p_explain = sub.add_parser("explain", help="explain a GAEL file in controlled English")
    p_explain.add_argument("file")

    p_density = sub.add_parser("density", help="density report for a file's bytes")
    p_density.add_argument("file")
    p_density.add_argument("--c", dest="density_c", type=float,
                           default=metrics.DEFAULT_BOUND_CONSTANT)
    return parser


def _cmd_compress(args: argparse.Namespace) -> int:
    try:
        source = Path(args.file).read_text(encoding="utf-8")
        cfg = _config_from_args(args)
        result = run_pipeline(source, cfg, program_id=Path(args.file).stem,
                              density_c=args.density_c)
    except (OSError, ValueError, lambda_ir.LambdaError, ski_core.OpenTermError,
            metrics.LexError) as exc:
        print(f"skic: error: {exc}", file=sys.stderr)
        return 1
    targets = [t.strip() for t in args.emit.split(",") if t.strip()]
    rename = {"pseudo": "pseudocode"}
    for target in targets:
        target = rename.get(target, target)
        if target == "gael":
            print(result.gael_text)
        elif target == "lambda":
            print(result.lambda_text)
        elif target == "pseudocode":
            print(result.pseudocode_text)
        else:
            print(f"skic: error: unknown emit target {target!r}", file=sys.stderr)
            return 1
    if args.report:
        Path(args.report).write_text(
            json.dumps(result.report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    if result.report.equivalence == "different":
        print("skic: error: compressed program differs from source", file=sys.stderr)
        return 3
    return 0


def _cmd_corpus(args: argparse.Namespace) -> int:
    try:
        cfg = _config_from_args(args)
        report = run_corpus(args.dir, cfg, density_c=args.density_c)
    except (OSError, ValueError) as exc:
        print(f"skic: error: {exc}", file=sys.stderr)
        return 1
    print(corpus_csv(report), end="")
    if args.report:
        path = Path(args.report)
        path.write_text(
            json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        path.with_suffix(".csv").write_text(corpus_csv(report), encoding="utf-8")
    if any(r.equivalence == "different" for r in report.reports):
        return 3
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    try:
        source = Path(args.file).read_text(encoding="utf-8")
        prog = ski_core.parse_gael_program(source)
    except (OSError, lambda_ir.ParseError) as exc:
        print(f"skic: error: {exc}", file=sys.stderr)
        return 1
    chunks = []
    for name, body in prog.defs:
        chunks.append(f"-- {name}\n{explain_term(body).to_text()}")
    if prog.main is not None:
        chunks.append(explain_term(prog.main).to_text())
    print("\n\n".join(chunks))
    return 0


def _cmd_density(args: argparse.Namespace) -> int:
    try:
        data = Path(args.file).read_bytes()
        report = metrics.symbolic_density(data, c=args.density_c)
    except (OSError, ValueError) as exc:
        print(f"skic: error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "compress": _cmd_compress,
        "corpus": _cmd_corpus,
        "explain": _cmd_explain,
        "density": _cmd_density,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
