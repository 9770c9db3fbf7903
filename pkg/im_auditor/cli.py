from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from im_auditor import __version__ as TOOL_VERSION
from im_auditor.auditors import (
    AuditReport,
    Witness,
    audit_invulnerability,
    audit_validity,
    false_confidence_search,
    run_audits,
)
from im_auditor.belief import dempster_combine, format_number
from im_auditor.contracts import build_payload
from im_auditor.credal import CredalModel, bayes_im, generalized_bayes_im
from im_auditor.curves import (
    DEFAULT_POINTS,
    DEFAULT_SPAN,
    DEFAULT_Y_VALUES,
    build_curve_frame,
    curve_filename,
    interval_summary,
    max_curve_gap,
    theta_grid,
    write_curve_csv,
)
from im_auditor.imtable import IMTable
from im_auditor.modelfile import (
    ModelBundle,
    read_im_table,
    read_model_file,
    serialize_model,
    write_im_table,
)
from im_auditor.properties import (
    INFORMATIONAL_PROPERTIES,
    PROPERTY_DEFINITIONS,
    explain_property,
    parse_property_list,
)
from im_auditor.randomset import (
    CombinedIM,
    IntervalPrior,
    dempster_im,
    discretized_location_model,
    vacuous_consonant_im,
)
from im_auditor.streams import DEFAULT_SEED
from im_auditor.underworld import (
    STRATEGIES,
    BetPolicy,
    DieBox,
    SideBetGameConfig,
    simulate_agent1,
    simulate_agent2_wager,
    simulate_sidebet_game,
)


PACKAGE_DIR = Path(__file__).resolve().parent
BUNDLED_MODELS_DIR = PACKAGE_DIR / "bundled" / "models"
BUILTIN_MODELS = {"builtin:location9": lambda: discretized_location_model(9)}
DEFAULT_CURVE_PRIOR = IntervalPrior.half_line(7.0, 0.9)

EXIT_SUCCESS = 0
EXIT_VIOLATION = 1
EXIT_INPUT_ERROR = 2


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT_ERROR) -> None:
        super().__init__(message)
        self.code = code


class ImAuditorArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise CliError(message, EXIT_INPUT_ERROR)


def eprint(message: str) -> None:
    print(message, file=sys.stderr)


def emit_human(message: str, *, quiet: bool = False) -> None:
    if not quiet:
        eprint(message)


def emit_verbose(args: argparse.Namespace, message: str) -> None:
    if getattr(args, "verbose", False) and not getattr(args, "quiet", False):
        eprint(message)


def json_dumps(payload: Any) -> str:
    return json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True)


def timestamp_token() -> str:
    override = os.environ.get("IM_AUDITOR_OUTPUT_STAMP")
    if override:
        return override
    return datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")


def default_output_dir(input_path: Path) -> Path:
    return Path.cwd() / "im-auditor-output" / f"{input_path.stem}-{timestamp_token()}"


def determine_output_dir(args: argparse.Namespace, input_path: Path) -> Path:
    if getattr(args, "out_dir", None):
        return Path(args.out_dir)
    return default_output_dir(input_path)


def ensure_parent(path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)


def write_text(path: Path, payload: str) -> None:
    ensure_parent(path)
    path.write_text(payload, encoding="utf-8")


def write_json(path: Path, payload: Any) -> None:
    write_text(path, json_dumps(payload) + "\n")


def safe_output_path(path: Path, *, force: bool = False) -> Path:
    if path.exists() and not force:
        raise CliError(f"Refusing to overwrite existing output: {path} (use --force)", EXIT_INPUT_ERROR)
    ensure_parent(path)
    return path


def remove_generated_at(value: Any) -> Any:
    if isinstance(value, dict):
        result = {}
        for key, item in value.items():
            if key == "generated_at":
                result[key] = "1970-01-01T00:00:00Z"
            else:
                result[key] = remove_generated_at(item)
        return result
    if isinstance(value, list):
        return [remove_generated_at(item) for item in value]
    return value


def normalize_report_for_cli(payload: Any) -> Any:
    return remove_generated_at(payload)


def maybe_emit_json_stdout(payload: Any, enabled: bool) -> None:
    if enabled:
        print(json_dumps(payload))


def classify_backend_exception(exc: Exception) -> int:
    if isinstance(exc, CliError):
        return exc.code
    return EXIT_INPUT_ERROR


def resolve_model_path(spec: str) -> Path:
    if spec.startswith("bundled:"):
        path = BUNDLED_MODELS_DIR / f"{spec.split(':', 1)[1]}.model"
    else:
        path = Path(spec)
    if not path.exists():
        raise CliError(f"Model file not found: {path}", EXIT_INPUT_ERROR)
    return path


def load_bundle(spec: str, *, exact: bool = False) -> tuple[Path, ModelBundle]:
    if spec in BUILTIN_MODELS:
        model = BUILTIN_MODELS[spec]()
        bundle = ModelBundle(model.data_frame, model.param_frame, model.likelihood, model.prior)
        return Path(spec.split(":", 1)[1]), bundle
    path = resolve_model_path(spec)
    return path, read_model_file(path, exact=exact)


def parse_bayes_prior(spec: str, model: CredalModel) -> np.ndarray:
    frame = model.param_frame
    if spec == "uniform":
        return np.full(frame.size, 1.0 / frame.size)
    weights = np.zeros(frame.size)
    for item in spec.split(","):
        label, sep, value = item.partition("=")
        if not sep or label.strip() not in frame.labels:
            raise CliError(f"Bad Bayes prior entry '{item}'. Use label=probability with labels from: {' '.join(frame.labels)}")
        try:
            weights[frame.index(label.strip())] = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise CliError(f"Bad probability in Bayes prior entry '{item}'") from None
    return weights


def resolve_im(spec: str, model: CredalModel) -> IMTable:
    if spec == "gb":
        return generalized_bayes_im(model)
    if spec == "vacuous":
        return IMTable.vacuous(model.data_frame, model.param_frame)
    if spec == "dempster":
        return dempster_im(model.likelihood, model.prior)
    if spec == "consonant":
        return vacuous_consonant_im(model.likelihood)
    if spec.startswith("bayes:"):
        return bayes_im(model.likelihood, parse_bayes_prior(spec.split(":", 1)[1], model))
    if spec.startswith("file:"):
        path = Path(spec.split(":", 1)[1])
        if not path.exists():
            raise CliError(f"IM table file not found: {path}")
        return read_im_table(path, model.data_frame, model.param_frame)
    raise CliError(
        f"Unknown IM source '{spec}'. Use gb, vacuous, dempster, consonant, bayes:uniform, bayes:<label>=<p>,... or file:PATH"
    )


def render_witness(witness: Witness) -> str:
    parts = [f"H={{{', '.join(witness.hypothesis)}}}"]
    if witness.threshold is not None:
        parts.append(f"threshold={witness.threshold:.12g}")
    if witness.alpha is not None:
        parts.append(f"alpha={witness.alpha:.12g}")
    if witness.parameter is not None:
        parts.append(f"theta={witness.parameter}")
    parts.append(f"achieved={witness.achieved:.6g}")
    parts.append(f"bound={witness.bound:.6g}")
    parts.append(f"margin={witness.margin:.6g}")
    return " ".join(parts)


def render_audit_text(model_name: str, im: IMTable, report: AuditReport) -> str:
    lines = [
        "im-auditor audit",
        f"Model: {model_name}",
        f"IM source: {im.source}",
        f"Overall: {'PASS' if report.passed else 'FAIL'}",
    ]
    for name, verdict in report.verdicts.items():
        suffix = " (informational)" if name in INFORMATIONAL_PROPERTIES else ""
        lines.append(f"- {name}: {verdict}{suffix}")
        witnesses = report.witnesses_for(name)
        if witnesses:
            lines.append(f"    headline witness: {render_witness(witnesses[0])}")
            if len(witnesses) > 1:
                lines.append(f"    further witnesses: {len(witnesses) - 1}")
    if report.notes:
        lines.append("Notes:")
        lines.extend(f"- {note}" for note in report.notes)
    return "\n".join(lines) + "\n"


def run_audit(args: argparse.Namespace) -> int:
    try:
        properties = parse_property_list(args.properties)
        model_path, bundle = load_bundle(args.model)
        model = bundle.credal_model()
        im = resolve_im(args.im, model)
        out_dir = determine_output_dir(args, model_path)
        json_path = safe_output_path(out_dir / "audit-report.json", force=args.force)
        text_path = safe_output_path(out_dir / "audit-report.txt", force=args.force)
        report = run_audits(model, im, properties, refinement=args.refinement)
        for name, count in report.thresholds_examined.items():
            emit_verbose(args, f"{name}: {count} thresholds examined")
        text_report = render_audit_text(model_path.name, im, report)
        payload = build_payload(
            "im_auditor.audit_report",
            command="audit",
            input_path=model_path,
            output_path=json_path,
            status="ok" if report.passed else "violations",
            body={"model": model_path.name, "im_source": im.source, **report.to_payload()},
            text_report=text_report,
            metrics={
                "properties": len(report.verdicts),
                "failed": sum(verdict == "fail" for verdict in report.verdicts.values()),
                "witnesses": len(report.witnesses),
            },
            warnings=list(report.notes),
        )
        payload = normalize_report_for_cli(payload)
        write_json(json_path, payload)
        write_text(text_path, text_report)
        if args.json:
            maybe_emit_json_stdout(payload, True)
        else:
            emit_human(text_report.rstrip(), quiet=args.quiet)
            emit_human(f"Report written: {json_path}", quiet=args.quiet)
        return EXIT_SUCCESS if report.passed else EXIT_VIOLATION
    except Exception as exc:
        eprint(str(exc))
        return classify_backend_exception(exc)


def run_combine(args: argparse.Namespace) -> int:
    try:
        left_path, left = load_bundle(args.left, exact=args.exact)
        right_path, right = load_bundle(args.right, exact=args.exact)
        if left.prior is None or right.prior is None:
            raise CliError("Both model files need a [prior] section to combine.")
        combined, conflict = dempster_combine(left.prior, right.prior)
        lines = [
            "im-auditor combine",
            f"Inputs: {left_path.name} + {right_path.name}",
            f"Conflict: {format_number(conflict)}",
            "Combined masses:",
            *[f"- {subset}: {format_number(mass)}" for subset, mass in combined.entries],
        ]
        text_report = "\n".join(lines) + "\n"
        output_path = None
        if args.output:
            output_path = safe_output_path(Path(args.output), force=args.force)
            result = ModelBundle(left.data_frame, combined.frame, left.likelihood, combined, left.interval_prior)
            write_text(output_path, serialize_model(result))
        payload = build_payload(
            "im_auditor.combine_summary",
            command="combine",
            input_path=left_path,
            output_path=output_path,
            body={"conflict": format_number(conflict), "combined": combined.to_payload()},
            text_report=text_report,
            metrics={"focal_sets": len(combined.focal)},
        )
        payload = normalize_report_for_cli(payload)
        if args.json:
            maybe_emit_json_stdout(payload, True)
        else:
            emit_human(text_report.rstrip(), quiet=args.quiet)
            if output_path:
                emit_human(f"Combined model written: {output_path}", quiet=args.quiet)
        return EXIT_SUCCESS
    except Exception as exc:
        eprint(str(exc))
        return classify_backend_exception(exc)


def run_build_im(args: argparse.Namespace) -> int:
    try:
        model_path, bundle = load_bundle(args.model)
        model = bundle.credal_model()
        im = resolve_im("gb" if args.command == "gb" else "dempster", model)
        output_path = Path(args.output) if args.output else determine_output_dir(args, model_path) / f"im-{args.command}.csv"
        output_path = safe_output_path(output_path, force=args.force)
        write_im_table(im, output_path)
        lines = [
            f"im-auditor {args.command}",
            f"Model: {model_path.name}",
            f"Data labels: {model.data_frame.size}",
            f"Hypotheses per data label: {1 << model.param_frame.size}",
            *[f"Note: {note}" for note in im.notes],
        ]
        text_report = "\n".join(lines) + "\n"
        payload = build_payload(
            "im_auditor.im_table_summary",
            command=args.command,
            input_path=model_path,
            output_path=output_path,
            body={"im_source": im.source, "notes": list(im.notes), "precise": im.is_precise()},
            text_report=text_report,
            metrics={"rows": model.data_frame.size * (1 << model.param_frame.size)},
            warnings=list(im.notes),
        )
        payload = normalize_report_for_cli(payload)
        if args.json:
            maybe_emit_json_stdout(payload, True)
        else:
            emit_human(text_report.rstrip(), quiet=args.quiet)
            emit_human(f"IM table written: {output_path}", quiet=args.quiet)
        return EXIT_SUCCESS
    except Exception as exc:
        eprint(str(exc))
        return classify_backend_exception(exc)


def load_curve_prior(spec: str | None) -> IntervalPrior:
    if spec is None:
        return DEFAULT_CURVE_PRIOR
    if spec == "vacuous":
        return IntervalPrior.vacuous()
    _, bundle = load_bundle(spec)
    if bundle.interval_prior is None:
        raise CliError(f"{spec} has no [interval-prior] section.")
    return bundle.interval_prior


def run_im_curve(args: argparse.Namespace) -> int:
    try:
        prior = load_curve_prior(args.prior)
        if not 0.0 < args.level < 1.0:
            raise CliError(f"--level must lie strictly between 0 and 1, got {args.level}")
        mc = CombinedIM(prior, samples=args.samples, seed=args.seed, workers=args.workers) if args.mc else None
        out_dir = determine_output_dir(args, Path("im-curve"))
        summary_path = safe_output_path(out_dir / "curve-summary.json", force=args.force)
        y_values = list(dict.fromkeys(args.y))
        entries = []
        for y in y_values:
            low = args.theta_min if args.theta_min is not None else y - args.span
            high = args.theta_max if args.theta_max is not None else y + args.span
            frame, worst_error = build_curve_frame(prior, y, theta_grid(low, high, args.points), mc=mc)
            curve_path = safe_output_path(out_dir / curve_filename(y), force=args.force)
            write_curve_csv(frame, curve_path)
            entry = interval_summary(prior, y, args.level)
            entry.update(
                {
                    "curve_file": curve_path.name,
                    "points": len(frame),
                    "max_gap_combined_vs_vacuous": max_curve_gap(frame),
                    "mc_max_std_error": worst_error,
                }
            )
            entries.append(entry)
            emit_verbose(args, f"y={y:g}: wrote {len(frame)} rows to {curve_path}")
        lines = ["im-auditor im-curve", f"Level: {args.level:g}", f"Engine: {'monte-carlo' if mc else 'analytic'}"]
        for entry in entries:
            lines.append(
                f"- y={entry['y']:g}: vacuous [{entry['vacuous']['lower']:.4f}, {entry['vacuous']['upper']:.4f}] "
                f"length {entry['vacuous']['length']:.4f}; combined [{entry['combined']['lower']:.4f}, "
                f"{entry['combined']['upper']:.4f}] length {entry['combined']['length']:.4f}"
            )
        text_report = "\n".join(lines) + "\n"
        payload = build_payload(
            "im_auditor.curve_summary",
            command="im-curve",
            input_path=Path(args.prior) if args.prior and args.prior != "vacuous" else None,
            output_path=summary_path,
            body={
                "prior": [
                    {"lower_bound": str(lo), "upper_bound": str(hi), "mass": format_number(mass)}
                    for lo, hi, mass in prior.focal
                ],
                "engine": {"kind": "monte-carlo", "samples": args.samples, "seed": args.seed} if mc else {"kind": "analytic"},
                "curves": entries,
            },
            text_report=text_report,
            metrics={"curves": len(entries), "points": args.points},
        )
        payload = normalize_report_for_cli(payload)
        write_json(summary_path, payload)
        if args.json:
            maybe_emit_json_stdout(payload, True)
        else:
            emit_human(text_report.rstrip(), quiet=args.quiet)
            emit_human(f"Curves written: {out_dir}", quiet=args.quiet)
        return EXIT_SUCCESS
    except Exception as exc:
        eprint(str(exc))
        return classify_backend_exception(exc)


def parse_die(spec: str) -> tuple[float, float]:
    probability, sep, weight = spec.partition(":")
    try:
        return float(Fraction(probability)), float(Fraction(weight)) if sep else 1.0
    except (ValueError, ZeroDivisionError):
        raise CliError(f"Bad die '{spec}'. Use ace_probability[:weight], e.g. 1/6:0.5") from None


def witness_for_sidebet(source: str, model: CredalModel, im: IMTable) -> Witness:
    if source == "false_confidence":
        witness = false_confidence_search(model.likelihood, im)
    elif source == "validity":
        found = audit_validity(model, im).witnesses
        witness = found[0] if found else None
    else:
        found = audit_invulnerability(model, im).witnesses
        witness = found[0] if found else None
    if witness is None:
        raise CliError(f"No {source} witness exists for this IM; nothing for the witness strategy to play.")
    return witness


def finish_simulation(
    args: argparse.Namespace,
    *,
    kind: str,
    input_path: Path | None,
    body: dict[str, Any],
    lines: list[str],
    frames: dict[str, Any],
) -> int:
    out_dir = determine_output_dir(args, Path(f"simulate-{kind}"))
    summary_path = safe_output_path(out_dir / "simulation-summary.json", force=args.force)
    written = {}
    for name, frame in frames.items():
        path = safe_output_path(out_dir / name, force=args.force)
        frame.to_csv(path, index=False, lineterminator="\n")
        written[name] = path.name
    text_report = "\n".join(lines) + "\n"
    payload = build_payload(
        "im_auditor.simulation_summary",
        command=f"simulate {kind}",
        input_path=input_path,
        output_path=summary_path,
        body={"simulation": kind, "outputs": written, **body},
        text_report=text_report,
        metrics={"seed": args.seed},
    )
    payload = normalize_report_for_cli(payload)
    write_json(summary_path, payload)
    if args.json:
        maybe_emit_json_stdout(payload, True)
    else:
        emit_human(text_report.rstrip(), quiet=args.quiet)
        emit_human(f"Simulation outputs: {out_dir}", quiet=args.quiet)
    return EXIT_SUCCESS


def run_simulate(args: argparse.Namespace) -> int:
    try:
        policy = BetPolicy(args.odds, args.stake)
        if args.simulation == "agent1":
            trajectory = simulate_agent1(args.p_ace, policy, args.rounds, args.seed, start_capital=args.start_capital)
            body = {
                "p_ace": args.p_ace,
                "rounds": args.rounds,
                "mean_increment": trajectory.mean_increment,
                "std_error": trajectory.std_error,
                "expected_drift": policy.drift(args.p_ace),
                "final_capital": float(trajectory.capital[-1]),
                "ruin_round": trajectory.ruin_round,
            }
            lines = [
                "im-auditor simulate agent1",
                f"Mean profit per round: {body['mean_increment']:.6f} ± {body['std_error']:.6f}",
                f"Expected drift: {body['expected_drift']:.6f}",
                f"Ruin round: {trajectory.ruin_round if trajectory.ruin_round else 'none'}",
            ]
            return finish_simulation(args, kind="agent1", input_path=None, body=body, lines=lines,
                                     frames={"trajectory.csv": trajectory.to_frame()})
        if args.simulation == "agent2":
            box = DieBox(tuple(parse_die(spec) for spec in (args.die or ["1/6"])))
            estimate = simulate_agent2_wager(
                box, policy, args.horizon, args.replications, args.seed,
                wager_odds=args.wager_odds, start_capital=args.start_capital, workers=args.workers,
            )
            lines = [
                "im-auditor simulate agent2",
                f"Ruin probability by round {args.horizon}: {estimate.ruin_probability:.6f} ± {estimate.std_error:.6f}",
                f"Wager at {args.wager_odds:g}:1 favorable to Agent 2: {'yes' if estimate.favorable else 'no'}",
            ]
            return finish_simulation(args, kind="agent2", input_path=None, body=estimate.to_payload(), lines=lines, frames={})

        model_path, bundle = load_bundle(args.model)
        model = bundle.credal_model()
        im = resolve_im(args.im, model)
        witness = witness_for_sidebet(args.witness_from, model, im) if args.strategy == "witness" else None
        generating = witness.parameter if (witness and args.theta == "witness") else args.theta
        if generating == "witness":
            raise CliError("--theta witness needs a witness that names a parameter (use --witness-from false_confidence).")
        config = SideBetGameConfig(
            model=model,
            im=im,
            strategy=args.strategy,
            rounds=args.rounds,
            seed=args.seed,
            generating_parameter=None if args.vertex else generating,
            generating_vertex=args.vertex,
            witness=witness,
            start_capital=args.start_capital,
        )
        outcome = simulate_sidebet_game(config)
        body = {"model": model_path.name, "im_source": im.source, "strategy": args.strategy, **outcome.to_payload()}
        lines = [
            "im-auditor simulate sidebet",
            f"Strategy: {args.strategy}; accepted gambles: {outcome.accepted} of {outcome.rounds}",
            f"Mean payoff per round: {outcome.mean_payoff_per_round:.6f} ± {outcome.std_error:.6f}",
            f"Mean payoff per accepted gamble: {outcome.mean_payoff_per_accepted:.6f}",
        ]
        if outcome.expected_payoff is not None:
            lines.append(f"Model-expected payoff per round: {outcome.expected_payoff:.6f}")
        return finish_simulation(
            args, kind="sidebet", input_path=model_path, body=body, lines=lines,
            frames={"trajectory.csv": outcome.trajectory.to_frame(), "gamble-log.csv": outcome.gamble_log},
        )
    except Exception as exc:
        eprint(str(exc))
        return classify_backend_exception(exc)


def run_explain(args: argparse.Namespace) -> int:
    if args.property not in PROPERTY_DEFINITIONS:
        eprint(f"Unknown property: {args.property}. Known properties: {', '.join(PROPERTY_DEFINITIONS)}")
        return EXIT_INPUT_ERROR
    payload = explain_property(args.property)
    if args.json:
        maybe_emit_json_stdout(payload, True)
    else:
        print(
            "\n".join(
                [
                    f"Property: {args.property} ({payload['title']})",
                    f"What it checks: {payload['description']}",
                    f"Thresholds examined: {payload['thresholds']}",
                    f"What a witness means: {payload['witness']}",
                    f"Needs the prior: {'yes' if payload['requires_prior'] else 'no'}",
                    f"Affects the exit code: {'no' if payload.get('informational') else 'yes'}",
                ]
            )
        )
    return EXIT_SUCCESS


def run_version() -> int:
    print(TOOL_VERSION)
    return EXIT_SUCCESS


def add_logging_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-q", "--quiet", action="store_true", help="Minimal human logs")
    parser.add_argument("-v", "--verbose", action="store_true", help="More human logs")


def add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-o", "--out", dest="out_dir", help="Output directory")
    parser.add_argument("--force", action="store_true", help="Overwrite existing outputs")
    parser.add_argument("--json", action="store_true", help="Write machine JSON to stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = ImAuditorArgumentParser(prog="im-auditor", description="Audit inferential models built from partial prior information.")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ImAuditorArgumentParser)

    combine = subparsers.add_parser("combine", help="Dempster-combine the priors of two model files.")
    combine.add_argument("left", help="First model file (or bundled:NAME)")
    combine.add_argument("right", help="Second model file (or bundled:NAME)")
    combine.add_argument("--output", help="Write the combined model to this path")
    combine.add_argument("--exact", action="store_true", help="Use exact rational arithmetic for masses")
    combine.add_argument("--force", action="store_true", help="Overwrite existing outputs")
    combine.add_argument("--json", action="store_true", help="Write machine JSON to stdout")
    add_logging_flags(combine)

    for name, help_text in (
        ("gb", "Build the generalized Bayes IM table."),
        ("dempster", "Build the finite Dempster's-rule IM table."),
    ):
        builder = subparsers.add_parser(name, help=help_text)
        builder.add_argument("model", help="Model file, bundled:NAME or builtin:location9")
        builder.add_argument("--output", help="Explicit IM table CSV path")
        add_output_flags(builder)
        add_logging_flags(builder)

    curve = subparsers.add_parser("im-curve", help="Write lower/upper CDF curves of the location IMs.")
    curve.add_argument("--y", type=float, nargs="+", default=list(DEFAULT_Y_VALUES), help="Observed y values")
    curve.add_argument("--theta-min", type=float, help="Grid start (default y - span)")
    curve.add_argument("--theta-max", type=float, help="Grid end (default y + span)")
    curve.add_argument("--span", type=float, default=DEFAULT_SPAN, help="Half-width of the default grid")
    curve.add_argument("--points", type=int, default=DEFAULT_POINTS, help="Grid points per curve")
    curve.add_argument("--prior", help="Model file with an [interval-prior] section, or 'vacuous'")
    curve.add_argument("--level", type=float, default=0.95, help="Credible interval level")
    curve.add_argument("--mc", action="store_true", help="Estimate combined curves by Monte Carlo")
    curve.add_argument("--samples", type=int, default=100_000, help="Monte Carlo samples per θ")
    curve.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Monte Carlo seed")
    curve.add_argument("--workers", type=int, default=1, help="Monte Carlo worker threads")
    add_output_flags(curve)
    add_logging_flags(curve)

    audit = subparsers.add_parser("audit", help="Audit an IM table against a credal model.")
    audit.add_argument("model", help="Model file, bundled:NAME or builtin:location9")
    audit.add_argument("--im", default="gb", help="gb, vacuous, dempster, consonant, bayes:uniform, bayes:<label>=<p>,... or file:PATH")
    audit.add_argument("--properties", default="all", help="all or a comma-separated property list")
    audit.add_argument("--refinement", type=int, default=0, help="Extra uniform thresholds per scan")
    add_output_flags(audit)
    add_logging_flags(audit)

    simulate = subparsers.add_parser("simulate", help="Run the betting-game simulators.")
    games = simulate.add_subparsers(dest="simulation", required=True, parser_class=ImAuditorArgumentParser)
    agent1 = games.add_parser("agent1", help="Agent 1 books bets against an Ace.")
    agent1.add_argument("--p-ace", type=float, default=1 / 6, help="Ace probability of the die")
    agent1.add_argument("--rounds", type=int, default=100_000, help="Rounds to play")
    agent2 = games.add_parser("agent2", help="Agent 2 wagers on Agent 1's ruin.")
    agent2.add_argument("--die", action="append", help="ace_probability[:weight]; repeat for a box of dice")
    agent2.add_argument("--horizon", type=int, default=100, help="Rounds per replication")
    agent2.add_argument("--replications", type=int, default=10_000, help="Replications")
    agent2.add_argument("--wager-odds", type=float, default=9.0, help="Agent 2's odds on ruin")
    agent2.add_argument("--workers", type=int, default=1, help="Worker threads")
    sidebet = games.add_parser("sidebet", help="Statistician versus scrutinizer side-bets.")
    sidebet.add_argument("model", help="Model file, bundled:NAME or builtin:location9")
    sidebet.add_argument("--im", default="gb", help="IM source, as for audit")
    sidebet.add_argument("--strategy", choices=STRATEGIES, default="exhaustive", help="Scrutinizer strategy")
    sidebet.add_argument("--witness-from", choices=["false_confidence", "validity", "invulnerability"],
                         default="false_confidence", help="Audit that supplies the witness strategy's gamble")
    generating = sidebet.add_mutually_exclusive_group(required=True)
    generating.add_argument("--theta", help="Generating parameter label, or 'witness' for the witness's parameter")
    generating.add_argument("--vertex", action="store_true", help="Draw θ from the least-favorable prior vertex")
    sidebet.add_argument("--rounds", type=int, default=100_000, help="Rounds to play")
    for game in (agent1, agent2, sidebet):
        game.add_argument("--odds", type=float, default=4.0, help="Odds against an Ace accepted by Agent 1")
        game.add_argument("--stake", type=float, default=1.0, help="Stake unit")
        game.add_argument("--start-capital", type=float, default=0.0, help="Starting capital")
        game.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
        add_output_flags(game)
        add_logging_flags(game)

    explain = subparsers.add_parser("explain", help="Explain an audit property.")
    explain.add_argument("property", help="Property name")
    explain.add_argument("--json", action="store_true", help="Write machine JSON to stdout")

    subparsers.add_parser("version", help="Print version")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if args.command == "audit":
            return run_audit(args)
        if args.command == "combine":
            return run_combine(args)
        if args.command in ("gb", "dempster"):
            return run_build_im(args)
        if args.command == "im-curve":
            return run_im_curve(args)
        if args.command == "simulate":
            return run_simulate(args)
        if args.command == "explain":
            return run_explain(args)
        if args.command == "version":
            return run_version()
        raise CliError(f"Unknown command: {args.command}", EXIT_INPUT_ERROR)
    except CliError as exc:
        eprint(str(exc))
        return exc.code


if __name__ == "__main__":
    raise SystemExit(main())
