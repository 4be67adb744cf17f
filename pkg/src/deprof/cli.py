"""Command-line interface: discovery, validation, scenarios, and the server.

Grammar: ``discover {fd|afd}``, ``validate mfd``, ``scenario {typo|dedup|
anomaly}``, ``serve``. Every flag can also come from a TOML config file
(``--config``); an explicit flag wins. Exit codes: 0 success, 1 a validated
statement does not hold, 2 usage or input errors.

Interactive prompts (dedup decisions, anomaly acceptance) read stdin, can
be scripted with ``--answers FILE`` (one answer per line), or bypassed
entirely with ``--auto``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional, Sequence

try:
    import tomllib  # python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import report
from .afd import as_fraction, discover_afds
from .anomaly import (
    AnomalyState,
    SweepConfig,
    advance_canonical,
    afd_probe,
    fd_diff,
    mfd_sweep,
    suggest_sweep_bound,
)
from .dedup import DedupConfig, DedupSession
from .fd import FD, discover_fds
from .mfd import METRIC_EUCLIDEAN, MFDStatement, MetricTypeError, validate_mfd
from .relation import CsvConfig, CsvFormatError, Relation, load_csv, to_csv
from .typo import TypoConfig, mine_almost_fds, typo_report

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2

STORAGE_ENV = "DEPROF_STORAGE"


class CliError(Exception):
    """Usage-level problem; reported with its message, exit code 2."""


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USAGE
    try:
        apply_config_file(args)
        return dispatch(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvFormatError, MetricTypeError, FileNotFoundError, ValueError, KeyError) as exc:
        # engine-level validation problems are usage errors at this surface
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {message}", file=sys.stderr)
        return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deprof",
        description="dependency-driven data profiling and data-quality workflows",
    )
    parser.set_defaults(command=None)
    sub = parser.add_subparsers(dest="command")

    discover = sub.add_parser("discover", help="mine dependency instances")
    discover_sub = discover.add_subparsers(dest="subcommand", required=True)

    d_fd = discover_sub.add_parser("fd", help="exact minimal functional dependencies")
    _common_options(d_fd)
    d_fd.add_argument("--max-lhs", type=int, default=None)

    d_afd = discover_sub.add_parser("afd", help="approximate FDs under a g1 threshold")
    _common_options(d_afd)
    d_afd.add_argument("--max-lhs", type=int, default=None)
    d_afd.add_argument("--threshold", default=None, help="g1 error cap, e.g. 0.05 or 1/20")

    validate = sub.add_parser("validate", help="validate one dependency instance")
    validate_sub = validate.add_subparsers(dest="subcommand", required=True)
    v_mfd = validate_sub.add_parser("mfd", help="metric FD validation")
    _common_options(v_mfd)
    v_mfd.add_argument("--lhs", default=None, help="comma-separated attribute names or indexes")
    v_mfd.add_argument("--rhs", default=None, help="comma-separated attribute names or indexes")
    v_mfd.add_argument("--metric", choices=["levenshtein", "euclidean"], default=None)
    v_mfd.add_argument("-p", type=float, default=None, help="distance threshold")

    scenario = sub.add_parser("scenario", help="human-steered data-quality workflows")
    scenario_sub = scenario.add_subparsers(dest="subcommand", required=True)

    s_typo = scenario_sub.add_parser("typo", help="typo detection via almost-holding FDs")
    _common_options(s_typo)
    s_typo.add_argument("--threshold", default=None)
    s_typo.add_argument("--radius", type=float, default=None)
    s_typo.add_argument("--ratio", type=float, default=None)
    s_typo.add_argument("--max-lhs", type=int, default=None)
    s_typo.add_argument("--fd", default=None, help="inspect one dependency, e.g. 'city->zip'")
    s_typo.add_argument("--invert-display", action="store_true", default=None)

    s_dedup = scenario_sub.add_parser("dedup", help="sorted-neighborhood deduplication")
    _common_options(s_dedup)
    s_dedup.add_argument("--threshold", default=None)
    s_dedup.add_argument("--window", type=int, default=None)
    s_dedup.add_argument("-k", type=int, default=None, help="minimum matching attributes")
    s_dedup.add_argument("--exclude-keys", default=None, help="comma-separated attributes")
    s_dedup.add_argument("--key", default=None, help="force the sort key attribute")
    s_dedup.add_argument(
        "--auto",
        choices=["keep-first", "keep-second", "skip"],
        default=None,
        help="answer every proposal the same way (non-interactive)",
    )
    s_dedup.add_argument("--answers", default=None, help="file with one answer per line")
    s_dedup.add_argument("--journal", default=None, help="write the session journal here")
    s_dedup.add_argument("--result-csv", default=None, help="write the cleaned table here")

    s_anomaly = scenario_sub.add_parser(
        "anomaly", help="FD drift across arriving partitions"
    )
    _common_options(s_anomaly, multi_dataset=True)
    s_anomaly.add_argument(
        "--thresholds", default=None, help="comma-separated AFD probe thresholds"
    )
    s_anomaly.add_argument("--metric", choices=["levenshtein", "euclidean"], default=None)
    s_anomaly.add_argument("--step", type=float, default=None)
    s_anomaly.add_argument("-d", type=float, default=None, help="sweep upper bound")
    s_anomaly.add_argument("--max-lhs", type=int, default=None)
    s_anomaly.add_argument(
        "--cumulative", action="store_true", default=None, help="union partitions as they arrive"
    )
    s_anomaly.add_argument("--auto", choices=["accept", "reject"], default=None)
    s_anomaly.add_argument("--answers", default=None)
    s_anomaly.add_argument("--state", default=None, help="anomaly state JSON path")

    serve = sub.add_parser("serve", help="run the HTTP task service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8765)
    serve.add_argument("--storage", default=None, help=f"storage root (or ${STORAGE_ENV})")
    serve.add_argument("--workers", type=int, default=2)
    serve.add_argument("--config", default=None)

    return parser


def _common_options(p: argparse.ArgumentParser, multi_dataset: bool = False) -> None:
    if multi_dataset:
        p.add_argument("datasets", nargs="+", help="partition CSV paths, in arrival order")
    else:
        p.add_argument("dataset", help="CSV path")
    p.add_argument("--separator", default=None)
    p.add_argument("--no-header", action="store_true", default=None)
    p.add_argument("--null-token", default=None)
    p.add_argument("--nulls-distinct", action="store_true", default=None)
    p.add_argument("--output", choices=["human", "json"], default=None)
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="TOML file with defaults for any flag")


_DEFAULTS = {
    "separator": ",",
    "no_header": False,
    "null_token": "",
    "nulls_distinct": False,
    "output": "human",
    "threads": 1,
    "seed": 0,
    "max_lhs": 3,
    "threshold": "0.05",
    "radius": 2.0,
    "ratio": 0.5,
    "window": 5,
    "k": 2,
    "metric": METRIC_EUCLIDEAN,
    "step": 1.0,
    "invert_display": False,
    "cumulative": False,
    "thresholds": "0.001,0.01,0.05,0.1",
}


def apply_config_file(args: argparse.Namespace) -> None:
    """Fill unset options from the TOML config, then hard defaults."""
    config: dict[str, Any] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}")
        config = tomllib.loads(path.read_text(encoding="utf-8"))
    for key, value in vars(args).copy().items():
        if value is None and key in config:
            setattr(args, key, config[key])
    for key, value in _DEFAULTS.items():
        if getattr(args, key, "sentinel") is None:
            setattr(args, key, value)


def csv_config(args: argparse.Namespace) -> CsvConfig:
    return CsvConfig(
        separator=args.separator,
        has_header=not args.no_header,
        null_token=args.null_token,
        nulls_distinct=args.nulls_distinct,
    )


def load_dataset(path_str: str, args: argparse.Namespace) -> Relation:
    path = Path(path_str)
    if not path.exists():
        raise CliError(f"dataset not found: {path}")
    return load_csv(path, csv_config(args))


def emit(kind: str, doc: dict, args: argparse.Namespace) -> None:
    payload = report.canonical_json_bytes(doc)
    if getattr(args, "out", None):
        Path(args.out).write_bytes(payload)
    if args.output == "json":
        sys.stdout.write(payload.decode("utf-8"))
    else:
        sys.stdout.write(report.render_human(kind, doc))


def dispatch(args: argparse.Namespace) -> int:
    command = args.command
    if command == "discover":
        return _run_discover(args)
    if command == "validate":
        return _run_validate(args)
    if command == "scenario":
        return _run_scenario(args)
    if command == "serve":
        return _run_serve(args)
    raise CliError(f"unknown command: {command}")


def _run_discover(args: argparse.Namespace) -> int:
    relation = load_dataset(args.dataset, args)
    if args.subcommand == "fd":
        fdset = discover_fds(relation, max_lhs=args.max_lhs, threads=args.threads)
        doc = report.fdset_to_json(fdset)
        doc["params"] = {"max_lhs": args.max_lhs, "seed": args.seed}
        emit("fd_discovery", doc, args)
        return EXIT_OK
    if args.subcommand == "afd":
        threshold = _parse_threshold(args.threshold)
        afds = discover_afds(relation, threshold, args.max_lhs, threads=args.threads)
        doc = {
            "provenance": relation.source,
            "schema": list(relation.attribute_names()),
            "threshold": str(threshold),
            "params": {"max_lhs": args.max_lhs, "seed": args.seed},
            "afds": [report.afd_to_json(a, relation.attribute_names()) for a in afds],
        }
        emit("afd_discovery", doc, args)
        return EXIT_OK
    raise CliError(f"unknown discover subcommand: {args.subcommand}")


def _parse_threshold(raw: Any) -> Fraction:
    try:
        value = as_fraction(raw)
    except (ValueError, TypeError, ArithmeticError) as exc:
        raise CliError(f"bad threshold {raw!r}: {exc}") from exc
    if value < 0:
        raise CliError("threshold must be >= 0")
    return value


def _attr_list(raw: Optional[str], relation: Relation, option: str) -> tuple[int, ...]:
    if not raw:
        raise CliError(f"missing required option {option}")
    out = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            out.append(relation.attribute_index(int(token) if token.isdigit() else token))
        except KeyError as exc:
            raise CliError(exc.args[0]) from exc
    if not out:
        raise CliError(f"{option} names no attributes")
    return tuple(out)


def _run_validate(args: argparse.Namespace) -> int:
    relation = load_dataset(args.dataset, args)
    if args.subcommand != "mfd":
        raise CliError(f"unknown validate subcommand: {args.subcommand}")
    if args.p is None:
        raise CliError("missing required option -p")
    rhs = _attr_list(args.rhs, relation, "--rhs")
    lhs = _attr_list(args.lhs, relation, "--lhs")
    stmt = MFDStatement(lhs=lhs, rhs=rhs, metric=args.metric, p=args.p)
    verdict = validate_mfd(relation, stmt)
    doc = report.verdict_to_json(verdict, stmt, relation.attribute_names())
    doc["params"] = {"seed": args.seed}
    emit("mfd_validation", doc, args)
    return EXIT_OK if verdict.holds else EXIT_VALIDATION_FAILED


def _run_scenario(args: argparse.Namespace) -> int:
    if args.subcommand == "typo":
        return _scenario_typo(args)
    if args.subcommand == "dedup":
        return _scenario_dedup(args)
    if args.subcommand == "anomaly":
        return _scenario_anomaly(args)
    raise CliError(f"unknown scenario: {args.subcommand}")


def _scenario_typo(args: argparse.Namespace) -> int:
    relation = load_dataset(args.dataset, args)
    cfg = TypoConfig(
        threshold=_parse_threshold(args.threshold),
        radius=args.radius,
        ratio=args.ratio,
        max_lhs=args.max_lhs,
    )
    mined = mine_almost_fds(relation, cfg, threads=args.threads)
    if args.fd:
        wanted = _parse_fd(args.fd, relation)
        inspected = [a for a in mined if a.fd == wanted]
        if not inspected:
            raise CliError(f"dependency {args.fd!r} was not mined at this threshold")
    else:
        inspected = mined
    schema = relation.attribute_names()
    doc = {
        "provenance": relation.source,
        "schema": list(schema),
        "params": {
            "threshold": str(cfg.threshold),
            "radius": cfg.radius,
            "ratio": cfg.ratio,
            "max_lhs": cfg.max_lhs,
            "invert_display": bool(args.invert_display),
            "seed": args.seed,
        },
        "mined": [report.afd_to_json(a, schema) for a in mined],
        "reports": [
            report.typo_report_to_json(
                typo_report(relation, cfg, a, invert_display=bool(args.invert_display)),
                schema,
            )
            for a in inspected
        ],
    }
    if args.output == "human":
        for sub in doc["reports"]:
            sys.stdout.write(report.render_human("scenario_typo", sub))
        if not doc["reports"]:
            sys.stdout.write("no almost-holding dependencies at this threshold\n")
        if args.out:
            Path(args.out).write_bytes(report.canonical_json_bytes(doc))
    else:
        emit("scenario_typo", doc, args)
    return EXIT_OK


def _parse_fd(raw: str, relation: Relation) -> FD:
    if "->" not in raw:
        raise CliError(f"bad dependency syntax {raw!r}; expected 'lhs1,lhs2->rhs'")
    lhs_raw, rhs_raw = raw.split("->", 1)
    rhs = _attr_list(rhs_raw, relation, "--fd rhs")
    lhs = _attr_list(lhs_raw, relation, "--fd lhs") if lhs_raw.strip() else ()
    if len(rhs) != 1:
        raise CliError("a dependency has exactly one rhs attribute")
    return FD(lhs=lhs, rhs=rhs[0])


class _Answers:
    """Scripted or interactive answer source for prompt-driven scenarios."""

    def __init__(self, auto: Optional[str], answers_path: Optional[str]):
        self.auto = auto
        self.lines: Optional[list[str]] = None
        if answers_path:
            path = Path(answers_path)
            if not path.exists():
                raise CliError(f"answers file not found: {path}")
            self.lines = [
                line.strip()
                for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip() and not line.strip().startswith("#")
            ]

    def next(self, prompt: str, auto_answer: Optional[str]) -> str:
        if self.auto is not None and auto_answer is not None:
            return auto_answer
        if self.lines is not None:
            if not self.lines:
                return "stop"
            return self.lines.pop(0)
        if not sys.stdin.isatty():
            line = sys.stdin.readline()
            if not line:
                return "stop"
            return line.strip()
        return input(prompt).strip()  # pragma: no cover


def _scenario_dedup(args: argparse.Namespace) -> int:
    relation = load_dataset(args.dataset, args)
    excluded: frozenset[int] = frozenset()
    if args.exclude_keys:
        excluded = frozenset(_attr_list(args.exclude_keys, relation, "--exclude-keys"))
    cfg = DedupConfig(
        threshold=_parse_threshold(args.threshold),
        window=args.window,
        k=args.k,
        excluded_keys=excluded,
    )
    chosen = None
    session = DedupSession(relation, cfg)
    if args.key:
        from .dedup import rank_dedup_keys

        wanted = _attr_list(args.key, relation, "--key")[0]
        ranked = rank_dedup_keys(relation, cfg)
        match = [c for c in ranked if c.lhs == wanted]
        if not match:
            raise CliError(f"attribute {args.key!r} is not a key candidate here")
        session = DedupSession(relation, cfg, chosen=match[0])

    auto_map = {"keep-first": "keep a", "keep-second": "keep b", "skip": "skip"}
    answers = _Answers(args.auto, args.answers)
    auto_answer = auto_map.get(args.auto) if args.auto else None

    interactive_log = []
    while True:
        pair = session.propose()
        if pair is None:
            break
        prompt = (
            f"pair ({pair.row_a}, {pair.row_b}) matches on {pair.match_count} attrs "
            "[keep a|keep b|skip|stop] (append 'copy i,j' to copy attrs): "
        )
        answer = answers.next(prompt, auto_answer)
        decision = _parse_dedup_answer(answer, relation)
        if decision is None:
            break
        action, copy_attrs = decision
        if action == "skip":
            session.skip(pair)
        else:
            session.decide(pair, action, copy_attrs=copy_attrs)
        interactive_log.append({"pair": [pair.row_a, pair.row_b], "answer": answer})

    journal_doc = session.journal_json()
    journal_doc["dataset"] = relation.source
    journal_doc["result_fingerprint"] = session.state_hash()
    if args.journal:
        Path(args.journal).write_bytes(report.canonical_json_bytes(journal_doc))
    if args.result_csv:
        Path(args.result_csv).write_text(to_csv(session.current), encoding="utf-8")

    schema = relation.attribute_names()
    doc = {
        "provenance": relation.source,
        "schema": list(schema),
        "config": {
            "threshold": str(cfg.threshold),
            "window": cfg.window,
            "k": cfg.k,
            "excluded_keys": sorted(cfg.excluded_keys),
            "seed": args.seed,
        },
        "chosen_key": report.key_candidate_to_json(session.chosen, schema),
        "pairs": [report.pair_to_json(p, relation) for p in session.pairs],
        "journal": journal_doc,
        "rows_before": relation.row_count,
        "rows_after": session.current.row_count,
    }
    emit("scenario_dedup", doc, args)
    return EXIT_OK


def _parse_dedup_answer(
    answer: str, relation: Relation
) -> Optional[tuple[str, tuple[int, ...]]]:
    text = answer.strip().lower()
    if text in ("stop", "quit", "q", ""):
        return None
    if text == "skip":
        return ("skip", ())
    parts = text.split()
    if parts[0] != "keep" or len(parts) < 2 or parts[1] not in ("a", "b"):
        raise CliError(f"bad answer {answer!r}; expected 'keep a|keep b|skip|stop'")
    copy_attrs: tuple[int, ...] = ()
    if len(parts) >= 4 and parts[2] == "copy":
        copy_attrs = _attr_list(parts[3], relation, "copy list")
    return (parts[1], copy_attrs)


def _scenario_anomaly(args: argparse.Namespace) -> int:
    paths = [Path(p) for p in args.datasets]
    for path in paths:
        if not path.exists():
            raise CliError(f"dataset not found: {path}")
    thresholds = [t.strip() for t in str(args.thresholds).split(",") if t.strip()]
    answers = _Answers(args.auto, args.answers)
    auto_answer = {"accept": "accept", "reject": "reject"}.get(args.auto) if args.auto else None

    state = AnomalyState()
    if args.state and Path(args.state).exists():
        state = report.anomaly_state_from_json(
            json.loads(Path(args.state).read_text(encoding="utf-8"))
        )

    partitions_doc = []
    cumulative_rows: list[str] = []
    for path in paths:
        if args.cumulative:
            cumulative_rows.append(path.read_text(encoding="utf-8"))
            relation = _load_cumulative(cumulative_rows, path, args)
        else:
            relation = load_csv(path, csv_config(args))
        fds = discover_fds(relation, max_lhs=args.max_lhs, threads=args.threads)
        schema = relation.attribute_names()

        if state.canonical_fds is None:
            diff_doc = {"lost": [], "gained": [report.fd_to_json(fd, schema) for fd in fds.fds]}
            probes = []
        else:
            lost, gained = fd_diff(state.canonical_fds, fds)
            diff_doc = {
                "lost": [report.fd_to_json(fd, schema) for fd in lost],
                "gained": [report.fd_to_json(fd, schema) for fd in gained],
            }
            probes = []
            for fd in lost:
                g1, first = afd_probe(relation, fd, thresholds)
                probe_doc = {
                    "fd": report.fd_to_json(fd, schema),
                    "g1": {
                        "numerator": g1.numerator,
                        "denominator": g1.denominator,
                        "decimal": float(g1),
                    },
                    "first_holding": str(first) if first is not None else None,
                }
                if relation.attributes[fd.rhs].is_numeric and args.metric == METRIC_EUCLIDEAN:
                    bound = args.d if args.d is not None else max(
                        args.step, suggest_sweep_bound(relation, fd.rhs)
                    )
                    sweep = mfd_sweep(
                        relation, fd, SweepConfig(d=bound, step=args.step, metric=args.metric)
                    )
                    probe_doc["sweep"] = report.sweep_to_json(sweep)
                    probe_doc["sweep"]["d"] = bound
                probes.append(probe_doc)

        answer = answers.next(
            f"accept partition {path.name} into the canonical set? [accept/reject]: ",
            auto_answer,
        )
        accepted = answer.lower().startswith("accept") or answer.lower() in ("y", "yes")
        if accepted:
            accepted_mfd = None
            for probe_doc in probes:
                sweep = probe_doc.get("sweep")
                if sweep and sweep["found"]:
                    fd_doc = probe_doc["fd"]
                    accepted_mfd = MFDStatement(
                        lhs=tuple(fd_doc["lhs_indexes"]),
                        rhs=(fd_doc["rhs_index"],),
                        metric=args.metric,
                        p=sweep["p"],
                    )
            state = advance_canonical(state, str(path), fds, accepted_mfd)

        partitions_doc.append(
            {
                "partition_id": str(path),
                "fd_count": len(fds),
                "diff": diff_doc,
                "probes": probes,
                "accepted": accepted,
            }
        )

    if args.state:
        Path(args.state).write_bytes(
            report.canonical_json_bytes(report.anomaly_state_to_json(state))
        )

    doc = {
        "params": {
            "thresholds": thresholds,
            "metric": args.metric,
            "step": args.step,
            "d": args.d,
            "max_lhs": args.max_lhs,
            "cumulative": bool(args.cumulative),
            "seed": args.seed,
        },
        "partitions": partitions_doc,
        "final_state": report.anomaly_state_to_json(state),
    }
    emit("scenario_anomaly", doc, args)
    return EXIT_OK


def _load_cumulative(texts: list[str], last: Path, args: argparse.Namespace) -> Relation:
    config = csv_config(args)
    if not config.has_header:
        merged = "".join(t if t.endswith("\n") else t + "\n" for t in texts)
        return load_csv(merged, config)
    lines: list[str] = []
    for i, text in enumerate(texts):
        rows = text.splitlines()
        lines.extend(rows if i == 0 else rows[1:])
    return load_csv("\n".join(lines), config)


def _run_serve(args: argparse.Namespace) -> int:
    storage = args.storage or os.environ.get(STORAGE_ENV)
    if not storage:
        raise CliError(f"no storage root: pass --storage or set ${STORAGE_ENV}")
    import uvicorn

    from .service.app import create_app

    app = create_app(Path(storage), workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
