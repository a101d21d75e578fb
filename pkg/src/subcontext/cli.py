"""Operator command line: ingest corpora, chat, sweep parameters, serve.

Exit codes: 0 success, 1 usage error, 2 runtime failure. The chat REPL
prints per-turn diagnostics (routed case, located sentence, candidate
scores) so a scripted conversation is fully auditable from its output.
"""

from __future__ import annotations

import argparse
import sys

from . import engine as engine_mod
from . import service as service_mod
from .corpus import ingest, load_index, save_entailment_pairs, save_index
from .engine import Engine, EngineConfig, parse_grid, sweep, write_sweep_csv
from .errors import PipelineError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems instead of exiting 2."""

    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="subcontext", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="read a directory of case .txt files into an index")
    p_ingest.add_argument("source", help="directory containing case text files")
    p_ingest.add_argument("-o", "--output", required=True, help="index file to write")
    p_ingest.add_argument("--min-tokens", type=int, default=3, help="minimum sentence length")
    p_ingest.add_argument("--pairs-out", help="also write the entailment-pair training file")

    p_chat = sub.add_parser("chat", help="interactive conversation over an index")
    p_chat.add_argument("index", help="index file from `ingest`")
    _add_engine_flags(p_chat)
    p_chat.add_argument("--quiet", action="store_true", help="print replies only")

    p_classify = sub.add_parser("classify", help="route a query to its case id")
    p_classify.add_argument("index")
    p_classify.add_argument("query")
    _add_engine_flags(p_classify)

    p_sweep = sub.add_parser("sweep", help="run a scripted conversation over a parameter grid")
    p_sweep.add_argument("index")
    p_sweep.add_argument("--script", required=True, help="file with one human turn per line")
    p_sweep.add_argument("--grid", required=True, help='grid spec, e.g. "P=1,5;R=2,6;w=0,2"')
    p_sweep.add_argument("-o", "--output", required=True, help="CSV file to write")
    _add_engine_flags(p_sweep)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    p_serve.add_argument("--config", help="TOML or JSON service config file")

    return parser


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--p", type=int, default=None, help="candidates per turn")
    parser.add_argument("--r", type=int, default=None, help="history capacity")
    parser.add_argument("--w", type=int, default=None, help="subcontext window radius")
    parser.add_argument("--seed", type=int, default=None, help="rng seed")
    for stage in ("classifier", "embedder", "generator"):
        parser.add_argument(
            f"--{stage}",
            default=None,
            metavar="local|URL",
            help=f"{stage} backend: 'local' or a remote base URL",
        )
    parser.add_argument(
        "--fallback", action="store_true", help="fall back to local backends on remote failure"
    )


def _engine_config(args) -> EngineConfig:
    kwargs = {}
    for name in ("p", "r", "w", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    for stage in ("classifier", "embedder", "generator"):
        choice = getattr(args, stage, None)
        if choice is None or choice == engine_mod.LOCAL:
            continue
        kwargs[stage] = engine_mod.REMOTE
        kwargs[f"{stage}_url"] = choice
    if getattr(args, "fallback", False):
        kwargs["fallback_to_local"] = True
    return EngineConfig(**kwargs)


def _cmd_ingest(args) -> int:
    index = ingest(args.source, min_tokens=args.min_tokens)
    save_index(index.corpus, index.sentence_sets, args.output)
    print(f"ingested {index.corpus.k} cases -> {args.output}")
    if args.pairs_out:
        count = save_entailment_pairs(index.sentence_sets, args.pairs_out)
        print(f"wrote {count} entailment pairs -> {args.pairs_out}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    index = load_index(args.index)
    engine = Engine(index, _engine_config(args))
    case_id, _, low_confidence, _ = engine.route(args.query)
    if low_confidence:
        print("warning: low-confidence route", file=sys.stderr)
    print(case_id)
    return EXIT_OK


def _cmd_chat(args, stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    index = load_index(args.index)
    engine = Engine(index, _engine_config(args))
    interactive = stdin.isatty()

    def say(line: str) -> None:
        print(line, file=stdout)

    def prompt() -> str | None:
        if interactive:
            print("you> ", end="", file=stdout, flush=True)
        line = stdin.readline()
        if not line:
            return None
        line = line.strip()
        if line in ("/quit", "/exit"):
            return None
        return line

    session = None
    while True:
        text = prompt()
        if text is None:
            break
        if not text:
            continue
        if session is None:
            session, reply_text = engine.start_session(text)
            if not args.quiet:
                say(f"[session] case={session.case_id} m={session.m}")
        else:
            reply_text = engine.step(session, text)
        record = session.turn_log[-1]
        if not args.quiet:
            lo = record.subcontext_indices[0]
            hi = record.subcontext_indices[-1]
            say(
                f"[turn {record.k}] j*={record.j_star} window={lo}..{hi} "
                f"pick={record.selected_index} rho={record.rho[record.selected_index]!r}"
            )
        say(f"agent> {reply_text}")
    return EXIT_OK


def read_script(path: str) -> list[str]:
    """One human turn per line; blank lines and #-comments are skipped."""
    lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                lines.append(line)
    return lines


def _cmd_sweep(args) -> int:
    index = load_index(args.index)
    script = read_script(args.script)
    grid = parse_grid(args.grid)
    rows, failures = sweep(index, script, grid, _engine_config(args))
    write_sweep_csv(rows, args.output)
    print(f"swept {len(grid)} grid points, wrote {len(rows)} rows -> {args.output}")
    for failure in failures:
        print(
            f"warning: grid point P={failure['P']} R={failure['R']} w={failure['w']} "
            f"failed: {failure['error']}",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_serve(args) -> int:
    config = service_mod.load_service_config(args.config)
    service_mod.run_service(config)
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "chat": _cmd_chat,
    "classify": _cmd_classify,
    "sweep": _cmd_sweep,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
