"""Batch entry points.

    litgrid check FILE
    litgrid eval FILE [--json]
    litgrid weave FILE [--theme T] [-o OUT]
    litgrid stubs FILE [--apply]
    litgrid classify PATH... [--json]
    litgrid new --template NAME --name BASE -o FILE
    litgrid suggest FILE --library DIR [-k N]
    litgrid serve FILE --port P [--library DIR] [--ui DIR]

Exit codes: 0 success / no error-severity diagnostics; 1 error diagnostics
present (including assertion failures); 2 usage or I/O failure.
Data goes to stdout, diagnostics to stderr. LITGRID_CONFIG may point at a
`key = value` threshold-override file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .annotate import classify, generate_stubs, instantiate_template, pending_stubs, survey
from .config import load_config
from .engine import evaluate_with_assertions
from .errors import EmptyLibrary, LsheetFatalError, UnknownTemplate, UnknownTheme
from .lsheet import parse_lsheet, serialize_lsheet, values_to_json
from .model import Diagnostic, Document, validate_document
from .reuse import index_library, suggest_reuse
from .values import format_value
from .weave import cross_refs, render_html, term_index, toc, weave


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="litgrid", description="literate spreadsheet toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate and evaluate; report diagnostics")
    p.add_argument("file")

    p = sub.add_parser("eval", help="evaluate and print values")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("weave", help="render a themed HTML presentation")
    p.add_argument("file")
    p.add_argument("--theme", default="all")
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("stubs", help="list or insert documentation stubs")
    p.add_argument("file")
    p.add_argument("--apply", action="store_true")

    p = sub.add_parser("classify", help="annotation-level report for files or directories")
    p.add_argument("paths", nargs="+")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("new", help="create a document from a template")
    p.add_argument("--template", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("suggest", help="suggest reusable chunks from a library")
    p.add_argument("file")
    p.add_argument("--library", required=True)
    p.add_argument("-k", type=int, default=5)

    p = sub.add_parser("serve", help="serve one document over HTTP for the UI")
    p.add_argument("file")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--library", default=None)
    p.add_argument("--ui", default=None)
    p.add_argument("--verbose", action="store_true")

    return parser


def _fmt_diag(d: Diagnostic) -> str:
    location = d.location()
    prefix = f"{d.severity}: [{d.kind}]"
    return f"{prefix} {location}: {d.message}" if location else f"{prefix} {d.message}"


def _load(path: str, stderr) -> tuple[Document | None, list[Diagnostic], int]:
    """Returns (doc or None, diagnostics, exit code hint)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=stderr)
        return None, [], 2
    except UnicodeDecodeError as e:
        print(f"error: {path} is not UTF-8: {e}", file=stderr)
        return None, [], 2
    try:
        doc, diags = parse_lsheet(text)
    except LsheetFatalError as e:
        return None, [Diagnostic("ParseError", "error", str(e))], 1
    return doc, diags, 0


def _gather_files(paths: list[str], stderr) -> list[Path] | None:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(p for p in sorted(path.rglob("*")) if p.suffix.lower() in (".lsheet", ".csv"))
        elif path.is_file():
            files.append(path)
        else:
            print(f"error: no such file or directory: {raw}", file=stderr)
            return None
    return sorted(files)


def run_cli(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        config = load_config()
    except (OSError, ValueError) as e:
        print(f"error: bad config: {e}", file=stderr)
        return 2

    if args.command == "check":
        doc, diags, code = _load(args.file, stderr)
        if doc is None and code == 2:
            return 2
        if doc is not None:
            diags = diags + validate_document(doc, config)
            if not any(d.severity == "error" for d in diags):
                diags = diags + evaluate_with_assertions(doc).diagnostics
        seen = set()
        unique = []
        for d in diags:
            key = (d.kind, d.severity, d.chunk_id, d.cell, d.message)
            if key not in seen:
                seen.add(key)
                unique.append(d)
        for d in unique:
            print(_fmt_diag(d), file=stderr)
        errors = sum(1 for d in unique if d.severity == "error")
        warnings = sum(1 for d in unique if d.severity == "warning")
        print(f"{errors} errors, {warnings} warnings", file=stdout)
        return 1 if errors else 0

    if args.command == "eval":
        doc, diags, code = _load(args.file, stderr)
        if doc is None:
            for d in diags:
                print(_fmt_diag(d), file=stderr)
            return code or 1
        structural = validate_document(doc, config)
        if any(d.severity == "error" for d in structural):
            for d in diags + structural:
                print(_fmt_diag(d), file=stderr)
            return 1
        result = evaluate_with_assertions(doc)
        if args.json:
            print(values_to_json(result), file=stdout)
        else:
            for key in sorted(result.values):
                print(f"{key} = {format_value(result.values[key])}", file=stdout)
        for d in result.diagnostics:
            print(_fmt_diag(d), file=stderr)
        return 1 if any(d.severity == "error" for d in result.diagnostics) else 0

    if args.command == "weave":
        doc, diags, code = _load(args.file, stderr)
        if doc is None:
            for d in diags:
                print(_fmt_diag(d), file=stderr)
            return code or 1
        result = evaluate_with_assertions(doc)
        try:
            tree = weave(doc, args.theme, result)
            html_text = render_html(tree, toc(doc, args.theme), cross_refs(doc), term_index(doc))
        except UnknownTheme as e:
            print(f"error: {e}", file=stderr)
            return 2
        if args.output:
            Path(args.output).write_text(html_text, encoding="utf-8")
        else:
            stdout.write(html_text)
        for d in result.diagnostics + tree.diagnostics:
            print(_fmt_diag(d), file=stderr)
        return 1 if any(d.severity == "error" for d in result.diagnostics) else 0

    if args.command == "stubs":
        doc, diags, code = _load(args.file, stderr)
        if doc is None:
            for d in diags:
                print(_fmt_diag(d), file=stderr)
            return code or 1
        if args.apply:
            new_doc, infos = generate_stubs(doc)
            if infos:
                Path(args.file).write_text(serialize_lsheet(new_doc), encoding="utf-8")
            for info in infos:
                print(f"inserted stub {info.inserted} before {info.target}", file=stdout)
            print(f"{len(infos)} stubs inserted", file=stdout)
        else:
            pending = pending_stubs(doc)
            for target in pending:
                print(_fmt_diag(Diagnostic("StubSuggestion", "info", f"undocumented computable {target!r}", chunk_id=target)), file=stdout)
            print(f"{len(pending)} stubs pending", file=stdout)
        return 0

    if args.command == "classify":
        files = _gather_files(args.paths, stderr)
        if files is None:
            return 2
        result = survey(files, config)
        stats = result.stats
        if args.json:
            payload = {
                "files": [
                    {
                        "path": row.path,
                        **(
                            {
                                "level": row.report.level,
                                "is_computational": row.report.is_computational,
                                "narrative_words": row.report.narrative_words,
                                "heading_count": row.report.heading_count,
                                "named_computables": row.report.named_computables,
                                "documented_computables": row.report.documented_computables,
                                "doc_coverage": round(row.report.doc_coverage, 4),
                            }
                            if row.report
                            else {"error": row.error}
                        ),
                    }
                    for row in result.rows
                ],
                "stats": {
                    "n_total": stats.n_total,
                    "n_computational": stats.n_computational,
                    "n_implicit": stats.n_implicit,
                    "n_explicit": stats.n_explicit,
                    "n_literate": stats.n_literate,
                    "n_unreadable": stats.n_unreadable,
                    "pct_computational": stats.pct_computational,
                    "pct_implicit_of_comp": stats.pct_implicit_of_comp,
                    "pct_explicit_of_comp": stats.pct_explicit_of_comp,
                    "pct_literate_of_comp": stats.pct_literate_of_comp,
                },
            }
            print(json.dumps(payload, separators=(",", ":"), ensure_ascii=False), file=stdout)
        else:
            width = max((len(row.path) for row in result.rows), default=4)
            print(f"{'path'.ljust(width)}  {'level':9} words  headings  coverage", file=stdout)
            for row in result.rows:
                if row.report is None:
                    print(f"{row.path.ljust(width)}  unreadable ({row.error})", file=stdout)
                    continue
                r = row.report
                print(
                    f"{row.path.ljust(width)}  {r.level:9} {r.narrative_words:5}  {r.heading_count:8}  {r.doc_coverage:8.2f}",
                    file=stdout,
                )
            def pct(v):
                return "n/a" if v is None else f"{v}"
            print(f"files: {stats.n_total} (unreadable: {stats.n_unreadable})", file=stdout)
            print(f"computational: {stats.n_computational} ({pct(stats.pct_computational)}%)", file=stdout)
            print(f"  implicit: {stats.n_implicit} ({pct(stats.pct_implicit_of_comp)}% of computational)", file=stdout)
            print(f"  explicit: {stats.n_explicit} ({pct(stats.pct_explicit_of_comp)}% of computational)", file=stdout)
            print(f"  literate: {stats.n_literate} ({pct(stats.pct_literate_of_comp)}% of computational)", file=stdout)
        return 0

    if args.command == "new":
        out_path = Path(args.output)
        if out_path.exists():
            print(f"error: {args.output} already exists", file=stderr)
            return 2
        try:
            chunks = instantiate_template(args.template, args.name)
        except (UnknownTemplate, ValueError) as e:
            print(f"error: {e}", file=stderr)
            return 2
        doc = Document(meta={"title": args.name}, chunks=tuple(chunks))
        out_path.write_text(serialize_lsheet(doc), encoding="utf-8")
        print(f"wrote {args.output}", file=stdout)
        return 0

    if args.command == "suggest":
        doc, diags, code = _load(args.file, stderr)
        if doc is None:
            for d in diags:
                print(_fmt_diag(d), file=stderr)
            return code or 1
        library_dir = Path(args.library)
        if not library_dir.is_dir():
            print(f"error: no such library directory: {args.library}", file=stderr)
            return 2
        files = [p for p in sorted(library_dir.rglob("*")) if p.suffix.lower() in (".lsheet", ".csv")]
        index = index_library(files)
        for warning in index.warnings:
            print(f"warning: {warning}", file=stderr)
        from .model import Narrative

        query = " ".join(c.body for c in doc.chunks if isinstance(c, Narrative) and not c.is_stub)
        try:
            results = suggest_reuse(query, index, k=args.k)
        except EmptyLibrary as e:
            print(f"error: {e}", file=stderr)
            return 2
        for s in results:
            print(f"{s.score:.4f}  {s.doc_path}  {s.chunk_id}", file=stdout)
        return 0

    if args.command == "serve":
        doc, diags, code = _load(args.file, stderr)
        if doc is None:
            for d in diags:
                print(_fmt_diag(d), file=stderr)
            return code or 1
        for d in diags:
            print(_fmt_diag(d), file=stderr)
        from .server import create_server

        if args.library:
            library_dir = Path(args.library)
            files = [p for p in sorted(library_dir.rglob("*")) if p.suffix.lower() in (".lsheet", ".csv")]
            library = index_library(files)
        else:
            library = index_library([Path(args.file)])
        ui_dir = Path(args.ui) if args.ui else None
        if ui_dir is None:
            default_ui = Path("frontend") / "dist"
            if default_ui.is_dir():
                ui_dir = default_ui
        server = create_server(doc, port=args.port, library=library, ui_dir=ui_dir, config=config, verbose=args.verbose)
        host, port = server.server_address
        print(f"litgrid serving {args.file} on http://{host}:{port}/", file=stdout, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
        finally:
            server.server_close()
        return 0

    raise AssertionError("unreachable")


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
