"""Command-line interface: thin wrappers over the harness and service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .harness import (
    augment_problem,
    check_problem,
    difficulty_of,
    emit_report,
    load_bundled_kb,
    load_kb_dir,
    load_problem,
    load_problem_dir,
    run_batch,
    run_problem,
)
from .search import SearchConfig

METHODS = {"fw": "forward", "bw": "backward", "forward": "forward",
           "backward": "backward"}


def _kb(kb_dir):
    return load_kb_dir(kb_dir) if kb_dir else load_bundled_kb()


def _config(method, strategy, timeout, depth, beam, seed):
    return SearchConfig(method=METHODS[method], strategy=strategy,
                        max_depth=depth, beam_size=beam, timeout=timeout,
                        seed=seed)


search_options = [
    click.option("--kb", "kb_dir", type=click.Path(exists=True), default=None,
                 help="Directory of .gdl definition files (default: bundled)."),
    click.option("--method", type=click.Choice(sorted(METHODS)), default="fw"),
    click.option("--strategy", type=click.Choice(["bfs", "dfs", "rs", "bs"]),
                 default="bfs"),
    click.option("--timeout", type=float, default=30.0, show_default=True),
    click.option("--depth", type=int, default=15, show_default=True),
    click.option("--beam", type=int, default=20, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
]


def with_search_options(fn):
    for option in reversed(search_options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Formal geometry problem solving: parse, verify, search, serve."""


@main.command()
@click.argument("problem", type=click.Path(exists=True))
@with_search_options
@click.option("--hypertree", "hypertree_out", type=click.Path(), default=None,
              help="Write the solution hypertree JSON here.")
def solve(problem, kb_dir, method, strategy, timeout, depth, beam, seed,
          hypertree_out):
    """Solve one problem file by automated search."""
    kb = _kb(kb_dir)
    record = load_problem(problem)
    config = _config(method, strategy, timeout, depth, beam, seed)
    outcome = run_problem(kb, record, config)
    click.echo(json.dumps({
        "problem_id": outcome.problem_id,
        "difficulty": outcome.difficulty,
        "outcome": outcome.outcome,
        "answer": outcome.answer,
        "theorem_seqs": outcome.theorem_seqs,
        "elapsed": outcome.elapsed,
        "steps": outcome.steps,
    }, indent=2))
    if hypertree_out and outcome.outcome == "solved":
        from .harness import record_with_seqs
        solved, store = check_problem(kb, record_with_seqs(record,
                                                           outcome.theorem_seqs))
        with open(hypertree_out, "w", encoding="utf-8") as f:
            json.dump(store.export_hypertree(), f, indent=2)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@with_search_options
@click.option("--out", "out_dir", type=click.Path(), default="reports",
              show_default=True)
@click.option("--workers", type=int, default=1, show_default=True,
              help="Process pool size; problems are independent.")
def batch(directory, kb_dir, method, strategy, timeout, depth, beam, seed,
          out_dir, workers):
    """Run every problem in a directory and write reports."""
    kb = _kb(kb_dir)
    records, errors = load_problem_dir(directory)
    for path, message in errors:
        click.echo(f"skipped {path}: {message}", err=True)
    config = _config(method, strategy, timeout, depth, beam, seed)
    report = run_batch(kb, records, config, skipped=errors, workers=workers)
    paths = emit_report(report, out_dir)
    pct = report.percentages()
    click.echo(f"{len(report.outcomes)} problems: "
               f"solved {pct['solved']}%, unsolved {pct['unsolved']}%, "
               f"timeout {pct['timeout']}%")
    for p in paths:
        click.echo(f"wrote {p}")


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--kb", "kb_dir", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", type=click.Path(), default="augmented",
              show_default=True)
def augment(directory, kb_dir, out_dir):
    """Derive new problems from intermediate goals of annotated solutions."""
    kb = _kb(kb_dir)
    records, errors = load_problem_dir(directory)
    for path, message in errors:
        click.echo(f"skipped {path}: {message}", err=True)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    total = 0
    for record in records:
        derived = augment_problem(kb, record)
        verified = []
        for d in derived:
            solved, _ = check_problem(kb, d)
            if solved:
                verified.append(d)
            else:
                click.echo(f"derived problem from {record.problem_id} failed "
                           "replay; dropped", err=True)
        for d in verified:
            path = out / f"problem_{d.problem_id}.json"
            with open(path, "w", encoding="utf-8") as f:
                json.dump(d.to_dict(), f, indent=2)
                f.write("\n")
        total += len(verified)
        click.echo(f"problem {record.problem_id}: {len(verified)} derived")
    click.echo(f"{len(records)} problems -> {total} derived problems in {out}")


@main.command()
@click.argument("problem", type=click.Path(exists=True))
@click.option("--kb", "kb_dir", type=click.Path(exists=True), default=None)
def check(problem, kb_dir):
    """Replay a problem's annotated theorem sequence."""
    kb = _kb(kb_dir)
    path = Path(problem)
    if path.is_dir():
        records, errors = load_problem_dir(path)
        for p, message in errors:
            click.echo(f"skipped {p}: {message}", err=True)
    else:
        records = [load_problem(path)]
    for record in records:
        try:
            solved, store = check_problem(kb, record)
        except Exception as exc:
            click.echo(f"problem {record.problem_id}: ERROR {exc}")
            continue
        status = "solved" if solved else "NOT SOLVED"
        answer = store.goal.answer if store.goal else None
        click.echo(f"problem {record.problem_id} [{difficulty_of(record)}] "
                   f"{status} answer={answer}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True,
              envvar="GEOSOLVER_HOST")
@click.option("--port", type=int, default=8000, show_default=True,
              envvar="GEOSOLVER_PORT")
@click.option("--kb", "kb_dir", type=click.Path(exists=True), default=None,
              envvar="GEOSOLVER_KB_DIR")
@click.option("--problems", "problem_dir", type=click.Path(exists=True),
              default=None, envvar="GEOSOLVER_PROBLEM_DIR",
              help="Problem directory served to clients.")
@click.option("--snapshots", "snapshot_dir", type=click.Path(), default=None,
              envvar="GEOSOLVER_SNAPSHOT_DIR",
              help="Write session snapshots here on every mutation.")
def serve(host, port, kb_dir, problem_dir, snapshot_dir):
    """Start the interactive session service."""
    import uvicorn

    from .service.app import create_app

    app = create_app(kb=_kb(kb_dir), problem_dir=problem_dir,
                     snapshot_dir=snapshot_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
