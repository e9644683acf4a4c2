"""Operator command line: serve, solve, discover-macros, audit, replay."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .audit import AuditError, load_corpus, audit_system
from .config import ConfigError, TutorConfig, load_config
from .cube import (
    CubeError,
    PartialGoal,
    format_moves,
    goal_from_pattern,
    parse_facelets,
    solved_state,
    white_cross_goal,
)
from .macros import MacroError, learn_macro_library
from .nlu import Utterance, load_valence_lexicon, score_sentiment
from .replay import (
    ReplayError,
    fixture_services,
    format_diffs,
    replay_path,
    services_from_config,
)
from .search import SearchError, astar_solve


def _fail(message: str, code: int = 1) -> "None":
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _named_goal(name: str) -> PartialGoal:
    if name == "white-cross":
        return white_cross_goal()
    if name == "solved":
        import numpy as np

        solved = solved_state()
        return PartialGoal(solved.facelets, np.ones(54, dtype=bool), name="solved")
    path = Path(name)
    if path.exists():
        return goal_from_pattern(path.read_text().strip())
    raise CubeError(f"unknown goal {name!r}; want solved, white-cross, or a pattern file")


@click.group()
def main() -> None:
    """Rubik's-cube tutor operations."""


@main.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="TOML or JSON config file.")
@click.option("--host", default=None, help="Override the configured bind address.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
def serve(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    try:
        cfg = load_config(config_path) if config_path else TutorConfig()
        if host is not None:
            cfg.host = host
        if port is not None:
            cfg.port = port
        app = create_app(cfg)
    except (ConfigError, OSError) as exc:
        _fail(str(exc))
    uvicorn.run(app, host=cfg.host, port=cfg.port)


@main.command()
@click.argument("facelets")
@click.option("--goal", default="solved", show_default=True,
              help="solved, white-cross, or a goal pattern file.")
@click.option("--weight", type=float, default=1.0, show_default=True,
              help="Heuristic weight for weighted A*.")
@click.option("--budget", type=int, default=500_000, show_default=True,
              help="Node expansion budget.")
def solve(facelets: str, goal: str, weight: float, budget: int) -> None:
    """Find a move sequence from FACELETS to the goal."""
    try:
        state = parse_facelets(facelets)
        result = astar_solve(state, _named_goal(goal), weight=weight, node_budget=budget)
    except (CubeError, SearchError) as exc:
        _fail(str(exc))
    click.echo(format_moves(result.path) if result.path else "(already at goal)")
    click.echo(f"moves: {len(result.path)}  nodes expanded: {result.nodes_expanded}")


@main.command("discover-macros")
@click.option("--goal", default="white-cross", show_default=True)
@click.option("--configs", type=int, default=200, show_default=True,
              help="Training configurations to sample.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Library JSON output path.")
@click.option("--min-depth", type=int, default=1, show_default=True)
@click.option("--max-depth", type=int, default=20, show_default=True)
@click.option("--complexity-cap", type=int, default=8, show_default=True)
@click.option("--macro-cap", type=int, default=24, show_default=True)
def discover_macros(goal: str, configs: int, seed: int, out: str, min_depth: int,
                    max_depth: int, complexity_cap: int, macro_cap: int) -> None:
    """Learn a macro library for the goal and write it to a JSON file."""
    try:
        library = learn_macro_library(
            _named_goal(goal),
            config_count=configs,
            depth_range=(min_depth, max_depth),
            seed=seed,
            complexity_cap=complexity_cap,
            macro_cap=macro_cap,
        )
    except (CubeError, MacroError, SearchError) as exc:
        _fail(str(exc))
    library.save(out)
    rate = library.metadata.get("training_solve_rate")
    click.echo(f"{len(library.macros)} macros -> {out} (training solve rate {rate})")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(dir_okay=False), default=None,
              help="EEC-style CSV; the packaged corpus when omitted.")
@click.option("--system", default="lexicon", show_default=True,
              help="Scorer to audit (only 'lexicon' ships).")
@click.option("--metric", type=click.Choice(["die", "wrs"]), default="die",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the JSON report here instead of stdout.")
def audit(corpus_path: str | None, system: str, metric: str, out: str | None) -> None:
    """Run a bias audit of a sentiment scorer over a template corpus."""
    if system != "lexicon":
        _fail(f"unknown scorer {system!r}; only 'lexicon' ships with the package")
    valence = load_valence_lexicon()

    def scorer(text: str) -> float:
        return score_sentiment(Utterance.parse(text), valence).intensity

    try:
        corpus = load_corpus(corpus_path)
        report = audit_system(scorer, corpus, metric, system_id=system)
    except (AuditError, OSError) as exc:
        _fail(str(exc))
    payload = json.dumps(report, indent=2, sort_keys=True)
    if out is not None:
        Path(out).write_text(payload + "\n")
        click.echo(f"report -> {out}")
    else:
        click.echo(payload)


@main.command()
@click.argument("transcript", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Replay against this config's stores instead of demo fixtures.")
@click.option("--session", default=None, help="Session id when the file holds several.")
@click.option("--user", default=None, help="Override the transcript's user header.")
@click.option("--cube", default=None, help="Override the starting facelet string.")
def replay(transcript: str, config_path: str | None, session: str | None,
           user: str | None, cube: str | None) -> None:
    """Re-run a recorded conversation and diff the bot lines. Exit 1 on any diff."""
    try:
        services = (
            services_from_config(load_config(config_path))
            if config_path
            else fixture_services()
        )
        report = replay_path(transcript, services, session=session, user=user, cube=cube)
    except (ReplayError, ConfigError, CubeError, OSError) as exc:
        _fail(str(exc))
    click.echo(format_diffs(report))
    if not report.ok:
        sys.exit(1)


if __name__ == "__main__":
    main()
