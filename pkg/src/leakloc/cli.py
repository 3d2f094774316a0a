"""Command-line interface."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .ilp import BisectionProblem, Mode, solve_bisection
from .network import NetworkError, ParseError, load_network
from .protocol import LeakMode, PipeStrategy
from .spectral import Weighting, spectral_bisect
from .study import StudyError, enumerative_study, generate_graph, network_stats

_METHOD = click.Choice(["ilp-gp", "ilp-lex", "spectral"])


def _read_network(path: str, fmt: str):
    text = Path(path).read_text() if path != "-" else sys.stdin.read()
    try:
        return load_network(text, fmt=fmt,
                            warn=lambda msg: click.echo(f"warning: {msg}",
                                                        err=True))
    except (ParseError, NetworkError) as exc:
        raise click.ClickException(f"cannot load network: {exc}")


def _emit(payload: str, out: str | None):
    if out:
        Path(out).write_text(payload)
    else:
        click.echo(payload, nl=not payload.endswith("\n"))


@click.group()
@click.version_option(package_name="leakloc")
def main():
    """Leak localization by recursive minimum-cost bisection."""


@main.command()
@click.option("--network", "network_path", required=True,
              help="Network file, or '-' for stdin.")
@click.option("--format", "fmt", default="custom-json",
              type=click.Choice(["custom-json", "inp"]), show_default=True)
@click.option("--method", default="ilp-gp", type=_METHOD, show_default=True)
@click.option("--gamma", default=0.1, show_default=True,
              help="Balance slack for goal-programming mode.")
@click.option("--delta", default=1, show_default=True,
              help="Stop once the candidate set has at most this many sites.")
@click.option("--leak-mode", default="node",
              type=click.Choice(["node", "pipe"]), show_default=True)
@click.option("--pipe-strategy", default="center",
              type=click.Choice(["center", "both-ends"]), show_default=True)
@click.option("--multi-leak", is_flag=True,
              help="Keep bisecting both sides when both are leaky.")
@click.option("--magnitude", default=1.0, show_default=True,
              help="Simulated leak magnitude per scenario.")
@click.option("--emit", default="table",
              type=click.Choice(["table", "json", "csv"]), show_default=True)
@click.option("--out", default=None, help="Write output to a file.")
def study(network_path, fmt, method, gamma, delta, leak_mode, pipe_strategy,
          multi_leak, magnitude, emit, out):
    """Simulate one leak per site and report query-count statistics."""
    del multi_leak  # enumerative studies place a single leak per run
    net = _read_network(network_path, fmt)
    try:
        result = enumerative_study(
            net, method=method, gamma=gamma, delta=delta,
            mode=LeakMode(leak_mode),
            pipe_strategy=PipeStrategy(pipe_strategy),
            leak_magnitude=magnitude)
    except StudyError as exc:
        raise click.ClickException(str(exc))
    name = Path(network_path).stem if network_path != "-" else "stdin"
    if emit == "json":
        _emit(result.to_json(indent=2), out)
    elif emit == "csv":
        _emit(result.to_csv(), out)
    else:
        _emit(result.to_table(name=name), out)


@main.command()
@click.option("--network", "network_path", required=True)
@click.option("--format", "fmt", default="custom-json",
              type=click.Choice(["custom-json", "inp"]), show_default=True)
@click.option("--method", default="ilp-gp", type=_METHOD, show_default=True)
@click.option("--gamma", default=0.1, show_default=True)
@click.option("--out", default=None)
def partition(network_path, fmt, method, gamma, out):
    """Compute a single minimum-cost balanced bisection."""
    net = _read_network(network_path, fmt)
    mode = Mode.LEXICOGRAPHIC if method == "ilp-lex" else Mode.GOAL_PROGRAMMING
    prob = BisectionProblem(net, mode=mode, gamma=gamma)
    if method == "spectral":
        sol = spectral_bisect(prob, weighting=Weighting.LITERAL)
        part, extra = sol.partition, {"lambda2": sol.lambda2,
                                      "rounding": sol.rounding.value}
    else:
        part, extra = solve_bisection(prob), {}
    payload = {"s_nodes": sorted(part.s_nodes),
               "sbar_nodes": sorted(part.sbar_nodes),
               "cut_edges": sorted(part.cut_edges),
               "cut_cost": part.cut_cost, **extra}
    _emit(json.dumps(payload, indent=2), out)


@main.command()
@click.option("--network", "network_path", required=True)
@click.option("--format", "fmt", default="custom-json",
              type=click.Choice(["custom-json", "inp"]), show_default=True)
@click.option("--out", default=None)
def stats(network_path, fmt, out):
    """Print basic size and degree statistics for a network."""
    net = _read_network(network_path, fmt)
    _emit(json.dumps(network_stats(net), indent=2), out)


@main.command()
@click.argument("kind", type=click.Choice(
    ["path", "cycle", "grid", "lollipop", "random-connected"]))
@click.option("-n", type=int, default=None)
@click.option("--rows", type=int, default=None)
@click.option("--cols", type=int, default=None)
@click.option("-p", type=float, default=0.1, show_default=True)
@click.option("--clique", type=int, default=5, show_default=True)
@click.option("--tail", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None)
def gen(kind, n, rows, cols, p, clique, tail, seed, out):
    """Generate a synthetic test network as custom JSON."""
    try:
        net = generate_graph(kind, n=n, rows=rows, cols=cols, p=p,
                             clique=clique, tail=tail, seed=seed)
    except StudyError as exc:
        raise click.ClickException(str(exc))
    _emit(net.to_json(indent=2), out)


@main.command()
@click.option("--addr", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--data-dir", default="./campaigns", show_default=True,
              help="Directory for campaign JSON documents.")
def serve(addr, port, data_dir):
    """Run the HTTP campaign service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(data_dir), host=addr, port=port)


if __name__ == "__main__":
    main()
