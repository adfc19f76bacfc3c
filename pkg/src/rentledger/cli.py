"""Command line entry points: gateway server, benchmark, scenarios, oracle node."""

from __future__ import annotations

import json
import statistics
import sys

import click

from . import bench as bench_mod
from . import scenario as scenario_mod
from .oracle_node import NodeConfig, RentCollectionNode
from .platform import PlatformConfig, new_platform


@click.group()
def main():
    """Permissioned rental ledger tooling."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8040, show_default=True, type=int)
@click.option("--operator", default="Operator", show_default=True)
@click.option("--providers", default="TimeProvider", show_default=True, help="comma-separated")
@click.option("--lifecyclers", default="Lifecycler", show_default=True, help="comma-separated")
@click.option("--arbitrators", default="Arb1,Arb2,Arb3", show_default=True, help="comma-separated")
@click.option("--users", default="Alice,Bob", show_default=True, help="comma-separated")
@click.option("--skew", default=60.0, show_default=True, type=float, help="time skew in seconds")
@click.option("--initial-date", default=None, help="genesis calendar date (ISO); default: today")
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False), default=None,
              help="serve a built web UI from this directory")
def serve(host, port, operator, providers, lifecyclers, arbitrators, users, skew, initial_date, ui_dir):
    """Run the HTTP gateway on a freshly bootstrapped ledger."""
    import uvicorn

    from .api import create_app

    config = PlatformConfig(
        operator=operator,
        providers=tuple(p for p in providers.split(",") if p),
        lifecyclers=tuple(p for p in lifecyclers.split(",") if p),
        arbitrators=tuple(p for p in arbitrators.split(",") if p),
        users=tuple(p for p in users.split(",") if p),
        initial_date=initial_date,
        skew_seconds=skew,
    )
    platform = new_platform(skew=skew, config=config)
    app = create_app(platform, ui_dir=ui_dir)
    click.echo(f"parties: {', '.join(sorted(platform.engine.parties))}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--leases", "-n", multiple=True, type=int, default=(10,), show_default=True)
@click.option("--due-fraction", "-f", multiple=True, type=float, default=(0.0,), show_default=True)
@click.option("--reps", "-r", default=10, show_default=True, type=int)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output path")
def bench(leases, due_fraction, reps, out):
    """Measure advance + lifecycle latency over a lease/due-fraction grid."""
    rows = []
    for n in leases:
        for f in due_fraction:
            cell = bench_mod.run_bench(n, f, reps)
            rows.extend(cell)
            med_adv = statistics.median(r.advance_ms for r in cell)
            med_life = statistics.median(r.lifecycle_ms for r in cell)
            click.echo(
                f"leases={n:<6} due={f:<4g} reps={reps}  "
                f"median advance={med_adv:8.2f}ms  median lifecycle={med_life:8.2f}ms"
            )
    if out:
        bench_mod.write_csv(rows, out)
        click.echo(f"wrote {len(rows)} rows to {out}")


@main.group()
def scenario():
    """Scripted multi-party scenario tools."""


@scenario.command("run")
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="emit the report as JSON")
@click.option("--clock", default=scenario_mod.DEFAULT_CLOCK_START, show_default=True)
def scenario_run(script, as_json, clock):
    """Execute a scenario script and print its report."""
    try:
        report = scenario_mod.run_file(script, clock_start=clock)
    except scenario_mod.ScenarioParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(json.dumps(report.to_json(), indent=2))
    else:
        click.echo(scenario_mod.format_report(report))
    sys.exit(0 if report.ok else 1)


@main.command("oracle-node")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--once", is_flag=True, help="run a single tick and exit")
def oracle_node(config_path, once):
    """Run the rent-collection trigger against a gateway."""
    node = RentCollectionNode(NodeConfig.from_file(config_path))
    try:
        if once:
            outcome = node.tick()
            click.echo(
                f"{outcome.run_id}: date={outcome.date} advanced={outcome.advanced} "
                f"leases={outcome.n_leases} ious={outcome.n_due} "
                f"advance={outcome.advance_ms:.1f}ms lifecycle={outcome.lifecycle_ms:.1f}ms"
            )
        else:
            node.run_forever()
    finally:
        node.close()


if __name__ == "__main__":
    main()
