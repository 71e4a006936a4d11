"""Command-line shell: run a simulated night (optionally serving the
HTTP API), generate cycle files, query a running instance or a data
directory, fit the latency model, and print accuracy reports.

Query output is the same canonical JSON the HTTP API returns.
"""

from __future__ import annotations

import statistics
import sys
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path

import click

from . import api
from .config import Config, load_config
from .datagen import DirSource, UnitGenerator, emit_files
from .domain import Region, TimeInterval
from .fixtures import demo_simulation
from .perfmodel import (DeskBench, build_reports, format_reports,
                        load_training)
from .query import UnknownEventError
from .sim import Simulation


@click.group()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="YAML config path (falls back to $ASERV_CONFIG).")
@click.pass_context
def main(ctx, config_path):
    try:
        ctx.obj = load_config(config_path)
    except (ValueError, OSError) as exc:
        raise click.ClickException(f"bad config: {exc}")
    for note in ctx.obj.warnings():
        click.echo(f"warning: {note}", err=True)


def _summary(sim: Simulation) -> str:
    latencies = [s.latency_s for s in sim.stats] or [0.0]
    return (f"cycles={sim.master.watermark} events={len(sim.truth)} "
            f"mean_latency={statistics.mean(latencies):.4f}s "
            f"max_latency={max(latencies):.4f}s keys={sim.store.key_count()}")


@main.command()
@click.option("--cycles", type=int, default=None, help="Override cycle count.")
@click.option("--demo", is_flag=True, help="Run the canned demo night.")
@click.option("--ambient", is_flag=True, help="Demo: keep emitting filler events.")
@click.option("--serve", is_flag=True, help="Serve the HTTP API while running.")
@click.option("--rate", type=float, default=None,
              help="Pacing: cycles per ct/rate seconds; 0 = unpaced.")
@click.option("--stats-out", type=click.Path(dir_okay=False), default=None,
              help="Write per-cycle ingest stats as JSON lines.")
@click.pass_obj
def run(config: Config, cycles, demo, ambient, serve, rate, stats_out):
    """Generate, ingest, and (optionally) serve one night."""
    if demo:
        n = cycles if cycles is not None else (600 if serve else 10)
        sim = demo_simulation(cycles=n, ct=config.ct if not serve else 0.2,
                              rate=rate if rate is not None else (1.0 if serve else 0.0),
                              ambient=ambient or serve)
    else:
        if rate is not None:
            config = Config(**{**_as_dict(config), "rate": rate})
        sim = Simulation(config, cycles=cycles)
    if serve:
        sim.start()
        click.echo(f"serving on http://{config.http_host}:{config.http_port}",
                   err=False)
        sys.stdout.flush()
        try:
            api.serve(sim, config.http_host, config.http_port)
        finally:
            sim.stop()
    else:
        sim.run()
        click.echo(_summary(sim))
    if stats_out:
        with open(stats_out, "w") as fh:
            for s in sim.stats:
                fh.write(api.canonical({
                    "unit": s.unit_id, "t": s.t, "latency_s": s.latency_s,
                    "rows": s.rows, "valid_bytes": s.valid_bytes,
                    "event_bytes": s.event_bytes, "icr_bytes": s.icr_bytes,
                    "appends": s.appends, "new_events": s.new_events,
                    "keys": s.key_count}) + "\n")


def _as_dict(config: Config) -> dict:
    import dataclasses

    return dataclasses.asdict(config)


@main.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--cycles", type=int, default=None)
@click.pass_obj
def gen(config: Config, out, cycles):
    """Write per-cycle catalog and Eset files plus ground truth."""
    gen_config = config.gen_config()
    n = cycles if cycles is not None else gen_config.cycles
    total = 0
    for i in range(gen_config.units):
        source = UnitGenerator(gen_config, i)
        for t in range(1, n + 1):
            emit_files(source.cycle(t), out)
            total += 2
        source.truth.export(Path(out) / source.unit_id / "truth.tsv")
        total += 1
    click.echo(f"wrote {total} files under {out}")


def _engine_from_dir(config: Config, data_dir: str):
    root = Path(data_dir)
    unit_ids = sorted(d.name for d in root.iterdir() if d.is_dir())
    if not unit_ids:
        raise click.ClickException(f"no unit directories under {data_dir}")
    sources = [DirSource(root, unit) for unit in unit_ids]
    cycles = min(s.cycles for s in sources)
    sim = Simulation(config, sources=sources, cycles=cycles)
    sim.run()
    return sim.query_engine()


def _fetch(url: str) -> str:
    try:
        with urllib.request.urlopen(url) as resp:
            return resp.read().decode()
    except urllib.error.HTTPError as exc:
        raise click.ClickException(f"{exc.code}: {exc.read().decode()}")
    except urllib.error.URLError as exc:
        raise click.ClickException(f"cannot reach {url}: {exc.reason}")


def _query_target(func):
    func = click.option("--url", default=None,
                        help="Base URL of a running instance.")(func)
    func = click.option("--data", "data_dir", default=None,
                        type=click.Path(exists=True, file_okay=False),
                        help="Ingest this generated directory and query it.")(func)
    func = click.option("--demo", is_flag=True,
                        help="Query the canned demo night.")(func)
    return func


def _local_engine(config: Config, data_dir, demo):
    if demo:
        sim = demo_simulation(cycles=10)
        sim.run()
        return sim.query_engine()
    if data_dir:
        return _engine_from_dir(config, data_dir)
    raise click.ClickException("need one of --url, --data, or --demo")


def _region_args(x, y, r) -> Region | None:
    given = [v for v in (x, y, r) if v is not None]
    if not given:
        return None
    if len(given) != 3:
        raise click.ClickException("region needs all of --x, --y, --r")
    try:
        return Region(x, y, r)
    except ValueError as exc:
        raise click.ClickException(str(exc))


def _interval_args(ts, te) -> TimeInterval:
    try:
        return TimeInterval(ts, te)
    except ValueError as exc:
        raise click.ClickException(str(exc))


@main.group()
def query():
    """Run one analysis and print its canonical JSON result."""


def _region_options(func):
    func = click.option("--x", type=float, default=None)(func)
    func = click.option("--y", type=float, default=None)(func)
    func = click.option("--r", type=float, default=None)(func)
    return func


@query.command()
@click.option("--ts", type=int, required=True)
@click.option("--te", type=int, required=True)
@_region_options
@_query_target
@click.pass_obj
def probe(config, ts, te, x, y, r, url, data_dir, demo):
    if url:
        params = {"ts": ts, "te": te}
        params.update({k: v for k, v in (("x", x), ("y", y), ("r", r))
                       if v is not None})
        click.echo(_fetch(f"{url}/probe?{urllib.parse.urlencode(params)}"))
        return
    engine = _local_engine(config, data_dir, demo)
    payload = api.probe_payload(engine, _region_args(x, y, r),
                                _interval_args(ts, te))
    click.echo(api.canonical(payload))


@query.command(name="list")
@click.option("--ts", type=int, required=True)
@click.option("--te", type=int, required=True)
@_region_options
@_query_target
@click.pass_obj
def list_cmd(config, ts, te, x, y, r, url, data_dir, demo):
    if url:
        params = {"ts": ts, "te": te}
        params.update({k: v for k, v in (("x", x), ("y", y), ("r", r))
                       if v is not None})
        click.echo(_fetch(f"{url}/list?{urllib.parse.urlencode(params)}"))
        return
    engine = _local_engine(config, data_dir, demo)
    payload = api.list_payload(engine, _region_args(x, y, r),
                               _interval_args(ts, te))
    click.echo(api.canonical(payload))


@query.command()
@click.option("--eid", required=True)
@click.option("--dt1", type=int, default=0)
@click.option("--dt2", type=int, default=0)
@_query_target
@click.pass_obj
def stretch(config, eid, dt1, dt2, url, data_dir, demo):
    if url:
        params = urllib.parse.urlencode({"eid": eid, "dt1": dt1, "dt2": dt2})
        click.echo(_fetch(f"{url}/stretch?{params}"))
        return
    engine = _local_engine(config, data_dir, demo)
    try:
        payload = api.stretch_payload(engine, eid, dt1, dt2)
    except UnknownEventError:
        raise click.ClickException(f"unknown eid {eid!r}")
    click.echo(api.canonical(payload))


@query.command()
@click.option("--ts", type=int, required=True)
@click.option("--te", type=int, required=True)
@click.option("--x", type=float, required=True)
@click.option("--y", type=float, required=True)
@click.option("--r", type=float, required=True)
@_query_target
@click.pass_obj
def accuracy(config, ts, te, x, y, r, url, data_dir, demo):
    if url:
        params = urllib.parse.urlencode(
            {"ts": ts, "te": te, "x": x, "y": y, "r": r})
        click.echo(_fetch(f"{url}/accuracy?{params}"))
        return
    engine = _local_engine(config, data_dir, demo)
    payload = api.accuracy_payload(engine, _region_args(x, y, r),
                                   _interval_args(ts, te))
    click.echo(api.canonical(payload))


@main.command()
@click.option("--training", "training_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=19, help="Target cluster size.")
@click.option("--ct", type=float, default=None,
              help="Cycle length for the insert constraint (default: config).")
@click.option("--ta", "ta_args", multiple=True,
              help="Actual latency workload=seconds (repeatable).")
@click.option("--refine", type=click.Choice(["damped"]), default=None)
@click.option("--measure", is_flag=True,
              help="Measure kprime=1 rows on a staged desk run.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False),
              help="With --measure: also write the measured rows here.")
@click.pass_obj
def fit(config: Config, training_path, k, ct, ta_args, refine, measure, out_path):
    """Fit the scale-overhead line and print predicted latencies."""
    ct = ct if ct is not None else config.ct
    ta = {}
    for item in ta_args:
        workload, _, value = item.partition("=")
        try:
            ta[workload] = float(value)
        except ValueError:
            raise click.ClickException(f"bad --ta {item!r}, want workload=seconds")
    if measure:
        bench = DeskBench(config, k=k)
        rows = bench.training_rows()
        if out_path:
            Path(out_path).write_text("\n".join(rows) + "\n")
        for row in rows:
            click.echo(row)
        return
    if not training_path:
        raise click.ClickException("need --training FILE (or --measure)")
    training = load_training(training_path)
    try:
        reports = build_reports(training, k=k, ct=ct, ta=ta, refine=refine)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(format_reports(reports, k=k, ct=ct))


@main.command()
@click.option("--queries", type=int, default=20, show_default=True)
@click.option("--demo", is_flag=True)
@click.pass_obj
def report(config: Config, queries, demo):
    """Run a night and print ingest latency plus probing accuracy."""
    import numpy as np

    if demo:
        sim = demo_simulation(cycles=10)
    else:
        sim = Simulation(config)
    sim.run()
    engine = sim.query_engine()
    click.echo(_summary(sim))

    rng = np.random.default_rng(config.seed)
    r_min = config.resolved_r_min()
    side = config.side
    ratios = []
    interval = TimeInterval(1, sim.cycles)
    for _ in range(queries):
        r = r_min * (1.0 + rng.random())
        x = r + rng.random() * (side - 2 * r)
        y = r + rng.random() * (side - 2 * r)
        result = engine.accuracy(Region(x, y, r), interval)
        ratios.append(result.accuracy)
    click.echo(f"probing accuracy over {queries} disk queries: "
               f"min={min(ratios):.3f} mean={statistics.mean(ratios):.3f}")


if __name__ == "__main__":
    main()
