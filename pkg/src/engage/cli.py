"""Operator entry point: serve, simulate, mine, compare.

Configuration precedence is flags > environment (prefix ``ENGAGE_``) >
defaults.  ``mine`` and ``compare`` read either a single log file or a
service data directory; their outputs are deterministic, so rerunning on
the same input reproduces identical bytes.
"""

from __future__ import annotations

import csv
import json
import signal
import sys
import threading
from pathlib import Path

import click

from engage.events import CLICK, ENGAGEMENT_REPORT, PAGE_LOAD, VISIBLE_IMPRESSION_REPORT
from engage.mining import (
    InsufficientData,
    ItemFeatures,
    attention_scroll_correlation,
    compare_methods,
    item_stats,
    round_half_up,
)
from engage.server import BindFailure, IngestionServer, ServiceConfig
from engage.simulate import (
    PROFILES,
    InvalidProfile,
    generate_session,
    load_profile,
    post_session,
    session_events,
    write_log,
)
from engage.store import EventStore, read_log

FEATURE_COLUMNS = (
    "itemId",
    "attentionSeconds",
    "avgScrollDepthPercent",
    "pageLoadImpressions",
    "visibleImpressions",
    "clicks",
    "ctrPercent",
)


@click.group(context_settings={"auto_envvar_prefix": "ENGAGE", "help_option_names": ["-h", "--help"]})
@click.version_option(package_name="engage")
def main() -> None:
    """User-engagement telemetry pipeline."""


@main.command()
@click.option("--port", default=8080, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default="./engage-data", show_default=True,
              type=click.Path(file_okay=False, path_type=Path))
@click.option("--queue-capacity", default=65536, show_default=True, type=int)
@click.option("--workers", default=2, show_default=True, type=int)
@click.option("--denylist", default=None, type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="Crawler user-agent denylist, one substring per line.")
@click.option("--rate-limit", default=10.0, show_default=True, type=float,
              help="Per-source reports/second ceiling (0 disables).")
@click.option("--collector-script", default=None, type=click.Path(path_type=Path),
              help="Path to the built browser collector bundle served at /v1/collector.js.")
def serve(port, host, data_dir, queue_capacity, workers, denylist, rate_limit, collector_script):
    """Run the ingestion service until interrupted; shutdown drains the queue."""
    config = ServiceConfig(
        data_dir=data_dir,
        host=host,
        port=port,
        queue_capacity=queue_capacity,
        workers=workers,
        denylist_path=denylist,
        rate_limit_per_second=rate_limit,
        collector_script=collector_script,
    )
    try:
        server = IngestionServer(config)
    except BindFailure as exc:
        raise click.ClickException(str(exc))
    server.start()
    click.echo(f"listening on {server.endpoint} (data dir: {data_dir})")

    stop = threading.Event()

    def _handle(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, _handle)
    signal.signal(signal.SIGTERM, _handle)
    try:
        while not stop.wait(0.2):
            pass
    finally:
        click.echo("shutting down: draining queue ...")
        server.stop(drain=True)
        counters = server.stats.snapshot()
        click.echo(f"stored {counters['appended']} of {counters['accepted']} accepted events")


@main.command()
@click.option("--sessions", default=100, show_default=True, type=int)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--profile", "profile_name", default="coupled", show_default=True,
              help=f"Built-in profile ({', '.join(sorted(PROFILES))}) or a JSON profile path.")
@click.option("--out", default="engage-events.ndjson", show_default=True,
              type=click.Path(dir_okay=False, path_type=Path))
@click.option("--post", "endpoint", default=None,
              help="Wire mode: POST each event to a running service instead of writing a log.")
def simulate(sessions, seed, profile_name, out, endpoint):
    """Write a deterministic synthetic event log (or POST it to a service)."""
    try:
        profile = load_profile(profile_name)
    except InvalidProfile as exc:
        raise click.ClickException(str(exc))

    if endpoint is not None:
        import requests

        statuses: dict[int, int] = {}
        with requests.Session() as http:
            for index in range(sessions):
                timeline = generate_session(profile, seed, index)
                for code, count in post_session(timeline, endpoint.rstrip("/"), http).items():
                    statuses[code] = statuses.get(code, 0) + count
        click.echo(f"posted {sum(statuses.values())} events: " +
                   ", ".join(f"{code}x{n}" for code, n in sorted(statuses.items())))
        return

    count = 0
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "wb") as fh:
        from engage.events import encode_event

        for index in range(sessions):
            for event in session_events(generate_session(profile, seed, index)):
                fh.write(encode_event(event) + b"\n")
                count += 1
    click.echo(f"wrote {count} events from {sessions} session(s) to {out}")


def _load_events(log: Path | None, data_dir: Path | None, warn_counter: list):
    def on_corrupt(notice):
        warn_counter.append(notice)
        click.echo(f"warning: corrupt record at {notice.partition}:{notice.line_number}: "
                   f"{notice.error}", err=True)

    if log is not None:
        return list(read_log(log, on_corrupt=on_corrupt))
    if data_dir is not None:
        return list(EventStore(data_dir).scan(on_corrupt=on_corrupt))
    raise click.UsageError("provide a LOG file or --data-dir")


def _feature_rows(features: dict[str, ItemFeatures]) -> list[dict]:
    rows = []
    for item_id in sorted(features):
        f = features[item_id]
        rows.append({
            "itemId": f.item_id,
            "attentionSeconds": round_half_up(f.attention_seconds, 1),
            "avgScrollDepthPercent": (
                None if f.avg_scroll_depth_percent is None
                else round_half_up(f.avg_scroll_depth_percent)
            ),
            "pageLoadImpressions": f.page_load_impressions,
            "visibleImpressions": f.visible_impressions,
            "clicks": f.clicks,
            "ctrPercent": round_half_up(f.ctr_percent),
        })
    return rows


def _write_table(rows: list[dict], out: Path, output_format: str) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    if output_format == "json":
        out.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
        return
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=FEATURE_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in FEATURE_COLUMNS})


@main.command()
@click.argument("log", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--data-dir", default=None, type=click.Path(file_okay=False, path_type=Path),
              help="Mine a service data directory instead of a log file.")
@click.option("--out", default="features.csv", show_default=True,
              type=click.Path(dir_okay=False, path_type=Path))
@click.option("--format", "output_format", default="csv", show_default=True,
              type=click.Choice(["csv", "json"]))
@click.option("--dedupe/--no-dedupe", default=False, show_default=True,
              help="Drop duplicate deliveries before mining.")
def mine(log, data_dir, out, output_format, dedupe):
    """Mine the per-item feature table from an event log."""
    warnings: list = []
    events = _load_events(log, data_dir, warnings)
    report_errors: list = []
    features = item_stats(events, deduplicate=dedupe,
                          on_error=lambda item, exc: report_errors.append((item, exc)))
    for item, exc in report_errors:
        click.echo(f"warning: bad report for item {item}: {exc}", err=True)
    _write_table(_feature_rows(features), out, output_format)
    click.echo(f"mined {len(features)} item(s) from {len(events)} event(s) -> {out}")
    total_warnings = len(warnings) + len(report_errors)
    if total_warnings:
        click.echo(f"{total_warnings} warning(s)", err=True)


@main.command()
@click.argument("log", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--data-dir", default=None, type=click.Path(file_okay=False, path_type=Path))
@click.option("--out", "out_dir", default="compare-out", show_default=True,
              type=click.Path(file_okay=False, path_type=Path),
              help="Output directory for the comparison report, curve, and figures.")
@click.option("--format", "output_format", default="csv", show_default=True,
              type=click.Choice(["csv", "json"]))
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render the comparison and correlation figures as PNG files.")
def compare(log, data_dir, out_dir, output_format, figures):
    """Compare collection methods and write the correlation report."""
    warnings: list = []
    events = _load_events(log, data_dir, warnings)
    page_side = [e for e in events if e.event_type in (PAGE_LOAD, CLICK)]
    ping_side = [e for e in events if e.event_type == ENGAGEMENT_REPORT]
    visibility_side = [e for e in events if e.event_type == VISIBLE_IMPRESSION_REPORT]

    try:
        report = compare_methods(page_side, ping_side, visibility_side)
    except InsufficientData as exc:
        raise click.ClickException(f"insufficient data: {exc}")
    summary = report.to_dict()

    out_dir.mkdir(parents=True, exist_ok=True)
    if output_format == "json":
        (out_dir / "comparison.json").write_text(
            json.dumps(summary, indent=2) + "\n", encoding="utf-8"
        )
    else:
        with open(out_dir / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(summary))
            writer.writerow(["" if v is None else v for v in summary.values()])

    for key, value in summary.items():
        click.echo(f"{key}: {'-' if value is None else value}")

    curve_result = None
    try:
        features = item_stats(events, on_error=lambda item, exc: None)
        curve_result = attention_scroll_correlation(features)
    except InsufficientData as exc:
        click.echo(f"correlation skipped: {exc}", err=True)
    if curve_result is not None:
        curve_path = out_dir / "correlation_curve.txt"
        with open(curve_path, "w", encoding="utf-8") as fh:
            fh.write("# percentile mean_scroll_depth_percent\n")
            for percentile, depth in curve_result.curve:
                fh.write(f"{percentile:.1f} {depth:.6f}\n")
        click.echo(f"pearson: {curve_result.pearson:.6f} (curve -> {curve_path})")
        if figures:
            from engage.plots import render_correlation_curve

            render_correlation_curve(
                curve_result.curve, curve_result.pearson, out_dir / "correlation_curve.png"
            )
    if figures:
        from engage.plots import render_method_comparison

        render_method_comparison(summary, out_dir / "comparison.png")
    if warnings:
        click.echo(f"{len(warnings)} warning(s)", err=True)


if __name__ == "__main__":
    main()
