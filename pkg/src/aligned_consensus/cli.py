"""Command-line client for the aligned-consensus service.

The CLI talks to the FastAPI app over HTTP. By default it mounts the app
in-process (no server needed); set ALIGNED_CONSENSUS_URL to target a running
server instead. Result files are always written locally by the client.

Exit codes: 0 success, 1 validation error, 2 unexpected divergence, 3 I/O.
"""

from __future__ import annotations

import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click
import httpx

EXIT_VALIDATION = 1
EXIT_DIVERGED = 2
EXIT_IO = 3

URL_ENV = "ALIGNED_CONSENSUS_URL"
OUT_ENV = "ALIGNED_CONSENSUS_OUT"


def make_client() -> httpx.Client:
    url = os.environ.get(URL_ENV)
    if url:
        return httpx.Client(base_url=url, timeout=300.0)
    # mount the app in-process; TestClient is a sync httpx.Client over ASGI
    from fastapi.testclient import TestClient

    from .api import app

    return TestClient(app)


def _default_out() -> str:
    return os.environ.get(OUT_ENV, "out")


def _read_scenario_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_IO)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        click.echo(f"error: {path}: invalid JSON at line {exc.lineno}: {exc.msg}", err=True)
        sys.exit(EXIT_VALIDATION)
    if not isinstance(data, dict):
        click.echo(f"error: {path}: scenario file must hold a JSON object", err=True)
        sys.exit(EXIT_VALIDATION)
    return data


def write_outputs(out_dir: Path, result: dict) -> None:
    """Write report.json, trajectory.csv, and plot_data.json for one run."""
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        report = result["report"]
        (out_dir / "report.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n"
        )
        (out_dir / "plot_data.json").write_text(
            json.dumps(result["plot_data"], indent=2, sort_keys=True) + "\n"
        )
        n = len(report["true_average"])
        with (out_dir / "trajectory.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["k", "agent"]
                + [f"x{c}" for c in range(n)]
                + ["disagreement", "leakage"]
            )
            for row in result["trajectory"]:
                writer.writerow(
                    [row["k"], row["agent"]]
                    + [repr(v) for v in row["x"]]
                    + [repr(row["disagreement"]), repr(row["leakage"])]
                )
    except OSError as exc:
        click.echo(f"error: writing outputs to {out_dir}: {exc}", err=True)
        sys.exit(EXIT_IO)


def _run_one(client: httpx.Client, scenario: dict, out_dir: Path) -> dict:
    resp = client.post("/run", json={"scenario": scenario})
    if resp.status_code == 422:
        click.echo(f"error: invalid scenario: {resp.json()['detail']}", err=True)
        sys.exit(EXIT_VALIDATION)
    resp.raise_for_status()
    result = resp.json()
    name = result["report"]["scenario"]["name"]
    write_outputs(out_dir / name, result)
    return result


def _summarize(report: dict) -> str:
    return (
        f"{report['scenario']['name']}: {report['outcome']} "
        f"k={report['k_star']} oracle_distance={report['oracle_distance']:.3e} "
        f"leakage={report['max_leakage']:.3e}"
    )


def _finish(report: dict) -> None:
    click.echo(_summarize(report))
    if report["outcome"] == "diverged" and not report["scenario"]["expect_divergence"]:
        sys.exit(EXIT_DIVERGED)


@click.group()
def main():
    """Average-consensus simulation under additive low-rank interference."""


@main.command()
@click.argument("scenario_path", type=click.Path())
def validate(scenario_path: str):
    """Validate a scenario file and echo the resolved defaults."""
    data = _read_scenario_file(scenario_path)
    with make_client() as client:
        resp = client.post("/validate", json={"scenario": data})
        resp.raise_for_status()
        body = resp.json()
    if not body["valid"]:
        for err in body["errors"]:
            click.echo(f"invalid: {err}", err=True)
        sys.exit(EXIT_VALIDATION)
    click.echo(json.dumps(body["resolved"], indent=2, sort_keys=True))


@main.command()
@click.argument("scenario_path", type=click.Path())
@click.option("--out", "out_dir", default=None, help="Output directory.")
def run(scenario_path: str, out_dir: str | None):
    """Run a scenario and write report, trajectory CSV, and plot data."""
    data = _read_scenario_file(scenario_path)
    out = Path(out_dir or _default_out())
    with make_client() as client:
        result = _run_one(client, data, out)
    _finish(result["report"])


@main.command()
@click.argument("scenario_paths", type=click.Path(), nargs=-1, required=True)
@click.option("--out", "out_dir", default=None, help="Output directory.")
@click.option("--jobs", default=1, show_default=True, help="Parallel runs.")
def batch(scenario_paths: tuple[str, ...], out_dir: str | None, jobs: int):
    """Run several scenarios; failures are reported and the batch continues."""
    out = Path(out_dir or _default_out())
    scenarios = [_read_scenario_file(p) for p in scenario_paths]

    def work(item: tuple[str, dict]) -> tuple[str, dict | None, str | None]:
        path, data = item
        try:
            with make_client() as client:
                return path, _run_one(client, data, out), None
        except SystemExit:
            return path, None, "failed"
        except Exception as exc:
            return path, None, str(exc)

    items = list(zip(scenario_paths, scenarios))
    if jobs <= 1:
        results = [work(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, items))

    failed = 0
    for path, result, err in results:
        if result is None:
            failed += 1
            click.echo(f"{path}: ERROR {err}", err=True)
        else:
            click.echo(_summarize(result["report"]))
    if failed:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.argument("name", type=click.Choice(["example1", "fig2", "fig3", "fig4"]))
@click.option("--out", "out_dir", default=None, help="Output directory.")
def demo(name: str, out_dir: str | None):
    """Run a bundled demo scenario."""
    out = Path(out_dir or _default_out())
    with make_client() as client:
        resp = client.get(f"/demos/{name}")
        resp.raise_for_status()
        result = _run_one(client, resp.json(), out)
    _finish(result["report"])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("aligned_consensus.api:app", host=host, port=port)


if __name__ == "__main__":
    main()
