"""Thin command-line client for the experiment service.

Talks HTTP to a running service when ``--server`` is given; otherwise mounts
the service in-process over an ASGI transport, so the same request/response
path is exercised without a separate process.  Outputs land in ``--out`` as
one CSV and one manifest JSON per experiment.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .config import ExperimentSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamalign", description="Run beam-alignment experiments"
    )
    parser.add_argument("--config", type=Path, default=None, help="JSON experiment config")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--trials", type=int, default=None, help="trials per sweep point")
    parser.add_argument("--workers", type=int, default=None, help="parallel trial workers")
    parser.add_argument(
        "--experiment",
        choices=("detection", "rate", "pdp"),
        default="detection",
        help="which experiment to run",
    )
    parser.add_argument(
        "--scheme", choices=("nnls", "omp", "both"), default=None, help="estimator scheme"
    )
    parser.add_argument(
        "--server", default=None, help="base URL of a running service (default: in-process)"
    )
    return parser


def _load_spec(args: argparse.Namespace) -> ExperimentSpec:
    payload = {}
    if args.config is not None:
        payload = json.loads(args.config.read_text())
    spec = ExperimentSpec.model_validate(payload)
    updates = {}
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if args.trials is not None:
        updates["trials"] = args.trials
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.scheme is not None:
        updates["scheme"] = args.scheme
    return spec.model_copy(update=updates) if updates else spec


async def _post(server: str | None, path: str, body: dict) -> dict:
    if server is None:
        from .service.app import app

        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://beamalign.local", timeout=None
        ) as client:
            response = await client.post(path, json=body)
    else:
        async with httpx.AsyncClient(base_url=server, timeout=None) as client:
            response = await client.post(path, json=body)
    if response.status_code != 200:
        raise RuntimeError(f"service returned {response.status_code}: {response.text}")
    return response.json()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _load_spec(args)
    except (OSError, ValueError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 2

    # fail on an unwritable output location before any computation
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        probe = args.out / ".write_test"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory not writable: {exc}", file=sys.stderr)
        return 2

    body = {"config": spec.model_dump(mode="json")}
    try:
        payload = asyncio.run(_post(args.server, f"/experiments/{args.experiment}", body))
    except (RuntimeError, httpx.HTTPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    csv_path = args.out / f"{args.experiment}.csv"
    manifest_path = args.out / f"{args.experiment}_manifest.json"
    with csv_path.open("w", newline="") as fh:
        fh.write(payload["csv"])
    with manifest_path.open("w") as fh:
        json.dump(payload["manifest"], fh, indent=2, sort_keys=True)
        fh.write("\n")

    print(f"wrote {csv_path} ({len(payload['rows'])} rows) and {manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
