"""Thin command-line client for the analytics service.

Every subcommand speaks HTTP to the FastAPI app: against a remote server when
--server is given, otherwise in-process through an ASGI transport (no server
needed). Results land as UTF-8 CSV files with a fixed header; identical
seed/config reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx
import yaml


def _post(server: str | None, path: str, payload: dict) -> dict:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        from .service import app

        async def _go():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://risswpcn.internal", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(_go())
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except json.JSONDecodeError:
            detail = resp.text
        sys.exit(f"error: {path} -> {resp.status_code}: {detail}")
    return resp.json()


def _load_config(path: str | None, seed: int | None, trials: int | None) -> dict:
    data = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    if seed is not None or trials is not None:
        data.setdefault("mc", {})
        if seed is not None:
            data["mc"]["seed"] = seed
        if trials is not None:
            data["mc"]["trials"] = trials
    return data


def _write_csv(out_dir: str, name: str, csv_text: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    path.write_text(csv_text, encoding="utf-8")
    return path


def _report(result: dict, out_dir: str, name: str) -> None:
    path = _write_csv(out_dir, name, result["csv"])
    print(f"wrote {len(result['rows'])} rows -> {path}")
    for flag in result.get("flags", []):
        print(f"FLAG: {flag}")


def _add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", help="scenario config file (YAML or JSON)")
    p.add_argument("--seed", type=int, help="override mc.seed")
    p.add_argument("--trials", type=int, help="override mc.trials")
    p.add_argument("--out", default="results", help="output directory for CSV files")
    p.add_argument("--server", help="remote service URL (default: run in-process)")


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="risswpcn",
        description="Surface-assisted WPCN analytics: closed forms, Monte Carlo, recipes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, blurb in (
        ("analyze", "closed forms and bounds only"),
        ("simulate", "closed forms paired with Monte Carlo"),
        ("sweep", "simulate over the config's sweep grid"),
    ):
        p = sub.add_parser(name, help=blurb)
        _add_common(p)

    p = sub.add_parser("reproduce", help="run a stored figure recipe")
    p.add_argument("--figure", required=True, help="fig3 .. fig10")
    _add_common(p, config=False)

    p = sub.add_parser("plan-power", help="transmit power meeting an outage target")
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--t-thre-dbm", type=float)
    p.add_argument("--t-thre-watts", type=float)
    _add_common(p)

    p = sub.add_parser("doa-calibrate", help="direction-error statistics grid")
    p.add_argument("--na", type=int, action="append", help="active element count (repeatable)")
    p.add_argument("--kappa", type=float, action="append", help="Rician factor (repeatable)")
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--snapshots", type=int, default=64)
    _add_common(p, config=False)

    p = sub.add_parser("fit-eta", help="two-stage fit of the angle-to-phase constants")
    p.add_argument("--sigma", type=float, action="append",
                   help="angle-error level to simulate (repeatable)")
    _add_common(p, config=False)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        uvicorn.run("risswpcn.service:app", host=args.host, port=args.port)
        return

    if args.command in ("analyze", "simulate", "sweep"):
        config = _load_config(args.config, args.seed, args.trials)
        result = _post(args.server, f"/{args.command}", {"config": config})
        _report(result, args.out, config.get("scenario_id", "default"))
    elif args.command == "reproduce":
        payload = {"figure": args.figure}
        if args.trials is not None:
            payload["trials"] = args.trials
        if args.seed is not None:
            payload["seed"] = args.seed
        result = _post(args.server, "/reproduce", payload)
        _report(result, args.out, args.figure)
    elif args.command == "plan-power":
        config = _load_config(args.config, args.seed, args.trials)
        payload = {"config": config, "p_out": args.p_out}
        if args.t_thre_dbm is not None:
            payload["t_thre_dbm"] = args.t_thre_dbm
        if args.t_thre_watts is not None:
            payload["t_thre_watts"] = args.t_thre_watts
        result = _post(args.server, "/plan-power", payload)
        path = _write_csv(args.out, "plan_power", result["csv"])
        print(
            f"required power: {result['power_watts']:.6g} W "
            f"({result['power_dbm']:.2f} dBm) for p_out={result['p_out']:g}, "
            f"threshold {result['t_thre_watts']:.6g} W"
        )
        print(f"gamma params (unit power): alpha={result['gamma_alpha']:.4f}, "
              f"beta={result['gamma_beta_unit_power']:.6g}")
        print(f"wrote -> {path}")
    elif args.command == "doa-calibrate":
        payload = {
            "snr_db": args.snr_db,
            "n_snapshots": args.snapshots,
        }
        if args.na:
            payload["na_values"] = args.na
        if args.kappa:
            payload["kappa_values"] = args.kappa
        if args.trials is not None:
            payload["trials"] = args.trials
        if args.seed is not None:
            payload["seed"] = args.seed
        result = _post(args.server, "/doa-calibrate", payload)
        _report(result, args.out, "doa_calibrate")
    elif args.command == "fit-eta":
        payload = {}
        if args.sigma:
            payload["sigmas"] = args.sigma
        if args.trials is not None:
            payload["trials"] = args.trials
        if args.seed is not None:
            payload["seed"] = args.seed
        result = _post(args.server, "/fit-eta", payload)
        path = _write_csv(args.out, "fit_eta", result["csv"])
        print(
            f"eta_u={result['eta_u']:.4f} eta_v={result['eta_v']:.4f} "
            f"eta_z={result['eta_z']:.4f} (residuals {result['residual_siso']:.3e} / "
            f"{result['residual_miso']:.3e}, flagged={result['flagged']})"
        )
        print(f"wrote -> {path}")


if __name__ == "__main__":
    main()
