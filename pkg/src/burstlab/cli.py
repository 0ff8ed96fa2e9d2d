"""Command line front end.

Every subcommand is a thin client of the analysis service: the config tree is
resolved locally, then posted to the service, which runs in-process unless
``--server URL`` points at a remote instance.  Outputs are JSON on stdout (or
``--out``), plus CSV side files for simulation transfer logs.
"""
from __future__ import annotations

import asyncio
import base64
import json
import struct
import sys
from pathlib import Path

import click
import httpx

from .config import ConfigError, resolve_tree
from .presets import preset_names

_WORD = struct.Struct("<Q")


def _call(server: str | None, method: str, path: str, payload: dict | None = None) -> dict:
    """POST/GET against a remote server or the in-process app."""
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            r = client.request(method, path, json=payload)
    else:
        from .service.app import create_app

        async def go():
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(transport=transport, base_url="http://burstlab.local", timeout=None) as client:
                return await client.request(method, path, json=payload)

        r = asyncio.run(go())
    if r.status_code != 200:
        try:
            detail = r.json().get("detail")
        except ValueError:
            detail = r.text
        if isinstance(detail, dict):
            field = detail.get("field")
            message = detail.get("message", str(detail))
            detail = f"{field}: {message}" if field else message
        raise click.ClickException(f"{path} failed ({r.status_code}): {detail}")
    return r.json()


def _config_options(f):
    opts = [
        click.option("--preset", type=click.Choice(preset_names()), help="built-in kernel preset"),
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON config file"),
        click.option("--tile", help="tile sizes override, e.g. 6x6 or 4x5x7"),
        click.option("--dtype", help="data type override: fixed:N[:FRAC] or float:N"),
        click.option("--n", type=int, help="spatial size override (applied to every axis)"),
        click.option("--t", type=int, help="time step override"),
        click.option("--seed", type=int, help="use seeded random initialization"),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _resolve(preset, config_path, tile, dtype, n, t, seed) -> dict:
    try:
        tree = resolve_tree(preset=preset, config_path=config_path, tile=tile, dtype=dtype, n=n, t=t)
    except ConfigError as e:
        raise click.UsageError(str(e)) from None
    if seed is not None:
        init = tree.setdefault("problem", {}).setdefault("init", {})
        init["formula"] = "random"
        init["seed"] = seed
    return tree


def _emit(tree: dict, out: str | None) -> None:
    text = json.dumps(tree, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.version_option(package_name="burstlab")
def main() -> None:
    """Tile dataflow analysis, layout ordering, and transfer simulation."""


@main.command()
@_config_options
@click.option("--verbose", is_flag=True, help="include per-set point lists")
@click.option("--out", type=click.Path(), help="write JSON here instead of stdout")
@click.option("--server", help="remote service URL (default: in-process)")
def analyze(preset, config_path, tile, dtype, n, t, seed, verbose, out, server):
    """Extract the transfer sets of one representative tile."""
    tree = _resolve(preset, config_path, tile, dtype, n, t, seed)
    data = _call(server, "POST", "/analyze", {"config": tree, "verbose": verbose})
    _emit(data, out)


@main.command()
@_config_options
@click.option("--solver", type=click.Choice(["exact", "greedy"]), default="exact", show_default=True)
@click.option("--export-ilp", type=click.Path(), help="write the LP-format model here")
@click.option("--out", type=click.Path(), help="write JSON here instead of stdout")
@click.option("--server", help="remote service URL (default: in-process)")
def layout(preset, config_path, tile, dtype, n, t, seed, solver, export_ilp, out, server):
    """Order the transfer sets to maximize coalesced read bursts."""
    tree = _resolve(preset, config_path, tile, dtype, n, t, seed)
    data = _call(server, "POST", "/layout", {"config": tree, "solver": solver, "exportIlp": bool(export_ilp)})
    ilp = data.pop("ilp", None)
    if export_ilp:
        Path(export_ilp).write_text(ilp)
    _emit(data, out)


@main.command()
@_config_options
@click.option("--variants", default="all", show_default=True,
              help="comma-separated variant names, or 'all'")
@click.option("--bus-width", type=int, default=64, show_default=True, help="bus width in bits")
@click.option("--burst-latency", type=int, default=16, show_default=True, help="cycles to open a burst")
@click.option("--max-burst", type=int, default=256, show_default=True, help="max beats per burst")
@click.option("--threads", type=int, default=1, envvar="BURSTLAB_THREADS", show_envvar=True,
              help="wavefront-parallel tile workers")
@click.option("--solver", type=click.Choice(["exact", "greedy"]), default="exact", show_default=True)
@click.option("--out", type=click.Path(file_okay=False),
              help="directory for per-variant reports, transfer CSVs, and the relative-cycles CSV")
@click.option("--server", help="remote service URL (default: in-process)")
def simulate(preset, config_path, tile, dtype, n, t, seed, variants, bus_width,
             burst_latency, max_burst, threads, solver, out, server):
    """Run the tiled execution under one or more data-movement variants.

    Exits nonzero when any variant fails bit-exact verification.
    """
    tree = _resolve(preset, config_path, tile, dtype, n, t, seed)
    names = [v.strip() for v in variants.split(",") if v.strip()]
    data = _call(server, "POST", "/simulate", {
        "config": tree,
        "variants": names,
        "bus": {"widthBits": bus_width, "burstLatency": burst_latency, "maxBurstBeats": max_burst},
        "threads": threads,
        "solver": solver,
    })
    if out:
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        for rep in data["reports"]:
            name = rep["variant"]
            (outdir / f"report-{name}.json").write_text(json.dumps(rep, indent=2) + "\n")
            (outdir / f"transfers-{name}.csv").write_text(data["transfersCsv"][name])
        (outdir / "relative-cycles.csv").write_text(data["relativeCyclesCsv"])
        for rep in data["reports"]:
            click.echo(f"{rep['variant']}: correct={rep['correct']} "
                       f"readCycles={rep['totals']['read']['cycles']} "
                       f"writeCycles={rep['totals']['write']['cycles']}")
    else:
        _emit({"reports": data["reports"]}, None)
    if not all(rep["correct"] for rep in data["reports"]):
        raise SystemExit(1)


@main.command()
@click.option("--server", help="remote service URL (default: in-process)")
def presets(server):
    """List the built-in presets and their config trees."""
    _emit(_call(server, "GET", "/presets"), None)


@main.group()
def codec():
    """Pack, unpack, and inspect block files.

    Raw word files hold one little-endian u64 per word; block files follow
    the MARS1 container format.
    """


def _read_words(path: str) -> list[int]:
    raw = Path(path).read_bytes()
    if len(raw) % _WORD.size:
        raise click.ClickException(f"{path}: size {len(raw)} is not a multiple of 8 bytes")
    return [_WORD.unpack_from(raw, i)[0] for i in range(0, len(raw), _WORD.size)]


@codec.command("pack")
@click.argument("raw_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("block_file", type=click.Path(dir_okay=False))
@click.option("--n-bits", type=int, required=True, help="word width in bits")
@click.option("--bus-width", type=int, default=64, show_default=True)
@click.option("--split", help="comma-separated word counts per set (default: one set)")
@click.option("--server", help="remote service URL (default: in-process)")
def codec_pack(raw_file, block_file, n_bits, bus_width, split, server):
    """Compress a raw word file into a block file."""
    words = _read_words(raw_file)
    if split:
        try:
            counts = [int(x) for x in split.split(",")]
        except ValueError:
            raise click.UsageError(f"cannot parse --split {split!r}") from None
        if sum(counts) != len(words):
            raise click.UsageError(f"--split sums to {sum(counts)}, file has {len(words)} words")
    else:
        counts = [len(words)]
    streams, pos = [], 0
    for c in counts:
        streams.append(words[pos:pos + c])
        pos += c
    data = _call(server, "POST", "/codec/pack",
                 {"nBits": n_bits, "busWidthBits": bus_width, "streams": streams})
    Path(block_file).write_bytes(base64.b64decode(data.pop("block")))
    _emit(data, None)


@codec.command("unpack")
@click.argument("block_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("raw_file", type=click.Path(dir_okay=False))
@click.option("--server", help="remote service URL (default: in-process)")
def codec_unpack(block_file, raw_file, server):
    """Decompress a block file back into a raw word file."""
    payload = base64.b64encode(Path(block_file).read_bytes()).decode("ascii")
    data = _call(server, "POST", "/codec/unpack", {"block": payload})
    words = [w for stream in data["streams"] for w in stream]
    Path(raw_file).write_bytes(b"".join(_WORD.pack(w) for w in words))
    _emit({"nBits": data["nBits"], "wordCounts": [len(s) for s in data["streams"]]}, None)


@codec.command("inspect")
@click.argument("block_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--server", help="remote service URL (default: in-process)")
def codec_inspect(block_file, server):
    """Print the header, markers, and seek windows of a block file."""
    payload = base64.b64encode(Path(block_file).read_bytes()).decode("ascii")
    _emit(_call(server, "POST", "/codec/inspect", {"block": payload}), None)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the analysis service over HTTP."""
    import uvicorn

    uvicorn.run("burstlab.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
