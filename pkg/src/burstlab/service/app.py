"""Stateless analysis service: one endpoint per pipeline stage.

All domain work happens in the core modules; this layer validates bodies,
maps typed domain errors to HTTP 400 with a field path, and serializes
results.  The command line client drives these endpoints, in-process by
default, so the two front ends cannot drift apart.
"""
from __future__ import annotations

import base64
import binascii
import csv
import io

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..codec import (
    CodecError,
    CorruptBlock,
    compress_block,
    decode_block,
    parse_block,
    seek_mars,
    serialize_block,
)
from ..config import ConfigError, load_config
from ..ilp import export_ilp
from ..kernel import IllegalTiling
from ..layout import TooManyMars, build_weights, count_read_bursts, solve_layout_exact, solve_layout_greedy
from ..mars import analyze_tile, verify_partition
from ..membus import BusConfig
from ..presets import PRESETS, preset_names
from ..sim import VARIANTS, SimulationError, build_analysis, compute_history, run_tiled
from .models import (
    AnalyzeRequest,
    AnalyzeResponse,
    CodecBlockRequest,
    CodecInspectResponse,
    CodecPackRequest,
    CodecPackResponse,
    CodecUnpackResponse,
    HealthResponse,
    LayoutRequest,
    LayoutResponse,
    PresetsResponse,
    SimulateRequest,
    SimulateResponse,
)

_DOMAIN_ERRORS = (ConfigError, CodecError, CorruptBlock, TooManyMars, IllegalTiling, SimulationError)


def _analyze_tree(rs, verbose: bool) -> dict:
    summary = analyze_tile(rs.tiling, rs.kernel)
    check = verify_partition(summary, rs.tiling, rs.kernel)
    outputs = []
    for m in summary.outputs:
        entry = {"id": m.id, "size": m.size, "signature": [list(c) for c in m.signature]}
        if verbose:
            entry["points"] = [list(p) for p in m.points]
        outputs.append(entry)
    return {
        "kernel": rs.kernel.name,
        "tiling": rs.tiling.to_tree(),
        "marsOut": len(summary.outputs),
        "marsIn": len(summary.inputs),
        "flowOutWords": summary.flow_out_words,
        "flowInWords": summary.flow_in_words,
        "partitionOk": check.ok,
        "outputs": outputs,
        "inputs": [
            {"producerOffset": list(e.producer_offset), "marsId": e.mars_id, "size": e.size}
            for e in summary.inputs
        ],
    }


def _layout_tree(rs, solver: str, with_ilp: bool) -> dict:
    summary = analyze_tile(rs.tiling, rs.kernel)
    wm = build_weights(list(summary.outputs))
    layout = solve_layout_exact(wm) if solver == "exact" else solve_layout_greedy(wm)
    bursts = count_read_bursts(layout, list(summary.inputs))
    tree = {
        "order": list(layout.order),
        "objective": layout.objective,
        "burstsPerProducer": {
            ",".join(map(str, off)): n for off, n in bursts.per_producer
        },
        "totalReadBursts": bursts.total,
        "writeBursts": 1,
    }
    if with_ilp:
        tree["ilp"] = export_ilp(wm, name=f"{rs.kernel.name}-layout")
    return tree


def _relative_cycles_csv(reports: list[dict]) -> str:
    base = next((r for r in reports if r["variant"] == "mars-compressed"), reports[0])
    base_total = base["totals"]["read"]["cycles"] + base["totals"]["write"]["cycles"]
    buf = io.StringIO()
    wr = csv.writer(buf)
    wr.writerow(
        ["variant", "readBursts", "readCycles", "writeBursts", "writeCycles", "totalCycles", "relativeCycles"]
    )
    for r in reports:
        t = r["totals"]
        total = t["read"]["cycles"] + t["write"]["cycles"]
        rel = total / base_total if base_total else 1.0
        wr.writerow(
            [r["variant"], t["read"]["bursts"], t["read"]["cycles"],
             t["write"]["bursts"], t["write"]["cycles"], total, repr(rel)]
        )
    return buf.getvalue()


def create_app() -> FastAPI:
    app = FastAPI(title="burstlab", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"detail": {"field": exc.path, "message": exc.message}})

    for klass in _DOMAIN_ERRORS[1:]:
        @app.exception_handler(klass)
        async def _domain_error(request: Request, exc: Exception):
            return JSONResponse(status_code=400, content={"detail": {"message": str(exc)}})

    @app.get("/healthz", response_model=HealthResponse)
    async def healthz():
        return HealthResponse(status="ok", version=__version__)

    @app.get("/presets", response_model=PresetsResponse)
    async def presets():
        return PresetsResponse(names=preset_names(), configs=PRESETS)

    @app.post("/analyze", response_model=AnalyzeResponse, response_model_exclude_none=True)
    async def analyze(req: AnalyzeRequest):
        rs = load_config(req.config)
        return _analyze_tree(rs, req.verbose)

    @app.post("/layout", response_model=LayoutResponse, response_model_exclude_none=True)
    async def layout(req: LayoutRequest):
        rs = load_config(req.config)
        return _layout_tree(rs, req.solver, req.exportIlp)

    @app.post("/simulate", response_model=SimulateResponse)
    async def simulate(req: SimulateRequest):
        rs = load_config(req.config)
        names = list(VARIANTS) if "all" in req.variants else list(dict.fromkeys(req.variants))
        for v in names:
            if v not in VARIANTS:
                raise ConfigError("variants", f"unknown variant {v!r} (have: {', '.join(VARIANTS)}, all)")
        bus = BusConfig(
            width_bits=req.bus.widthBits,
            burst_latency=req.bus.burstLatency,
            max_burst_beats=req.bus.maxBurstBeats,
        )
        analysis = build_analysis(rs.kernel, rs.tiling, req.solver)
        reference = compute_history(rs.kernel, rs.problem)
        reports, csvs = [], {}
        for v in names:
            rep = run_tiled(
                rs.kernel, rs.tiling, rs.problem, v,
                bus=bus, threads=req.threads, analysis=analysis, reference=reference,
            )
            reports.append(rep.to_tree())
            csvs[v] = rep.log.to_csv()
        return SimulateResponse(
            reports=reports,
            transfersCsv=csvs,
            relativeCyclesCsv=_relative_cycles_csv(reports),
        )

    @app.post("/codec/pack", response_model=CodecPackResponse)
    async def codec_pack(req: CodecPackRequest):
        block = compress_block(req.streams, req.nBits, req.busWidthBits)
        raw = serialize_block(block)
        return CodecPackResponse(
            block=base64.b64encode(raw).decode("ascii"),
            nBits=block.n_bits,
            busWidthBits=block.bus_width_bits,
            wordCounts=list(block.word_counts),
            markers=[[m.coarse, m.fine] for m in block.markers],
            dataBits=block.data_bits,
            fileBytes=len(raw),
        )

    def _parse_block_b64(data: str):
        try:
            raw = base64.b64decode(data, validate=True)
        except (binascii.Error, ValueError):
            raise CorruptBlock("block payload is not valid base64") from None
        return parse_block(raw)

    @app.post("/codec/unpack", response_model=CodecUnpackResponse)
    async def codec_unpack(req: CodecBlockRequest):
        block = _parse_block_b64(req.block)
        return CodecUnpackResponse(
            nBits=block.n_bits,
            busWidthBits=block.bus_width_bits,
            streams=decode_block(block),
        )

    @app.post("/codec/inspect", response_model=CodecInspectResponse)
    async def codec_inspect(req: CodecBlockRequest):
        block = _parse_block_b64(req.block)
        windows = []
        for i in range(len(block.word_counts)):
            w = seek_mars(block, i)
            windows.append(
                {"marsId": i, "firstWord": w.first_word, "wordCount": w.word_count, "skipBits": w.skip_bits}
            )
        raw = serialize_block(block)
        return CodecInspectResponse(
            nBits=block.n_bits,
            busWidthBits=block.bus_width_bits,
            marsCount=len(block.word_counts),
            wordCounts=list(block.word_counts),
            markers=[[m.coarse, m.fine] for m in block.markers],
            dataBits=block.data_bits,
            payloadBytes=len(raw),
            seekWindows=windows,
        )

    return app


app = create_app()
