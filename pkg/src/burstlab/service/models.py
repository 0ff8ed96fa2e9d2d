"""Request/response bodies of the analysis service.

Field names match the JSON wire format (camelCase), which is also the format
the shipped JSON schemas and golden files describe.  Config trees are passed
through as plain objects; the config module validates them with field-path
errors that the service maps to HTTP 400.
"""
from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class AnalyzeRequest(BaseModel):
    config: dict
    verbose: bool = False


class MarsModel(BaseModel):
    id: int
    size: int
    signature: list[list[int]]
    points: Optional[list[list[int]]] = None


class InputModel(BaseModel):
    producerOffset: list[int]
    marsId: int
    size: int


class AnalyzeResponse(BaseModel):
    kernel: str
    tiling: dict
    marsOut: int
    marsIn: int
    flowOutWords: int
    flowInWords: int
    partitionOk: bool
    outputs: list[MarsModel]
    inputs: list[InputModel]


class LayoutRequest(BaseModel):
    config: dict
    solver: Literal["exact", "greedy"] = "exact"
    exportIlp: bool = False


class LayoutResponse(BaseModel):
    order: list[int]
    objective: int
    burstsPerProducer: dict[str, int]
    totalReadBursts: int
    writeBursts: int
    ilp: Optional[str] = None


class BusParams(BaseModel):
    widthBits: int = 64
    burstLatency: int = 16
    maxBurstBeats: int = 256


class SimulateRequest(BaseModel):
    config: dict
    variants: list[str] = Field(default_factory=lambda: ["all"])
    bus: BusParams = Field(default_factory=BusParams)
    threads: int = 1
    solver: Literal["exact", "greedy"] = "exact"


class TotalsModel(BaseModel):
    bursts: int
    cycles: int
    transferredBits: int
    usefulBits: int


class DirectionTotals(BaseModel):
    read: TotalsModel
    write: TotalsModel


class SimReportModel(BaseModel):
    variant: str
    kernel: str
    dtype: dict
    tileSizes: list[int]
    problem: dict
    bus: BusParams
    threads: int
    analysis: dict
    tilesOnFpgaPath: int
    tilesOnHostPath: int
    eligibleCompressedTiles: int
    capacityBytesPerTile: Optional[int]
    totals: DirectionTotals
    compressionRatioTrue: Optional[float]
    compressionRatioWithPadding: Optional[float]
    expandedBlocks: int
    saturationWarnings: dict
    iterationPoints: int
    mismatches: int
    correct: bool


class SimulateResponse(BaseModel):
    reports: list[SimReportModel]
    transfersCsv: dict[str, str]
    relativeCyclesCsv: str


class CodecPackRequest(BaseModel):
    nBits: int
    busWidthBits: int = 64
    streams: list[list[int]]


class CodecBlockRequest(BaseModel):
    block: str  # base64 of a serialized block file


class SeekWindowModel(BaseModel):
    marsId: int
    firstWord: int
    wordCount: int
    skipBits: int


class CodecInspectResponse(BaseModel):
    nBits: int
    busWidthBits: int
    marsCount: int
    wordCounts: list[int]
    markers: list[list[int]]
    dataBits: int
    payloadBytes: int
    seekWindows: list[SeekWindowModel]


class CodecPackResponse(BaseModel):
    block: str
    nBits: int
    busWidthBits: int
    wordCounts: list[int]
    markers: list[list[int]]
    dataBits: int
    fileBytes: int


class CodecUnpackResponse(BaseModel):
    nBits: int
    busWidthBits: int
    streams: list[list[int]]


class PresetsResponse(BaseModel):
    names: list[str]
    configs: dict[str, dict]


class HealthResponse(BaseModel):
    status: str
    version: str
