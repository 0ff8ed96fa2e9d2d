"""Burst-bus cost model, transfer planning, and original-layout addressing.

Every transfer moves a bus-word-aligned bit range and costs one initiation
latency plus one cycle per bus-width beat, with long transfers split into
bursts of at most ``max_burst_beats`` beats.  Splitting changes cycles only;
the transfer count is what burst statistics report.  Useful bits record how
much of the fetched range the consumer actually needed, making waste
auditable per transfer.

Read planning comes in two families: runs of layout-adjacent output sets read
out of per-tile blocks (the optimized path), and consecutive-address runs
over the original row-major arrays (the two baseline access patterns).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import prod
from typing import Union

from .bitstream import BitStream
from .codec import CompressedBlock
from .kernel import Point, TileCoord
from .layout import AllocationMap, LayoutOrder
from .mars import InputEntry


@dataclass(frozen=True)
class BusConfig:
    width_bits: int = 64
    burst_latency: int = 16
    max_burst_beats: int = 256

    def __post_init__(self) -> None:
        if self.width_bits < 8 or self.width_bits & (self.width_bits - 1):
            raise ValueError(f"bus width {self.width_bits} must be a power of two >= 8")
        if self.burst_latency < 1:
            raise ValueError("burst latency must be at least one cycle")
        if self.max_burst_beats < 1:
            raise ValueError("maximum burst length must be at least one beat")


def burst_cycles(length_bits: int, cfg: BusConfig) -> int:
    if length_bits < 0 or length_bits % cfg.width_bits:
        raise ValueError(f"transfer of {length_bits} bits is not whole bus words")
    beats = length_bits // cfg.width_bits
    if beats == 0:
        return 0
    full, rest = divmod(beats, cfg.max_burst_beats)
    bursts = full + (1 if rest else 0)
    return bursts * cfg.burst_latency + beats


@dataclass(frozen=True)
class Transfer:
    tile: TileCoord   # the accelerator-side tile this transfer belongs to
    direction: str    # "read" | "write"
    label: str        # what the range holds ("block", "footprint", "bbox", ...)
    start_bit: int    # absolute, bus-word aligned
    length_bits: int  # whole bus words
    useful_bits: int
    cycles: int


@dataclass
class TransferLog:
    cfg: BusConfig
    transfers: list[Transfer] = field(default_factory=list)

    def add(self, tile: TileCoord, direction: str, label: str, start_bit: int, end_bit: int, useful_bits: int) -> Transfer:
        """Record one transfer covering [start, end), widened to aligned words."""
        if end_bit <= start_bit:
            raise ValueError("empty transfer")
        w = self.cfg.width_bits
        first = start_bit - start_bit % w
        length = -(-(end_bit - first) // w) * w
        t = Transfer(
            tile=tile,
            direction=direction,
            label=label,
            start_bit=first,
            length_bits=length,
            useful_bits=useful_bits,
            cycles=burst_cycles(length, self.cfg),
        )
        self.transfers.append(t)
        return t

    def extend(self, other: "TransferLog") -> None:
        self.transfers.extend(other.transfers)

    def totals(self) -> dict:
        out = {
            d: {"bursts": 0, "cycles": 0, "transferredBits": 0, "usefulBits": 0}
            for d in ("read", "write")
        }
        for t in self.transfers:
            side = out[t.direction]
            side["bursts"] += 1
            side["cycles"] += t.cycles
            side["transferredBits"] += t.length_bits
            side["usefulBits"] += t.useful_bits
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["tile", "direction", "startBit", "lengthBits", "usefulBits", "cycles"])
        for t in self.transfers:
            wr.writerow([";".join(map(str, t.tile)), t.direction, t.start_bit, t.length_bits, t.useful_bits, t.cycles])
        return buf.getvalue()


def consecutive_runs(sorted_values: list[int]) -> list[tuple[int, int]]:
    """Maximal (start, count) runs of consecutive integers; input must be sorted."""
    runs: list[tuple[int, int]] = []
    for v in sorted_values:
        if runs and v == runs[-1][0] + runs[-1][1]:
            runs[-1] = (runs[-1][0], runs[-1][1] + 1)
        else:
            runs.append((v, 1))
    return runs


@dataclass(frozen=True)
class BlockInfo:
    """Directory entry for one written tile block (the markers database record).

    Bit positions and lengths are indexed by output-set id and are relative to
    the block base, which makes read planning identical for compressed,
    packed, and padded block formats.
    """

    format: str                      # "compressed" | "packed" | "padded"
    bit_pos: tuple[int, ...]
    bit_len: tuple[int, ...]
    data_bits: int
    payload: Union[CompressedBlock, BitStream]


@dataclass(frozen=True)
class ReadRun:
    """One planned block read: layout-adjacent sets fetched in a single burst."""

    producer: TileCoord
    mars_ids: tuple[int, ...]
    start_bit: int   # relative to the producer block base
    end_bit: int


def plan_mars_reads(
    tile_inputs: list[InputEntry],
    layout: LayoutOrder,
    alloc: AllocationMap,
    markers_db: dict[TileCoord, BlockInfo],
    consumer: TileCoord,
    log: TransferLog,
) -> list[ReadRun]:
    """Plan and log one read per coalesced run, for every producer of a tile.

    Sets consumed from one producer coalesce when their layout positions are
    consecutive; runs never span producers.  Run boundaries come from the
    producer's block directory, so the same planning covers all block formats.
    """
    by_producer: dict[TileCoord, list[InputEntry]] = {}
    for e in tile_inputs:
        p = tuple(a + b for a, b in zip(consumer, e.producer_offset))
        by_producer.setdefault(p, []).append(e)
    runs: list[ReadRun] = []
    for producer in sorted(by_producer):
        if producer not in markers_db:
            raise ValueError(f"producer block {producer} has not been written")
        info = markers_db[producer]
        base = alloc.base_bit(producer)
        ids = sorted((e.mars_id for e in by_producer[producer]), key=lambda i: layout.gamma[i])
        pos = 0
        while pos < len(ids):
            end = pos + 1
            while end < len(ids) and layout.gamma[ids[end]] == layout.gamma[ids[end - 1]] + 1:
                end += 1
            run_ids = tuple(ids[pos:end])
            start_bit = info.bit_pos[run_ids[0]]
            end_bit = info.bit_pos[run_ids[-1]] + info.bit_len[run_ids[-1]]
            log.add(consumer, "read", "block", base + start_bit, base + end_bit, end_bit - start_bit)
            runs.append(ReadRun(producer=producer, mars_ids=run_ids, start_bit=start_bit, end_bit=end_bit))
            pos = end
    return runs


@dataclass(frozen=True)
class OriginalLayout:
    """Row-major plane-per-time-slot addressing used by the baselines.

    Cells are padded to their container width and each plane starts on a bus
    word, so a cell never straddles words.
    """

    spatial_sizes: tuple[int, ...]
    container_bits: int
    bus_width_bits: int
    depth: int

    @property
    def cells_per_plane(self) -> int:
        return prod(self.spatial_sizes)

    @property
    def plane_words(self) -> int:
        return -(-self.cells_per_plane * self.container_bits // self.bus_width_bits)

    @property
    def total_words(self) -> int:
        return self.plane_words * self.depth

    def linear(self, spatial: Point) -> int:
        idx = 0
        for size, x in zip(self.spatial_sizes, spatial):
            if not 0 <= x < size:
                raise ValueError(f"coordinate {spatial} outside the grid")
            idx = idx * size + x
        return idx

    def cell_bit(self, plane: int, spatial: Point) -> int:
        if not 0 <= plane < self.depth:
            raise ValueError(f"plane {plane} out of range")
        return (plane * self.plane_words * self.bus_width_bits) + self.linear(spatial) * self.container_bits

    def _plane_runs(self, by_plane: dict[int, list[int]]) -> list[tuple[int, int, int, int]]:
        out = []
        for plane in sorted(by_plane):
            lins = sorted(by_plane[plane])
            if len(set(lins)) != len(lins):
                raise ValueError("duplicate cell in run planning")
            base = plane * self.plane_words * self.bus_width_bits
            for start, count in consecutive_runs(lins):
                out.append((plane, start, count, base + start * self.container_bits))
        return out


def baseline_minimal(cells: list[tuple[int, Point]], ol: OriginalLayout, tile: TileCoord, direction: str, label: str, log: TransferLog) -> None:
    """Exact-footprint access: one transfer per consecutive-address run."""
    by_plane: dict[int, list[int]] = {}
    for plane, sp in cells:
        by_plane.setdefault(plane, []).append(ol.linear(sp))
    for _, _, count, start_bit in ol._plane_runs(by_plane):
        log.add(tile, direction, label, start_bit, start_bit + count * ol.container_bits, count * ol.container_bits)


def baseline_bbox(cells: list[tuple[int, Point]], ol: OriginalLayout, tile: TileCoord, direction: str, label: str, log: TransferLog) -> None:
    """Bounding-box access: fetch each plane's full box, count footprint as useful."""
    by_plane: dict[int, list[Point]] = {}
    for plane, sp in cells:
        by_plane.setdefault(plane, []).append(sp)
    for plane in sorted(by_plane):
        pts = by_plane[plane]
        needed = {ol.linear(sp) for sp in pts}
        if len(needed) != len(pts):
            raise ValueError("duplicate cell in run planning")
        box = bounding_box_cells(pts)
        box_runs: dict[int, list[int]] = {plane: [ol.linear(sp) for sp in box]}
        for _, start, count, start_bit in ol._plane_runs(box_runs):
            useful = sum(1 for lin in range(start, start + count) if lin in needed)
            log.add(tile, direction, label, start_bit, start_bit + count * ol.container_bits, useful * ol.container_bits)


def bounding_box_cells(points: list[Point]) -> list[Point]:
    """All integer points of the axis-aligned bounding box of ``points``."""
    if not points:
        return []
    dim = len(points[0])
    lo = [min(p[d] for p in points) for d in range(dim)]
    hi = [max(p[d] for p in points) for d in range(dim)]
    cells: list[Point] = [()]
    for d in range(dim):
        cells = [c + (x,) for c in cells for x in range(lo[d], hi[d] + 1)]
    return cells
