"""Extraction of maximal atomic irredundant transfer sets.

For one representative full tile, every value that escapes the tile is
grouped by its *consumer signature*: the set of tile offsets that read it.
Each group is one atomic transfer set ("MARS"): it is stored once, moved as
one contiguous block, and every consumer that touches it consumes all of it.
The flow-in of a tile is then, by duality, a selection of whole output sets
from neighboring producer tiles.

All analysis happens on the tile at the origin; translation invariance of the
tiling extends the result to every full tile.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import Kernel, Point, TileCoord, TilingScheme, add, sub

ConsumerSignature = tuple[TileCoord, ...]


@dataclass(frozen=True)
class Mars:
    """One atomic transfer set of the representative tile."""

    id: int
    points: tuple[Point, ...]
    signature: ConsumerSignature

    @property
    def size(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class InputEntry:
    """One whole producer output set consumed by the representative tile."""

    producer_offset: TileCoord
    mars_id: int
    size: int


@dataclass(frozen=True)
class TileIOSummary:
    outputs: tuple[Mars, ...]
    inputs: tuple[InputEntry, ...]

    @property
    def flow_out_words(self) -> int:
        return sum(m.size for m in self.outputs)

    @property
    def flow_in_words(self) -> int:
        return sum(e.size for e in self.inputs)


def consumer_signature(p: Point, ts: TilingScheme, kernel: Kernel) -> ConsumerSignature | None:
    """Sorted tuple of tile offsets reading ``p`` from outside its tile.

    Returns None for values consumed only inside their own tile.
    """
    home = ts.tile_of(p)
    offs = set()
    for d in kernel.deps:
        o = sub(ts.tile_of(add(p, d)), home)
        if any(o):
            offs.add(o)
    return tuple(sorted(offs)) if offs else None


def extract_output_mars(ts: TilingScheme, kernel: Kernel) -> list[Mars]:
    """Group the representative tile's escaping values by consumer signature.

    Ids are assigned by lexicographic order of each group's smallest point,
    so they are stable across runs and implementations.
    """
    origin = (0,) * ts.dim
    groups: dict[ConsumerSignature, list[Point]] = {}
    for p in ts.tile_points(origin):
        sig = consumer_signature(p, ts, kernel)
        if sig is not None:
            groups.setdefault(sig, []).append(p)
    ordered = sorted(groups.items(), key=lambda kv: min(kv[1]))
    return [Mars(id=i, points=tuple(sorted(pts)), signature=sig) for i, (sig, pts) in enumerate(ordered)]


def extract_input_map(ts: TilingScheme, kernel: Kernel, outputs: list[Mars] | None = None) -> list[InputEntry]:
    """Locate every outside value the representative tile reads.

    Each flow-in point is resolved to (producer tile offset, producer output
    set id) by translating the producer's representative grouping.  The result
    lists each consumed set once, sorted by offset then id.
    """
    if outputs is None:
        outputs = extract_output_mars(ts, kernel)
    origin = (0,) * ts.dim
    tile_pts = set(ts.tile_points(origin))
    point_to_mars = {p: m.id for m in outputs for p in m.points}
    entries: dict[tuple[TileCoord, int], int] = {}
    seen_points = set()
    for q in tile_pts:
        for d in kernel.deps:
            v = sub(q, d)
            if v in tile_pts or v in seen_points:
                continue
            seen_points.add(v)
            o = ts.tile_of(v)
            rel = sub(v, ts.translation(o))
            mid = point_to_mars.get(rel)
            if mid is None:
                raise AssertionError(f"flow-in point {v} missing from producer tile {o} outputs")
            entries.setdefault((o, mid), 0)
    sizes = {m.id: m.size for m in outputs}
    return [
        InputEntry(producer_offset=o, mars_id=mid, size=sizes[mid])
        for (o, mid) in sorted(entries)
    ]


def analyze_tile(ts: TilingScheme, kernel: Kernel) -> TileIOSummary:
    outputs = extract_output_mars(ts, kernel)
    inputs = extract_input_map(ts, kernel, outputs)
    return TileIOSummary(outputs=tuple(outputs), inputs=tuple(inputs))


@dataclass
class PartitionReport:
    ok: bool = True
    failures: list[str] = field(default_factory=list)

    def fail(self, message: str) -> None:
        self.ok = False
        self.failures.append(message)


def verify_partition(summary: TileIOSummary, ts: TilingScheme, kernel: Kernel) -> PartitionReport:
    """Check the three defining properties of the extracted sets.

    * partition: output sets are disjoint and cover exactly the flow-out;
    * atomicity: every consumer tile reads all points of each set it touches,
      and no two sets share a signature (maximality);
    * irredundancy: the translated producer sets named by the input map tile
      the flow-in exactly once.
    """
    report = PartitionReport()
    origin = (0,) * ts.dim
    tile_pts = ts.tile_points(origin)
    tile_set = set(tile_pts)

    flow_out = {p: consumer_signature(p, ts, kernel) for p in tile_pts}
    flow_out = {p: s for p, s in flow_out.items() if s is not None}

    seen: dict[Point, int] = {}
    for m in summary.outputs:
        for p in m.points:
            if p in seen:
                report.fail(f"partition: point {p} appears in sets {seen[p]} and {m.id}")
            seen[p] = m.id
            if p not in flow_out:
                report.fail(f"partition: point {p} in set {m.id} does not flow out")
    for p in flow_out:
        if p not in seen:
            report.fail(f"partition: flow-out point {p} is not covered by any set")

    sigs = [m.signature for m in summary.outputs]
    if len(set(sigs)) != len(sigs):
        report.fail("atomicity: two sets share a consumer signature (not maximal)")
    consumers = sorted({c for s in sigs for c in s})
    for c in consumers:
        consumed = {p for p, s in flow_out.items() if c in s}
        for m in summary.outputs:
            touched = consumed.intersection(m.points)
            if touched and len(touched) != len(m.points):
                report.fail(f"atomicity: consumer {c} reads only {len(touched)}/{m.size} points of set {m.id}")

    flow_in = set()
    for q in tile_set:
        for d in kernel.deps:
            v = sub(q, d)
            if v not in tile_set:
                flow_in.add(v)
    by_id = {m.id: m for m in summary.outputs}
    covered: dict[Point, tuple] = {}
    for e in summary.inputs:
        m = by_id.get(e.mars_id)
        if m is None:
            report.fail(f"irredundancy: input entry names unknown set {e.mars_id}")
            continue
        shift = ts.translation(e.producer_offset)
        for p in m.points:
            v = add(p, shift)
            if v in covered:
                report.fail(f"irredundancy: flow-in point {v} delivered twice ({covered[v]} and {(e.producer_offset, e.mars_id)})")
            covered[v] = (e.producer_offset, e.mars_id)
    for v in flow_in:
        if v not in covered:
            report.fail(f"irredundancy: flow-in point {v} is not delivered by any input entry")

    return report


def summary_to_tree(summary: TileIOSummary, verbose: bool = False) -> dict:
    """JSON form of an analysis: outputs with signatures, inputs by producer."""
    outputs = []
    for m in summary.outputs:
        entry = {
            "id": m.id,
            "size": m.size,
            "signature": [list(c) for c in m.signature],
        }
        if verbose:
            entry["points"] = [list(p) for p in m.points]
        outputs.append(entry)
    inputs = [
        {"producerOffset": list(e.producer_offset), "marsId": e.mars_id, "size": e.size}
        for e in summary.inputs
    ]
    return {"outputs": outputs, "inputs": inputs}
