"""Stencil kernel model, tiling schemes, and tile geometry.

Coordinates are plain integer tuples with the time component first.  A
dependence vector ``d`` means that iteration ``q`` reads the value produced
by iteration ``q - d``; all dependence vectors must be lexicographically
positive so that executing points in lexicographic order is always legal.

Two tiling schemes are supported:

* ``diamond1d`` -- hyperplane pair ``(t + i, t - i)`` with rectangular tiling
  of the hyperplane plane.  Only points where both hyperplane coordinates
  have equal parity correspond to integer ``(t, i)`` points, so an ``s x s``
  tile holds ``s^2 / 2`` points for even ``s``.  Sizes must be even: odd
  sizes would make the per-tile point pattern depend on the tile coordinate,
  which breaks the translation invariance the rest of the pipeline relies on.
* ``skewed-rect`` -- a unimodular skew applied to iteration coordinates
  followed by rectangular floor-division tiling.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

Point = tuple[int, ...]
TileCoord = tuple[int, ...]


class IllegalTiling(ValueError):
    """Raised when some dependence crosses tiles against the tile order."""


def _lex_positive(vec: tuple[int, ...]) -> bool:
    for c in vec:
        if c != 0:
            return c > 0
    return False


def _lex_negative(vec: tuple[int, ...]) -> bool:
    return _lex_positive(tuple(-c for c in vec))


def add(p: Point, q: Point) -> Point:
    return tuple(a + b for a, b in zip(p, q))


def sub(p: Point, q: Point) -> Point:
    return tuple(a - b for a, b in zip(p, q))


@dataclass(frozen=True)
class DataTypeSpec:
    """Value representation carried end to end through the pipeline.

    ``fixed`` words are signed two's-complement with ``frac_bits`` fractional
    bits; ``float`` words are IEEE-754 bit patterns (32 or 64 bits wide).
    """

    kind: str
    total_bits: int
    frac_bits: int = 0
    signed: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("fixed", "float"):
            raise ValueError(f"unknown dtype kind {self.kind!r}")
        if not 2 <= self.total_bits <= 64:
            raise ValueError("totalBits must be in [2, 64]")
        if self.kind == "fixed" and not 0 <= self.frac_bits < self.total_bits:
            raise ValueError("fracBits must be in [0, totalBits)")
        if self.kind == "float":
            if self.total_bits not in (32, 64):
                raise ValueError("float width must be 32 or 64")
            if not self.signed:
                raise ValueError("float types are always signed")

    @property
    def container_bits(self) -> int:
        """Aligned container width used by word-padded layouts (8/16/32/64)."""
        c = 8
        while c < self.total_bits:
            c *= 2
        return c

    @property
    def word_mask(self) -> int:
        return (1 << self.total_bits) - 1

    def to_tree(self) -> dict:
        return {
            "kind": self.kind,
            "totalBits": self.total_bits,
            "fracBits": self.frac_bits,
            "signed": self.signed,
        }


@dataclass(frozen=True)
class Kernel:
    """Uniform-dependence stencil update.

    ``coeffs`` holds one exact rational coefficient per dependence vector, in
    the same order.  When all coefficients are equal the update is evaluated
    as ``c * (v_1 + ... + v_k)`` (the form the reference programs use),
    otherwise as ``c_1 * v_1 + ... + c_k * v_k``.
    """

    name: str
    dim: int
    deps: tuple[Point, ...]
    coeffs: tuple[Fraction, ...]
    dtype: DataTypeSpec

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValueError("kernel dimension must be >= 2 (time + space)")
        if not self.deps:
            raise ValueError("kernel needs at least one dependence vector")
        if len(set(self.deps)) != len(self.deps):
            raise ValueError("dependence vectors must be distinct")
        for d in self.deps:
            if len(d) != self.dim:
                raise ValueError(f"dependence {d} has wrong dimension")
            if d[0] < 0 or not _lex_positive(d):
                raise ValueError(f"dependence {d} is not lexicographically positive")
        if len(self.coeffs) != len(self.deps):
            raise ValueError("need exactly one coefficient per dependence")

    @property
    def in_place(self) -> bool:
        """True when some dependence stays within a time step."""
        return any(d[0] == 0 for d in self.deps)

    @property
    def temporal_depth(self) -> int:
        """Planes of the canonical (t mod depth, spatial) array layout."""
        return 1 if self.in_place else 2

    @property
    def common_coeff(self) -> Fraction | None:
        first = self.coeffs[0]
        return first if all(c == first for c in self.coeffs) else None


def _exact_inverse(matrix: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...]:
    """Invert a unimodular integer matrix exactly; reject anything else."""
    n = len(matrix)
    aug = [[Fraction(matrix[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("skew matrix is singular")
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
            det = -det
        det *= aug[col][col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    if abs(det) != 1:
        raise ValueError(f"skew matrix must be unimodular (det {det})")
    out = []
    for i in range(n):
        row = aug[i][n:]
        if any(x.denominator != 1 for x in row):
            raise ValueError("skew inverse is not integral")
        out.append(tuple(int(x) for x in row))
    return tuple(out)


@dataclass(frozen=True)
class TilingScheme:
    kind: str
    sizes: tuple[int, ...]
    skew: tuple[tuple[int, ...], ...] | None = None
    _inv_skew: tuple[tuple[int, ...], ...] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if any(s < 1 for s in self.sizes):
            raise ValueError("tile sizes must be >= 1")
        if self.kind == "diamond1d":
            if len(self.sizes) != 2:
                raise ValueError("diamond1d takes exactly two tile sizes")
            if self.skew is not None:
                raise ValueError("diamond1d does not take a skew matrix")
            if any(s % 2 for s in self.sizes):
                raise ValueError("diamond1d tile sizes must be even")
        elif self.kind == "skewed-rect":
            skew = self.skew
            if skew is None:
                skew = tuple(tuple(int(i == j) for j in range(len(self.sizes))) for i in range(len(self.sizes)))
                object.__setattr__(self, "skew", skew)
            if len(skew) != len(self.sizes) or any(len(row) != len(self.sizes) for row in skew):
                raise ValueError("skew matrix must be square and match the tile sizes")
            object.__setattr__(self, "_inv_skew", _exact_inverse(skew))
        else:
            raise ValueError(f"unknown tiling kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 2 if self.kind == "diamond1d" else len(self.sizes)

    def hyper(self, p: Point) -> tuple[int, ...]:
        """Map an iteration point to hyperplane coordinates."""
        if self.kind == "diamond1d":
            t, i = p
            return (t + i, t - i)
        return tuple(sum(r * c for r, c in zip(row, p)) for row in self.skew)

    def unhyper(self, h: tuple[int, ...]) -> Point:
        if self.kind == "diamond1d":
            u, v = h
            if (u + v) % 2:
                raise ValueError(f"hyperplane point {h} has no integer preimage")
            return ((u + v) // 2, (u - v) // 2)
        return tuple(sum(r * c for r, c in zip(row, h)) for row in self._inv_skew)

    def tile_of(self, p: Point) -> TileCoord:
        return tuple(h // s for h, s in zip(self.hyper(p), self.sizes))

    def translation(self, tc: TileCoord) -> Point:
        """Point-space vector that shifts tile (0,..,0) onto tile ``tc``."""
        return self.unhyper(tuple(c * s for c, s in zip(tc, self.sizes)))

    def tile_points(self, tc: TileCoord) -> list[Point]:
        """All integer iteration points of a tile, in lexicographic order."""
        los = [c * s for c, s in zip(tc, self.sizes)]
        if self.kind == "diamond1d":
            pts = []
            for u in range(los[0], los[0] + self.sizes[0]):
                for v in range(los[1], los[1] + self.sizes[1]):
                    if (u + v) % 2 == 0:
                        pts.append(((u + v) // 2, (u - v) // 2))
            pts.sort()
            return pts
        ranges = [range(lo, lo + s) for lo, s in zip(los, self.sizes)]
        pts = [self.unhyper(h) for h in itertools.product(*ranges)]
        pts.sort()
        return pts

    def to_tree(self) -> dict:
        tree: dict = {"kind": self.kind, "sizes": list(self.sizes)}
        if self.kind == "skewed-rect":
            tree["skew"] = [list(r) for r in self.skew]
        return tree


@dataclass(frozen=True)
class InitSpec:
    """Deterministic initialization of the t = 0 value row.

    * ``polybench`` -- ramp init: ``(i + 2) / n`` in 1-D, ``(i*(j+2) + 2) / n``
      in 2-D (smooth data, the default).
    * ``constant``  -- every cell holds ``value``.
    * ``random``    -- uniform random words from ``seed`` (codec stress).
    """

    formula: str = "polybench"
    value: Fraction = Fraction(1)
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.formula not in ("polybench", "constant", "random"):
            raise ValueError(f"unknown init formula {self.formula!r}")

    def to_tree(self) -> dict:
        tree: dict = {"formula": self.formula}
        if self.formula == "constant":
            tree["value"] = str(self.value)
        if self.formula == "random" and self.seed is not None:
            tree["seed"] = self.seed
        return tree


@dataclass(frozen=True)
class ProblemInstance:
    time_steps: int
    spatial_sizes: tuple[int, ...]
    init: InitSpec = InitSpec()

    def __post_init__(self) -> None:
        if self.time_steps < 0:
            raise ValueError("timeSteps must be >= 0")
        if any(n < 3 for n in self.spatial_sizes):
            raise ValueError("spatial sizes must be >= 3")

    @property
    def dim(self) -> int:
        return 1 + len(self.spatial_sizes)

    def in_grid(self, p: Point) -> bool:
        """Is ``p`` a stored value point (init row included)?"""
        if not 0 <= p[0] <= self.time_steps:
            return False
        return all(0 <= x < n for x, n in zip(p[1:], self.spatial_sizes))

    def is_iteration(self, p: Point) -> bool:
        return p[0] >= 1 and self.in_grid(p)

    def is_interior(self, p: Point) -> bool:
        """Interior iterations apply the stencil; boundary ones copy."""
        return self.is_iteration(p) and all(1 <= x <= n - 2 for x, n in zip(p[1:], self.spatial_sizes))

    def iteration_points(self):
        spatial = [range(n) for n in self.spatial_sizes]
        for t in range(1, self.time_steps + 1):
            for x in itertools.product(*spatial):
                yield (t, *x)

    def to_tree(self) -> dict:
        return {
            "timeSteps": self.time_steps,
            "spatialSizes": list(self.spatial_sizes),
            "init": self.init.to_tree(),
        }


def tile_of(p: Point, ts: TilingScheme) -> TileCoord:
    return ts.tile_of(p)


def enumerate_tile_points(ts: TilingScheme, tc: TileCoord) -> list[Point]:
    return ts.tile_points(tc)


def producer_tile_offsets(ts: TilingScheme, kernel: Kernel) -> list[TileCoord]:
    """Distinct nonzero tile offsets of producers feeding one tile.

    Computed on the representative tile at the origin; translation invariance
    of the tiling makes the set identical for every tile.
    """
    origin = (0,) * ts.dim
    offs = set()
    for p in ts.tile_points(origin):
        for d in kernel.deps:
            o = sub(ts.tile_of(sub(p, d)), ts.tile_of(p))
            if any(o):
                offs.add(o)
    return sorted(offs)


def consumer_tile_offsets(ts: TilingScheme, kernel: Kernel) -> list[TileCoord]:
    origin = (0,) * ts.dim
    offs = set()
    for p in ts.tile_points(origin):
        for d in kernel.deps:
            o = sub(ts.tile_of(add(p, d)), ts.tile_of(p))
            if any(o):
                offs.add(o)
    return sorted(offs)


def active_tiles(ts: TilingScheme, pi: ProblemInstance) -> list[TileCoord]:
    """Tiles containing at least one iteration point, in lexicographic order."""
    seen = set()
    for p in pi.iteration_points():
        seen.add(ts.tile_of(p))
    return sorted(seen)


def legal_tile_schedule(ts: TilingScheme, pi: ProblemInstance, kernel: Kernel) -> list[TileCoord]:
    """Lexicographic tile order, validated against every dependence.

    Every producer tile offset must be lexicographically negative, which makes
    the lexicographic order over tile coordinates a topological order of the
    tile dependence graph.  Otherwise some dependence crosses tiles backward
    and no static order exists for this tiling.
    """
    if kernel.dim != ts.dim or pi.dim != ts.dim:
        raise ValueError("kernel, tiling, and problem dimensions disagree")
    for o in producer_tile_offsets(ts, kernel):
        if not _lex_negative(o):
            raise IllegalTiling(f"producer tile offset {o} points forward under the tile order")
    return active_tiles(ts, pi)
