"""Differential bit-packed compression of output-set streams.

Each stream starts with one raw word, then one token per following word
encoding the modular difference from its predecessor.  A token is

    magnitude-class h | sign | low h-1 bits of the difference

where ``h`` counts the significant low bits of the difference in two's
complement: leading zeros (non-negative) or leading ones (negative) carry no
information and are dropped.  The class field is ``n_bits.bit_length()`` bits
wide.  The sign bit always makes at least one leading bit redundant, so
``h <= n_bits - 1`` and a token never exceeds ``n_bits + header - 1`` bits; the
capacity bound below adds two bits of slack on top of that.

Streams of one tile are packed back to back with no padding in between, each
start recorded as a (coarse word, fine bit) marker so a consumer can fetch any
contiguous range of streams with bus-aligned reads and at most one partial
word of waste at each end.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

from .bitstream import BitStream


class CodecError(ValueError):
    """Token stream cannot be decoded (truncated or invalid class field)."""


class CorruptBlock(ValueError):
    """Serialized block container fails validation."""


def header_bits(n_bits: int) -> int:
    return n_bits.bit_length()


def worst_case_stream_bits(word_count: int, n_bits: int) -> int:
    """Guaranteed upper bound on the compressed size of one stream."""
    return word_count * (n_bits + header_bits(n_bits) + 1)


def delta_token(prev: int, cur: int, n_bits: int) -> tuple[int, int]:
    """Encode ``cur - prev`` modulo ``2**n_bits`` as (token value, token width)."""
    mask = (1 << n_bits) - 1
    delta = (cur - prev) & mask
    negative = delta >> (n_bits - 1) & 1
    h = (~delta & mask).bit_length() if negative else delta.bit_length()
    hb = header_bits(n_bits)
    token = BitStream()
    token.append(h, hb)
    token.append(negative, 1)
    if h > 1:
        token.append(delta & ((1 << (h - 1)) - 1), h - 1)
    return token.value, token.nbits


def compress_mars(words: list[int], n_bits: int) -> BitStream:
    """First word raw, every later word as a difference token."""
    if not words:
        raise ValueError("a stream holds at least one word")
    mask = (1 << n_bits) - 1
    out = BitStream()
    for w in words:
        if not 0 <= w <= mask:
            raise ValueError(f"word {w} outside [0, 2^{n_bits})")
    out.append(words[0], n_bits)
    for prev, cur in zip(words, words[1:]):
        tok, width = delta_token(prev, cur, n_bits)
        out.append(tok, width)
    return out


def decompress_mars(
    data: BitStream,
    word_count: int,
    n_bits: int,
    start_bit: int = 0,
    limit_bits: int | None = None,
) -> list[int]:
    """Decode ``word_count`` words starting at ``start_bit``.

    ``limit_bits`` caps how far past ``start_bit`` the decoder may read; by
    default the stream end applies.  Trailing bits inside the window are
    ignored, which lets a window end on block padding.
    """
    end = data.nbits if limit_bits is None else start_bit + limit_bits
    end = min(end, data.nbits)
    mask = (1 << n_bits) - 1
    hb = header_bits(n_bits)
    pos = start_bit

    def take(width: int) -> int:
        nonlocal pos
        if pos + width > end:
            raise CodecError(f"stream truncated at bit {pos}")
        v = data.extract(pos, width)
        pos += width
        return v

    if word_count < 1:
        raise ValueError("a stream holds at least one word")
    words = [take(n_bits)]
    for _ in range(word_count - 1):
        h = take(hb)
        if h > n_bits - 1:
            raise CodecError(f"magnitude class {h} exceeds {n_bits - 1}")
        negative = take(1)
        payload = take(h - 1) if h > 1 else 0
        if h == 0:
            delta = mask if negative else 0
        elif negative:
            delta = (mask & ~((1 << h) - 1)) | payload
        else:
            delta = (1 << (h - 1)) | payload
        words.append((words[-1] + delta) & mask)
    return words


@dataclass(frozen=True)
class Marker:
    """Start of one stream inside a packed block: word index plus bit offset."""

    coarse: int
    fine: int


@dataclass(frozen=True)
class SeekWindow:
    """Aligned read covering one stream: whole bus words plus a bit skip."""

    first_word: int
    word_count: int
    skip_bits: int


@dataclass(frozen=True)
class CompressedBlock:
    """One tile's streams packed back to back, plus their seek markers.

    ``data.nbits`` is the exact packed length; serialization pads it to a
    whole number of bus words and the padded length is all a reader of the
    serialized form gets back.
    """

    n_bits: int
    bus_width_bits: int
    word_counts: tuple[int, ...]
    markers: tuple[Marker, ...]
    data: BitStream

    @property
    def data_bits(self) -> int:
        return self.data.nbits

    @property
    def padded_words(self) -> int:
        return -(-self.data.nbits // self.bus_width_bits)

    def stream_start_bit(self, index: int) -> int:
        m = self.markers[index]
        return m.coarse * self.bus_width_bits + m.fine


def _check_bus_width(bus_width_bits: int) -> None:
    if bus_width_bits < 8 or bus_width_bits & (bus_width_bits - 1):
        raise ValueError(f"bus width {bus_width_bits} must be a power of two >= 8")


def pack_block(
    streams: list[BitStream],
    word_counts: list[int],
    n_bits: int,
    bus_width_bits: int = 64,
) -> CompressedBlock:
    _check_bus_width(bus_width_bits)
    if len(streams) != len(word_counts):
        raise ValueError("one word count per stream required")
    data = BitStream()
    markers = []
    for s in streams:
        markers.append(Marker(coarse=data.nbits // bus_width_bits, fine=data.nbits % bus_width_bits))
        data.append(s.value, s.nbits)
    return CompressedBlock(
        n_bits=n_bits,
        bus_width_bits=bus_width_bits,
        word_counts=tuple(word_counts),
        markers=tuple(markers),
        data=data,
    )


def compress_block(groups: list[list[int]], n_bits: int, bus_width_bits: int = 64) -> CompressedBlock:
    streams = [compress_mars(g, n_bits) for g in groups]
    return pack_block(streams, [len(g) for g in groups], n_bits, bus_width_bits)


def seek_mars(block: CompressedBlock, index: int) -> SeekWindow:
    """Bus words to fetch for one stream, given only markers and block length."""
    start = block.stream_start_bit(index)
    if index + 1 < len(block.markers):
        end = block.stream_start_bit(index + 1)
    else:
        end = block.data.nbits
    w = block.bus_width_bits
    first = start // w
    last_excl = -(-end // w)
    return SeekWindow(first_word=first, word_count=last_excl - first, skip_bits=start % w)


def decode_block(block: CompressedBlock) -> list[list[int]]:
    out = []
    for i, count in enumerate(block.word_counts):
        start = block.stream_start_bit(i)
        if i + 1 < len(block.markers):
            limit = block.stream_start_bit(i + 1) - start
        else:
            limit = block.data.nbits - start
        out.append(decompress_mars(block.data, count, block.n_bits, start, limit))
    return out


BLOCK_MAGIC = b"MARS1"
_HEADER = struct.Struct("<5sBBI")
_ENTRY = struct.Struct("<IIH")


def serialize_block(block: CompressedBlock) -> bytes:
    head = _HEADER.pack(
        BLOCK_MAGIC,
        block.n_bits,
        block.bus_width_bits.bit_length() - 1,
        len(block.word_counts),
    )
    entries = b"".join(
        _ENTRY.pack(c, m.coarse, m.fine) for c, m in zip(block.word_counts, block.markers)
    )
    payload = block.data.to_bytes(pad_to_bits=block.padded_words * block.bus_width_bits)
    return head + entries + payload


def parse_block(raw: bytes) -> CompressedBlock:
    """Inverse of ``serialize_block``; the unpadded bit length is not recoverable."""
    if len(raw) < _HEADER.size:
        raise CorruptBlock("truncated block header")
    magic, n_bits, log2w, count = _HEADER.unpack_from(raw)
    if magic != BLOCK_MAGIC:
        raise CorruptBlock(f"bad magic {magic!r}")
    if not 2 <= n_bits <= 64:
        raise CorruptBlock(f"word width {n_bits} out of range")
    if not 3 <= log2w <= 16:
        raise CorruptBlock(f"bus width exponent {log2w} out of range")
    bus_width_bits = 1 << log2w
    body = _HEADER.size + count * _ENTRY.size
    if len(raw) < body:
        raise CorruptBlock("truncated marker table")
    word_counts, markers = [], []
    for k in range(count):
        wc, coarse, fine = _ENTRY.unpack_from(raw, _HEADER.size + k * _ENTRY.size)
        if wc < 1:
            raise CorruptBlock(f"stream {k} declares zero words")
        if fine >= bus_width_bits:
            raise CorruptBlock(f"marker {k} bit offset {fine} outside a bus word")
        word_counts.append(wc)
        markers.append(Marker(coarse=coarse, fine=fine))
    payload = raw[body:]
    word_bytes = bus_width_bits // 8
    if len(payload) % word_bytes:
        raise CorruptBlock("payload is not a whole number of bus words")
    nbits = len(payload) * 8
    starts = [m.coarse * bus_width_bits + m.fine for m in markers]
    for k, s in enumerate(starts):
        if s >= nbits and count:
            raise CorruptBlock(f"marker {k} points past the payload")
        if k and s <= starts[k - 1]:
            raise CorruptBlock(f"marker {k} does not advance")
    return CompressedBlock(
        n_bits=n_bits,
        bus_width_bits=bus_width_bits,
        word_counts=tuple(word_counts),
        markers=tuple(markers),
        data=BitStream.from_bytes(payload, nbits),
    )
