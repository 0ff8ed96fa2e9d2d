"""LSB-first bit accumulation backed by a single Python int.

Bit ``k`` of ``value`` is the ``k``-th bit ever appended, so serializing with
a little-endian byte order yields the first-appended bit in the lowest bit of
the first byte.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass
class BitStream:
    value: int = 0
    nbits: int = 0

    def append(self, bits: int, width: int) -> None:
        if width < 0:
            raise ValueError("width must be non-negative")
        if bits < 0 or bits >> width:
            raise ValueError(f"value {bits} does not fit in {width} bits")
        self.value |= bits << self.nbits
        self.nbits += width

    def extract(self, pos: int, width: int) -> int:
        if pos < 0 or width < 0 or pos + width > self.nbits:
            raise ValueError(f"bit range [{pos}, {pos + width}) outside stream of {self.nbits}")
        return (self.value >> pos) & ((1 << width) - 1)

    def to_bytes(self, pad_to_bits: int | None = None) -> bytes:
        total = self.nbits if pad_to_bits is None else pad_to_bits
        if total < self.nbits:
            raise ValueError("cannot truncate while padding")
        return self.value.to_bytes((total + 7) // 8, "little")

    @classmethod
    def from_bytes(cls, data: bytes, nbits: int | None = None) -> "BitStream":
        n = len(data) * 8 if nbits is None else nbits
        if n > len(data) * 8:
            raise ValueError("declared bit count exceeds the data")
        value = int.from_bytes(data, "little") & ((1 << n) - 1)
        return cls(value=value, nbits=n)
