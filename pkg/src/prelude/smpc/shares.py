"""XOR secret sharing of bit vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class BitShares:
    """One party's additive (XOR) share of a bit vector."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("shares are bit vectors")

    def __len__(self) -> int:
        return len(self.bits)

    def __xor__(self, other: "BitShares") -> "BitShares":
        if len(self) != len(other):
            raise ValueError("share lengths differ")
        return BitShares(tuple(a ^ b for a, b in zip(self.bits, other.bits)))


def share(value: Sequence[int], rng) -> tuple[BitShares, BitShares]:
    """Split a bit vector in two; the first share is the drawn nonce."""
    nonce = tuple(rng.getrandbits(1) for _ in value)
    other = tuple(n ^ v for n, v in zip(nonce, value))
    if any(v not in (0, 1) for v in value):
        raise ValueError("value must be a bit vector")
    return BitShares(nonce), BitShares(other)


def reconstruct(a: BitShares, b: BitShares) -> tuple[int, ...]:
    """XOR the two shares back into the plaintext bits."""
    return (a ^ b).bits


def pack_bits(bits: Sequence[int]) -> bytes:
    """Little-endian bit packing: bit i of the vector is bit i of the integer."""
    value = 0
    for i, b in enumerate(bits):
        value |= (b & 1) << i
    return value.to_bytes((len(bits) + 7) // 8, "little")


def unpack_bits(data: bytes, n: int) -> tuple[int, ...]:
    value = int.from_bytes(data, "little")
    return tuple((value >> i) & 1 for i in range(n))
