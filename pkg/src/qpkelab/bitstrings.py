"""Bit-string helpers.

Bit strings are plain Python strings over {'0', '1'}, most significant bit
first.  They index basis states, PRF inputs/outputs and key material at toy
scale, where readability beats packing.
"""

from __future__ import annotations

from .rng import SeededRng


def is_bits(s: str) -> bool:
    return isinstance(s, str) and all(c in "01" for c in s)


def bits_to_int(bits: str) -> int:
    return int(bits, 2) if bits else 0


def int_to_bits(value: int, width: int) -> str:
    if value < 0 or value >= 1 << width:
        raise ValueError(f"value {value} does not fit in {width} bits")
    return format(value, f"0{width}b") if width else ""


def random_bits(width: int, rng: SeededRng) -> str:
    return "".join("1" if b else "0" for b in rng.integers(0, 2, size=width))


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError("xor of unequal-length bit strings")
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


def bits_to_bytes(bits: str) -> bytes:
    """Pack bits into bytes, left-padding with zeros to a byte boundary."""
    if not bits:
        return b""
    width = (len(bits) + 7) // 8 * 8
    return bits_to_int(bits).to_bytes(width // 8, "big")


def bits_to_hex(bits: str) -> str:
    if not bits:
        return ""
    nibbles = (len(bits) + 3) // 4
    return format(bits_to_int(bits), f"0{nibbles}x")


def hex_to_bits(hexstr: str, width: int) -> str:
    value = int(hexstr, 16) if hexstr else 0
    return int_to_bits(value, width)
