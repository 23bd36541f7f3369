"""Bit strings, the prefix-free integer code and the predictor input encoding.

Bit strings are plain ``str`` objects over the characters ``"0"`` and
``"1"``; the empty string plays the role of the null string.
"""

from __future__ import annotations

from typing import Iterable

BitString = str

EMPTY: BitString = ""


class DecodeError(ValueError):
    """Raised when a bit string does not start with a valid codeword."""


def check_bits(x: str) -> BitString:
    if not isinstance(x, str) or x.strip("01"):
        raise ValueError(f"not a bit string: {x!r}")
    return x


def from_ints(bits: Iterable[int]) -> BitString:
    return "".join("1" if b else "0" for b in bits)


def encode_nat(n: int) -> BitString:
    """Elias-delta codeword of a positive integer.

    >>> encode_nat(1), encode_nat(2), encode_nat(5)
    ('1', '0100', '01101')
    """
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"encode_nat needs a positive integer, got {n!r}")
    width = n.bit_length()
    prefix = width.bit_length() - 1
    low = format(n, "b")[1:]
    return "0" * prefix + format(width, "b") + low


def decode_nat(bits: BitString) -> tuple[int, BitString]:
    """Inverse of :func:`encode_nat`; returns ``(n, rest)``."""
    zeros = 0
    while zeros < len(bits) and bits[zeros] == "0":
        zeros += 1
    end = 2 * zeros + 1
    if end > len(bits):
        raise DecodeError(f"truncated codeword in {bits!r}")
    width = int(bits[zeros:end], 2)
    stop = end + width - 1
    if stop > len(bits):
        raise DecodeError(f"truncated codeword in {bits!r}")
    return int("1" + bits[end:stop], 2), bits[stop:]


def encode_len_str(x: BitString) -> BitString:
    return encode_nat(len(x) + 1) + x


def decode_len_str(bits: BitString) -> tuple[BitString, BitString]:
    n, rest = decode_nat(bits)
    if n - 1 > len(rest):
        raise DecodeError("length-prefixed string runs past end of input")
    return rest[: n - 1], rest[n - 1 :]


def encode_predictor_input(x: BitString) -> BitString:
    # 1x1 1x2 ... 1xn 0: one-way decodable by a READ loop
    return "".join("1" + b for b in x) + "0"


def decode_predictor_input(bits: BitString) -> tuple[BitString, BitString]:
    out = []
    i = 0
    while True:
        if i >= len(bits):
            raise DecodeError("unterminated predictor input")
        if bits[i] == "0":
            return "".join(out), bits[i + 1 :]
        if i + 1 >= len(bits):
            raise DecodeError("predictor input ends inside a symbol pair")
        out.append(bits[i + 1])
        i += 2


def pack(x: BitString) -> tuple[int, bytes]:
    """Byte-packed form: big-endian within each byte, zero-padded tail."""
    padded = x + "0" * (-len(x) % 8)
    data = bytes(int(padded[i : i + 8], 2) for i in range(0, len(padded), 8))
    return len(x), data


def unpack(length: int, data: bytes) -> BitString:
    if length > 8 * len(data):
        raise DecodeError("bit length exceeds packed payload")
    return "".join(format(b, "08b") for b in data)[:length]


def from_hex(text: str, length: int) -> BitString:
    """Bits from a hex literal with an explicit bit length (leading bits kept)."""
    raw = bytes.fromhex(text)
    return unpack(length, raw)
