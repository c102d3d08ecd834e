"""Canonical decimal serialization and run-trace hashing.

Every float that crosses a comparison or hashing boundary is rendered with
exactly six fractional digits (round-half-even, negative zero folded into
zero) so replayed runs can be compared byte-wise and hashed stably across
platforms.
"""

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def canon(value: float) -> str:
    """Canonical 6-fractional-digit rendering of a float."""
    text = f"{value:.6f}"
    return "0.000000" if text == "-0.000000" else text


def fnv1a64(data: bytes, state: int = _FNV_OFFSET) -> int:
    """64-bit FNV-1a over ``data``, resumable via ``state``."""
    for byte in data:
        state = ((state ^ byte) * _FNV_PRIME) & _MASK64
    return state


class TraceHasher:
    """Accumulates the per-step ego pose trace into one 64-bit digest."""

    def __init__(self):
        self._state = _FNV_OFFSET

    def update(self, clock: float, x: float, y: float, heading: float) -> None:
        line = f"{canon(clock)} {canon(x)} {canon(y)} {canon(heading)}\n"
        self._state = fnv1a64(line.encode("ascii"), self._state)

    @property
    def digest(self) -> int:
        return self._state

    @property
    def hexdigest(self) -> str:
        return f"{self._state:016x}"
