"""Counter-based, splittable random streams.

Every stream is keyed by ``(seed, label)`` and produces the sequence

    x_c = mix64(key + (c + 1) * GAMMA)        c = 0, 1, 2, ...

where ``mix64`` is the SplitMix64 finalizer and ``GAMMA = 0x9E3779B97F4A7C15``.
The key is ``mix64(seed ^ fnv1a64(label))``.  Because output ``c`` depends only
on the key and the counter, blocks can be produced with vectorised uint64
arithmetic and the sequence is identical to drawing one value at a time.

Derived quantities (all consume the counter in order):

* uniform double: ``(x >> 11) * 2**-53`` in ``[0, 1)``
* uniform index in ``[0, n)``: reject ``x >= 2**64 - (2**64 mod n)``,
  otherwise ``x mod n`` (no modulo bias)
* permutation of ``n`` items: stable argsort of the next ``n`` raw outputs
* normal: Box-Muller on consecutive uniforms ``(u1, u2)``:
  ``r = sqrt(-2 log(1 - u1))``, returns ``r cos(2 pi u2)`` then the cached
  ``r sin(2 pi u2)`` on the next call.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO64 = 1 << 64

INDEX = "index"
NOISE = "noise"
SHUFFLE = "shuffle"


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & MASK64
    return h


def parse_seed(value) -> int:
    """Accept an int, a decimal string, or a ``0x`` hex string."""
    if isinstance(value, (int, np.integer)):
        seed = int(value)
    else:
        text = str(value).strip().lower()
        seed = int(text, 16) if text.startswith("0x") else int(text, 10)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {value!r}")
    return seed & MASK64


def derive_seed(master: int, *path: int) -> int:
    """Child seed for ``(master, i, j, ...)``: fold each index through mix64.

    ``derive_seed(m, run, fold) = mix64(mix64(mix64(m) ^ run*GAMMA) ^ fold*GAMMA)``
    """
    h = mix64(parse_seed(master))
    for p in path:
        h = mix64(h ^ ((int(p) * GAMMA) & MASK64))
    return h


class RngStream:
    """One labelled stream.  Owned by a single worker; not thread-safe."""

    __slots__ = ("seed", "label", "key", "counter", "_cached_normal")

    def __init__(self, seed, label: str = INDEX):
        self.seed = parse_seed(seed)
        self.label = label
        self.key = mix64(self.seed ^ fnv1a64(label))
        self.counter = 0
        self._cached_normal: float | None = None

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed:#x}, label={self.label!r}, counter={self.counter})"

    def child(self, *parts) -> "RngStream":
        """Independent stream whose label extends this one (``"index/3"``)."""
        return RngStream(self.seed, "/".join([self.label, *map(str, parts)]))

    # raw output -------------------------------------------------------

    def _block(self, start: int, size: int) -> np.ndarray:
        c = np.arange(start + 1, start + 1 + size, dtype=np.uint64)
        return _mix64_array(np.uint64(self.key) + c * np.uint64(GAMMA))

    def next_u64(self, size: int | None = None):
        if size is None:
            out = mix64(self.key + (self.counter + 1) * GAMMA)
            self.counter += 1
            return out
        out = self._block(self.counter, size)
        self.counter += size
        return out

    def uniform(self, size: int | None = None):
        """Doubles in ``[0, 1)`` with 53 random bits."""
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        return (self.next_u64(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    # integers ---------------------------------------------------------

    def integers(self, n: int, size: int) -> np.ndarray:
        """``size`` unbiased draws from ``[0, n)`` (0-based)."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if size == 0:
            return np.zeros(0, dtype=np.int64)
        limit = _TWO64 - (_TWO64 % n)
        out = np.empty(size, dtype=np.int64)
        filled = 0
        while filled < size:
            need = size - filled
            raw = self._block(self.counter, need + 8)
            if limit == _TWO64:
                ok = np.ones(raw.shape, dtype=bool)
            else:
                ok = raw < np.uint64(limit)
            pos = np.flatnonzero(ok)[:need]
            out[filled:filled + len(pos)] = (raw[pos] % np.uint64(n)).astype(np.int64)
            filled += len(pos)
            self.counter += int(pos[-1]) + 1 if len(pos) == need else len(raw)
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of ``range(n)``: stable argsort of ``n`` raw outputs."""
        return np.argsort(self.next_u64(n), kind="stable")

    # normals ----------------------------------------------------------

    def standard_normal(self, size: int | None = None):
        if size is None:
            return float(self.standard_normal(1)[0])
        out = np.empty(size, dtype=np.float64)
        k = 0
        if size and self._cached_normal is not None:
            out[0] = self._cached_normal
            self._cached_normal = None
            k = 1
        rest = size - k
        pairs = (rest + 1) // 2
        if pairs:
            u = self.uniform(2 * pairs)
            r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
            theta = 2.0 * np.pi * u[1::2]
            z = np.empty(2 * pairs)
            z[0::2] = r * np.cos(theta)
            z[1::2] = r * np.sin(theta)
            out[k:] = z[:rest]
            if rest % 2:
                self._cached_normal = float(z[-1])
        return out


def uniform_index(rng: RngStream, n: int) -> int:
    """One uniform draw from ``{1, ..., n}``."""
    return int(rng.integers(n, 1)[0]) + 1


def standard_normal(rng: RngStream) -> float:
    return rng.standard_normal()
