"""Counter-based random streams.

Every sample is drawn from its own stream keyed by ``(seed, index)``:

* bit generator: Philox4x64-10 (Salmon et al., SC'11), key words
  ``(seed mod 2^64, index mod 2^64)``, counter starting at zero, as exposed by
  ``numpy.random.Philox``;
* uniforms: ``(raw >> 11) * 2^-53`` from consecutive 64-bit outputs;
* normals: Box-Muller on consecutive uniform pairs ``(u1, u2)`` with
  ``u1`` shifted to ``(0, 1]``: ``sqrt(-2 log u1) * (cos 2 pi u2, sin 2 pi u2)``.

The recipe uses only the published Philox block function and elementary
functions, so the streams can be regenerated outside numpy.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "philox4x64-10/key=(seed,index)/box-muller-53bit"
_MASK = (1 << 64) - 1
_SCALE = 2.0**-53


def bit_generator(seed: int, index: int) -> np.random.Philox:
    key = np.array([seed & _MASK, index & _MASK], dtype=np.uint64)
    return np.random.Philox(key=key)


def uniforms(bg: np.random.Philox, size: int) -> np.ndarray:
    raw = bg.random_raw(size)
    return (raw >> np.uint64(11)).astype(np.float64) * _SCALE


class Stream:
    """Sequential draws from the ``(seed, index)`` stream."""

    def __init__(self, seed: int, index: int):
        self.seed = seed
        self.index = index
        self._bg = bit_generator(seed, index)

    def uniform(self, size: int) -> np.ndarray:
        return uniforms(self._bg, size)

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = uniforms(self._bg, 2 * pairs).reshape(pairs, 2)
        rad = np.sqrt(-2.0 * np.log(u[:, 0] + _SCALE))
        ang = 2.0 * np.pi * u[:, 1]
        z = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1).ravel()
        return z[:size]


def normals(seed: int, index: int, size: int) -> np.ndarray:
    return Stream(seed, index).normal(size)
