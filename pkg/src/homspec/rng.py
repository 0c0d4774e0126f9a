"""Vectorized Philox4x32-10 counter-based generator.

Every random number is a pure function of ``(seed, pulse_index, draw_index)``,
so any pulse range can be simulated in isolation and reproduce the serial
stream exactly.
"""
from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)


def philox4x32(counter, key, rounds: int = 10):
    """Philox4x32 block function.

    ``counter`` is a ``(..., 4)`` and ``key`` a ``(..., 2)`` uint32 array
    (broadcastable); returns the ``(..., 4)`` uint32 output.
    """
    ctr = np.asarray(counter, dtype=np.uint32)
    k = np.asarray(key, dtype=np.uint32)
    shape = np.broadcast_shapes(ctr.shape[:-1], k.shape[:-1])
    c0, c1, c2, c3 = (np.broadcast_to(ctr[..., i], shape).astype(np.uint32) for i in range(4))
    k0 = np.broadcast_to(k[..., 0], shape).astype(np.uint32)
    k1 = np.broadcast_to(k[..., 1], shape).astype(np.uint32)
    with np.errstate(over="ignore"):
        for _ in range(rounds):
            p0 = _M0 * c0.astype(np.uint64)
            p1 = _M1 * c2.astype(np.uint64)
            hi0, lo0 = (p0 >> _SHIFT).astype(np.uint32), (p0 & _MASK).astype(np.uint32)
            hi1, lo1 = (p1 >> _SHIFT).astype(np.uint32), (p1 & _MASK).astype(np.uint32)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return np.stack([c0, c1, c2, c3], axis=-1)


def _seed_key(seed: int):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint32)


def uniforms(seed: int, pulse_index, draw_index: int):
    """Four independent U(0,1) doubles per pulse, ``(..., 4)``, never exactly 0 or 1.

    Each 64-bit pair of output words becomes one 53-bit double, so one call
    yields two doubles; ``draw_index`` selects which block of two is used,
    and the second half of the block comes from ``draw_index + 2**31``.
    """
    pulse = np.asarray(pulse_index, dtype=np.uint64)
    d = int(draw_index)
    out = []
    for sub in (d, d + 2**31):
        ctr = np.empty(pulse.shape + (4,), dtype=np.uint32)
        ctr[..., 0] = (pulse & _MASK).astype(np.uint32)
        ctr[..., 1] = (pulse >> _SHIFT).astype(np.uint32)
        ctr[..., 2] = np.uint32(sub & 0xFFFFFFFF)
        ctr[..., 3] = np.uint32(0x484F4D21)  # stream tag
        words = philox4x32(ctr, _seed_key(seed)).astype(np.uint64)
        for a, b in ((0, 1), (2, 3)):
            bits = ((words[..., a] << _SHIFT) | words[..., b]) >> np.uint64(11)
            out.append((bits.astype(np.float64) + 0.5) * 2.0**-53)
    return np.stack(out, axis=-1)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """NumPy generator for bulk draws of one pulse block, keyed by ``(seed, block)``."""
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(block)))
