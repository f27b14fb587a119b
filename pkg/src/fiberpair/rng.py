"""Counter-based random streams.

Every draw comes from a Philox generator keyed by (seed, purpose, index),
where ``index`` is a pulse block or a scan point. Results therefore do not
depend on how the work is split across processes.
"""
from __future__ import annotations

import zlib

import numpy as np

# Pulses are grouped into fixed blocks; each block owns its streams.
BLOCK_PULSES = 1 << 24


def purpose_code(purpose: str) -> int:
    return zlib.crc32(purpose.encode("utf-8"))


def stream(seed: int, purpose: str, *index: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence([int(seed), purpose_code(purpose), *map(int, index)])
    return np.random.Generator(np.random.Philox(ss))


def blocks(n_pulses: int, block: int = BLOCK_PULSES):
    """(block_index, start, stop) over [0, n_pulses)."""
    for b, start in enumerate(range(0, int(n_pulses), block)):
        yield b, start, min(start + block, int(n_pulses))
