"""Named, order-independent random substreams."""

from __future__ import annotations

import zlib

import numpy as np

STREAMS = ("positions", "pilots", "channels", "noise", "oracle")


def stream_id(name: str) -> int:
    # crc32 is stable across processes, unlike hash()
    return zlib.crc32(name.encode())


def substream(seed: int, task: int, name: str) -> np.random.Generator:
    """Generator for (master seed, task index, stream name)."""
    if seed < 0 or task < 0:
        raise ValueError("seed and task index must be non-negative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(task), stream_id(name)]))
