"""Deterministic, order-independent random-number plumbing.

Monte Carlo batches must satisfy a strong reproducibility contract: the i-th
path is a deterministic function of (master seed, i), independent of the batch
size, of chunking, and of thread scheduling.  This is achieved with
counter-based Philox streams addressed by row blocks:

- rows are grouped in fixed blocks of ``BLOCK_ROWS``;
- block b of a stream uses ``Philox(key=stream key, counter=b << 128)`` and
  fills its rows sequentially;
- a request for rows [start, start+count) regenerates exactly the covered
  blocks and slices, so any chunking of a batch yields identical rows.

Distinct consumers derive independent stream seeds from the master seed with
:func:`derive_seed` using a string label, so adding a consumer never perturbs
existing streams.
"""

from __future__ import annotations

import hashlib
import os

import numpy as np

__all__ = ["BLOCK_ROWS", "derive_seed", "normal_rows", "worker_count"]

BLOCK_ROWS = 512
_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, label: str) -> int:
    """Derive an independent 64-bit stream seed from a master seed and label."""
    tag = int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")
    ss = np.random.SeedSequence((int(seed) & _MASK64, tag))
    return int(ss.generate_state(1, np.uint64)[0])


def _stream_key(seed: int) -> int:
    words = np.random.SeedSequence((int(seed) & _MASK64,)).generate_state(2, np.uint64)
    return int(words[0]) | (int(words[1]) << 64)


def normal_rows(seed: int, start: int, count: int, row_len: int) -> np.ndarray:
    """Rows [start, start+count) of an infinite matrix of standard normals.

    Row i depends only on ``(seed, i, row_len)``; any partition of a row range
    into calls returns the same values.
    """
    if start < 0 or count < 0 or row_len <= 0:
        raise ValueError("need start >= 0, count >= 0, row_len >= 1")
    out = np.empty((count, row_len))
    if count == 0:
        return out
    key = _stream_key(seed)
    first_block = start // BLOCK_ROWS
    last_block = (start + count - 1) // BLOCK_ROWS
    for block in range(first_block, last_block + 1):
        gen = np.random.Generator(np.random.Philox(key=key, counter=block << 128))
        rows = gen.standard_normal((BLOCK_ROWS, row_len))
        lo = max(start, block * BLOCK_ROWS)
        hi = min(start + count, (block + 1) * BLOCK_ROWS)
        out[lo - start : hi - start] = rows[lo - block * BLOCK_ROWS : hi - block * BLOCK_ROWS]
    return out


def worker_count() -> int:
    """Parallelism cap: ``CHAOSLAB_THREADS`` if set, else the CPU count."""
    env = os.environ.get("CHAOSLAB_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ValueError(f"CHAOSLAB_THREADS must be an integer, got {env!r}") from exc
    return max(1, os.cpu_count() or 1)
