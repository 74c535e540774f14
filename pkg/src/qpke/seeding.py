"""Deterministic derivation of independent random streams.

A master 64-bit seed plus a tuple of stream labels (strings or counters)
always yields the same generator, so experiments can hand each trial block
or subcommand its own stream without coupling their draw sequences.
"""

from __future__ import annotations

import hashlib

import numpy as np

_WORD = 0xFFFFFFFF


def _encode_label(part: int | str) -> tuple[int, ...]:
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode()).digest()
        return tuple(int.from_bytes(digest[i : i + 4], "big") for i in (0, 4))
    if isinstance(part, int) and not isinstance(part, bool):
        if part < 0:
            raise ValueError("stream counters must be non-negative")
        return ((part >> 32) & _WORD, part & _WORD)
    raise TypeError(f"stream labels must be ints or strings, got {type(part).__name__}")


def seed_sequence(master_seed: int, *stream: int | str) -> np.random.SeedSequence:
    """SeedSequence for the given master seed and stream labels."""
    spawn_key: tuple[int, ...] = ()
    for part in stream:
        spawn_key += _encode_label(part)
    return np.random.SeedSequence(entropy=master_seed, spawn_key=spawn_key)


def rng_stream(master_seed: int, *stream: int | str) -> np.random.Generator:
    """Generator derived from the master seed and stream labels."""
    return np.random.default_rng(seed_sequence(master_seed, *stream))
