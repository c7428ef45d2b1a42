"""Seed derivation for reproducible, independent random streams."""
from enum import IntEnum
from typing import NamedTuple

import numpy as np


class SeedStream(IntEnum):
    """Namespaces for derived seeds so that stages never share a stream."""
    EPISODE = 0
    TRAIN = 1
    EVAL = 2
    SEARCH = 3
    FORECAST = 4
    PIPELINE = 5


class EpisodeStreams(NamedTuple):
    world: np.random.Generator
    policy: np.random.Generator
    planning: np.random.Generator


def derive_seed(master: int, stream: SeedStream, index: int) -> int:
    """
    Derive a child seed from a master seed.

    Args:
        master: Master seed
        stream: Namespace of the derived seed
        index: Position within the namespace

    Returns:
        A 63-bit integer seed, identical for identical inputs
    """
    sequence = np.random.SeedSequence([abs(int(master)), int(stream), int(index)])
    return int(sequence.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def episode_streams(seed: int) -> EpisodeStreams:
    """Spawn the world, policy and planning streams of one episode."""
    world, policy, planning = np.random.SeedSequence(abs(int(seed))).spawn(3)
    return EpisodeStreams(
        world=np.random.default_rng(world),
        policy=np.random.default_rng(policy),
        planning=np.random.default_rng(planning),
    )


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves rounded up."""
    return int(np.floor(value + 0.5))
