"""
Counter-based random streams.

Every stream is a ``numpy.random.Generator`` over the Philox counter-based
bit generator, seeded by ``SeedSequence(master_seed, spawn_key=key)``. The key
is a tuple whose first element names the stream family, followed by integer
counters, so a stream depends only on (master_seed, family, counters) and not
on the order in which streams are requested:

    (TRAJECTORY, iteration, index)  weight sampling + action sampling of one rollout
    (ENV, iteration, index)         the environment's own randomness in that rollout
    (INIT,)                         parameter initialization
    (MINIBATCH, iteration, epoch, phase)  minibatch shuffles
    (EVAL, weight_index, episode)   evaluation rollouts
    (EVAL_ENV, weight_index, episode)
    (EVAL_WEIGHTS,)                 simplex weights of the evaluation protocol
"""
from typing import Tuple

import numpy as np

INIT = 0
TRAJECTORY = 1
ENV = 2
MINIBATCH = 3
EVAL = 4
EVAL_ENV = 5
EVAL_WEIGHTS = 6


class RngStreams:
    """
    Factory of independent, reproducible generators derived from one master seed.

    Args:
        master_seed: Non-negative integer, at most 64 bits.
    """

    def __init__(self, master_seed: int):
        if master_seed < 0 or master_seed >= 2**64:
            raise ValueError(f"Seed must be a non-negative 64-bit integer, got {master_seed}")
        self.master_seed = int(master_seed)

    def stream(self, family: int, *counters: int) -> np.random.Generator:
        key: Tuple[int, ...] = (int(family), *(int(c) for c in counters))
        sequence = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(sequence))

    def init(self) -> np.random.Generator:
        return self.stream(INIT)

    def trajectory(self, iteration: int, index: int) -> np.random.Generator:
        return self.stream(TRAJECTORY, iteration, index)

    def env(self, iteration: int, index: int) -> np.random.Generator:
        return self.stream(ENV, iteration, index)

    def minibatch(self, iteration: int, epoch: int, phase: int = 0) -> np.random.Generator:
        return self.stream(MINIBATCH, iteration, epoch, phase)

    def eval(self, weight_index: int, episode: int) -> np.random.Generator:
        return self.stream(EVAL, weight_index, episode)

    def eval_env(self, weight_index: int, episode: int) -> np.random.Generator:
        return self.stream(EVAL_ENV, weight_index, episode)

    def eval_weights(self) -> np.random.Generator:
        return self.stream(EVAL_WEIGHTS)

    def __repr__(self) -> str:
        return f"RngStreams(master_seed={self.master_seed})"
