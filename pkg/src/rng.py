"""Counter-based unit-deviate streams for reproducible simulation.

Streams are Philox4x64-10 (numpy.random.Philox) keyed by the run seed.
Block b of a run starts at counter b << 128, so blocks never overlap and
any block can be generated without generating the ones before it.

Replication layout: replications are grouped in blocks of BLOCK_SIZE.
Replication i reads row (i mod BLOCK_SIZE) of block (i div BLOCK_SIZE);
a row holds `width` consecutive deviates. The deviates a replication sees
depend only on (seed, i, width), never on how blocks are spread over
workers.
"""

import logging
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096

MAX_SEED = 2 ** 64 - 1

# Raw outputs keep their top 52 bits; (x + 0.5) * 2^-52 lies strictly in (0, 1)
_MANTISSA_SHIFT = np.uint64(12)
_UNIT_SCALE = 2.0 ** -52


def check_seed(seed: int) -> None:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an integer in [0, 2^64 - 1], got {seed!r}")


class UnitStream:
    """Sequential source of uniform deviates in the open interval (0, 1).

    Attributes:
        seed: Philox key
        block: Block index selecting the counter offset
    """

    def __init__(self, seed: int, block: int = 0):
        """Initialize the stream at the start of a block.

        Args:
            seed: 64-bit unsigned run seed
            block: Non-negative block index
        """
        check_seed(seed)
        if block < 0:
            raise ValueError(f"block must be >= 0, got {block}")
        self.seed = seed
        self.block = block
        self._bitgen = np.random.Philox(key=seed, counter=block << 128)

    def units(self, size: int) -> np.ndarray:
        """Next `size` deviates as a float64 array."""
        raw = self._bitgen.random_raw(size)
        return ((raw >> _MANTISSA_SHIFT).astype(np.float64) + 0.5) * _UNIT_SCALE

    def next_unit(self) -> float:
        return float(self.units(1)[0])

    def skip(self, count: int) -> None:
        """Discard the next `count` deviates."""
        if count > 0:
            self._bitgen.random_raw(count, output=False)


def block_span(block: int, samples: int) -> Tuple[int, int]:
    """First replication index and row count of a block."""
    start = block * BLOCK_SIZE
    return start, max(0, min(BLOCK_SIZE, samples - start))


def block_count(samples: int) -> int:
    return -(-samples // BLOCK_SIZE)


def block_units(seed: int, block: int, rows: int, width: int) -> np.ndarray:
    """Deviate matrix of one block, shape (rows, width)."""
    stream = UnitStream(seed, block)
    return stream.units(rows * width).reshape(rows, width)


def replication_stream(seed: int, index: int, width: int) -> UnitStream:
    """Stream positioned at the first deviate of replication `index`."""
    if index < 0:
        raise ValueError(f"replication index must be >= 0, got {index}")
    stream = UnitStream(seed, index // BLOCK_SIZE)
    stream.skip((index % BLOCK_SIZE) * width)
    return stream
