"""Reproducible random streams.

Every replica gets its own Philox (counter-based) generator keyed by the
root seed and the replica index: replica ``r`` of seed ``s`` always uses
``SeedSequence(s, spawn_key=(r,))``. Streams for different replicas are
independent and do not depend on how many replicas run or in what order.
"""

from __future__ import annotations

import numpy as np


def replica_generator(seed: int, replica: int = 0) -> np.random.Generator:
    if seed < 0 or replica < 0:
        raise ValueError("seed and replica must be nonnegative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(ss))
