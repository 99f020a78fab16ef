"""Deterministic random streams.

Every random quantity in the package is drawn from a Philox generator keyed by
``(seed, tag, *keys)``.  Philox is counter based, so streams for different
replicas are independent and a replica's draws do not depend on how many
workers ran the ensemble or in which order.
"""

import numpy as np

CHAIN = 0
INIT = 1
SDE = 2
ESTIMATOR = 3
CALIBRATION = 4
MONTE_CARLO = 5


def stream(seed, tag, *keys):
    """Return a fresh generator for the stream ``(seed, tag, *keys)``."""
    if seed < 0:
        raise ValueError("seed must be a non-negative 64-bit integer")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(tag),) + tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
