"""Counter-based random streams derived from ``(master_seed, key...)``.

Every random quantity in the package is drawn from a generator derived from
the master seed and a tuple of non-negative integers, so outputs never
depend on evaluation order or on the number of workers.
"""
import numpy as np

# Second component of the spawn key, one per purpose.
SHOCKS = 0
PRIOR = 1
START = 2
ACCEPT = 3
PROPOSAL = 4
RESAMPLE = 5
DATA = 6


def stream(seed, *key):
    """Return an independent ``numpy.random.Generator`` for ``(seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
