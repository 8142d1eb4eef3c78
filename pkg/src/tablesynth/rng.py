"""Counter-based random substreams.

Every random decision in the pipeline draws from a Philox generator keyed
by (master_seed, *path), so results are identical no matter how scenes or
views are scheduled across workers.
"""

import numpy as np

# Bump if the substream derivation ever changes; recorded in run manifests.
RNG_SCHEME = "philox-seedseq-v1"


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent generator for the given (seed, path) tuple."""
    seq = np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(seq))
