"""Counter-based random substreams.

Every stochastic routine in the package derives its draws from a Philox
generator keyed by (seed, purpose tag) with the trial index placed in a high
counter word.  A trial's draws therefore depend only on (seed, tag, trial),
never on execution order or worker count, which is what makes parallel
Monte-Carlo runs bit-reproducible.
"""

from __future__ import annotations

import numpy as np

# purpose tags keep estimators on independent streams for the same seed
TAG_CHANNEL = 0x01
TAG_BUB_GAINS = 0x02
TAG_MUB_GAINS = 0x03

_MASK64 = (1 << 64) - 1


def trial_generator(seed: int, tag: int, trial: int = 0) -> np.random.Generator:
    """Generator for one (seed, tag, trial) substream.

    Distinct trials occupy disjoint counter ranges of the same Philox key,
    so substreams never overlap regardless of how many values each consumes.
    """
    if seed < 0 or trial < 0:
        raise ValueError("seed and trial must be nonnegative")
    bg = np.random.Philox(key=[seed & _MASK64, tag & _MASK64],
                          counter=[0, 0, trial & _MASK64, 0])
    return np.random.Generator(bg)
