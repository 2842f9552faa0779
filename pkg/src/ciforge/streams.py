"""Counter-based random streams keyed by (seed, trial, purpose).

Every trial owns independent Philox streams, so results do not depend on
how trials are distributed over workers, and different schemes evaluated
at the same trial see identical channels, messages and noise.
"""

import numpy as np

CHANNEL, MESSAGES, NOISE, CSI_ERROR, PARTITION = range(5)


def trial_stream(seed: int, trial: int, purpose: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, int(trial), int(purpose)])
    return np.random.Generator(np.random.Philox(ss))
