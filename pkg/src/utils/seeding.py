import hashlib
from typing import Union

import numpy as np


StreamKey = Union[str, int]


class SeedStreams:
    """Named random streams derived from one 64-bit seed.

    Each stream is addressed by a tuple of labels, e.g.
    ``streams.generator("dataset", 3)`` for the dataset of repeat 3. Labels are
    hashed into the ``SeedSequence`` entropy, so a stream does not depend on
    which other streams were requested before it.

    Documented labels: ``"dataset"``, ``"init-ensemble"``, ``"noise"``,
    ``"prior-spd"``, ``"posterior-oracle"``.
    """

    DATASET = "dataset"
    INIT_ENSEMBLE = "init-ensemble"
    NOISE = "noise"
    PRIOR_SPD = "prior-spd"
    POSTERIOR_ORACLE = "posterior-oracle"

    def __init__(self, seed: int):
        if seed < 0 or seed >= 2 ** 64:
            raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)

    @staticmethod
    def _label_words(label: StreamKey) -> list:
        digest = hashlib.sha256(str(label).encode("utf-8")).digest()
        return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]

    def sequence(self, *labels: StreamKey) -> np.random.SeedSequence:
        """SeedSequence for the stream addressed by ``labels``"""
        entropy = [self.seed & 0xFFFFFFFF, self.seed >> 32]
        for label in labels:
            entropy.extend(self._label_words(label))
        return np.random.SeedSequence(entropy)

    def generator(self, *labels: StreamKey) -> np.random.Generator:
        """Independent generator for the stream addressed by ``labels``"""
        return np.random.default_rng(self.sequence(*labels))

    def child_seed(self, *labels: StreamKey) -> int:
        """A derived 63-bit integer seed, for handing to nested experiments"""
        return int(self.sequence(*labels).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
