"""Counter-based random substreams for reproducible trial simulation.

Every replication ``r`` of an experiment seeded with ``seed`` owns a set of
named streams, each an independent PCG64 generator keyed by
``SeedSequence(seed, spawn_key=(namespace, r, stream_id))``.  A replication's
draws therefore depend only on ``(seed, namespace, r)``, never on which worker
ran it or in which order.
"""

from __future__ import annotations

import numpy as np

STREAM_NAMES = ("outcome", "allocation", "tiebreak", "thompson", "perturbation")

EVALUATION = 0
CALIBRATION = 1

SCHEME = "numpy SeedSequence(seed, spawn_key=(namespace, replication, stream)) -> PCG64; " \
    "streams: " + ", ".join(f"{i}={name}" for i, name in enumerate(STREAM_NAMES))

_BLOCK = 256


class BufferedStream:
    """A generator dedicated to one purpose, serving scalars from blocks.

    Block draws consume the underlying bit generator exactly as the same
    number of scalar calls would, so buffering never changes the sequence.
    """

    __slots__ = ("generator", "_uniform", "_ui", "_expo", "_ei")

    def __init__(self, generator: np.random.Generator):
        self.generator = generator
        self._uniform = None
        self._ui = _BLOCK
        self._expo = None
        self._ei = _BLOCK

    def random(self) -> float:
        if self._ui == _BLOCK:
            self._uniform = self.generator.random(_BLOCK).tolist()
            self._ui = 0
        u = self._uniform[self._ui]
        self._ui += 1
        return u

    def standard_exponential(self) -> float:
        if self._ei == _BLOCK:
            self._expo = self.generator.standard_exponential(_BLOCK).tolist()
            self._ei = 0
        z = self._expo[self._ei]
        self._ei += 1
        return z


class Streams:
    """Named substreams for a single simulated trial."""

    def __init__(self, generators: dict[str, np.random.Generator]):
        missing = set(STREAM_NAMES) - set(generators)
        if missing:
            raise ValueError(f"missing streams: {sorted(missing)}")
        self._streams = {name: BufferedStream(g) for name, g in generators.items()}
        self.outcome = self._streams["outcome"]
        self.allocation = self._streams["allocation"]
        self.tiebreak = self._streams["tiebreak"]
        self.thompson = self._streams["thompson"]
        self.perturbation = self._streams["perturbation"]

    def __getitem__(self, name: str) -> BufferedStream:
        return self._streams[name]

    @classmethod
    def for_replication(cls, seed: int, replication: int, namespace: int = EVALUATION) -> "Streams":
        gens = {
            name: np.random.Generator(np.random.PCG64(
                np.random.SeedSequence(seed, spawn_key=(namespace, replication, i))))
            for i, name in enumerate(STREAM_NAMES)
        }
        return cls(gens)

    @classmethod
    def from_seed(cls, seed: int) -> "Streams":
        return cls.for_replication(seed, 0)

    @classmethod
    def coerce(cls, rng) -> "Streams":
        """Accept a Streams, an int seed or a numpy Generator.

        A Generator is split into independent children, one per stream.
        """
        if isinstance(rng, Streams):
            return rng
        if isinstance(rng, np.random.Generator):
            children = rng.spawn(len(STREAM_NAMES))
            return cls(dict(zip(STREAM_NAMES, children)))
        if isinstance(rng, (int, np.integer)):
            return cls.from_seed(int(rng))
        raise TypeError(f"cannot build random streams from {type(rng).__name__}")
