"""Counter-based random streams.

Every stream is a ``numpy.random.Generator`` over the Philox-4x64 bit
generator.  The 128-bit Philox key is the pair
``(master_seed mod 2**64, trial_index mod 2**64)`` and the counter starts at
zero, so a stream depends only on those two integers.  Philox is a
counter-based generator with a fixed specification, which makes the draws
identical on every platform and independent of scheduling order.

Distribution choices, fixed so that outputs are reproducible:

* uniforms: ``Generator.random`` (53-bit doubles),
* Gaussians: ``Generator.standard_normal`` (numpy's ziggurat),
* geometrics: log-inversion of one uniform, done by the callers.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def derive_stream(master_seed: int, trial_index: int) -> np.random.Generator:
    """Return the reproducible substream for ``(master_seed, trial_index)``.

    Parameters
    ----------
    master_seed : int
        Run-level seed, reduced modulo 2**64.
    trial_index : int
        Index of the trial (or any other sub-task), reduced modulo 2**64.

    Returns
    -------
    numpy.random.Generator
        Generator whose Philox key is ``[master_seed, trial_index]``.
    """
    key = np.array([int(master_seed) & _MASK, int(trial_index) & _MASK],
                   dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def spawn_streams(master_seed: int, count: int, offset: int = 0):
    """List of ``count`` consecutive substreams starting at ``offset``."""
    return [derive_stream(master_seed, offset + i) for i in range(count)]


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an integer seed or None and return a Generator.

    Integers are mapped through :func:`derive_stream` with trial index 0 so
    that a bare seed means the same thing everywhere in the package.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, (int, np.integer)):
        return derive_stream(int(rng), 0)
    raise TypeError(f"cannot interpret {type(rng).__name__} as a random stream")
