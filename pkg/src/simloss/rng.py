"""Reproducible random streams.

Every random draw in the package goes through a ``numpy.random.Generator``
backed by the PCG64 bit generator (PCG-XSL-RR 128/64), seeded through
``numpy.random.SeedSequence``. Both are fully specified algorithms, so a
given seed produces the same stream on every platform. Gaussian noise is
drawn with the Box-Muller transform on top of the uniform stream instead of
numpy's ziggurat sampler.
"""

import numpy as np


def make_rng(*seed_words):
    """Return a PCG64 generator seeded from one or more non-negative ints."""
    for w in seed_words:
        if int(w) < 0:
            raise ValueError(f"seed words must be non-negative, got {w}")
    seq = np.random.SeedSequence([int(w) for w in seed_words])
    return np.random.Generator(np.random.PCG64(seq))


def gaussian(rng, size, sigma=1.0):
    """Draw N(0, sigma^2) samples with the Box-Muller transform."""
    n = int(np.prod(size))
    # 1 - U lies in (0, 1], so the log is finite.
    u1 = 1.0 - rng.random(n)
    u2 = rng.random(n)
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return (sigma * z).reshape(size)
