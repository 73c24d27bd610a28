"""Radial grids geometric in 1 - r."""

import numpy as np

DEFAULT_DEPTH = 106
PER_OCTAVE = 4


def geometric_grid(depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """r_j = 1 - 2**(-j/per_octave), j = 0..depth (r_0 = 0)."""
    j = np.arange(depth + 1, dtype=float)
    return -np.expm1(-j / per_octave * np.log(2.0))


def grid_complements(depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """The matching q_j = 1 - r_j, exact powers of two."""
    j = np.arange(depth + 1, dtype=float)
    return 2.0 ** (-j / per_octave)


def refined(depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE):
    """The same range with the point density doubled."""
    return geometric_grid(2 * depth, 2 * per_octave)


def shallow_depth(depth=DEFAULT_DEPTH, per_octave=PER_OCTAVE, octaves=6.5):
    """Depth of the comparison grid that stops ``octaves`` short of the full one."""
    return max(1, depth - int(round(octaves * per_octave)))
