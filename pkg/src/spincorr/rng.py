"""Counter-based uniform streams keyed by (master seed, trajectory index, draw).

Every trajectory draws from its own stream, so sampled ensembles do not depend
on how trajectories are partitioned into chunks or across workers.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TRAJ = np.uint64(0xD1B54A32D192ED03)


def _mix(z):
    # splitmix64 finaliser
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(master_seed, index, n_draws):
    """Uniform doubles in ``[0, 1)``, shape ``(n_draws, len(index))``.

    ``index`` holds trajectory indices; draw ``k`` of trajectory ``i`` is a pure
    function of ``(master_seed, i, k)``.
    """
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        seed = _mix(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) + _GOLDEN)
        base = _mix(seed ^ (idx * _TRAJ))
        out = np.empty((n_draws, idx.size))
        for k in range(n_draws):
            z = _mix(base + np.uint64(k + 1) * _GOLDEN)
            out[k] = (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return out
