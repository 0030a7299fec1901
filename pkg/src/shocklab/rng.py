"""Reproducibility helpers on top of the counter-based generator.

Replica seeds are derived, not sequential: replica k of a run with master
seed S gets its own 64-bit seed as a pure function of (S, k), so experiment
shards can be computed in any order or on any worker and still reproduce.
"""

import numpy as np

from . import _kernels as _k


def replica_seed(master_seed, replica_index):
    """64-bit seed for one replica, a pure function of (master_seed, index)."""
    seed = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)
    return int(_k._keyed_u64(seed, np.uint64(replica_index), _k.TAG_SEED))


def site_ring_times(master_seed, site, horizon):
    """Ring times of one site clock on [0, horizon], sorted ascending.

    This is the per-site stream the tape is assembled from; it depends only
    on (master_seed, site), never on window bounds.
    """
    seed = np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF)
    key = np.uint64(_k._site_key(seed, np.int64(site)))
    n = _k._poisson_count(key, float(horizon))
    out = np.empty(n, np.float64)
    _k._fill_site_times(key, n, float(horizon), out, 0)
    out.sort()
    return out[np.concatenate(([True], np.diff(out) > 0))] if n else out
