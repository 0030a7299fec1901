"""shocklab: an event-driven TASEP laboratory for merging-shock fluctuations.

Exact simulation via the graphical construction with reproducible
counter-based site clocks, coupled runs over shared tapes, backwards-path
identity checks, from-scratch Tracy-Widom numerics, and a Monte Carlo
harness comparing rescaled particle positions against their limit laws.
"""

__version__ = "0.1.0"

from .errors import CapacityError, ContractError, ShocklabError, TruncationError
from .lattice import (
    EventTape,
    MoveLog,
    ParticleConfiguration,
    SimulationResult,
    SiteWindow,
    SuppressionLog,
    default_window,
    generate_tape,
    right_margin,
    simulate,
    simulate_coupled,
    simulate_traced,
)
from .rng import replica_seed, site_ring_times
